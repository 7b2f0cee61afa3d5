"""Path costs: what a trajectory pays, and which trajectory pays least.

The cost of a path splits into a static part that depends only on the
endpoints (the potential drop) and a dynamic part that depends on how
the path moves. Reversing a path flips the static part and keeps the
dynamic part, so uphill costs more than downhill by exactly the drop.
A relaxation that follows the gradient flow pays almost nothing; the
optimizer should find it when the endpoints allow it.
"""

import numpy as np

from reachlab import action, diffusion, landscape

# reversal identity on the double well
dw = landscape.DoubleWell1D()
D = 0.2
t = np.arange(0, 1501) * 1e-3
s = (t / t[-1])[:, None]
path = diffusion.Path(t, (1 - s) * np.array([-1.0]) + s * np.array([0.3]))
fwd = action.om_action(dw, path, D)
rev = action.om_action(dw, path.reversed(), D)
dU = dw.value(np.array([0.3])) - dw.value(np.array([-1.0]))
print("reversal identity:")
print(f"  forward total {fwd.total:.5f}, reverse total {rev.total:.5f}")
print(f"  difference {fwd.total - rev.total:.5f} vs potential drop / D = {dU / D:.5f}")
print(f"  dynamic parts: {fwd.dynamic_term:.5f} forward, {rev.dynamic_term:.5f} reverse")

# the optimizer recovers the gradient flow at small noise
k = np.array([1.0, 2.0])
pot = landscape.Quadratic(k)
w0 = np.array([1.2, -0.8])
T = 1.5
wf = w0 * np.exp(-k * T)  # endpoint chosen on the flow through w0
straight_t = np.linspace(0.0, T, 61)
straight = diffusion.Path(
    straight_t, w0 + (wf - w0) * (straight_t / T)[:, None]
)
cost_straight = action.om_action(pot, straight, 1e-3).total
cp = action.minimum_action_path(pot, w0, wf, T, 61, 1e-3)
flow = w0 * np.exp(-k * cp.path.times[:, None])
print("\nminimum-action path on a quadratic, D = 0.001:")
print(f"  straight-line cost {cost_straight:.3f}")
print(f"  optimized cost     {cp.action.total:.3f}  (converged: {cp.converged})")
print(f"  max deviation from the gradient flow: {np.abs(cp.path.points - flow).max():.2e}")
