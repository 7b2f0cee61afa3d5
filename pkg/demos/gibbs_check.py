"""A long Langevin run settles into the Gibbs distribution e^(-U/D)."""

import numpy as np

from reachlab import diffusion, landscape

pot = landscape.Quadratic(np.array([1.0]))  # U = w^2 / 2
D = 0.25
params = diffusion.DiffusionParams(D=D, dt=1e-2, max_steps=200_000, seed=0)
path = diffusion.simulate_langevin(pot, np.zeros(1), params)

w = path.points[:, 0]
w = w[w.size // 10 :]  # drop the transient
print(f"samples kept: {w.size}")
print(f"stationary variance: measured {w.var():.4f}, predicted D/a = {D:.4f}")

edges = np.linspace(-2.0, 2.0, 42)
hist, _ = np.histogram(w, bins=edges)
emp = hist / hist.sum()
centers = 0.5 * (edges[:-1] + edges[1:])
gibbs = np.exp(-0.5 * centers**2 / D)
gibbs /= gibbs.sum()
tv = 0.5 * np.abs(emp - gibbs).sum()
print(f"total variation vs the Gibbs weight over 41 bins: {tv:.4f}")

# a crude terminal histogram, wide where the chain spent its time
peak = emp.max()
for c, e in zip(centers[::4], emp[::4]):
    print(f"  w={c:+.2f} {'#' * int(40 * e / peak)}")
