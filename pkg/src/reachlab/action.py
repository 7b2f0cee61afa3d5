"""Path costs of the overdamped dynamics and their critical paths.

For dw = f(w) dt + sqrt(2D) dB with f = -grad U, the (Stratonovich
midpoint) cost density of a smooth path is

    (1/4D) |dw/dt - f(w)|^2 + (1/2) div f(w),

discretized segment by segment with drift and divergence evaluated at
segment midpoints.  Expanding the square splits the total into a static
part, (U(end) - U(start)) / 2D, that depends only on the endpoints, and a
dynamic part (1/2D) int [ (1/2)|dw/dt|^2 + V(w) ] dt built on the path
potential V = 0.5 |grad U|^2 - D lap U.  The split is exact in the
continuum; on a grid the mismatch (the "decomposition defect") is the
midpoint quadrature error of int grad U . dw and shrinks like dt^2.

Critical paths satisfy d^2w/dt^2 = grad V and are found by descending the
discretized action over interior knots with its analytic gradient.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .diffusion import DiffusionParams, Path
from .errors import ContractError, SimulationError
from .landscape import Channel2D, check_point, path_potential_many
from .rng import stream

_NOISE_CHUNK = 1024


@dataclass(frozen=True)
class ActionBreakdown:
    """Discretized path action and its static/dynamic split.

    ``total`` is the midpoint-discretized cost; ``static_term`` +
    ``dynamic_term`` differs from it by the quadrature defect, which the
    decomposition tests drive to zero with dt.  ``per_segment`` sums to
    ``total`` up to float associativity.
    """

    total: float
    static_term: float
    dynamic_term: float
    per_segment: np.ndarray

    @property
    def defect(self):
        return self.total - self.static_term - self.dynamic_term


def om_action(p, path, D):
    """Midpoint-discretized action of ``path`` under potential ``p``."""
    if not (np.isfinite(D) and D > 0):
        raise ContractError("D must be positive (the action diverges as D -> 0)")
    W = path.points
    if W.shape[0] < 3:
        raise ContractError("need at least 3 knots")
    if W.shape[1] != p.dim:
        raise ContractError(f"path dim {W.shape[1]} != potential dim {p.dim}")
    dt = path.dt
    mids = 0.5 * (W[1:] + W[:-1])
    v = np.diff(W, axis=0) / dt
    g = p.grad_many(mids)          # f = -g
    lap = p.laplacian_many(mids)   # div f = -lap
    r = v + g
    per_seg = dt * (np.sum(r * r, axis=1) / (4.0 * D) - 0.5 * lap)
    total = float(np.sum(per_seg))
    static = (p.value(W[-1]) - p.value(W[0])) / (2.0 * D)
    V = 0.5 * np.sum(g * g, axis=1) - D * lap
    dynamic = float(np.sum(dt * (0.5 * np.sum(v * v, axis=1) + V)) / (2.0 * D))
    return ActionBreakdown(total, float(static), dynamic, per_seg)


@dataclass(frozen=True)
class OptConfig:
    maxiter: int = 1500
    gtol: float = 1e-12
    substeps: int = 10  # flow-interpolant integration substeps per knot


@dataclass(frozen=True)
class CriticalPath:
    path: Path
    action: ActionBreakdown
    el_residual: float      # max |w'' - grad V| over interior knots
    el_scale: float         # max |grad V| along the path, for relative gates
    converged: bool
    alternates: list = field(default_factory=list)


def _action_and_grad(p, W, dt, D):
    """Discrete action and its gradient w.r.t. the interior knots."""
    mids = 0.5 * (W[1:] + W[:-1])
    v = np.diff(W, axis=0) / dt
    g = p.grad_many(mids)
    lap = p.laplacian_many(mids)
    r = v + g
    S = float(np.sum(dt * (np.sum(r * r, axis=1) / (4.0 * D) - 0.5 * lap)))
    H = p.hessian_many(mids)
    gL = p.grad_laplacian_many(mids)
    Hr = np.einsum("kab,kb->ka", H, r)
    # segment k touches knots k and k+1; interior knot j collects k=j-1, j
    grad = (
        (r[:-1] - r[1:]) / (2.0 * D)
        + dt / (4.0 * D) * (Hr[:-1] + Hr[1:])
        - dt / 4.0 * (gL[:-1] + gL[1:])
    )
    return S, grad


def _el_residual(p, W, dt, D):
    inner = W[1:-1]
    acc = (W[2:] - 2.0 * W[1:-1] + W[:-2]) / (dt * dt)
    H = p.hessian_many(inner)
    g = p.grad_many(inner)
    gV = np.einsum("kab,kb->ka", H, g) - D * p.grad_laplacian_many(inner)
    res = float(np.max(np.linalg.norm(acc - gV, axis=1)))
    scale = float(np.max(np.linalg.norm(gV, axis=1)))
    return res, scale


def _flow_interpolant(p, start, end, T, n_knots, sign, substeps):
    """Integrate w' = sign * (-grad U) from ``start``; shear to hit ``end``."""
    d = p.dim
    h = T / ((n_knots - 1) * substeps)
    clamp = 10.0 * (np.linalg.norm(start) + np.linalg.norm(end) + 1.0)
    W = np.empty((n_knots, d))
    w = start.copy()
    W[0] = w
    for k in range(1, n_knots):
        for _ in range(substeps):
            w = w + h * sign * (-p.grad(w))
            nrm = np.linalg.norm(w)
            if nrm > clamp:
                w = w * (clamp / nrm)
        W[k] = w
    t = np.linspace(0.0, 1.0, n_knots)[:, None]
    return W + t * (end - W[-1])


def minimum_action_path(p, w0, wf, T, n_knots, D, opt=None):
    """Minimize the discretized action over paths from w0 to wf in time T.

    Three starts are tried -- the straight line and gradient-flow
    interpolants run forward from w0 and backward from wf -- and every
    distinct local minimum found is kept (``alternates``), with the
    lowest-action one returned.  Descent uses L-BFGS on the interior
    knots with the analytic action gradient.
    """
    w0 = check_point(p, w0)
    wf = check_point(p, wf)
    if not (np.isfinite(T) and T > 0) or n_knots < 3:
        raise ContractError("need T > 0 and n_knots >= 3")
    if not (np.isfinite(D) and D > 0):
        raise ContractError("D must be positive")
    opt = opt or OptConfig()
    dt = T / (n_knots - 1)
    times = np.arange(n_knots) * dt
    d = p.dim

    lin = w0 + (wf - w0) * (times / T)[:, None]
    starts = [
        lin,
        _flow_interpolant(p, w0, wf, T, n_knots, +1, opt.substeps),
        _flow_interpolant(p, wf, w0, T, n_knots, +1, opt.substeps)[::-1].copy(),
    ]

    def pack(W):
        return W[1:-1].ravel()

    def unpack(x):
        W = np.empty((n_knots, d))
        W[0], W[-1] = w0, wf
        W[1:-1] = x.reshape(n_knots - 2, d)
        return W

    def fun(x):
        S, g = _action_and_grad(p, unpack(x), dt, D)
        return S, g.ravel()

    found = []
    for W_init in starts:
        x0 = pack(W_init)
        gn_init = float(np.linalg.norm(fun(x0)[1]))
        res = minimize(
            fun,
            x0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": opt.maxiter, "gtol": opt.gtol, "ftol": 1e-16},
        )
        W = unpack(res.x)
        S, g = _action_and_grad(p, W, dt, D)
        gn = float(np.linalg.norm(g))
        # converged = the solver stopped on its own terms and the gradient
        # actually collapsed; an absolute cutoff would misread small-D
        # problems, where the action and its gradients scale like 1/D
        ok = bool(res.success) and gn <= 1e-4 * max(1.0, gn_init)
        found.append((S, gn, W, ok))

    scale = max(1.0, float(np.max(np.abs(np.stack([f[2] for f in found])))))
    reps = []
    for S, gn, W, ok in sorted(found, key=lambda f: f[0]):
        if not any(np.max(np.abs(W - Wr)) < 1e-3 * scale for _, _, Wr, _ in reps):
            reps.append((S, gn, W, ok))

    out = []
    for S, gn, W, ok in reps:
        path = Path(times, W)
        res_el, sc_el = _el_residual(p, W, dt, D)
        out.append(
            CriticalPath(
                path=path,
                action=om_action(p, path, D),
                el_residual=res_el,
                el_scale=sc_el,
                converged=ok,
                alternates=[],
            )
        )
    best = out[0]
    return CriticalPath(
        path=best.path,
        action=best.action,
        el_residual=best.el_residual,
        el_scale=best.el_scale,
        converged=best.converged,
        alternates=out[1:],
    )


# -- ensemble endpoint statistics ---------------------------------------------


def _ensemble_states(p, w0, params, n_runs, record_every=0, record_coord=0, burn_frac=0.0):
    """Step n_runs walkers in lockstep; optionally record one coordinate.

    Returns (final positions, recorded samples).  Run i uses stream
    (seed, i); recording keeps every ``record_every``-th step after a
    ``burn_frac`` fraction of the budget, pooled across runs in time-major
    order so the equilibration diagnostic can compare early vs late.
    """
    w0 = check_point(p, w0)
    d = p.dim
    gens = [stream(params.seed, i) for i in range(n_runs)]
    pos = np.tile(w0, (n_runs, 1))
    amp = np.sqrt(2.0 * params.D * params.dt)
    burn = int(burn_frac * params.max_steps)
    recs = []
    buf = np.empty((n_runs, _NOISE_CHUNK, d))
    for step in range(params.max_steps):
        c = step % _NOISE_CHUNK
        if c == 0:
            m = min(_NOISE_CHUNK, params.max_steps - step)
            for i in range(n_runs):
                buf[i, :m] = gens[i].standard_normal((m, d))
        pos = pos + params.dt * (-p.grad_many(pos)) + amp * buf[:, c]
        if record_every and step >= burn and (step - burn) % record_every == 0:
            recs.append(pos[:, record_coord].copy())
    if not np.all(np.isfinite(pos)):
        raise SimulationError("ensemble left the finite region; reduce dt or D")
    samples = np.concatenate(recs) if recs else np.empty(0)
    return pos, samples


def transition_ratio(p, w0, candidates, radius, T, params, n_runs):
    """Relative end-point occupation of candidate balls after time T.

    Propagates n_runs walkers for round(T/dt) steps and counts arrivals
    within ``radius`` of each candidate at the final time only.  Returns
    counts normalized by the first candidate's, so only ratios are ever
    reported; the first candidate receiving zero hits is an error.
    """
    cands = [check_point(p, c) for c in candidates]
    if not cands:
        raise ContractError("need at least one candidate")
    if not (np.isfinite(radius) and radius > 0):
        raise ContractError("radius must be positive")
    n_steps = int(round(T / params.dt))
    if n_steps < 1 or n_steps > params.max_steps:
        raise ContractError("T must give between 1 and max_steps steps")
    eff = DiffusionParams(params.D, params.dt, n_steps, params.seed)
    pos, _ = _ensemble_states(p, w0, eff, n_runs)
    counts = []
    for c in cands:
        counts.append(int(np.sum(np.sum((pos - c) ** 2, axis=1) <= radius * radius)))
    if counts[0] == 0:
        raise SimulationError(
            "reference candidate got zero hits; increase n_runs, T, or radius"
        )
    return [ct / counts[0] for ct in counts]


@dataclass(frozen=True)
class ChannelMarginalReport:
    tv_corrected: float
    tv_uncorrected: float
    u_variance: float
    equilibrated: bool
    n_samples: int
    min_b: float
    max_a_curv: float
    bin_edges: np.ndarray
    hist: np.ndarray          # observed bin probabilities
    corrected: np.ndarray     # predicted bin probabilities, exp(-a/D)/sqrt(b)
    uncorrected: np.ndarray   # predicted bin probabilities, exp(-a/D)


def _binned_density(fn, edges, sub=16):
    """Integrate an unnormalized density over bins; normalize over support."""
    mass = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        us = np.linspace(edges[i], edges[i + 1], sub + 1)
        mid = 0.5 * (us[1:] + us[:-1])
        mass[i] = np.mean(fn(mid)) * (edges[i + 1] - edges[i])
    return mass / mass.sum()


def channel_marginal_check(ch, u0, D, params, n_runs, bins, record_every=5):
    """Compare the sampled u-marginal of a channel with its predictions.

    The corrected prediction integrates out the transverse coordinate:
    q(u) propto exp(-a(u)/D) / sqrt(b(u)).  The uncorrected one drops the
    stiffness factor.  Both are binned on the sample histogram's edges and
    compared by total variation.  Equilibration is judged by comparing
    the early and late halves of the pooled samples; a drifting mean
    flags the report rather than raising.
    """
    if not isinstance(ch, Channel2D):
        raise ContractError("channel_marginal_check needs a Channel2D")
    if bins < 4:
        raise ContractError("need at least 4 bins")
    lo, hi = ch.u_box
    us = np.linspace(lo, hi, 201)
    bvals = np.array([ch.b.value(np.array([u])) for u in us])
    acurv = np.array([abs(ch.a.hessian(np.array([u]))[0, 0]) for u in us])
    min_b, max_a2 = float(bvals.min()), float(acurv.max())
    if min_b < 2.0 * max_a2:
        import warnings

        warnings.warn(
            f"transverse stiffness (min b = {min_b:.3g}) is not well above the "
            f"channel curvature (max |a''| = {max_a2:.3g}); the adiabatic "
            "picture is marginal here",
            RuntimeWarning,
            stacklevel=2,
        )
    eff = DiffusionParams(D, params.dt, params.max_steps, params.seed)
    start = np.array([float(u0), 0.0])
    _, samples = _ensemble_states(
        ch, start, eff, n_runs, record_every=record_every, burn_frac=0.5
    )
    if samples.size < 100:
        raise SimulationError("too few equilibrium samples; increase max_steps")

    half = samples.size // 2
    drift = abs(samples[:half].mean() - samples[half:].mean())
    equilibrated = bool(drift <= 0.2 * samples.std())

    counts, edges = np.histogram(samples, bins=bins)
    hist = counts / counts.sum()

    def a_of(u):
        return np.array([ch.a.value(np.array([x])) for x in u])

    def b_of(u):
        return np.array([ch.b.value(np.array([x])) for x in u])

    a_ref = a_of(np.array([0.5 * (lo + hi)]))[0]
    corrected = _binned_density(lambda u: np.exp(-(a_of(u) - a_ref) / D) / np.sqrt(b_of(u)), edges)
    uncorrected = _binned_density(lambda u: np.exp(-(a_of(u) - a_ref) / D), edges)
    return ChannelMarginalReport(
        tv_corrected=float(0.5 * np.abs(hist - corrected).sum()),
        tv_uncorrected=float(0.5 * np.abs(hist - uncorrected).sum()),
        u_variance=float(samples.var()),
        equilibrated=equilibrated,
        n_samples=int(samples.size),
        min_b=min_b,
        max_a_curv=max_a2,
        bin_edges=edges,
        hist=hist,
        corrected=corrected,
        uncorrected=uncorrected,
    )
