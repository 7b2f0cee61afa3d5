"""Overdamped Langevin and minibatch-SGD simulators, plus escape statistics.

The continuous dynamics dw = -grad U dt + sqrt(2D) dB are integrated with
Euler-Maruyama at step dt, so one unit of diffusion time is 1/dt steps.
SGD runs in its own clock: a step of size eta advances time by eta, which
is the unit used for all convergence times.  Minibatches are drawn *with*
replacement so that the one-step gradient noise covariance is exactly
Sigma_1 / B (per-sample covariance over batch size); a without-replacement
flag exists for realism but breaks that identity.

Ensembles (first passage, convergence times) give run i the Philox stream
(seed, i), so their statistics do not depend on execution order and are
bit-identical across --workers settings.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tasks as tasklib
from .errors import ContractError, NumericalError, SimulationError
from .rng import stream

_NOISE_CHUNK = 1024  # steps of noise drawn per refill; fixed, part of the stream contract


@dataclass(frozen=True)
class DiffusionParams:
    D: float
    dt: float
    max_steps: int
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.D) and self.D >= 0):
            raise ContractError("D must be nonnegative and finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ContractError("dt must be positive")
        if self.max_steps < 1:
            raise ContractError("max_steps must be >= 1")


@dataclass(frozen=True)
class Path:
    """Uniformly sampled trajectory: times (n,), points (n, d)."""

    times: np.ndarray
    points: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        W = np.asarray(self.points, dtype=float)
        if t.ndim != 1 or W.ndim != 2 or W.shape[0] != t.size or t.size < 2:
            raise ContractError("need times (n,) and points (n, d) with n >= 2")
        dts = np.diff(t)
        # spacing tolerance scales with |t|: at a million steps the grid
        # values themselves carry ulp-level accumulation error
        tol = 64.0 * np.finfo(float).eps * max(1.0, abs(float(t[0])), abs(float(t[-1])))
        if np.abs(dts - dts[0]).max() > max(tol, 1e-12 * abs(dts[0])):
            raise ContractError("times must be uniformly spaced")
        if dts[0] <= 0:
            raise ContractError("times must be increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", W)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def dim(self):
        return self.points.shape[1]

    def reversed(self):
        return Path(self.times.copy(), self.points[::-1].copy(), self.truncated)

    def to_csv(self, path, thin=1):
        """Write ``t,w0,...,w{d-1}`` rows, optionally keeping every thin-th."""
        if thin < 1:
            raise ContractError("thin must be >= 1")
        idx = np.arange(0, self.times.size, thin)
        with open(path, "w") as fh:
            fh.write("t," + ",".join(f"w{i}" for i in range(self.dim)) + "\n")
            for i in idx:
                row = ",".join(f"{v:.17g}" for v in self.points[i])
                fh.write(f"{self.times[i]:.17g},{row}\n")


def path_from_csv(path):
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Path(raw[:, 0], raw[:, 1:])


@dataclass(frozen=True)
class EscapeStats:
    """First-passage (or convergence) times of an ensemble.

    ``samples`` holds the uncensored times only; censored runs are counted
    but never averaged in, so the mean is conditional on passage within
    the step budget.
    """

    samples: np.ndarray
    n_runs: int
    n_censored: int
    mean: float
    std: float
    rate: float

    @classmethod
    def from_times(cls, times, n_runs):
        s = np.asarray(sorted(times), dtype=float)
        n_cens = n_runs - s.size
        if s.size:
            mean = float(np.mean(s))
            std = float(np.std(s, ddof=1)) if s.size > 1 else 0.0
            rate = float(1.0 / mean) if mean > 0 else float("inf")
        else:
            mean = std = float("nan")
            rate = float("nan")
        return cls(s, int(n_runs), int(n_cens), mean, std, rate)

    @property
    def median(self):
        return float(np.median(self.samples)) if self.samples.size else float("nan")

    def to_dict(self):
        return {
            "samples": [float(v) for v in self.samples],
            "n_runs": self.n_runs,
            "n_censored": self.n_censored,
            "mean": self.mean,
            "std": self.std,
            "rate": self.rate,
        }


def _warn_if_stiff(p, w0, params):
    try:
        lam = float(np.linalg.eigvalsh(p.hessian(w0)).max())
    except Exception:
        return
    if params.dt * max(lam, 0.0) >= 0.5:
        warnings.warn(
            f"dt * max local curvature = {params.dt * lam:.3g} >= 0.5; "
            "Euler-Maruyama may be unstable at this step size",
            RuntimeWarning,
            stacklevel=3,
        )


def simulate_langevin(p, w0, params):
    """Euler-Maruyama path of dw = -grad U dt + sqrt(2D) dB from w0.

    Returns a Path with max_steps + 1 points at times k * dt.  D = 0 gives
    plain gradient descent with step dt.  Non-finite states raise
    NumericalError naming the offending step.
    """
    from .landscape import check_point

    w = check_point(p, w0).copy()
    _warn_if_stiff(p, w, params)
    n, d = params.max_steps, p.dim
    rng = stream(params.seed)
    out = np.empty((n + 1, d))
    out[0] = w
    amp = np.sqrt(2.0 * params.D * params.dt)
    done = 0
    while done < n:
        m = min(_NOISE_CHUNK, n - done)
        noise = rng.standard_normal((m, d)) if params.D > 0 else np.zeros((m, d))
        for j in range(m):
            w = w + params.dt * (-p.grad(w)) + amp * noise[j]
            # checked before the next grad call: the potential contracts
            # reject non-finite points, and this error names the step
            if not np.all(np.isfinite(w)):
                raise NumericalError(f"non-finite state at step {done + j + 1} (of {n})")
            out[done + j + 1] = w
        done += m
    return Path(np.arange(n + 1) * params.dt, out)


def first_passage(p, w0, target_center, radius, params, n_runs):
    """First-passage times into the ball |w - target| <= radius.

    Runs n_runs independent walkers (stream (seed, i) for run i), stepping
    them in lockstep as one vectorized ensemble; trajectories are not
    stored.  A start inside the ball gives time 0 for every run.  Runs
    that never enter within max_steps are censored; if all runs censor,
    that is an error suggesting a longer budget or larger D.
    """
    from .landscape import check_point

    w0 = check_point(p, w0)
    target = check_point(p, target_center)
    if not (np.isfinite(radius) and radius > 0):
        raise ContractError("radius must be positive")
    if n_runs < 1:
        raise ContractError("n_runs must be >= 1")
    _warn_if_stiff(p, w0, params)

    r2 = radius * radius
    if float(np.sum((w0 - target) ** 2)) <= r2:
        return EscapeStats.from_times([0.0] * n_runs, n_runs)

    d = p.dim
    gens = [stream(params.seed, i) for i in range(n_runs)]
    pos = np.tile(w0, (n_runs, 1))
    passed_at = np.full(n_runs, -1, dtype=np.int64)
    active = np.arange(n_runs)
    amp = np.sqrt(2.0 * params.D * params.dt)
    buf = np.empty((n_runs, _NOISE_CHUNK, d))
    step = 0
    while active.size and step < params.max_steps:
        c = step % _NOISE_CHUNK
        if c == 0:
            m = min(_NOISE_CHUNK, params.max_steps - step)
            for i in active:
                buf[i, :m] = gens[i].standard_normal((m, d))
        W = pos[active]
        W = W + params.dt * (-p.grad_many(W)) + amp * buf[active, c]
        pos[active] = W
        step += 1
        if not np.all(np.isfinite(W)):
            raise NumericalError(f"non-finite ensemble state at step {step}")
        dist2 = np.sum((W - target) ** 2, axis=1)
        hit = dist2 <= r2
        if np.any(hit):
            passed_at[active[hit]] = step
            active = active[~hit]
    times = passed_at[passed_at >= 0] * params.dt
    if times.size == 0:
        raise SimulationError(
            f"all {n_runs} runs censored at {params.max_steps} steps; "
            "increase max_steps or D, or move the target"
        )
    return EscapeStats.from_times(times.tolist(), n_runs)


# -- SGD ----------------------------------------------------------------------


@dataclass(frozen=True)
class SGDConfig:
    eta: float
    batch_size: int
    max_steps: int
    full_batch: bool = False
    with_replacement: bool = True
    noise: str = "minibatch"  # or "isotropic": Gaussian noise of matched trace

    def __post_init__(self):
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ContractError("eta must be positive")
        if self.batch_size < 1 or self.max_steps < 1:
            raise ContractError("batch_size and max_steps must be >= 1")
        if self.noise not in ("minibatch", "isotropic"):
            raise ContractError("noise must be 'minibatch' or 'isotropic'")


def _sgd_step_fn(task, cfg, rng):
    """Returns step(w) -> (batch CE, new w minus decay term handled inside)."""
    n = task.data.n
    gamma = task.model.weight_decay
    if cfg.full_batch:
        def step(w):
            ce, g = tasklib.batch_loss_grad(task, w)
            return ce, w - cfg.eta * (g + gamma * w)

        return step
    if cfg.batch_size > n and not cfg.with_replacement:
        raise ContractError("batch_size exceeds dataset size without replacement")

    if cfg.noise == "isotropic":
        d = task.model.n_params

        def step(w):
            ce, g = tasklib.batch_loss_grad(task, w)
            gs = tasklib.per_sample_grads(task, w)
            tr1 = float(np.mean(np.sum(gs * gs, axis=1)) - g @ g)  # trace of Sigma_1
            amp = np.sqrt(max(tr1, 0.0) / (cfg.batch_size * d))
            xi = amp * rng.standard_normal(d)
            return ce, w - cfg.eta * (g + gamma * w + xi)

        return step

    def step(w):
        if cfg.with_replacement:
            idx = rng.integers(0, n, size=cfg.batch_size)
        else:
            idx = rng.choice(n, size=cfg.batch_size, replace=False)
        ce, g = tasklib.batch_loss_grad(task, w, idx)
        return ce, w - cfg.eta * (g + gamma * w)

    return step


def simulate_sgd(task, w0, cfg, seed):
    """Minibatch SGD path in SGD time (step k sits at time k * eta).

    Divergence (batch loss above 1e6, or non-finite state) truncates the
    path and sets its ``truncated`` flag instead of raising: sweeps want
    to record the blow-up, not die on it.
    """
    w = np.asarray(w0, dtype=float).copy()
    if w.shape != (task.model.n_params,):
        raise ContractError(f"w0 must have shape ({task.model.n_params},)")
    rng = stream(seed)
    step = _sgd_step_fn(task, cfg, rng)
    out = [w.copy()]
    truncated = False
    for _ in range(cfg.max_steps):
        ce, w = step(w)
        if not np.isfinite(ce) or ce > 1e6 or not np.all(np.isfinite(w)):
            truncated = True
            break
        out.append(w.copy())
    W = np.array(out)
    times = np.arange(W.shape[0]) * cfg.eta
    if W.shape[0] < 2:
        raise NumericalError("SGD diverged on the first step")
    return Path(times, W, truncated=truncated)


def noise_covariance(task, w, batch_size, n_draws, seed, with_replacement=True):
    """Empirical covariance of the minibatch CE gradient at fixed w.

    Draws n_draws independent minibatches, computes their mean-gradient
    rows, and returns the unbiased (ddof=1) sample covariance, shape
    (d, d).  With replacement, its expectation is exactly Sigma_1 / B;
    see ``exact_minibatch_covariance`` for that reference value.
    """
    w = np.asarray(w, dtype=float)
    n = task.data.n
    if n_draws < 2:
        raise ContractError("n_draws must be >= 2")
    if not with_replacement and batch_size > n:
        raise ContractError("batch_size exceeds dataset size without replacement")
    gs = tasklib.per_sample_grads(task, w)  # (n, d)
    rng = stream(seed)
    rows = np.empty((n_draws, gs.shape[1]))
    chunk = max(1, int(2e6) // max(batch_size, 1))
    done = 0
    while done < n_draws:
        m = min(chunk, n_draws - done)
        if with_replacement:
            idx = rng.integers(0, n, size=(m, batch_size))
        else:
            idx = np.stack([rng.choice(n, size=batch_size, replace=False) for _ in range(m)])
        rows[done:done + m] = gs[idx].mean(axis=1)
        done += m
    mu = rows.mean(axis=0)
    R = rows - mu
    C = R.T @ R / (n_draws - 1)
    return 0.5 * (C + C.T)


def exact_minibatch_covariance(task, w, batch_size):
    """Sigma_1 / B: population per-sample gradient covariance over batch size."""
    gs = tasklib.per_sample_grads(task, np.asarray(w, dtype=float))
    mu = gs.mean(axis=0)
    R = gs - mu
    S1 = R.T @ R / gs.shape[0]
    return S1 / batch_size


def convergence_time(task, w0, threshold, cfg, n_runs, seed):
    """Time (in units of steps * eta) for the full loss to reach threshold.

    Each run is an independent SGD stream from w0; the full-dataset
    regularized loss is checked after every step, and a start already at
    or below threshold counts as time 0.  Runs that never reach it within
    max_steps are censored.  The threshold should sit above the minimum
    achievable loss; estimating that minimum is the caller's job (the
    harness uses a preliminary full-batch descent).
    """
    w0 = np.asarray(w0, dtype=float)
    if not np.isfinite(threshold):
        raise ContractError("threshold must be finite")
    if n_runs < 1:
        raise ContractError("n_runs must be >= 1")
    if tasklib.loss(task, w0) <= threshold:
        return EscapeStats.from_times([0.0] * n_runs, n_runs)
    times = []
    for i in range(n_runs):
        rng = stream(seed, i)
        step = _sgd_step_fn(task, cfg, rng)
        w = w0.copy()
        for k in range(1, cfg.max_steps + 1):
            ce, w = step(w)
            if not np.all(np.isfinite(w)):
                break
            if tasklib.loss(task, w) <= threshold:
                times.append(k * cfg.eta)
                break
    if not times:
        raise SimulationError(
            f"no run reached threshold {threshold:.4g} within {cfg.max_steps} steps"
        )
    return EscapeStats.from_times(times, n_runs)
