"""Gaussian information complexity of tasks and distances between them.

The central quantity is, for a task with data loss L and a Gaussian
posterior Q = N(w0, S) against the prior P = N(0, lambda2 I),

    C_beta(w0) = L(w0) + (beta/2) [ |w0|^2/lambda2 + log det(2 lambda2/beta F + I) ],

with F the expected (Fisher) curvature of the model at w0 -- the
positive-semidefinite stand-in for the loss Hessian that every formula
here uses.  The optimal posterior covariance at fixed mean is

    S* = (beta/2) (F + beta/(2 lambda2) I)^{-1},

and sweeping beta traces out a loss-vs-KL structure curve.  Task distance
is the complexity increment d(D1 -> D2) = C_beta(D1 u D2) - C_beta(D1),
each term evaluated at its own trained posterior mean; it is asymmetric
by construction.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import tasks
from .errors import ContractError, NumericalError, TrainingDivergedError
from .rng import stream


@dataclass(frozen=True)
class GaussianPosterior:
    """N(mean, cov) over weight space."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        C = np.asarray(self.cov, dtype=float)
        if m.ndim != 1 or C.shape != (m.size, m.size):
            raise ContractError(f"cov shape {C.shape} does not match mean of size {m.size}")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(C))):
            raise ContractError("posterior mean/cov must be finite")
        scale = max(1.0, float(np.abs(C).max()))
        if np.abs(C - C.T).max() > 1e-10 * scale:
            raise ContractError("cov must be symmetric")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", 0.5 * (C + C.T))

    @property
    def dim(self):
        return self.mean.size


def gaussian_kl(q, lambda2):
    """KL( N(mean, cov) || N(0, lambda2 I) ) in nats.

    Returns +inf (with no exception) when cov is singular to working
    precision; raises ContractError when cov has a genuinely negative
    eigenvalue, since that is a caller bug rather than a degenerate
    posterior.
    """
    if not (np.isfinite(lambda2) and lambda2 > 0):
        raise ContractError("lambda2 must be positive")
    k = q.dim
    eigs = np.linalg.eigvalsh(q.cov)
    scale = max(1.0, float(np.abs(eigs).max()))
    if eigs.min() < -1e-10 * scale:
        raise ContractError(f"cov has negative eigenvalue {eigs.min():.3g}")
    if eigs.min() <= 0:
        import warnings

        warnings.warn(
            f"singular posterior covariance (min eigenvalue {eigs.min():.3g}); KL is +inf",
            RuntimeWarning,
            stacklevel=2,
        )
        return float("inf")
    logdet = float(np.sum(np.log(eigs)))
    m2 = float(q.mean @ q.mean)
    tr = float(np.trace(q.cov))
    # grouped so the two cancellations are exact when cov == lambda2 I
    return 0.5 * (m2 / lambda2 + (tr / lambda2 - k) + (k * np.log(lambda2) - logdet))


def fisher(task, w):
    """Expected curvature F(w) = E_data E_{y ~ p_w} [ grad log p grad log p^T ].

    The label expectation is taken exactly under the model's own
    posterior (no label sampling), so F is symmetric PSD and deterministic
    in (task, w).  For the linear-logit family it coincides with the exact
    Hessian of the mean cross-entropy.
    """
    P = tasks.posterior_probs(task, w)
    J = tasks.logit_jacobians(task, w)
    n, K1 = J.shape[0], J.shape[1]
    if n == 0:
        raise ContractError("Fisher of an empty dataset")
    Pk = P[:, 1:]
    # softmax covariance restricted to the free logits: diag(p) - p p^T
    Lam = Pk[:, :, None] * np.eye(K1)[None] - Pk[:, :, None] * Pk[:, None, :]
    M = np.einsum("nab,nbd->nad", Lam, J)
    F = np.einsum("nad,nae->de", J, M) / n
    return 0.5 * (F + F.T)


def optimal_sigma(H, beta, lambda2):
    """Optimal posterior covariance S* = (beta/2) (H + beta/(2 lambda2) I)^{-1}."""
    if not (np.isfinite(beta) and beta > 0):
        raise ContractError("beta must be positive")
    if not (np.isfinite(lambda2) and lambda2 > 0):
        raise ContractError("lambda2 must be positive")
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractError("H must be square")
    A = 0.5 * (H + H.T) + (beta / (2.0 * lambda2)) * np.eye(H.shape[0])
    vals, vecs = np.linalg.eigh(A)
    if vals.min() <= 0:
        raise NumericalError(
            f"H + beta/(2 lambda2) I is not positive definite (min eig {vals.min():.3g})"
        )
    S = (vecs * (0.5 * beta / vals)) @ vecs.T
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class ComplexityReport:
    """C_beta split into its three terms; total is their pinned combination."""

    beta: float
    lambda2: float
    loss_term: float
    norm_term: float       # |w0|^2 / lambda2
    logdet_term: float     # log det(2 lambda2/beta F + I)
    total: float

    def to_dict(self):
        return {
            "beta": self.beta,
            "lambda2": self.lambda2,
            "loss_term": self.loss_term,
            "norm_term": self.norm_term,
            "logdet_term": self.logdet_term,
            "total": self.total,
        }


def c_beta_from_parts(loss_value, w0, F, beta, lambda2):
    """Assemble a ComplexityReport from precomputed ingredients."""
    if not (np.isfinite(beta) and beta > 0):
        raise ContractError("beta must be positive")
    if not (np.isfinite(lambda2) and lambda2 > 0):
        raise ContractError("lambda2 must be positive")
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    F = np.asarray(F, dtype=float)
    eigs = np.linalg.eigvalsh(0.5 * (F + F.T))
    # tiny negative eigenvalues are roundoff from the PSD construction
    eigs = np.clip(eigs, 0.0, None)
    logdet = float(np.sum(np.log1p((2.0 * lambda2 / beta) * eigs)))
    norm = float(w0 @ w0) / lambda2
    total = float(loss_value) + 0.5 * beta * (norm + logdet)
    return ComplexityReport(float(beta), float(lambda2), float(loss_value), norm, logdet, total)


def c_beta(task, w0, beta, lambda2):
    """Gaussian complexity of ``task`` at posterior mean ``w0``.

    The loss term is the bare cross-entropy: the quadratic norm term
    already plays the role of the weight-decay penalty here, so the
    model's own decay coefficient is deliberately not double counted.
    """
    L = tasks.cross_entropy(task, w0)
    F = fisher(task, w0)
    return c_beta_from_parts(L, w0, F, beta, lambda2)


# -- training of posterior means ----------------------------------------------


@dataclass(frozen=True)
class TrainerConfig:
    """Full-batch gradient descent with a fixed step and iteration budget."""

    step_size: float = 0.1
    max_iters: int = 5000
    grad_tol: float = 1e-8
    init_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0 or self.max_iters < 1 or self.grad_tol < 0:
            raise ContractError("need step_size > 0, max_iters >= 1, grad_tol >= 0")


def initial_point(model, cfg):
    """Canonical descent start: zeros, or a seeded draw when init_scale > 0."""
    if cfg.init_scale == 0.0:
        if model.family == "mlp-1-hidden":
            raise ContractError(
                "mlp-1-hidden needs init_scale > 0: the all-zeros point is a symmetric saddle"
            )
        return np.zeros(model.n_params)
    return cfg.init_scale * stream(cfg.seed).standard_normal(model.n_params)


def _gd(w, loss_fn, grad_fn, cfg, name, ridge_curvature=0.0):
    # harmonic step cap: 1/step = 1/step_size + ridge_curvature, so a stiff
    # quadratic penalty of known curvature can never destabilize the descent
    step = 1.0 / (1.0 / cfg.step_size + ridge_curvature)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = grad_fn(w)
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(name, f"non-finite gradient at iter {it}")
        gn = float(np.linalg.norm(g))
        if gn <= cfg.grad_tol:
            converged = True
            break
        w = w - step * g
        if it % 50 == 0:
            L = loss_fn(w)
            if not np.isfinite(L) or L > 1e6:
                raise TrainingDivergedError(name, f"loss {L:.3g} at iter {it}")
    return w, converged, it


def train_posterior_mean(data, model, beta, lambda2, cfg, name="dataset"):
    """Minimize CE(w) + (beta / 2 lambda2) |w|^2 by full-batch descent.

    This is the w-dependent part of the complexity objective: the log-det
    term's dependence on w enters only at third order in the residuals
    and is dropped, which is also why covariance refreshes decouple from
    mean updates.
    """
    task = tasks.Task(data, model)
    lam = beta / (2.0 * lambda2)

    def grad_fn(w):
        _, g = tasks.batch_loss_grad(task, w)
        return g + 2.0 * lam * w

    def loss_fn(w):
        return tasks.cross_entropy(task, w) + lam * float(w @ w)

    w0 = initial_point(model, cfg)
    return _gd(w0, loss_fn, grad_fn, cfg, name, ridge_curvature=2.0 * lam)


def train_minimizer(task, cfg, name="task"):
    """Minimize the task's own regularized loss by full-batch descent."""
    w0 = initial_point(task.model, cfg)
    return _gd(
        w0,
        lambda w: tasks.loss(task, w),
        lambda w: tasks.grad_loss(task, w),
        cfg,
        name,
        ridge_curvature=task.model.weight_decay,
    )


# -- structure curves ---------------------------------------------------------


@dataclass(frozen=True)
class StructureCurve:
    """Loss-vs-KL tradeoff traced by a descending beta grid."""

    records: list  # dicts: beta, kl_nats, expected_loss, converged, n_iter
    lambda2: float

    def kl(self, converged_only=True):
        return np.array([r["kl_nats"] for r in self._sel(converged_only)])

    def expected_loss(self, converged_only=True):
        return np.array([r["expected_loss"] for r in self._sel(converged_only)])

    def _sel(self, converged_only):
        recs = [r for r in self.records if r["converged"] or not converged_only]
        return sorted(recs, key=lambda r: r["kl_nats"])

    def is_monotone(self, tol=1e-6):
        """Expected loss nonincreasing along increasing KL, within tol."""
        lo = self.expected_loss()
        return bool(np.all(np.diff(lo) <= tol))

    def to_dict(self):
        return {"lambda2": self.lambda2, "records": self.records}


def structure_curve(task, beta_grid, lambda2, trainer):
    """Trace (KL, expected loss) along a descending beta grid.

    Each beta gets its own trained mean; the optimal covariance is
    refreshed from the Fisher at that mean; expected loss is the
    second-order surrogate CE(w0) + tr(F S*)/2.  Points whose training
    hit the iteration budget are flagged, not dropped.
    """
    bg = [float(b) for b in beta_grid]
    if len(bg) < 2 or any(b <= 0 for b in bg) or any(b1 <= b2 for b1, b2 in zip(bg, bg[1:])):
        raise ContractError("beta_grid must be positive and strictly descending")
    records = []
    for b in bg:
        w0, ok, n_iter = train_posterior_mean(
            task.data, task.model, b, lambda2, trainer, name=f"beta={b:g}"
        )
        F = fisher(task, w0)
        S = optimal_sigma(F, b, lambda2)
        kl = gaussian_kl(GaussianPosterior(w0, S), lambda2)
        eloss = tasks.cross_entropy(task, w0) + 0.5 * float(np.sum(F * S))
        records.append(
            {
                "beta": b,
                "kl_nats": float(kl),
                "expected_loss": float(eloss),
                "converged": bool(ok),
                "n_iter": int(n_iter),
            }
        )
    return StructureCurve(records, float(lambda2))


# -- task distances -----------------------------------------------------------


def task_distance(d1, d2, model, beta, lambda2, trainer, names=("d1", "d2")):
    """d_beta(d1 -> d2) = C_beta(d1 u d2) - C_beta(d1), trained means.

    Both complexities use the same trainer config and seed, so the
    self-distance d(D -> D) vanishes to float roundoff: the duplicated
    union has exactly the same mean loss, gradient field and Fisher as
    the base dataset.
    """
    union = tasks.concat(d1, d2, n_classes=model.n_classes)
    w_base, _, _ = train_posterior_mean(d1, model, beta, lambda2, trainer, name=names[0])
    w_union, _, _ = train_posterior_mean(
        union, model, beta, lambda2, trainer, name=f"{names[0]}+{names[1]}"
    )
    c_base = c_beta(tasks.Task(d1, model), w_base, beta, lambda2)
    c_union = c_beta(tasks.Task(union, model), w_union, beta, lambda2)
    return c_union.total - c_base.total


@dataclass(frozen=True)
class DistanceMatrix:
    ids: list
    values: np.ndarray          # (n, n); NaN where flagged
    base_totals: np.ndarray     # C_beta(D_i), for diagnostics
    flags: dict = field(default_factory=dict)  # "i,j" -> message

    def to_json_dict(self):
        return {
            "ids": list(self.ids),
            "values": [[None if not np.isfinite(v) else float(v) for v in row] for row in self.values],
            "base_totals": [float(v) for v in self.base_totals],
            "flags": dict(self.flags),
        }

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("task," + ",".join(self.ids) + "\n")
            for i, row in enumerate(self.values):
                cells = ["" if not np.isfinite(v) else f"{v:.17g}" for v in row]
                fh.write(self.ids[i] + "," + ",".join(cells) + "\n")

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def distance_matrix(datasets, model, beta, lambda2, trainer, ids=None):
    """All pairwise d_beta(D_i -> D_j); per-pair failures become flags.

    The diagonal is computed honestly (union of a dataset with itself),
    so the near-zero self-distance is a measurement, not an assumption.
    """
    n = len(datasets)
    if ids is None:
        ids = [f"task{i}" for i in range(n)]
    if len(ids) != n:
        raise ContractError("ids must align with datasets")
    base = np.full(n, np.nan)
    w_means = [None] * n
    flags = {}
    for i, d in enumerate(datasets):
        try:
            w, _, _ = train_posterior_mean(d, model, beta, lambda2, trainer, name=ids[i])
            w_means[i] = w
            base[i] = c_beta(tasks.Task(d, model), w, beta, lambda2).total
        except TrainingDivergedError as exc:
            flags[f"{i},{i}"] = str(exc)
    values = np.full((n, n), np.nan)
    for i in range(n):
        if w_means[i] is None:
            continue
        for j in range(n):
            try:
                union = tasks.concat(datasets[i], datasets[j], n_classes=model.n_classes)
                w_u, _, _ = train_posterior_mean(
                    union, model, beta, lambda2, trainer, name=f"{ids[i]}+{ids[j]}"
                )
                c_u = c_beta(tasks.Task(union, model), w_u, beta, lambda2)
                values[i, j] = c_u.total - base[i]
            except TrainingDivergedError as exc:
                flags[f"{i},{j}"] = str(exc)
    return DistanceMatrix(list(ids), values, base, flags)
