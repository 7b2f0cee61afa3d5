"""Synthetic classification tasks and the small model families fit to them.

A dataset is (inputs, integer labels, label-space size) plus a provenance
dict that fully determines its contents: regenerating from provenance is
bit-identical, which is what makes experiment bundles reproducible.  Two
model families are supported, both with softmax heads over n_classes - 1
free logit rows (the first class is the pinned reference, so the binary
case reduces to plain logistic regression):

* ``multinomial-logistic`` : logits z_k = w_k . x
* ``mlp-1-hidden``         : logits z = W2 phi(W1 x), phi in {tanh, softplus}

Both are C^2 in the weights, which the curvature machinery downstream
requires.  Losses are mean cross-entropy plus (weight_decay / 2) |w|^2;
per-sample gradients omit the decay term.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .rng import stream

_FAMILIES = ("multinomial-logistic", "mlp-1-hidden")
_ACTIVATIONS = ("tanh", "softplus")


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray        # (n, input_dim) float64
    labels: np.ndarray        # (n,) int64 in [0, n_classes)
    n_classes: int
    provenance: dict = field(compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.inputs, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if X.ndim != 2:
            raise ContractError(f"inputs must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ContractError("labels must be 1-D and aligned with inputs")
        if not np.all(np.isfinite(X)):
            raise ContractError("inputs must be finite")
        if self.n_classes < 2:
            raise ContractError("need at least 2 classes")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise ContractError("labels must lie in [0, n_classes)")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def input_dim(self):
        return self.inputs.shape[1]


def _simplex_centers(n_classes, input_dim, separation):
    # Vertices of a regular simplex with pairwise distance = separation,
    # embedded in the first n_classes - 1 coordinates.  Deterministic.
    K = n_classes
    if K > input_dim + 1:
        raise ContractError(
            f"{K} mutually separated centers need input_dim >= {K - 1}, got {input_dim}"
        )
    E = np.eye(K)
    C = E - E.mean(axis=0)                       # rank K-1, pairwise distance sqrt(2)
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    coords = (U * s)[:, : K - 1]
    centers = np.zeros((K, input_dim))
    centers[:, : K - 1] = coords * (separation / np.sqrt(2.0))
    return centers


def generate_blobs(n_classes, n_samples, input_dim, separation, seed):
    """Gaussian blobs with unit covariance on separated simplex centers.

    Samples per class are n_samples // n_classes, remainder assigned to the
    last class; rows are ordered by class.  Requires
    n_classes <= input_dim + 1 so the centers can sit on a regular simplex
    with the requested mutual distance.
    """
    if n_classes < 2 or n_samples < n_classes or input_dim < 1:
        raise ContractError("need n_classes >= 2, n_samples >= n_classes, input_dim >= 1")
    if not (np.isfinite(separation) and separation > 0):
        raise ContractError("separation must be positive")
    centers = _simplex_centers(n_classes, input_dim, separation)
    counts = [n_samples // n_classes] * n_classes
    counts[-1] += n_samples - sum(counts)
    rng = stream(seed)
    xs, ys = [], []
    for k in range(n_classes):
        xs.append(centers[k] + rng.standard_normal((counts[k], input_dim)))
        ys.append(np.full(counts[k], k, dtype=np.int64))
    prov = {
        "kind": "blobs",
        "n_classes": int(n_classes),
        "n_samples": int(n_samples),
        "input_dim": int(input_dim),
        "separation": float(separation),
        "seed": int(seed),
    }
    return Dataset(np.vstack(xs), np.concatenate(ys), n_classes, prov)


def corrupt_labels(d, rho, seed):
    """Resample floor(rho * n) labels uniformly over the label space.

    A resampled label may coincide with the original, so the expected
    disagreement is rho * (1 - 1/K).  rho=0 returns an identical copy
    (fresh provenance).  The corrupted rows are a seeded-permutation
    prefix, so sweeps that share one seed across a rho grid get nested
    corruptions: every row corrupted at rho1 stays corrupted, with the
    same replacement label, at any rho2 > rho1.
    """
    if not 0.0 <= rho <= 1.0:
        raise ContractError("rho must lie in [0, 1]")
    m = int(np.floor(rho * d.n))
    rng = stream(seed)
    order = rng.permutation(d.n)
    replacements = rng.integers(0, d.n_classes, size=d.n)
    labels = d.labels.copy()
    labels[order[:m]] = replacements[:m]
    prov = {"kind": "corrupt_labels", "rho": float(rho), "seed": int(seed), "base": d.provenance}
    return Dataset(d.inputs.copy(), labels, d.n_classes, prov)


def concat(d1, d2, n_classes=None):
    """Stack two datasets that share an input space and a label space.

    The label spaces must be *declared* compatible: labels are taken at
    face value, and the result uses ``n_classes`` if given, else
    max(K1, K2).  No alignment between differing label sets is guessed.
    """
    if d1.input_dim != d2.input_dim:
        raise ContractError(f"input_dim mismatch: {d1.input_dim} vs {d2.input_dim}")
    K = int(n_classes) if n_classes is not None else max(d1.n_classes, d2.n_classes)
    if K < max(d1.n_classes, d2.n_classes):
        raise ContractError("declared n_classes smaller than a part's label space")
    prov = {"kind": "concat", "n_classes": K, "parts": [d1.provenance, d2.provenance]}
    return Dataset(
        np.vstack([d1.inputs, d2.inputs]),
        np.concatenate([d1.labels, d2.labels]),
        K,
        prov,
    )


def subset_classes(d, keep):
    """Restrict to samples whose label is in ``keep`` (label ids unchanged).

    The label space is inherited from the parent, so the subset stays
    directly comparable with (and concatenable to) the full task.
    """
    keep = sorted(int(k) for k in keep)
    if not keep or any(k < 0 or k >= d.n_classes for k in keep):
        raise ContractError(f"keep must be a nonempty subset of [0, {d.n_classes})")
    mask = np.isin(d.labels, keep)
    prov = {"kind": "subset_classes", "keep": keep, "base": d.provenance}
    return Dataset(d.inputs[mask], d.labels[mask], d.n_classes, prov)


def empty(input_dim, n_classes):
    """Zero-row dataset; the identity element of ``concat``."""
    prov = {"kind": "empty", "input_dim": int(input_dim), "n_classes": int(n_classes)}
    return Dataset(np.zeros((0, input_dim)), np.zeros(0, dtype=np.int64), n_classes, prov)


def from_provenance(prov):
    """Rebuild a dataset from its provenance dict, bit-identically."""
    kind = prov.get("kind")
    if kind == "blobs":
        return generate_blobs(
            prov["n_classes"], prov["n_samples"], prov["input_dim"],
            prov["separation"], prov["seed"],
        )
    if kind == "corrupt_labels":
        return corrupt_labels(from_provenance(prov["base"]), prov["rho"], prov["seed"])
    if kind == "concat":
        d1 = from_provenance(prov["parts"][0])
        d2 = from_provenance(prov["parts"][1])
        return concat(d1, d2, n_classes=prov["n_classes"])
    if kind == "subset_classes":
        return subset_classes(from_provenance(prov["base"]), prov["keep"])
    if kind == "empty":
        return empty(prov["input_dim"], prov["n_classes"])
    raise ContractError(f"unknown provenance kind {kind!r}")


# -- serialization -----------------------------------------------------------


def to_csv(d, csv_path, provenance_path=None):
    """Write ``x0..x{p-1},y`` rows plus a JSON provenance sidecar."""
    csv_path = str(csv_path)
    if provenance_path is None:
        provenance_path = csv_path + ".provenance.json"
    header = ",".join([f"x{i}" for i in range(d.input_dim)] + ["y"])
    with open(csv_path, "w") as fh:
        fh.write(header + "\n")
        for x, y in zip(d.inputs, d.labels):
            fh.write(",".join(f"{v:.17g}" for v in x) + f",{y}\n")
    with open(provenance_path, "w") as fh:
        json.dump({"n_classes": d.n_classes, "provenance": d.provenance}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def from_csv(csv_path, provenance_path=None):
    csv_path = str(csv_path)
    if provenance_path is None:
        provenance_path = csv_path + ".provenance.json"
    with open(provenance_path) as fh:
        side = json.load(fh)
    raw = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    with open(csv_path) as fh:
        ncol = len(fh.readline().strip().split(","))
    if raw.size == 0:
        raw = raw.reshape(0, ncol)
    X = raw[:, :-1]
    y = raw[:, -1].astype(np.int64)
    return Dataset(X, y, side["n_classes"], side["provenance"])


# -- model families ----------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    family: str
    input_dim: int
    n_classes: int
    weight_decay: float = 0.0
    hidden: int = 0
    activation: str = "tanh"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ContractError(f"family must be one of {_FAMILIES}, got {self.family!r}")
        if self.input_dim < 1 or self.n_classes < 2:
            raise ContractError("need input_dim >= 1 and n_classes >= 2")
        if self.weight_decay < 0:
            raise ContractError("weight_decay must be nonnegative")
        if self.family == "mlp-1-hidden":
            if self.hidden < 1:
                raise ContractError("mlp-1-hidden needs hidden >= 1")
            if self.activation not in _ACTIVATIONS:
                raise ContractError(f"activation must be one of {_ACTIVATIONS}")

    @property
    def n_params(self):
        K1 = self.n_classes - 1
        if self.family == "multinomial-logistic":
            return K1 * self.input_dim
        return self.hidden * self.input_dim + K1 * self.hidden


@dataclass(frozen=True)
class Task:
    data: Dataset
    model: ModelSpec

    def __post_init__(self):
        if self.data.input_dim != self.model.input_dim:
            raise ContractError(
                f"dataset input_dim {self.data.input_dim} != model input_dim {self.model.input_dim}"
            )
        if self.data.n and self.data.labels.max() >= self.model.n_classes:
            raise ContractError("dataset labels exceed the model's label space")
        if self.data.n_classes > self.model.n_classes:
            raise ContractError("dataset label space exceeds the model's")


def _check_w(model, w):
    w = np.asarray(w, dtype=float)
    if w.shape != (model.n_params,):
        raise ContractError(f"weights must have shape ({model.n_params},), got {w.shape}")
    return w


def _act(name, z):
    if name == "tanh":
        a = np.tanh(z)
        return a, 1.0 - a * a
    # softplus; logaddexp keeps large |z| from overflowing
    from scipy.special import expit

    return np.logaddexp(0.0, z), expit(z)


def _forward(model, w, X):
    """Free logits (n, K-1) plus whatever backprop later needs."""
    K1 = model.n_classes - 1
    if model.family == "multinomial-logistic":
        W = w.reshape(K1, model.input_dim)
        return X @ W.T, None
    h, p = model.hidden, model.input_dim
    W1 = w[: h * p].reshape(h, p)
    W2 = w[h * p:].reshape(K1, h)
    Z1 = X @ W1.T
    A1, dA1 = _act(model.activation, Z1)
    return A1 @ W2.T, (W1, W2, A1, dA1)


def posterior_probs(task, w, inputs=None):
    """Class posteriors p_w(y|x), shape (n, n_classes); column 0 is the
    pinned reference class.  Max-subtracted softmax, safe for huge logits."""
    w = _check_w(task.model, w)
    X = task.data.inputs if inputs is None else np.asarray(inputs, dtype=float)
    Z1, _ = _forward(task.model, w, X)
    Z = np.concatenate([np.zeros((X.shape[0], 1)), Z1], axis=1)
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _ce_and_dlogits(model, w, X, y):
    """Mean cross-entropy on (X, y) and its gradient w.r.t. free logits."""
    Z1, cache = _forward(model, w, X)
    Z = np.concatenate([np.zeros((X.shape[0], 1)), Z1], axis=1)
    m = Z.max(axis=1, keepdims=True)
    lse = (m[:, 0] + np.log(np.exp(Z - m).sum(axis=1)))
    ce = float(np.mean(lse - Z[np.arange(len(y)), y]))
    P = np.exp(Z - m)
    P /= P.sum(axis=1, keepdims=True)
    G = P[:, 1:].copy()
    G[y > 0, y[y > 0] - 1] -= 1.0          # d(mean CE)/d z_free, per sample
    return ce, G, cache

def _dlogits_to_grad(model, X, G, cache):
    n = X.shape[0]
    if model.family == "multinomial-logistic":
        return (G.T @ X).ravel() / n
    W1, W2, A1, dA1 = cache
    gW2 = G.T @ A1 / n
    Dhid = (G @ W2) * dA1
    gW1 = Dhid.T @ X / n
    return np.concatenate([gW1.ravel(), gW2.ravel()])


def cross_entropy(task, w, idx=None):
    """Mean cross-entropy alone, without the weight-decay term."""
    w = _check_w(task.model, w)
    X, y = _subset(task, idx)
    ce, _, _ = _ce_and_dlogits(task.model, w, X, y)
    return ce


def loss(task, w):
    """Mean cross-entropy + (weight_decay / 2) |w|^2."""
    w = _check_w(task.model, w)
    if task.data.n == 0:
        raise ContractError("loss of an empty dataset is undefined")
    return cross_entropy(task, w) + 0.5 * task.model.weight_decay * float(w @ w)


def grad_loss(task, w):
    w = _check_w(task.model, w)
    _, g = batch_loss_grad(task, w)
    return g + task.model.weight_decay * w


def batch_loss_grad(task, w, idx=None):
    """(mean CE, its gradient) on the whole dataset or on rows ``idx``.

    Decay terms are excluded; SGD adds them separately each step.
    """
    w = _check_w(task.model, w)
    X, y = _subset(task, idx)
    ce, G, cache = _ce_and_dlogits(task.model, w, X, y)
    return ce, _dlogits_to_grad(task.model, X, G, cache)


def _subset(task, idx):
    if task.data.n == 0:
        raise ContractError("empty dataset")
    if idx is None:
        return task.data.inputs, task.data.labels
    idx = np.asarray(idx)
    return task.data.inputs[idx], task.data.labels[idx]


def per_sample_grads(task, w):
    """Rows grad_w(-log p_w(y_i | x_i)), shape (n, n_params); no decay term."""
    w = _check_w(task.model, w)
    X, y = task.data.inputs, task.data.labels
    n = task.data.n
    if n == 0:
        raise ContractError("empty dataset")
    model = task.model
    P = posterior_probs(task, w)
    G = P[:, 1:].copy()
    G[y > 0, y[y > 0] - 1] -= 1.0
    if model.family == "multinomial-logistic":
        return np.einsum("nk,np->nkp", G, X).reshape(n, -1)
    Z1p, cache = _forward(model, w, X)
    W1, W2, A1, dA1 = cache
    gW2 = np.einsum("nk,nh->nkh", G, A1)
    Dhid = (G @ W2) * dA1
    gW1 = np.einsum("nh,np->nhp", Dhid, X)
    return np.concatenate([gW1.reshape(n, -1), gW2.reshape(n, -1)], axis=1)


def logit_jacobians(task, w, inputs=None):
    """Per-sample Jacobian of the free logits, shape (n, K-1, n_params).

    The expected-curvature computations contract these with the softmax
    covariance; for the logistic family the Jacobian is just a Kronecker
    stamp of x.
    """
    w = _check_w(task.model, w)
    model = task.model
    X = task.data.inputs if inputs is None else np.asarray(inputs, dtype=float)
    n = X.shape[0]
    K1 = model.n_classes - 1
    d = model.n_params
    if model.family == "multinomial-logistic":
        J = np.zeros((n, K1, d))
        p = model.input_dim
        for k in range(K1):
            J[:, k, k * p:(k + 1) * p] = X
        return J
    h, p = model.hidden, model.input_dim
    _, cache = _forward(model, w, X)
    W1, W2, A1, dA1 = cache
    # dz_k/dW1[j,:] = W2[k,j] * phi'(z1_j) * x ; dz_k/dW2[l,:] = delta_kl * a1
    J1 = np.einsum("kh,nh,np->nkhp", W2, dA1, X).reshape(n, K1, h * p)
    J2 = np.zeros((n, K1, K1 * h))
    for k in range(K1):
        J2[:, k, k * h:(k + 1) * h] = A1
    return np.concatenate([J1, J2], axis=2)
