"""L1-loss linear SVM training by dual coordinate descent.

The objective is ``0.5 ||w||^2 + C sum_k max(0, 1 - y_k w'x_k)``; the usual
``lambda/2 ||w||^2 + 1/m sum hinge`` form maps to it with ``C = 1/(lambda m)``.
The bias feature is an ordinary (regularized) column.

For spline embeddings the weights are kept as ``w_d = D_d^{-1} w`` so the
score is a sparse dot with the raw basis ``phi(x)``, and an update
``w += delta D_d^{-T} phi`` becomes ``w_d += delta L_d phi`` with
``L_d = D_d^{-1} D_d^{-T}`` applied in O(d n). In online mode nothing about
the encoded data is stored: each visit re-encodes its example.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numba
import numpy as np

from .dataio import DataError
from .encoder import EmbeddingSpec, embed, encode, encode_dataset
from .splinebasis import _fill_parts, diff_rows, inverse_diff_rows

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    tol: float = 0.1
    max_iter: int = 1000
    seed: int = 0
    mode: Literal["online", "batch"] = "online"
    report_objective: bool = False

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.mode not in ("online", "batch"):
            raise ValueError(f"mode must be 'online' or 'batch', got {self.mode!r}")


@dataclass(eq=False)
class AdditiveModel:
    """Binary additive classifier; ``weights`` are ``w_d`` over the full width."""

    spec: EmbeddingSpec
    weights: np.ndarray
    C: float = 1.0
    seed: int = 0
    classes: tuple = (-1, 1)
    alpha: np.ndarray | None = field(default=None, repr=False)
    passes: int = 0
    violation: float = math.nan

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.spec.width,):
            raise ValueError(f"expected {self.spec.width} weights, got {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise FloatingPointError("model weights are not finite")

    @property
    def negative(self):
        return self.classes[0]

    @property
    def positive(self):
        return self.classes[1]

    @property
    def bias_weight(self) -> float:
        return float(self.weights[-1]) if self.spec.include_bias else 0.0

    def plain_weights(self) -> np.ndarray:
        """Weights ``w`` on the ``D_d^{-T} phi`` features (``w = D_d w_d``)."""
        d = self.spec.reg_order
        if d == 0:
            return self.weights.copy()
        n_body = self.spec.n_dims * self.spec.dim_width
        body = self.weights[:n_body].reshape(self.spec.n_dims, -1)
        return np.concatenate([diff_rows(d, body).ravel(), self.weights[n_body:]])

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return encode_dataset(self.spec, X) @ self.weights


@dataclass(eq=False)
class OneVsAll:
    classes: tuple
    models: list

    def decision_function(self, X) -> np.ndarray:
        return np.column_stack([m.decision_function(X) for m in self.models])


# --------------------------------------------------------------------------
# problem views for the coordinate descent loop


@numba.njit(cache=True)
def _spline_dot(w, starts, vals, active, bias_idx, bias):
    s = 0.0
    for j in range(starts.size):
        if active[j]:
            for q in range(vals.shape[1]):
                s += w[starts[j] + q] * vals[j, q]
    if bias_idx >= 0:
        s += w[bias_idx] * bias
    return s


@numba.njit(cache=True)
def _spline_sqnorm(starts, vals, active, offsets, d, scratch, bias):
    """Squared norm of ``D_d^{-T} phi`` (plus the bias feature)."""
    total = bias * bias
    r1 = vals.shape[1]
    for j in range(starts.size):
        if not active[j]:
            continue
        k0 = starts[j] - offsets[j]
        top = k0 + r1 - 1
        for i in range(top + 1):
            scratch[i] = 0.0
        for q in range(r1):
            scratch[k0 + q] = vals[j, q]
        for _ in range(d):
            for i in range(top - 1, -1, -1):
                scratch[i] += scratch[i + 1]
        for i in range(top + 1):
            total += scratch[i] * scratch[i]
    return total


@numba.njit(cache=True)
def _spline_update(w, starts, vals, active, offsets, d, delta, scratch, bias_idx, bias):
    """``w_d += delta * L_d phi`` dimension by dimension (steps A then B)."""
    n = scratch.size
    r1 = vals.shape[1]
    for j in range(starts.size):
        if not active[j]:
            continue
        off = offsets[j]
        k0 = starts[j] - off
        top = k0 + r1 - 1
        if d == 0:
            for q in range(r1):
                w[starts[j] + q] += delta * vals[j, q]
            continue
        for i in range(n):
            scratch[i] = 0.0
        for q in range(r1):
            scratch[k0 + q] = vals[j, q]
        for _ in range(d):
            for i in range(top - 1, -1, -1):
                scratch[i] += scratch[i + 1]
        for _ in range(d):
            for i in range(1, n):
                scratch[i] += scratch[i - 1]
        for i in range(n):
            w[off + i] += delta * scratch[i]
    if bias_idx >= 0:
        w[bias_idx] += delta * bias


class _OnlineSpline:
    """Encodes on every visit; keeps only one example's basis values."""

    materialized = False

    def __init__(self, spec: EmbeddingSpec, X: np.ndarray):
        self.spec, self.X = spec, X
        first = spec.dims[0]
        self.w = np.zeros(spec.width)
        self.offsets = spec.offsets
        self.scratch = np.zeros(spec.dim_width)
        self.starts = np.empty(spec.n_dims, dtype=np.int64)
        self.vals = np.empty((spec.n_dims, first.degree + 1))
        self.active = np.ones(spec.n_dims, dtype=np.bool_)
        self.bias_idx = spec.width - 1 if spec.include_bias else -1
        self.bias = spec.bias if spec.include_bias else 0.0
        self._cached = -1

    def _parts(self, i: int):
        if i != self._cached:
            x = self.X[i]
            first = self.spec.dims[0]
            _fill_parts(x, self.spec._lo, self.spec._hi, first.bins, first.degree,
                        self.offsets, self.starts, self.vals)
            if self.spec.skip_zeros:
                np.not_equal(x, 0.0, out=self.active)
            self._cached = i
        return self.starts, self.vals, self.active

    def diag(self) -> np.ndarray:
        qd = np.empty(self.X.shape[0])
        d = self.spec.reg_order
        for i in range(qd.size):
            starts, vals, active = self._parts(i)
            qd[i] = _spline_sqnorm(starts, vals, active, self.offsets, d, self.scratch, self.bias)
        return qd

    def score(self, i: int) -> float:
        starts, vals, active = self._parts(i)
        return _spline_dot(self.w, starts, vals, active, self.bias_idx, self.bias)

    def update(self, i: int, delta: float) -> None:
        starts, vals, active = self._parts(i)
        _spline_update(self.w, starts, vals, active, self.offsets, self.spec.reg_order,
                       delta, self.scratch, self.bias_idx, self.bias)

    def weights_d(self) -> np.ndarray:
        return self.w


class _OnlineFeatures:
    """Explicit features computed on every visit (orthogonal families)."""

    materialized = False

    def __init__(self, spec: EmbeddingSpec, X: np.ndarray):
        self.spec, self.X = spec, X
        self.w = np.zeros(spec.width)
        self._cached = -1

    def _row(self, i: int):
        if i != self._cached:
            self._cur = embed(self.spec, self.X[i])
            self._cached = i
        return self._cur

    def diag(self) -> np.ndarray:
        return np.array([np.dot(v, v) for v in (self._row(i).values for i in range(len(self.X)))])

    def score(self, i: int) -> float:
        v = self._row(i)
        return float(self.w[v.indices] @ v.values)

    def update(self, i: int, delta: float) -> None:
        v = self._row(i)
        self.w[v.indices] += delta * v.values

    def weights_d(self) -> np.ndarray:
        return self.w


class _Matrix:
    """Precomputed CSR feature rows (batch mode and plain linear SVMs)."""

    materialized = True

    def __init__(self, M):
        self.M = M.tocsr()
        self.w = np.zeros(M.shape[1])

    def diag(self) -> np.ndarray:
        return np.asarray(self.M.multiply(self.M).sum(axis=1)).ravel()

    def _row(self, i: int):
        a, b = self.M.indptr[i], self.M.indptr[i + 1]
        return self.M.indices[a:b], self.M.data[a:b]

    def score(self, i: int) -> float:
        idx, val = self._row(i)
        return float(self.w[idx] @ val)

    def update(self, i: int, delta: float) -> None:
        idx, val = self._row(i)
        self.w[idx] += delta * val


class _Gram:
    """Kernel view: keeps the scores ``s = K (alpha * y)`` up to date."""

    materialized = True

    def __init__(self, K: np.ndarray):
        self.K = K
        self.s = np.zeros(K.shape[0])

    def diag(self) -> np.ndarray:
        return np.diag(self.K).copy()

    def score(self, i: int) -> float:
        return float(self.s[i])

    def update(self, i: int, delta: float) -> None:
        self.s += delta * self.K[:, i]


PassHook = Callable[[int, float, np.ndarray], None]


def dual_cd(problem, y: np.ndarray, cfg: TrainConfig, on_pass: PassHook | None = None):
    """Run the coordinate descent loop; returns ``(alpha, passes, violation)``.

    Each pass visits the examples in a fresh permutation from a generator seeded
    with ``cfg.seed``. The loop stops once the largest projected-gradient
    magnitude seen during a pass is at most ``cfg.tol``.
    """
    C = cfg.C
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    alpha = np.zeros(m)
    qd = problem.diag()
    rng = np.random.default_rng(cfg.seed)
    violation = math.inf
    passes = 0
    for passes in range(1, cfg.max_iter + 1):
        violation = 0.0
        for i in rng.permutation(m):
            yi = y[i]
            g = yi * problem.score(i) - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > violation:
                violation = abs(pg)
            if pg == 0.0:
                continue
            if qd[i] > 0.0:
                new = min(max(a - g / qd[i], 0.0), C)
            else:
                new = C if g < 0 else 0.0
            if new != a:
                problem.update(i, (new - a) * yi)
                alpha[i] = new
        if on_pass is not None:
            on_pass(passes, violation, alpha)
        if violation <= cfg.tol:
            break
    else:
        log.warning("reached max_iter=%d with violation %.3g > tol %.3g",
                    cfg.max_iter, violation, cfg.tol)
    return alpha, passes, violation


def _binary_labels(data) -> np.ndarray:
    if data.y is None or len(data.y) == 0:
        raise DataError("training data needs labels")
    y = np.asarray(data.y)
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("binary training needs labels in {-1, +1}")
    if np.unique(y).size < 2:
        raise ValueError("training data contains a single class")
    return y


def _plain_to_d(spec: EmbeddingSpec, w: np.ndarray) -> np.ndarray:
    d = spec.reg_order
    if d == 0:
        return w
    n_body = spec.n_dims * spec.dim_width
    body = inverse_diff_rows(d, w[:n_body].reshape(spec.n_dims, -1))
    return np.concatenate([body.ravel(), w[n_body:]])


def _make_problem(spec: EmbeddingSpec, X: np.ndarray, mode: str):
    if mode == "batch":
        return _Matrix(encode_dataset(spec, X, embedded=True))
    if spec.is_spline:
        return _OnlineSpline(spec, X)
    return _OnlineFeatures(spec, X)


def _current_weights(problem, spec) -> np.ndarray:
    if isinstance(problem, _Matrix):
        return _plain_to_d(spec, problem.w)
    return problem.w.copy()


def train_binary(data, spec: EmbeddingSpec, cfg: TrainConfig = TrainConfig(),
                 on_pass: Callable | None = None) -> AdditiveModel:
    """Train a ``{-1, +1}`` additive classifier.

    ``on_pass(pass_index, violation, model)`` is called after every pass with
    a snapshot of the current model (dual variables included).
    """
    y = _binary_labels(data)
    X = np.asarray(data.X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise DataError("features contain NaN or Inf")
    if X.shape[1] != spec.n_dims:
        raise ValueError(f"data has {X.shape[1]} dimensions, spec expects {spec.n_dims}")
    problem = _make_problem(spec, X, cfg.mode)

    def hook(k, viol, alpha):
        if on_pass is None and not cfg.report_objective:
            return
        snap = AdditiveModel(spec, _current_weights(problem, spec), cfg.C, cfg.seed,
                             alpha=alpha.copy(), passes=k, violation=viol)
        if cfg.report_objective:
            log.info("pass %d violation %.6g objective %.10g", k, viol,
                     primal_objective(snap, data, cfg))
        if on_pass is not None:
            on_pass(k, viol, snap)

    alpha, passes, viol = dual_cd(problem, y, cfg, hook)
    w = _current_weights(problem, spec)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("training diverged: non-finite weights")
    return AdditiveModel(spec, w, cfg.C, cfg.seed, alpha=alpha, passes=passes, violation=viol)


def train_linear(X, y, cfg: TrainConfig = TrainConfig(), bias: float | None = 1.0):
    """Plain linear SVM on raw features; returns ``(w, b)``.

    With ``bias`` set, a constant column of that value is appended.
    """
    from scipy import sparse

    X = np.asarray(X, dtype=np.float64)
    if bias is not None:
        X = np.column_stack([X, np.full(X.shape[0], bias)])
    problem = _Matrix(sparse.csr_matrix(X))
    dual_cd(problem, y, cfg)
    if bias is None:
        return problem.w, 0.0
    return problem.w[:-1], problem.w[-1] * bias


def predict(model: AdditiveModel, x) -> float:
    """Score ``w_d . phi(x) + bias_w * B``."""
    v = encode(model.spec, x)
    return float(model.weights[v.indices] @ v.values)


def primal_objective(model: AdditiveModel, data, cfg: TrainConfig | float = 1.0) -> float:
    """``0.5 ||w||^2 + C * sum hinge`` with ``w = D_d w_d`` per dimension."""
    C = cfg.C if isinstance(cfg, TrainConfig) else float(cfg)
    w = model.plain_weights()
    y = np.asarray(data.y, dtype=np.float64)
    scores = model.decision_function(data.X)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - y * scores).sum())


def train_ova(data, spec: EmbeddingSpec, cfg: TrainConfig = TrainConfig(),
              jobs: int = 1) -> OneVsAll:
    """One binary model per class (class vs rest), in sorted class order."""
    classes = tuple(int(c) for c in np.unique(data.y))
    if len(classes) < 2:
        raise ValueError("one-vs-all needs at least two classes")

    def one(c):
        yc = np.where(np.asarray(data.y) == c, 1, -1)
        sub = replace(data, y=yc)
        return train_binary(sub, spec, cfg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            models = list(pool.map(one, classes))
    else:
        models = [one(c) for c in classes]
    return OneVsAll(classes, models)


def logistic(s):
    return 1.0 / (1.0 + np.exp(-np.asarray(s, dtype=np.float64)))


def classify(models: OneVsAll | AdditiveModel, x) -> int:
    """Class with the largest logistic-normalized response (ties: lowest id).

    The logistic is monotone, so the argmax is taken on raw scores; this
    avoids spurious ties once ``1/(1+e^-s)`` rounds to 1.
    """
    if isinstance(models, AdditiveModel):
        return models.positive if predict(models, x) > 0 else models.negative
    if not models.models:
        raise ValueError("no models to classify with")
    scores = np.array([predict(m, x) for m in models.models])
    return models.classes[int(np.argmax(scores))]


def classify_many(models: OneVsAll | AdditiveModel, X) -> np.ndarray:
    if isinstance(models, AdditiveModel):
        s = models.decision_function(X)
        return np.where(s > 0, models.positive, models.negative)
    s = models.decision_function(X)
    return np.asarray(models.classes)[np.argmax(s, axis=1)]
