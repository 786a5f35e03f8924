"""Kernel diagnostics: the min kernel, spline-induced kernels and an exact min-kernel SVM.

For a degree-r spline embedding with first-order differences, the scaled
inner product of the embedded features reproduces ``min(x, y)`` exactly once
``|x - y| >= r h`` (``h`` the knot spacing). With features measured in knot
units the offset is ``(r + 1) / 2``; on ``[lo, hi)`` it becomes

    K(x, y) = h * (phi1(x) . phi1(y) - (r + 1) / 2) + lo
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .solver import TrainConfig, _Gram, dual_cd
from .splinebasis import BSplineSpec, apply_inv_transpose, eval_basis

MAX_EXACT_EXAMPLES = 2000


def min_kernel(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.minimum(x, y).sum())


def min_kernel_matrix(A, B) -> np.ndarray:
    """``K[i, j] = sum_k min(A[i, k], B[j, k])``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError("dimension mismatch")
    K = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        K += np.minimum.outer(A[:, k], B[:, k])
    return K


def embedded_features(spec: BSplineSpec, xs) -> np.ndarray:
    """Dense rows ``D_d^{-T} phi(x)`` for each scalar in ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    n = spec.n_basis
    out = np.zeros((xs.size, n))
    for i, x in enumerate(xs):
        v = apply_inv_transpose(spec.reg_order, eval_basis(spec, x), n)
        out[i, v.indices] = v.values
    return out


def _offset(spec: BSplineSpec) -> float:
    return (spec.degree + 1) / 2


def spline_kernel(spec: BSplineSpec, x: float, y: float) -> float:
    """Kernel induced by the spline embedding, shifted and scaled to track ``min``."""
    F = embedded_features(spec, [x, y])
    return spec.spacing * (float(F[0] @ F[1]) - _offset(spec)) + spec.lo


@dataclass(frozen=True)
class KernelGrid:
    step: float
    points: np.ndarray
    values: np.ndarray
    kmin: np.ndarray

    @property
    def diff(self) -> np.ndarray:
        return self.kmin - self.values


def lattice(step: float) -> np.ndarray:
    if not 0 < step <= 0.5:
        raise ValueError(f"step must lie in (0, 0.5], got {step}")
    count = int(np.floor(1.0 / step + 1e-9)) + 1
    return np.arange(count) * step


def kernel_grid(spec: BSplineSpec, step: float) -> KernelGrid:
    """Spline kernel and the min kernel on the ``[0, 1]^2`` lattice of spacing ``step``."""
    pts = lattice(step)
    F = embedded_features(spec, pts)
    K = spec.spacing * (F @ F.T - _offset(spec)) + spec.lo
    K = (K + K.T) / 2
    return KernelGrid(step, pts, K, np.minimum.outer(pts, pts))


def write_kernel_csv(grid: KernelGrid, path) -> None:
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "k", "kmin", "diff"])
        diff = grid.diff
        for i, x in enumerate(grid.points):
            for j, y in enumerate(grid.points):
                w.writerow([fmt(x), fmt(y), fmt(grid.values[i, j]), fmt(grid.kmin[i, j]),
                            fmt(diff[i, j])])


def truncated_poly_features(knots, p: int, x: float) -> np.ndarray:
    """``(x - t_i)_+^p`` per knot; for ``p = 0`` this is the step ``x >= t_i``."""
    knots = np.asarray(knots, dtype=np.float64)
    if np.any(np.diff(knots) < 0):
        raise ValueError("knots must be sorted")
    if p < 0:
        raise ValueError("degree must be non-negative")
    gap = x - knots
    if p == 0:
        return (gap >= 0).astype(np.float64)
    return np.where(gap > 0, gap, 0.0) ** p


@dataclass(eq=False)
class MinKernelSVM:
    """Dual solution of an SVM with kernel ``scale * K_min + offset`` (no intercept)."""

    X: np.ndarray
    coef: np.ndarray
    alpha: np.ndarray
    scale: float = 1.0
    offset: float = 0.0

    def decision_function(self, Z) -> np.ndarray:
        K = self.scale * min_kernel_matrix(Z, self.X) + self.offset
        return K @ self.coef


def exact_min_svm(data, C: float = 1.0, scale: float = 1.0, offset: float = 0.0,
                  tol: float = 1e-3, max_iter: int = 10000, seed: int = 0) -> MinKernelSVM:
    """Small-scale reference: coordinate descent on the explicit min-kernel Gram matrix.

    ``scale`` and ``offset`` let the caller match the geometry of an embedding
    (e.g. ``1/h`` and the constant contributed per dimension plus ``B^2``).
    """
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    if X.shape[0] > MAX_EXACT_EXAMPLES:
        raise ValueError(f"exact min-kernel SVM limited to {MAX_EXACT_EXAMPLES} examples")
    K = scale * min_kernel_matrix(X, X) + offset
    cfg = TrainConfig(C=C, tol=tol, max_iter=max_iter, seed=seed)
    alpha, _, _ = dual_cd(_Gram(K), y, cfg)
    return MinKernelSVM(X, alpha * y, alpha, scale, offset)
