"""Uniform B-spline bases, modified difference matrices and their fast inverses.

The per-dimension function is ``f(x) = w' D_d^{-T} phi(x)`` where ``phi`` is a
local B-spline basis and ``D_d`` the square (invertible) difference matrix.
Inverting ``D_1`` turns into suffix sums, so everything here runs in O(d n)
without ever forming a dense matrix (``diff_matrix`` exists for tests and
diagnostics).
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

MAX_DEGREE = 3
MAX_REG_ORDER = 2
CLAMP_EPS = 1e-9


@dataclass(frozen=True)
class SparseVec:
    """Sorted index/value pairs with no stored zeros."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and (idx[0] < 0 or np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be non-negative and strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> SparseVec:
        a = np.asarray(a, dtype=np.float64)
        nz = np.flatnonzero(a)
        return cls(nz, a[nz])

    def __len__(self) -> int:
        return int(self.indices.size)

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.values
        return out

    def dot(self, w: np.ndarray) -> float:
        return float(w[self.indices] @ self.values)


@dataclass(frozen=True)
class BSplineSpec:
    """Uniform B-spline embedding for one input dimension.

    ``degree`` is the spline degree r, ``bins`` the number N of knot intervals
    covering ``[lo, hi)`` and ``reg_order`` the difference order d. There are
    ``N + r`` basis functions, so every in-range point sees ``r + 1`` of them.
    """

    degree: int = 1
    bins: int = 10
    lo: float = 0.0
    hi: float = 1.0
    reg_order: int = 1

    def __post_init__(self) -> None:
        if self.degree not in (1, 2, 3):
            raise ValueError(f"degree must be 1, 2 or 3, got {self.degree}")
        if self.reg_order not in (0, 1, 2):
            raise ValueError(f"reg_order must be 0, 1 or 2, got {self.reg_order}")
        if int(self.bins) != self.bins or self.bins < 1:
            raise ValueError(f"bins must be a positive integer, got {self.bins}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.hi > self.lo:
            raise ValueError(f"need finite lo < hi, got [{self.lo}, {self.hi})")

    @property
    def n_basis(self) -> int:
        return self.bins + self.degree

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.bins


@numba.njit(cache=True)
def _basis_values(t, degree, out):
    """Cox-de Boor triangle on integer knots for local coordinate ``t`` in [0, 1).

    Fills ``out[0..degree]`` with the values of the basis functions whose
    support contains the current interval, lowest index first.
    """
    out[0] = 1.0
    for q in range(1, degree + 1):
        saved = 0.0
        for j in range(q):
            # uniform knots: both denominators equal q
            temp = out[j] / q
            out[j] = saved + (j + 1 - t) * temp
            saved = (t + q - j - 1) * temp
        out[q] = saved


@numba.njit(cache=True)
def _fill_parts(x, lo, hi, bins, degree, offsets, starts, vals):
    for j in range(x.size):
        h = (hi[j] - lo[j]) / bins
        xc = min(max(x[j], lo[j]), hi[j] - h * CLAMP_EPS)
        u = (xc - lo[j]) / h
        k = min(np.floor(u), bins - 1)
        starts[j] = offsets[j] + np.int64(k)
        _basis_values(u - k, degree, vals[j])


def basis_parts(lo, hi, bins: int, degree: int, x, offsets=None):
    """First active basis index and ``(len(x), degree + 1)`` nonzero values.

    Inputs are clamped to ``[lo, hi - 1e-9 h]`` first.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), x.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), x.shape)
    if offsets is None:
        offsets = np.zeros(x.size, dtype=np.int64)
    starts = np.empty(x.size, dtype=np.int64)
    vals = np.empty((x.size, degree + 1))
    _fill_parts(x, np.ascontiguousarray(lo), np.ascontiguousarray(hi), bins, degree,
                offsets, starts, vals)
    return starts, vals


def eval_basis(spec: BSplineSpec, x: float) -> SparseVec:
    """B-spline coefficients ``phi(x)``: r+1 consecutive entries summing to one."""
    starts, vals = basis_parts(spec.lo, spec.hi, spec.bins, spec.degree, x)
    idx = np.arange(starts[0], starts[0] + spec.degree + 1)
    keep = vals[0] != 0.0
    return SparseVec(idx[keep], vals[0][keep])


def diff_matrix(d: int, n: int) -> np.ndarray:
    """Square difference matrix with ``e_1'`` as first row of ``D_1``; ``D_2 = D_1^2``."""
    if d not in (1, 2):
        raise ValueError(f"difference order must be 1 or 2, got {d}")
    if n < 2:
        raise ValueError(f"matrix size must be at least 2, got {n}")
    d1 = np.eye(n) - np.eye(n, k=-1)
    return d1 if d == 1 else d1 @ d1


def _check(d: int, phi: SparseVec, n: int) -> None:
    if d not in (0, 1, 2):
        raise ValueError(f"regularization order must be 0, 1 or 2, got {d}")
    if len(phi) and phi.indices[-1] >= n:
        raise ValueError(f"index {phi.indices[-1]} out of range for n={n}")


@numba.njit(cache=True)
def _suffix_passes(a, top, d):
    # step A: a_i += a_{i+1} for i from top-1 down to 0
    for _ in range(d):
        for i in range(top - 1, -1, -1):
            a[i] += a[i + 1]


@numba.njit(cache=True)
def _prefix_passes(a, d):
    # step B: a_i += a_{i-1}
    for _ in range(d):
        for i in range(1, a.size):
            a[i] += a[i - 1]


@numba.njit(cache=True)
def _apply_L_dense(idx, val, n, d):
    a = np.zeros(n)
    top = 0
    for k in range(idx.size):
        a[idx[k]] += val[k]
        if idx[k] > top:
            top = idx[k]
    _suffix_passes(a, top, d)
    _prefix_passes(a, d)
    return a


def apply_inv_transpose(d: int, phi: SparseVec, n: int) -> SparseVec:
    """``D_d^{-T} phi`` via ``d`` suffix-sum passes.

    The result is dense on ``0..max(phi.indices)`` and zero above it.
    """
    _check(d, phi, n)
    if d == 0 or len(phi) == 0:
        return phi
    top = int(phi.indices[-1])
    a = np.zeros(top + 1)
    a[phi.indices] = phi.values
    _suffix_passes(a, top, d)
    return SparseVec.from_dense(a)


def apply_L(d: int, phi: SparseVec, n: int) -> np.ndarray:
    """Dense ``L_d phi = D_d^{-1} D_d^{-T} phi`` in ``2 d n`` additions."""
    _check(d, phi, n)
    return _apply_L_dense(phi.indices, phi.values, n, d)


def inv_transpose_rows(d: int, block: np.ndarray) -> np.ndarray:
    """Row-wise ``D_d^{-T}`` of a dense ``(rows, n)`` block (in place)."""
    for _ in range(d):
        block[:] = np.cumsum(block[:, ::-1], axis=1)[:, ::-1]
    return block


def diff_rows(d: int, block: np.ndarray) -> np.ndarray:
    """Row-wise ``D_d`` of a dense ``(rows, n)`` block (first entry kept)."""
    out = np.asarray(block, dtype=np.float64)
    for _ in range(d):
        out = np.diff(out, axis=1, prepend=0.0)
    return out


def inverse_diff_rows(d: int, block: np.ndarray) -> np.ndarray:
    """Row-wise ``D_d^{-1}`` (prefix sums), i.e. ``w -> w_d``."""
    out = np.array(block, dtype=np.float64)
    for _ in range(d):
        out = np.cumsum(out, axis=1)
    return out
