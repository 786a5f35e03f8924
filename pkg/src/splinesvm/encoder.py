"""Concatenated per-dimension embeddings.

Dimension ``j`` occupies columns ``[j * n, (j + 1) * n)`` where ``n`` is the
per-dimension width; the bias feature, when enabled, is the last column.
For spline families ``encode`` yields the raw local basis ``phi(x)`` (what the
solver dots against ``w_d``) and ``embed`` yields ``D_d^{-T} phi(x)``, the
features a generic linear solver would see.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .orthobasis import OrthoSpec, RangeNorm, fit_range_norm, ortho_embed
from .splinebasis import BSplineSpec, SparseVec, basis_parts


@dataclass(frozen=True, eq=False)
class EmbeddingSpec:
    """Embedding of all ``D`` input dimensions with one basis family.

    ``dims`` holds one :class:`BSplineSpec` per dimension (spline family) or a
    single shared :class:`OrthoSpec` repeated; orthogonal families also carry
    the :class:`RangeNorm` used to map inputs to ``[-1, 1]``. ``skip_zeros``
    leaves out dimensions whose input is exactly zero, treating missing
    histogram entries as carrying no evidence (an approximation: the spline
    basis at 0 is not zero).
    """

    dims: tuple
    norm: RangeNorm | None = None
    include_bias: bool = True
    bias: float = 1.0
    skip_zeros: bool = False

    def __post_init__(self) -> None:
        if len(self.dims) < 1:
            raise ValueError("need at least one input dimension")
        first = self.dims[0]
        if isinstance(first, BSplineSpec):
            if not all(
                isinstance(s, BSplineSpec)
                and (s.degree, s.bins, s.reg_order) == (first.degree, first.bins, first.reg_order)
                for s in self.dims
            ):
                raise ValueError("all dimensions must share degree, bins and reg_order")
            lo = np.array([s.lo for s in self.dims])
            hi = np.array([s.hi for s in self.dims])
            object.__setattr__(self, "_lo", lo)
            object.__setattr__(self, "_hi", hi)
            object.__setattr__(self, "_offsets", np.arange(len(self.dims)) * first.n_basis)
        elif isinstance(first, OrthoSpec):
            if any(s != first for s in self.dims):
                raise ValueError("all dimensions must share one OrthoSpec")
            if self.norm is None or self.norm.n_dims != len(self.dims):
                raise ValueError("orthogonal embeddings need a RangeNorm per dimension")
        else:
            raise TypeError(f"unsupported basis spec {type(first).__name__}")
        if not np.isfinite(self.bias):
            raise ValueError("bias value must be finite")

    # -- shape bookkeeping -------------------------------------------------

    @property
    def family(self) -> str:
        first = self.dims[0]
        return "spline" if isinstance(first, BSplineSpec) else first.family

    @property
    def is_spline(self) -> bool:
        return isinstance(self.dims[0], BSplineSpec)

    @property
    def n_dims(self) -> int:
        return len(self.dims)

    @property
    def dim_width(self) -> int:
        first = self.dims[0]
        return first.n_basis if self.is_spline else first.width

    @property
    def width(self) -> int:
        return self.n_dims * self.dim_width + int(self.include_bias)

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.n_dims) * self.dim_width

    @property
    def reg_order(self) -> int:
        # orthogonal encodings already absorb the derivative order
        return self.dims[0].reg_order if self.is_spline else 0

    # -- constructors ------------------------------------------------------

    @classmethod
    def splines(cls, lo, hi, degree=1, bins=10, reg_order=1, bias=1.0, include_bias=True,
                skip_zeros=False):
        lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), np.shape(hi) or np.shape(lo))
        hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), lo.shape)
        dims = tuple(
            BSplineSpec(degree, bins, float(a), float(b), reg_order) for a, b in zip(lo, hi)
        )
        return cls(dims, None, include_bias, bias, skip_zeros)

    @classmethod
    def orthogonal(cls, basis: OrthoSpec, norm: RangeNorm, bias=1.0, include_bias=True,
                   skip_zeros=False):
        return cls((basis,) * norm.n_dims, norm, include_bias, bias, skip_zeros)

    @classmethod
    def fit(cls, data, family="spline", degree=1, bins=10, reg_order=1, terms=4,
            bias=1.0, include_bias=True, skip_zeros=False):
        """Build a spec whose ranges come from the training data."""
        X = np.asarray(getattr(data, "X", data), dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("cannot fit an embedding on an empty dataset")
        if family == "spline":
            lo, hi = X.min(axis=0), X.max(axis=0)
            hi = np.where(hi > lo, hi, lo + 1.0)
            return cls.splines(lo, hi, degree, bins, reg_order, bias, include_bias, skip_zeros)
        return cls.orthogonal(OrthoSpec(family, terms, reg_order), fit_range_norm(X),
                              bias, include_bias, skip_zeros)

    # -- model-file helpers ------------------------------------------------

    def header_items(self):
        first = self.dims[0]
        yield "family", self.family
        yield "dims", self.n_dims
        if self.is_spline:
            yield "degree", first.degree
            yield "bins", first.bins
        else:
            yield "terms", first.terms
        yield "reg", first.reg_order
        yield "include_bias", int(self.include_bias)
        yield "bias", format(self.bias, ".17g")
        yield "skip_zeros", int(self.skip_zeros)

    def table_lines(self, fmt):
        yield f"table {self.n_dims}"
        if self.is_spline:
            for s in self.dims:
                yield f"{fmt(s.lo)} {fmt(s.hi)}"
        else:
            for mu, delta in zip(self.norm.mu, self.norm.delta):
                yield f"{fmt(mu)} {fmt(delta)}"

    @classmethod
    def from_header(cls, header: dict, lines: list, pos: int):
        family = header["family"]
        n_dims = int(header["dims"])
        tag, count = lines[pos].split()
        if tag != "table" or int(count) != n_dims:
            raise ValueError("range table missing or of wrong size")
        table = np.array([[float(v) for v in ln.split()] for ln in lines[pos + 1 : pos + 1 + n_dims]])
        if table.shape != (n_dims, 2):
            raise ValueError("range table has wrong shape")
        reg = int(header["reg"])
        include_bias = bool(int(header["include_bias"]))
        bias = float(header["bias"])
        skip = bool(int(header["skip_zeros"]))
        if family == "spline":
            spec = cls.splines(table[:, 0], table[:, 1], int(header["degree"]),
                               int(header["bins"]), reg, bias, include_bias, skip)
        else:
            spec = cls.orthogonal(OrthoSpec(family, int(header["terms"]), reg),
                                  RangeNorm(table[:, 0], table[:, 1]), bias, include_bias, skip)
        return spec, pos + 1 + n_dims


def _check_x(spec: EmbeddingSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n_dims,):
        raise ValueError(f"expected {spec.n_dims} features, got shape {x.shape}")
    return x


def spline_parts(spec: EmbeddingSpec, x: np.ndarray):
    """Global index of the first active basis and the ``(D, r+1)`` basis values."""
    first = spec.dims[0]
    return basis_parts(spec._lo, spec._hi, first.bins, first.degree, x, spec._offsets)


def _assemble(spec: EmbeddingSpec, idx: np.ndarray, vals: np.ndarray) -> SparseVec:
    if spec.include_bias:
        idx = np.append(idx, spec.width - 1)
        vals = np.append(vals, spec.bias)
    keep = vals != 0.0
    return SparseVec(idx[keep], vals[keep])


def _active(spec: EmbeddingSpec, x: np.ndarray) -> np.ndarray:
    return x != 0.0 if spec.skip_zeros else np.ones(spec.n_dims, dtype=bool)


def encode(spec: EmbeddingSpec, x) -> SparseVec:
    """Raw concatenated embedding of one example (plus the bias feature)."""
    x = _check_x(spec, x)
    active = _active(spec, x)
    if spec.is_spline:
        starts, vals = spline_parts(spec, x)
        idx = starts[:, None] + np.arange(vals.shape[1])
        return _assemble(spec, idx[active].ravel(), vals[active].ravel())
    dense = ortho_embed(spec.dims[0], spec.norm.apply(x, clamp=False))
    idx = spec.offsets[:, None] + np.arange(spec.dim_width)
    return _assemble(spec, idx[active].ravel(), dense[active].ravel())


def embed(spec: EmbeddingSpec, x) -> SparseVec:
    """Features ``D_d^{-T} phi(x)`` for a plain linear solver."""
    if not spec.is_spline or spec.reg_order == 0:
        return encode(spec, x)
    x = _check_x(spec, x)
    active = _active(spec, x)
    starts, vals = spline_parts(spec, x)
    n, r1 = spec.dim_width, vals.shape[1]
    local = starts - spec.offsets
    block = np.zeros((spec.n_dims, n))
    rows = np.arange(spec.n_dims)[:, None]
    block[rows, local[:, None] + np.arange(r1)] = vals
    for _ in range(spec.reg_order):
        block = np.cumsum(block[:, ::-1], axis=1)[:, ::-1]
    idx = spec.offsets[:, None] + np.arange(n)
    return _assemble(spec, idx[active].ravel(), block[active].ravel())


def encode_dataset(spec: EmbeddingSpec, data, embedded: bool = False) -> sparse.csr_matrix:
    """Row-per-example CSR matrix of ``encode`` (or ``embed``) outputs."""
    X = np.asarray(getattr(data, "X", data), dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.n_dims:
        raise ValueError(f"expected rows of {spec.n_dims} features, got shape {X.shape}")
    if spec.is_spline and not embedded:
        return _spline_rows(spec, X)
    fn = embed if embedded else encode
    indptr = [0]
    indices: list[np.ndarray] = []
    values: list[np.ndarray] = []
    for row in X:
        v = fn(spec, row)
        indices.append(v.indices)
        values.append(v.values)
        indptr.append(indptr[-1] + len(v))
    return sparse.csr_matrix(
        (_cat(values, np.float64), _cat(indices, np.int64), np.array(indptr)),
        shape=(X.shape[0], spec.width),
    )


def _cat(parts, dtype):
    return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)


def _spline_rows(spec: EmbeddingSpec, X: np.ndarray) -> sparse.csr_matrix:
    # same kernel as encode(), all rows at once
    m, D = X.shape
    first = spec.dims[0]
    starts, vals = basis_parts(np.tile(spec._lo, m), np.tile(spec._hi, m), first.bins,
                               first.degree, X, np.tile(spec._offsets, m))
    r1 = first.degree + 1
    idx = (starts[:, None] + np.arange(r1)).reshape(m, D * r1)
    vals = vals.reshape(m, D * r1).copy()
    if spec.skip_zeros:
        vals[np.repeat(X == 0.0, r1, axis=1)] = 0.0
    if spec.include_bias:
        idx = np.column_stack([idx, np.full(m, spec.width - 1)])
        vals = np.column_stack([vals, np.full(m, spec.bias)])
    keep = vals != 0.0
    indptr = np.concatenate([[0], np.cumsum(keep.sum(axis=1))])
    return sparse.csr_matrix((vals[keep], idx[keep], indptr), shape=(m, spec.width))
