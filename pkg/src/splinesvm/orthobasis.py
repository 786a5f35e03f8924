"""Fourier and Hermite embeddings whose derivatives are orthogonal.

With these encodings the derivative penalty of the additive function is the
plain squared norm of the coefficients, so a linear SVM on the embedding fits
the smoothed additive model directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Family = Literal["fourier", "hermite"]


@dataclass(frozen=True)
class OrthoSpec:
    family: Family = "fourier"
    terms: int = 4
    reg_order: int = 1

    def __post_init__(self) -> None:
        if self.family not in ("fourier", "hermite"):
            raise ValueError(f"unknown family {self.family!r}")
        if int(self.terms) != self.terms or self.terms < 1:
            raise ValueError(f"terms must be a positive integer, got {self.terms}")
        if self.reg_order not in (1, 2):
            raise ValueError(f"reg_order must be 1 or 2, got {self.reg_order}")

    @property
    def width(self) -> int:
        return 2 * self.terms if self.family == "fourier" else self.terms


@dataclass(frozen=True)
class RangeNorm:
    """Per-dimension centre ``mu`` and half-range ``delta``."""

    mu: np.ndarray
    delta: np.ndarray

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        delta = np.atleast_1d(np.asarray(self.delta, dtype=np.float64))
        if mu.shape != delta.shape or mu.ndim != 1:
            raise ValueError("mu and delta must be 1-d arrays of equal length")
        if np.any(~(delta > 0)):
            raise ValueError("delta must be positive in every dimension")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "delta", delta)

    @property
    def n_dims(self) -> int:
        return int(self.mu.size)

    def apply(self, x: np.ndarray, clamp: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_dims:
            raise ValueError(f"expected {self.n_dims} dimensions, got {x.shape[-1]}")
        z = (x - self.mu) / self.delta
        return np.clip(z, -1.0, 1.0) if clamp else z


def fit_range_norm(data) -> RangeNorm:
    """Centre and half-range of each column; constant columns get ``delta = 1``.

    ``data`` is a :class:`~splinesvm.dataio.LabeledDataset` or a 2-d array.
    """
    X = np.asarray(getattr(data, "X", data), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot fit range statistics on an empty dataset")
    lo, hi = X.min(axis=0), X.max(axis=0)
    delta = (hi - lo) / 2
    delta[delta == 0] = 1.0
    return RangeNorm((hi + lo) / 2, delta)


def normalize(stats: RangeNorm, x: np.ndarray) -> np.ndarray:
    return stats.apply(x, clamp=True)


def fourier_embed(spec: OrthoSpec, x, deriv: int = 0) -> np.ndarray:
    """``(cos(k pi x)/k^d, sin(k pi x)/k^d)`` for ``k = 1..M``, interleaved.

    ``deriv`` returns the analytic derivative of each component instead.
    Vectorized: a trailing axis of length ``2M`` is appended to ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    k = np.arange(1, spec.terms + 1, dtype=np.float64)
    t = x[..., None] * k
    scale = (np.pi * k) ** deriv / k**spec.reg_order
    out = np.empty(x.shape + (2 * spec.terms,))
    if deriv == 0:
        out[..., 0::2] = scale * _cos_pi(t)
        out[..., 1::2] = scale * _sin_pi(t)
    else:
        # d^j/dx^j cos(a) = cos(a + j pi/2), same for sin
        phase = deriv * np.pi / 2
        out[..., 0::2] = scale * np.cos(np.pi * t + phase)
        out[..., 1::2] = scale * np.sin(np.pi * t + phase)
    return out


# exact zeros at the nodes keep the encoded vectors sparse where they can be
def _sin_pi(t: np.ndarray) -> np.ndarray:
    s = np.sin(np.pi * t)
    s[np.mod(t, 1.0) == 0] = 0.0
    return s


def _cos_pi(t: np.ndarray) -> np.ndarray:
    c = np.cos(np.pi * t)
    c[np.mod(t - 0.5, 1.0) == 0] = 0.0
    return c


def hermite_poly(n_max: int, x) -> np.ndarray:
    """Probabilists' Hermite ``He_0..He_{n_max}`` by the three-term recurrence."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape + (n_max + 1,))
    out[..., 0] = 1.0
    if n_max >= 1:
        out[..., 1] = x
    for n in range(1, n_max):
        out[..., n + 1] = x * out[..., n] - n * out[..., n - 1]
    return out


def hermite_scales(spec: OrthoSpec) -> np.ndarray:
    n = np.arange(1, spec.terms + 1)
    fact = np.array([math.factorial(k) for k in n], dtype=np.float64)
    if spec.reg_order == 1:
        return 1.0 / np.sqrt(n * fact)
    s = np.empty(spec.terms)
    s[0] = 1.0
    s[1:] = 1.0 / np.sqrt(n[1:] * (n[1:] - 1) * fact[1:])
    return s


def hermite_embed(spec: OrthoSpec, x, deriv: int = 0) -> np.ndarray:
    """Scaled ``He_n(x)`` for ``n = 1..M`` (derivatives via ``He_n' = n He_{n-1}``)."""
    x = np.asarray(x, dtype=np.float64)
    he = hermite_poly(spec.terms, x)
    n = np.arange(1, spec.terms + 1)
    shifted = n - deriv
    coef = np.ones(spec.terms)
    for j in range(deriv):
        coef *= np.maximum(n - j, 0)
    vals = np.where(shifted >= 0, he[..., np.maximum(shifted, 0)], 0.0) * coef
    return vals * hermite_scales(spec)


def ortho_embed(spec: OrthoSpec, z) -> np.ndarray:
    if spec.family == "fourier":
        return fourier_embed(spec, np.clip(z, -1.0, 1.0))
    return hermite_embed(spec, z)
