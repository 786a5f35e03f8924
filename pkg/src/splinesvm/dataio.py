"""Datasets, svmlight text I/O, the toy circle problem and model files.

svmlight lines look like ``<label> <idx>:<val> ...`` with 1-based indices;
internally indices are 0-based and missing entries mean 0 (dense semantics).
Rejected input: a non-numeric label or value, a token without ``:``, an
index below 1 or repeated on the same line, NaN/Inf values, mixing labelled
and unlabelled lines, and files without any example. Lines whose first token
already contains ``:`` are unlabelled (prediction input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


class ModelFormatError(ValueError):
    """Model file with an unknown version or a broken layout."""


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray | None = None
    source: str = ""

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError(f"feature matrix must be 2-d, got shape {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise DataError("features contain NaN or Inf")
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.y.shape != (self.X.shape[0],):
                raise DataError("one label per example required")

    @property
    def n_examples(self) -> int:
        return self.X.shape[0]

    @property
    def n_dims(self) -> int:
        return self.X.shape[1]

    @property
    def classes(self) -> np.ndarray:
        if self.y is None:
            raise DataError("dataset has no labels")
        return np.unique(self.y)

    def subset(self, rows) -> LabeledDataset:
        rows = np.asarray(rows)
        return LabeledDataset(
            self.X[rows],
            None if self.y is None else self.y[rows],
            self.source,
        )


def _parse_label(tok: str, lineno: int) -> int:
    try:
        v = float(tok)
    except ValueError:
        raise DataError(f"line {lineno}: bad label {tok!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise DataError(f"line {lineno}: label must be an integer, got {tok!r}")
    return int(v)


def read_svmlight(path, n_dims: int | None = None) -> LabeledDataset:
    rows: list[tuple[list[int], list[float]]] = []
    labels: list[int] = []
    labelled = None
    max_idx = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            has_label = ":" not in toks[0]
            if labelled is None:
                labelled = has_label
            elif labelled != has_label:
                raise DataError(f"line {lineno}: mixed labelled and unlabelled lines")
            if has_label:
                labels.append(_parse_label(toks[0], lineno))
                toks = toks[1:]
            idx, val = [], []
            for tok in toks:
                key, sep, sval = tok.partition(":")
                if not sep:
                    raise DataError(f"line {lineno}: expected idx:val, got {tok!r}")
                try:
                    i, v = int(key), float(sval)
                except ValueError:
                    raise DataError(f"line {lineno}: bad feature {tok!r}") from None
                if i < 1:
                    raise DataError(f"line {lineno}: feature index must be >= 1, got {i}")
                if not math.isfinite(v):
                    raise DataError(f"line {lineno}: non-finite value {tok!r}")
                idx.append(i - 1)
                val.append(v)
            if len(set(idx)) != len(idx):
                raise DataError(f"line {lineno}: repeated feature index")
            if idx:
                max_idx = max(max_idx, max(idx) + 1)
            rows.append((idx, val))
    if not rows:
        raise DataError(f"{path}: no examples")
    if n_dims is None:
        n_dims = max_idx
    elif max_idx > n_dims:
        raise DataError(f"{path}: feature index {max_idx} exceeds {n_dims} dimensions")
    X = np.zeros((len(rows), n_dims))
    for k, (idx, val) in enumerate(rows):
        X[k, idx] = val
    y = np.array(labels, dtype=np.int64) if labelled else None
    return LabeledDataset(X, y, source=str(path))


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_svmlight(data, path) -> None:
    """Write ``data`` (a dataset, or ``(matrix, labels)``) in svmlight format.

    Dense rows store their nonzero entries; scipy sparse rows store their
    explicit entries.
    """
    if isinstance(data, LabeledDataset):
        X, y = data.X, data.y
    else:
        X, y = data
    from scipy import sparse

    with open(path, "w") as fh:
        for k in range(X.shape[0]):
            if sparse.issparse(X):
                row = X.getrow(k)
                order = np.argsort(row.indices)
                idx, val = row.indices[order], row.data[order]
            else:
                idx = np.flatnonzero(X[k])
                val = X[k, idx]
            feats = " ".join(f"{i + 1}:{_fmt(v)}" for i, v in zip(idx, val))
            head = "" if y is None else f"{int(y[k]):+d}"
            fh.write(" ".join(t for t in (head, feats) if t) + "\n")


def gen_toy_circle(m: int, seed: int = 0) -> LabeledDataset:
    """Uniform points in [-1, 1]^2, positive inside the unit circle."""
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(m, 2))
    y = np.where((X**2).sum(axis=1) <= 1.0, 1, -1)
    return LabeledDataset(X, y, source=f"toy-circle(m={m}, seed={seed})")


# --------------------------------------------------------------------------
# model files

MODEL_MAGIC = "splinesvm-model"
MODEL_VERSION = 1


def write_model(model, path) -> None:
    """Versioned plain-text model file; floats use 17 significant digits."""
    from .solver import AdditiveModel, OneVsAll

    if isinstance(model, AdditiveModel):
        kind, members = "binary", [(model.positive, model)]
        classes = [model.negative, model.positive]
    elif isinstance(model, OneVsAll):
        kind, members = "ova", list(zip(model.classes, model.models))
        classes = list(model.classes)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    first = members[0][1]
    spec = first.spec
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        "# objective: 0.5*||w||^2 + C*sum_k max(0, 1 - y_k f(x_k)),  C = 1/(lambda*m)",
        "# weights are w_d = D_d^{-1} w per dimension; f(x) = w_d . phi(x) + bias_w * bias",
    ]
    lines += [f"{k} {v}" for k, v in spec.header_items()]
    lines += [f"C {_fmt(first.C)}", f"seed {first.seed}", f"kind {kind}"]
    lines.append("classes " + " ".join(str(int(c)) for c in classes))
    lines += spec.table_lines(_fmt)
    for cid, mdl in members:
        lines.append(f"weights {int(cid)} {mdl.weights.size}")
        lines.append(" ".join(_fmt(v) for v in mdl.weights))
    Path(path).write_text("\n".join(lines) + "\n")


def read_model(path):
    from .encoder import EmbeddingSpec
    from .solver import AdditiveModel, OneVsAll

    text = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if not text:
        raise ModelFormatError(f"{path}: empty model file")
    magic, _, version = text[0].partition(" ")
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    if version.strip() != str(MODEL_VERSION):
        raise ModelFormatError(f"{path}: unsupported model version {version.strip()!r}")
    header: dict[str, str] = {}
    pos = 1
    try:
        while pos < len(text) and not text[pos].startswith(("table", "weights")):
            key, _, val = text[pos].partition(" ")
            header[key] = val
            pos += 1
        spec, pos = EmbeddingSpec.from_header(header, text, pos)
        C, seed, kind = float(header["C"]), int(header["seed"]), header["kind"]
        classes = [int(c) for c in header["classes"].split()]
        members = []
        while pos < len(text):
            tag, cid, size = text[pos].split()
            if tag != "weights":
                raise ModelFormatError(f"{path}: unexpected line {text[pos]!r}")
            w = np.array([float(v) for v in text[pos + 1].split()])
            if w.size != int(size) or w.size != spec.width:
                raise ModelFormatError(f"{path}: weight vector has wrong length")
            members.append((int(cid), w))
            pos += 2
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from None
    if kind == "binary":
        (cid, w), = members
        return AdditiveModel(spec, w, C=C, seed=seed, classes=(classes[0], classes[1]))
    models = [AdditiveModel(spec, w, C=C, seed=seed, classes=(-1, 1)) for _, w in members]
    return OneVsAll(tuple(c for c, _ in members), models)
