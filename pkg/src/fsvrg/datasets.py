"""Sparse datasets: LIBSVM parsing, unit-length scaling, synthetic problems.

Every training example is a sparse feature vector paired with a real label
(+/-1 for classification, arbitrary for regression). Datasets are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidDataError, ParameterError, ParseError


@dataclass(frozen=True)
class SparseExample:
    """One training example stored as (indices, values, label).

    Indices are 0-based and strictly increasing; exact-zero values are never
    stored.
    """

    indices: np.ndarray
    values: np.ndarray
    label: float

    @staticmethod
    def make(indices, values, label) -> "SparseExample":
        """Validate and build an example, dropping exact-zero values."""
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise InvalidDataError("indices and values must be 1-d and equally long")
        if idx.size and (np.any(idx[1:] <= idx[:-1]) or idx[0] < 0):
            raise InvalidDataError("feature indices must be nonnegative and strictly increasing")
        keep = val != 0.0
        if not keep.all():
            idx, val = idx[keep], val[keep]
        idx.setflags(write=False)
        val.setflags(write=False)
        return SparseExample(idx, val, float(label))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        """Euclidean norm of the feature vector."""
        return float(np.sqrt(np.dot(self.values, self.values)))

    def scaled(self, factor: float) -> "SparseExample":
        return SparseExample.make(self.indices, self.values * factor, self.label)

    def __eq__(self, other):
        if not isinstance(other, SparseExample):
            return NotImplemented
        return (
            self.label == other.label
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of sparse examples with a fixed dimension."""

    examples: tuple[SparseExample, ...]
    dim: int

    def __post_init__(self):
        if len(self.examples) < 1:
            raise InvalidDataError("a dataset needs at least one example")
        if self.dim < 1:
            raise InvalidDataError("feature dimension must be >= 1")
        for row, ex in enumerate(self.examples):
            if ex.nnz and int(ex.indices[-1]) >= self.dim:
                raise InvalidDataError(
                    f"row {row} has feature index {int(ex.indices[-1])} >= dim {self.dim}"
                )

    @staticmethod
    def from_examples(examples, dim: int | None = None) -> "Dataset":
        """Build a dataset, inferring the dimension from the largest index."""
        examples = tuple(examples)
        if dim is None:
            dim = 0
            for ex in examples:
                if ex.nnz:
                    dim = max(dim, int(ex.indices[-1]) + 1)
            dim = max(dim, 1)
        return Dataset(examples, int(dim))

    @staticmethod
    def from_arrays(features, labels, dim: int | None = None) -> "Dataset":
        """Build a dataset from a dense (n, d) feature matrix and label vector."""
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.float64)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise InvalidDataError("features must be (n, d) with matching labels")
        cols = np.arange(features.shape[1], dtype=np.int64)
        examples = [
            SparseExample.make(cols, features[i], labels[i])
            for i in range(features.shape[0])
        ]
        return Dataset.from_examples(examples, dim=dim or features.shape[1])

    @property
    def n(self) -> int:
        return len(self.examples)

    @cached_property
    def labels(self) -> np.ndarray:
        out = np.array([ex.label for ex in self.examples], dtype=np.float64)
        out.setflags(write=False)
        return out

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row-compressed view (indptr, indices, data) of the feature matrix."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i, ex in enumerate(self.examples):
            indptr[i + 1] = indptr[i] + ex.nnz
        indices = np.empty(indptr[-1], dtype=np.int64)
        data = np.empty(indptr[-1], dtype=np.float64)
        for i, ex in enumerate(self.examples):
            indices[indptr[i] : indptr[i + 1]] = ex.indices
            data[indptr[i] : indptr[i + 1]] = ex.values
        for arr in (indptr, indices, data):
            arr.setflags(write=False)
        return indptr, indices, data

    @cached_property
    def row_sq_norms(self) -> np.ndarray:
        out = np.array([float(np.dot(ex.values, ex.values)) for ex in self.examples])
        out.setflags(write=False)
        return out

    def dense(self) -> np.ndarray:
        """Materialize the (n, dim) feature matrix. Desk-scale convenience."""
        out = np.zeros((self.n, self.dim))
        for i, ex in enumerate(self.examples):
            out[i, ex.indices] = ex.values
        return out

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.dim == other.dim and self.examples == other.examples


def parse_libsvm(source, declared_dim: int | None = None) -> Dataset:
    """Parse LIBSVM text (`<label> <idx>:<val> ...`, 1-based indices).

    Blank lines and lines starting with '#' are skipped. Indices are stored
    0-based. When `declared_dim` is given it overrides the inferred dimension
    (useful for padding consistency across train/test splits).
    """
    if isinstance(source, bytes):
        source = source.decode("ascii")
    if isinstance(source, str):
        lines = io.StringIO(source)
    else:
        lines = source
    if declared_dim is not None and declared_dim < 1:
        raise ParameterError("declared_dim must be >= 1")

    examples = []
    for line_no, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("ascii")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", line_no) from None
        idx, val = [], []
        prev = 0
        for tok in tokens[1:]:
            field, sep, value = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", line_no)
            try:
                j = int(field)
                v = float(value)
            except ValueError:
                raise ParseError(f"bad feature token {tok!r}", line_no) from None
            if j < 1:
                raise ParseError(f"feature index {j} must be >= 1", line_no)
            if j <= prev:
                raise ParseError(f"feature index {j} not increasing", line_no)
            if declared_dim is not None and j > declared_dim:
                raise ParseError(
                    f"feature index {j} exceeds declared dimension {declared_dim}",
                    line_no,
                )
            prev = j
            idx.append(j - 1)
            val.append(v)
        examples.append(SparseExample.make(idx, val, label))

    if not examples:
        raise ParseError("no examples found (empty input)")
    return Dataset.from_examples(examples, dim=declared_dim)


def to_libsvm(ds: Dataset) -> str:
    """Serialize a dataset back to LIBSVM text (exact float round-trip)."""
    out = []
    for ex in ds.examples:
        parts = [repr(float(ex.label))]
        parts.extend(
            f"{int(j) + 1}:{float(v)!r}" for j, v in zip(ex.indices, ex.values)
        )
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def normalize_rows(ds: Dataset) -> Dataset:
    """Scale every example to unit Euclidean norm; labels unchanged."""
    scaled = []
    for row, ex in enumerate(ds.examples):
        nrm = ex.norm()
        if nrm == 0.0:
            raise InvalidDataError(f"row {row} is all-zero and cannot be normalized")
        scaled.append(ex.scaled(1.0 / nrm))
    return Dataset(tuple(scaled), ds.dim)


def synth_linear(n, d, noise_std, seed, kind="regression"):
    """Generate a planted linear problem with unit-norm rows.

    Labels are `<a_i, w*> + noise` for regression and the sign of the same
    quantity for classification. Returns (dataset, planted_weights) and is
    deterministic for a fixed seed.
    """
    if n < 1 or d < 1:
        raise ParameterError("n and d must be >= 1")
    if noise_std < 0:
        raise ParameterError("noise_std must be >= 0")
    if kind not in ("regression", "classification"):
        raise ParameterError(f"unknown kind {kind!r}")
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, d))
    norms = np.linalg.norm(feats, axis=1)
    norms[norms == 0.0] = 1.0
    feats /= norms[:, None]
    w_star = rng.standard_normal(d)
    raw = feats @ w_star
    if noise_std > 0:
        raw = raw + noise_std * rng.standard_normal(n)
    if kind == "classification":
        labels = np.where(raw >= 0.0, 1.0, -1.0)
    else:
        labels = raw
    return Dataset.from_arrays(feats, labels, dim=d), w_star


def subsample(ds: Dataset, k, seed) -> Dataset:
    """Pick k distinct examples uniformly without replacement (seeded)."""
    if not 1 <= k <= ds.n:
        raise ParameterError(f"k must be in [1, {ds.n}], got {k}")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(ds.n, size=k, replace=False))
    return Dataset(tuple(ds.examples[i] for i in chosen), ds.dim)
