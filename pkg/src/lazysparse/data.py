"""Sparse datasets: libsvm text I/O, synthetic generation, model files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ContractViolation, DimensionMismatch, ParseError

__all__ = [
    "SparseExample",
    "Dataset",
    "parse_libsvm",
    "read_libsvm",
    "write_libsvm",
    "generate_synthetic",
    "write_model",
    "read_model",
]

_LABELS = {-1.0: -1, 0.0: -1, 1.0: 1}


@dataclass(frozen=True, slots=True)
class SparseExample:
    """One row of the design matrix: strictly increasing feature ids, nonzero values, label +-1."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    label: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ContractViolation("indices and values differ in length")
        if self.label not in (-1, 1):
            raise ContractViolation(f"label must be -1 or +1, got {self.label!r}")
        prev = -1
        for j in self.indices:
            if j <= prev:
                raise ContractViolation(f"indices must be strictly increasing, got {self.indices}")
            prev = j
        for v in self.values:
            if v == 0.0 or not math.isfinite(v):
                raise ContractViolation(f"stored values must be finite and nonzero, got {v!r}")

    @property
    def nnz(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Dataset:
    examples: tuple[SparseExample, ...]
    d: int
    _nnz: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        top = max((ex.indices[-1] for ex in self.examples if ex.indices), default=-1)
        if top >= self.d:
            raise DimensionMismatch(f"feature index {top} does not fit d={self.d}")
        object.__setattr__(self, "_nnz", sum(ex.nnz for ex in self.examples))

    @property
    def n(self) -> int:
        return len(self.examples)

    @property
    def p_mean(self) -> float:
        return self._nnz / self.n if self.examples else 0.0

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)


def _parse_label(token: str, lineno: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad label {token!r}", lineno) from None
    if value not in _LABELS:
        raise ParseError(f"label {token!r} not in {{-1, 0, 1}}", lineno)
    return _LABELS[value]


def parse_libsvm(lines: Iterable[str], index_base: int = 1, dims: int | None = None) -> Dataset:
    """Read ``label idx:val idx:val ...`` lines into a :class:`Dataset`.

    Labels 0 and -1 both map to -1. Indices are shifted to 0-based. Blank
    lines and ``#`` comments are skipped. ``d`` is ``max index + 1`` unless
    ``dims`` is given.
    """
    if index_base not in (0, 1):
        raise ContractViolation(f"index_base must be 0 or 1, got {index_base!r}")
    examples = []
    top = -1
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _parse_label(tokens[0], lineno)
        indices, values = [], []
        prev = -1
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                idx = int(idx_s) - index_base
                val = float(val_s)
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", lineno) from None
            if idx < 0:
                raise ParseError(f"index {idx_s} below index base {index_base}", lineno)
            if idx <= prev:
                raise ParseError(f"indices not strictly increasing at {tok!r}", lineno)
            if not math.isfinite(val):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            prev = idx
            if val == 0.0:
                continue
            indices.append(idx)
            values.append(val)
        top = max(top, prev)
        examples.append(SparseExample(tuple(indices), tuple(values), label))
    if dims is None:
        dims = top + 1
    elif top >= dims:
        raise DimensionMismatch(f"feature index {top} does not fit --dims {dims}")
    return Dataset(examples, dims)


def read_libsvm(path, index_base: int = 1, dims: int | None = None) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, index_base=index_base, dims=dims)


def write_libsvm(dataset: Dataset, out: TextIO, index_base: int = 1) -> None:
    for ex in dataset:
        feats = " ".join(f"{j + index_base}:{v!r}" for j, v in zip(ex.indices, ex.values))
        out.write(f"{ex.label:+d} {feats}\n" if feats else f"{ex.label:+d}\n")


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def generate_synthetic(n: int, d: int, p: int, weight_sparsity: float = 0.1, rng_seed: int = 0):
    """Random sparse logistic data with exactly ``p`` nonzeros per row.

    Feature ids are uniform without replacement, values uniform on
    [0.5, 1.5]. The generating weight vector has ``ceil(weight_sparsity*d)``
    standard-normal entries; labels are Bernoulli(sigmoid(w.x)) as +-1.
    Returns ``(dataset, true_weights)``.
    """
    if not (1 <= p <= d):
        raise ContractViolation(f"need 1 <= p <= d, got p={p}, d={d}")
    if n < 0:
        raise ContractViolation(f"n must be >= 0, got {n}")
    if not (0.0 <= weight_sparsity <= 1.0):
        raise ContractViolation(f"weight_sparsity must lie in [0, 1], got {weight_sparsity}")
    rng = np.random.default_rng(rng_seed)
    true_w = np.zeros(d)
    k = math.ceil(weight_sparsity * d)
    support = rng.choice(d, size=k, replace=False)
    true_w[support] = rng.standard_normal(k)

    examples = []
    for _ in range(n):
        idx = np.sort(rng.choice(d, size=p, replace=False))
        val = rng.uniform(0.5, 1.5, size=p)
        margin = float(true_w[idx] @ val)
        label = 1 if rng.random() < _sigmoid(margin) else -1
        examples.append(SparseExample(tuple(idx.tolist()), tuple(val.tolist()), label))
    return Dataset(examples, d), true_w


def write_model(weights: Sequence[float], out: TextIO) -> None:
    """``d <dim>`` header, then ``idx weight`` per nonzero (0-based, 17 significant digits)."""
    out.write(f"d {len(weights)}\n")
    for j, w in enumerate(weights):
        w = float(w)
        if not math.isfinite(w):
            raise ContractViolation(f"weight {j} is not finite: {w!r}")
        if w != 0.0:
            out.write(f"{j} {w:.17g}\n")


def read_model(lines: Iterable[str]) -> np.ndarray:
    it = iter(enumerate(lines, start=1))
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ParseError("empty model file", 1) from None
    parts = header.split()
    if len(parts) != 2 or parts[0] != "d":
        raise ParseError(f"expected 'd <dim>' header, got {header.strip()!r}", lineno)
    try:
        d = int(parts[1])
    except ValueError:
        raise ParseError(f"bad dimension {parts[1]!r}", lineno) from None
    if d < 0:
        raise ParseError(f"negative dimension {d}", lineno)
    weights = np.zeros(d)
    for lineno, line in it:
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'idx weight', got {line.strip()!r}", lineno)
        try:
            j = int(parts[0])
            w = float(parts[1])
        except ValueError:
            raise ParseError(f"malformed entry {line.strip()!r}", lineno) from None
        if not math.isfinite(w):
            raise ParseError(f"non-finite weight {parts[1]!r}", lineno)
        if j < 0 or j >= d:
            raise DimensionMismatch(f"line {lineno}: index {j} outside model dimension {d}")
        weights[j] = w
    return weights
