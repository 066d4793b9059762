"""Per-level score matrices: softmax, validation, deterministic top-k ranking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    KindConflict,
    KTooLarge,
    NegativeEntry,
    NonFiniteInput,
    NonFiniteValue,
    RowSumViolation,
)

LOGITS = "logits"
PROBABILITIES = "probabilities"

# Probability tolerance for matrices produced in-process (softmax, combining).
INTERNAL_TOL = 1e-9
# Looser tolerance for user-supplied files, which may come from 32-bit exporters.
FILE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """An n_samples x n_classes block of 64-bit scores at one hierarchy level.

    ``kind`` says whether values are raw logits or probabilities;
    ``class_names`` binds columns to taxonomy nodes. Values are stored
    read-only and must be finite.
    """

    values: np.ndarray
    kind: str
    class_names: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in (LOGITS, PROBABILITIES):
            raise KindConflict(f"unknown score kind {self.kind!r}")
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyInput(f"score matrix has shape {arr.shape}")
        names = tuple(self.class_names)
        if len(names) != arr.shape[1]:
            raise DimensionMismatch(
                f"{len(names)} class names for {arr.shape[1]} columns"
            )
        bad = ~np.isfinite(arr)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise NonFiniteValue(int(r), int(c))
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "class_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]


def softmax_rows(m: ScoreMatrix) -> ScoreMatrix:
    """Row-wise softmax of a logits matrix, stabilized by the row maximum."""
    if m.kind != LOGITS:
        raise KindConflict(f"softmax_rows expects logits, got {m.kind}")
    bad = ~np.isfinite(m.values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFiniteInput(int(r), int(c))
    shifted = m.values - m.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    return ScoreMatrix(probs, PROBABILITIES, m.class_names)


def top_k(m: ScoreMatrix, k: int) -> np.ndarray:
    """Per row, the indices of the k largest probabilities.

    Descending by value; ties broken by ascending class index.
    """
    if m.kind != PROBABILITIES:
        raise KindConflict(f"top_k expects probabilities, got {m.kind}")
    if not 1 <= k <= m.n_classes:
        raise KTooLarge(f"k={k} outside [1, {m.n_classes}]")
    # Stable sort of the negated values keeps equal entries in index order.
    return np.argsort(-m.values, axis=1, kind="stable")[:, :k]


def validate_probabilities(m: ScoreMatrix, tol: float = INTERNAL_TOL) -> None:
    """Check that every row is a probability vector within ``tol``.

    Raises NegativeEntry or RowSumViolation naming the first offending row.
    """
    neg = m.values < -tol
    if neg.any():
        r, c = np.argwhere(neg)[0]
        raise NegativeEntry(int(r), int(c))
    sums = m.values.sum(axis=1)
    off = np.abs(sums - 1.0) > tol
    if off.any():
        r = int(np.argmax(off))
        raise RowSumViolation(r, float(sums[r]))
    # With non-negative entries and unit row sums this can only trip when a
    # large entry is balanced by many slightly negative ones under big n.
    high = m.values > 1.0 + tol
    if high.any():
        r = int(np.argwhere(high)[0][0])
        raise RowSumViolation(r, float(sums[r]))


def as_probabilities(m: ScoreMatrix, tol: float = FILE_TOL) -> ScoreMatrix:
    """Softmax a logits matrix, or validate one already marked as probabilities."""
    if m.kind == LOGITS:
        return softmax_rows(m)
    validate_probabilities(m, tol)
    return m


def argmax_rows(m: ScoreMatrix) -> np.ndarray:
    """Per-row argmax with the same tie-break as :func:`top_k`."""
    return top_k(m, 1)[:, 0]

