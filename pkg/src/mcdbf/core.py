"""Domain types and top-m label set prediction.

Labels are 1-based (``1..k``) at every public interface. Arrays indexed by
label use position ``label - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError

LabelSet = Tuple[int, ...]


@dataclass(frozen=True)
class Example:
    """One round's instance: a feature vector and its 1-based label."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatchError("features must be a 1-d vector")
        if not np.all(np.isfinite(x)):
            raise InvalidParameterError("features must be finite")
        object.__setattr__(self, "features", x)
        if int(self.label) < 1:
            raise InvalidParameterError(f"labels are 1-based, got {self.label}")
        object.__setattr__(self, "label", int(self.label))


def check_weights(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise DimensionMismatchError(f"weight matrix must be 2-d, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidParameterError("weight matrix has non-finite entries")
    return W


def check_set_size(m: int, k: int) -> int:
    if int(m) != m or not 1 <= m < k:
        raise InvalidParameterError(f"set size m must satisfy 1 <= m < k={k}, got {m}")
    return int(m)


def score(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Class scores ``W @ x`` (length k)."""
    W = check_weights(W)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != W.shape[1]:
        raise DimensionMismatchError(
            f"x has shape {x.shape}, expected ({W.shape[1]},) to match W {W.shape}"
        )
    return W @ x


def top_m_indices(scores: np.ndarray, m: int) -> np.ndarray:
    """0-based indices of the m best scores, ties going to the lower index.

    A stable sort on the negated scores yields exactly the sequential argmax
    with lowest-index tie breaking.
    """
    return np.argsort(-scores, kind="stable")[:m]


def predict_top_m(W: np.ndarray, x: np.ndarray, m: int) -> LabelSet:
    """Greedy label set ``(a_1, ..., a_m)``.

    ``a_i`` is the highest-scoring label not among ``a_1..a_{i-1}``; ties
    are broken in favour of the lowest label.

    Raises
    ------
    InvalidParameterError
        If ``m`` is not in ``[1, k)``.
    """
    s = score(W, x)
    m = check_set_size(m, s.shape[0])
    return tuple(int(i) + 1 for i in top_m_indices(s, m))


def predict_top1(W: np.ndarray, x: np.ndarray) -> int:
    """Highest-scoring label (lowest label on ties)."""
    s = score(W, x)
    return int(np.argmax(s)) + 1
