"""Partial 0-1 loss and the averaged hinge surrogate."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import check_set_size, score, top_m_indices
from .errors import DimensionMismatchError, InvalidParameterError


def partial_zero_one(y: int, Yhat: Sequence[int]) -> int:
    """1 if label ``y`` is missing from the predicted set, else 0."""
    if len(set(Yhat)) != len(Yhat):
        raise InvalidParameterError(f"label set has duplicates: {tuple(Yhat)}")
    return 0 if y in Yhat else 1


def _check_label(y: int, k: int) -> int:
    if int(y) != y or not 1 <= y <= k:
        raise InvalidParameterError(f"label must be in 1..{k}, got {y}")
    return int(y)


def avg_hinge(W: np.ndarray, x: np.ndarray, y: int, m: int) -> float:
    """Averaged hinge loss of the greedy top-m set.

    ``[1 - s_y + mean(s_i for i in Yhat)]_+`` with ``s = W @ x`` and
    ``Yhat`` the top-m labels under the lowest-index tie rule.
    """
    s = score(W, x)
    k = s.shape[0]
    m = check_set_size(m, k)
    y = _check_label(y, k)
    top = top_m_indices(s, m)
    return max(0.0, 1.0 - s[y - 1] + s[top].mean())


def avg_hinge_batch(W: np.ndarray, X: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """Vectorised :func:`avg_hinge` over rows of ``X`` (labels 1-based)."""
    S = np.asarray(X, dtype=float) @ np.asarray(W, dtype=float).T
    m = check_set_size(m, S.shape[1])
    idx = np.argsort(-S, axis=1, kind="stable")[:, :m]
    top_mean = np.take_along_axis(S, idx, axis=1).mean(axis=1)
    sy = S[np.arange(S.shape[0]), np.asarray(y, dtype=int) - 1]
    return np.maximum(0.0, 1.0 - sy + top_mean)


def loss_lower_bound_gap(W: np.ndarray, U: np.ndarray, x: np.ndarray, y: int, m: int) -> float:
    """Slack ``L_avg - (1{y not in Yhat} - <W, U>)``.

    Nonnegative whenever ``U`` is the full-information subset update for
    ``(W, x, y, m)``.
    """
    W = np.asarray(W, dtype=float)
    U = np.asarray(U, dtype=float)
    if U.shape != W.shape:
        raise DimensionMismatchError(f"U has shape {U.shape}, W has {W.shape}")
    s = score(W, x)
    m = check_set_size(m, s.shape[0])
    y = _check_label(y, s.shape[0])
    top = top_m_indices(s, m)
    miss = 0 if (y - 1) in top else 1
    loss = max(0.0, 1.0 - s[y - 1] + s[top].mean())
    return loss - (miss - float(np.sum(W * U)))
