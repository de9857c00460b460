"""Exploration distributions over labels and over ordered label tuples.

``arm_distribution`` mixes the greedy set with a uniform floor;
``superarm_prob`` gives the probability of drawing an ordered tuple
sequentially without replacement from it, and ``sample_superarm`` draws
from exactly that law.
"""
from __future__ import annotations

import itertools
import math
from typing import List, Sequence, Tuple

import numpy as np

from .core import LabelSet
from .errors import (
    EnumerationTooLargeError,
    InvalidParameterError,
    SamplingConsistencyError,
)

MAX_ENUMERATION = 10**6


def perm(n: int, r: int) -> int:
    """Number of ordered r-tuples of distinct items out of n (0 if r < 0)."""
    if r < 0 or n < 0:
        return 0
    return math.perm(n, r)


def check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise InvalidParameterError(f"gamma must lie in the open interval (0, 1), got {gamma}")
    return gamma


def _check_labels(A: Sequence[int], k: int) -> Tuple[int, ...]:
    A = tuple(int(a) for a in A)
    if len(set(A)) != len(A):
        raise InvalidParameterError(f"labels must be distinct, got {A}")
    for a in A:
        if not 1 <= a <= k:
            raise InvalidParameterError(f"label {a} outside 1..{k}")
    return A


def arm_distribution(Yhat: Sequence[int], k: int, gamma: float) -> np.ndarray:
    """Per-label exploration probabilities (index ``r - 1`` holds label r).

    Members of ``Yhat`` get ``(1 - gamma)/m + gamma/k``, all others
    ``gamma/k``.
    """
    gamma = check_gamma(gamma)
    Yhat = _check_labels(Yhat, k)
    m = len(Yhat)
    if not 1 <= m < k:
        raise InvalidParameterError(f"need 1 <= m < k, got m={m}, k={k}")
    probs = np.full(k, gamma / k)
    probs[[a - 1 for a in Yhat]] += (1.0 - gamma) / m
    return probs


def superarm_prob(probs: np.ndarray, A: Sequence[int]) -> float:
    """Probability of drawing the ordered tuple ``A`` without replacement.

    ``prod_i P(b_i) / (1 - P(b_1) - ... - P(b_{i-1}))``; order matters.
    """
    A = _check_labels(A, len(probs))
    z = 1.0
    acc = 0.0
    for a in A:
        p = float(probs[a - 1])
        z *= p / (1.0 - acc)
        acc += p
    return z


def sample_superarm(probs: np.ndarray, m: int, rng: np.random.Generator) -> LabelSet:
    """Draw an ordered m-tuple by m sequential categorical draws.

    Each draw consumes exactly one ``rng.random()`` and inverts the CDF of
    the remaining labels (in label order) scaled by the remaining mass
    ``1 - sum of drawn probabilities``.
    """
    p = [float(v) for v in probs]
    k = len(p)
    if not 1 <= m < k:
        raise InvalidParameterError(f"need 1 <= m < k, got m={m}, k={k}")
    return tuple(i + 1 for i in _draw(p, m, rng))


def _draw(p: List[float], m: int, rng: np.random.Generator) -> List[int]:
    # 0-based core shared with the learners
    taken = [False] * len(p)
    out = []
    acc = 0.0
    for _ in range(m):
        remaining = 1.0 - acc
        if remaining <= 0.0:
            raise SamplingConsistencyError(
                f"no probability mass left after drawing {out} (remaining={remaining})"
            )
        target = rng.random() * remaining
        cum = 0.0
        pick = -1
        for j, pj in enumerate(p):
            if taken[j]:
                continue
            cum += pj
            pick = j
            if target < cum:
                break
        # falling off the end means rounding; the last open label keeps it
        taken[pick] = True
        out.append(pick)
        acc += p[pick]
    return out


def enumerate_superarms(k: int, m: int) -> List[LabelSet]:
    """All ordered m-tuples of distinct labels from 1..k, lexicographic."""
    if not 1 <= m <= k:
        raise InvalidParameterError(f"need 1 <= m <= k, got m={m}, k={k}")
    n = perm(k, m)
    if n > MAX_ENUMERATION:
        raise EnumerationTooLargeError(f"Perm({k},{m}) = {n} exceeds {MAX_ENUMERATION}")
    return list(itertools.permutations(range(1, k + 1), m))


def count_containing(y: int, r: int, k: int, m: int) -> int:
    """Number of ordered m-tuples containing both ``y`` and ``r`` (closed form).

    ``m * Perm(k-2, m-1) * 1{r == y} + m * (m-1) * Perm(k-2, m-2)``.
    """
    if not 1 <= m < k:
        raise InvalidParameterError(f"need 1 <= m < k, got m={m}, k={k}")
    _check_labels((y,), k)
    _check_labels((r,), k)
    n = perm(k, m)
    if n > MAX_ENUMERATION:
        raise EnumerationTooLargeError(f"Perm({k},{m}) = {n} exceeds {MAX_ENUMERATION}")
    same = m * perm(k - 2, m - 1) if r == y else 0
    return same + m * (m - 1) * perm(k - 2, m - 2)
