"""Closed-form constants and mistake-bound calculators for MC-DBF."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .core import check_set_size, check_weights
from .errors import InvalidParameterError
from .losses import avg_hinge_batch
from .sampling import check_gamma, perm

logger = logging.getLogger(__name__)

GAMMA_FLOOR = 1e-6
GAMMA_CEIL = 1.0 - 1e-6


@dataclass(frozen=True)
class BoundConstants:
    k: int
    m: int
    gamma: float
    tau1: float
    tau2: float
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class MistakeBoundInputs:
    """Comparator loss ``R_T``, complexity ``D = 2||W*||_F^2``, horizon and gamma."""

    R_T: float
    D: float
    T: int
    gamma: float

    def __post_init__(self):
        for name in ("R_T", "D", "T", "gamma"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidParameterError(f"{name} must be finite and nonnegative, got {v}")
        if self.T < 1:
            raise InvalidParameterError(f"T must be >= 1, got {self.T}")


def tau_constants(k: int, m: int) -> Tuple[float, float]:
    """``tau1 = m * Perm(k-2, m-1)`` and ``tau2 = (m-1)/(k-m)``."""
    m = check_set_size(m, k)
    return float(m * perm(k - 2, m - 1)), (m - 1) / (k - m)


def _exploration_term(k: int, m: int, gamma: float, tau1: float) -> float:
    # m k^m Perm(k,m) / (gamma^m tau1^2); integer part kept exact
    return float(m * k**m * perm(k, m)) / (gamma**m * tau1 * tau1)


def _bracket(k: int, m: int, gamma: float, tau1: float, tau2: float) -> float:
    return (
        _exploration_term(k, m, gamma, tau1)
        - 2.0 * m * tau2 / tau1
        - 2.0 / tau1
        + k * (tau2 * tau2 + 1.0 / (k * m) + 2.0 * tau2 / k)
    )


def constants(k: int, m: int, gamma: float) -> BoundConstants:
    """Estimator normalisers and the two variance constants of the mistake bound."""
    gamma = check_gamma(gamma)
    tau1, tau2 = tau_constants(k, m)
    return BoundConstants(
        k=k,
        m=m,
        gamma=gamma,
        tau1=tau1,
        tau2=tau2,
        lambda1=2.0 / tau1,
        lambda2=_bracket(k, m, gamma, tau1, tau2),
    )


def mistake_bound(inputs: MistakeBoundInputs, c: BoundConstants) -> float:
    """Expected set-mistake bound

    ``R + sqrt(l1 D R / 2) + 3 max(l1 D / 2, sqrt((l2 + 1) D T / 2)) + gamma T``.
    """
    R, D, T = inputs.R_T, inputs.D, inputs.T
    return (
        R
        + math.sqrt(c.lambda1 * D * R / 2.0)
        + 3.0 * max(c.lambda1 * D / 2.0, math.sqrt((c.lambda2 + 1.0) * D * T / 2.0))
        + inputs.gamma * T
    )


def optimal_gamma(k: int, m: int, D: float, T: int) -> float:
    """Exploration rate minimising the separable-case bound.

    Root of ``T - (3/(2 sqrt 2)) (m^1.5 k^(m/2) Perm(k,m)^0.5 D^0.5 / tau1)
    T^0.5 / gamma^((m+2)/2) = 0``, i.e.
    ``gamma = (9 m^3 k^m Perm(k,m) D / (8 tau1^2 T))^(1/(m+2))``.
    Clipped into ``[1e-6, 1 - 1e-6]`` with a logged warning.
    """
    if D <= 0 or T <= 0:
        raise InvalidParameterError(f"D and T must be positive, got D={D}, T={T}")
    tau1, _ = tau_constants(k, m)
    c2 = 9.0 * m**3 * float(k**m * perm(k, m)) * D / (8.0 * tau1 * tau1)
    gamma = (c2 / T) ** (1.0 / (m + 2))
    if not GAMMA_FLOOR <= gamma <= GAMMA_CEIL:
        clipped = min(max(gamma, GAMMA_FLOOR), GAMMA_CEIL)
        logger.warning("optimal gamma %.6g outside (0, 1); clipped to %.6g", gamma, clipped)
        gamma = clipped
    return gamma


def lemma5_rhs(k: int, m: int, gamma: float, x_norm_sq: float, set_mistake: int) -> float:
    """Upper bound on ``E_Z ||U~||_F^2`` for one round."""
    if x_norm_sq < 0:
        raise InvalidParameterError(f"x_norm_sq must be >= 0, got {x_norm_sq}")
    if set_mistake not in (0, 1):
        raise InvalidParameterError(f"set_mistake must be 0 or 1, got {set_mistake}")
    gamma = check_gamma(gamma)
    tau1, tau2 = tau_constants(k, m)
    return x_norm_sq * _bracket(k, m, gamma, tau1, tau2) + 2.0 * x_norm_sq / tau1 * set_mistake


def complexity(W_star: np.ndarray) -> float:
    """``D = 2 ||W*||_F^2``."""
    W_star = check_weights(W_star)
    return 2.0 * float(np.sum(W_star * W_star))


def zero_loss_comparator(W_star: np.ndarray, m: int) -> np.ndarray:
    """Rescale a unit-margin comparator so its averaged hinge loss vanishes.

    A unit multiclass margin only gives ``L_avg <= 1/m`` because the greedy
    set contains the true label; scaling by ``m/(m-1)`` drives it to zero.
    For ``m = 1`` no scaling helps (``L_avg >= 1``), so ``W_star`` is
    returned unchanged.
    """
    W_star = check_weights(W_star)
    if m <= 1:
        return W_star
    return W_star * (m / (m - 1))


def separability_certificate(
    W_star: np.ndarray, examples: Iterable, m: int = 1, margin: float = 1.0
) -> Tuple[bool, float]:
    """Check the unit-margin condition on every example; also return ``R_T``.

    ``examples`` is either an iterable of :class:`~mcdbf.core.Example` or a
    ``(X, y)`` pair of arrays with 1-based labels.

    Returns
    -------
    separable : bool
        ``(W* x)_y - (W* x)_i >= margin`` for all ``i != y`` on every example.
    R_T : float
        Cumulative averaged hinge loss of ``W_star`` at set size ``m``.
    """
    W_star = check_weights(W_star)
    X, y = _as_arrays(examples, W_star.shape[1])
    if X.shape[0] == 0:
        return True, 0.0
    check_set_size(m, W_star.shape[0])
    S = X @ W_star.T
    rows = np.arange(S.shape[0])
    sy = S[rows, y - 1].copy()
    S[rows, y - 1] = -np.inf
    separable = bool(np.all(sy - S.max(axis=1) >= margin))
    R_T = float(avg_hinge_batch(W_star, X, y, m).sum())
    return separable, R_T


def _as_arrays(examples, d: int):
    if isinstance(examples, tuple) and len(examples) == 2 and isinstance(examples[0], np.ndarray):
        X, y = examples
        return np.asarray(X, dtype=float).reshape(-1, d), np.asarray(y, dtype=int)
    if hasattr(examples, "X") and hasattr(examples, "y"):
        return np.asarray(examples.X, dtype=float), np.asarray(examples.y, dtype=int)
    xs, ys = [], []
    for ex in examples:
        xs.append(ex.features)
        ys.append(ex.label)
    if not xs:
        return np.zeros((0, d)), np.zeros(0, dtype=int)
    return np.vstack(xs), np.asarray(ys, dtype=int)
