"""Online learners: MC-SLP, MC-DBF (Banditron when m = 1) and a multiclass Perceptron.

Every update is rank one, ``U = outer(c, x)``, so the learners build a
length-k coefficient vector ``c`` and apply it to the instance.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import tau_constants
from .core import LabelSet, check_set_size, top_m_indices
from .errors import DimensionMismatchError, InvalidParameterError, OracleUnavailableError
from .sampling import _draw, check_gamma, superarm_prob

logger = logging.getLogger(__name__)

OVERFLOW_WARN = 1e12

FeedbackOracle = Callable[[LabelSet], int]


@dataclass(frozen=True)
class LearnerConfig:
    k: int
    d: int
    m: int = 1
    gamma: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameterError(f"d must be >= 1, got {self.d}")
        check_set_size(self.m, self.k)
        if self.gamma is not None:
            check_gamma(self.gamma)
            if (self.k / self.gamma) ** self.m > OVERFLOW_WARN:
                logger.warning(
                    "(k/gamma)^m = %.3g: importance weights 1/(Z tau1) may be very large",
                    (self.k / self.gamma) ** self.m,
                )


@dataclass(frozen=True)
class TrialRecord:
    """One round's log. Mistake bits are filled in by whoever knows the label."""

    t: int
    top1: int
    greedy: LabelSet
    sampled: Optional[LabelSet] = None
    feedback: Optional[int] = None
    top1_mistake: Optional[int] = None
    set_mistake: Optional[int] = None


class LabelOracle:
    """Environment side of diluted feedback: answers only ``1{y in A}``."""

    def __init__(self, label: int):
        self._label = int(label)

    def __call__(self, labels: Sequence[int]) -> int:
        return int(self._label in labels)


def subset_update(W: np.ndarray, x: np.ndarray, y: int, m: int) -> np.ndarray:
    """Full-information update ``U[r] = x (1{r = y} - 1{r in Yhat}/m)``."""
    W = np.asarray(W, dtype=float)
    x = _check_x(x, W.shape[1])
    m = check_set_size(m, W.shape[0])
    top = top_m_indices(W @ x, m)
    c = np.zeros(W.shape[0])
    c[top] -= 1.0 / m
    c[y - 1] += 1.0
    return np.outer(c, x)


def diluted_update(
    x: np.ndarray,
    greedy: Sequence[int],
    sampled: Sequence[int],
    feedback: int,
    z: float,
    k: int,
    tau1: float,
    tau2: float,
) -> np.ndarray:
    """Importance-weighted estimate of :func:`subset_update` from one feedback bit.

    ``U~[r] = x (fb 1{r in sampled} / (z tau1) - tau2 - 1{r in greedy}/m)``
    where ``z`` is the probability of the sampled ordered tuple.
    """
    x = np.asarray(x, dtype=float)
    c = _diluted_coef(
        [a - 1 for a in greedy], [a - 1 for a in sampled], feedback, z, k, tau1, tau2
    )
    return np.outer(c, x)


def _diluted_coef(greedy0, sampled0, feedback, z, k, tau1, tau2):
    c = np.full(k, -tau2)
    c[greedy0] -= 1.0 / len(greedy0)
    if feedback:
        c[sampled0] += 1.0 / (z * tau1)
    return c


def _check_x(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise DimensionMismatchError(f"x has shape {x.shape}, expected ({d},)")
    return x


class _Linear:
    full_information = True

    def __init__(self, k: int, d: int, m: int = 1):
        self.k = int(k)
        self.d = int(d)
        self.m = check_set_size(m, self.k)
        self.W = np.zeros((self.k, self.d))
        self.t = 0

    def predict_set(self, x: np.ndarray) -> LabelSet:
        x = _check_x(x, self.d)
        return tuple(int(i) + 1 for i in top_m_indices(self.W @ x, self.m))

    def _label(self, y):
        y = int(y)
        if not 1 <= y <= self.k:
            raise InvalidParameterError(f"label must be in 1..{self.k}, got {y}")
        return y


class MCSLP(_Linear):
    """Subset label prediction with full label feedback."""

    name = "mc-slp"

    def update(self, x: np.ndarray, y: int) -> Tuple[np.ndarray, TrialRecord]:
        x = _check_x(x, self.d)
        y = self._label(y)
        top = top_m_indices(self.W @ x, self.m)
        c = np.zeros(self.k)
        c[top] -= 1.0 / self.m
        c[y - 1] += 1.0
        U = c[:, None] * x
        self.W += U
        self.t += 1
        greedy = tuple(int(i) + 1 for i in top)
        rec = TrialRecord(
            t=self.t,
            top1=greedy[0],
            greedy=greedy,
            top1_mistake=int(greedy[0] != y),
            set_mistake=int(y not in greedy),
        )
        return U, rec


class Perceptron(_Linear):
    """Multiclass perceptron: on a top-1 mistake add x to row y, subtract from the guess."""

    name = "perceptron"

    def __init__(self, k: int, d: int, m: int = 1):
        super().__init__(k, d, 1)

    def update(self, x: np.ndarray, y: int) -> Tuple[np.ndarray, TrialRecord]:
        x = _check_x(x, self.d)
        y = self._label(y)
        guess = int(np.argmax(self.W @ x)) + 1
        U = np.zeros((self.k, self.d))
        if guess != y:
            U[y - 1] += x
            U[guess - 1] -= x
            self.W += U
        self.t += 1
        miss = int(guess != y)
        rec = TrialRecord(t=self.t, top1=guess, greedy=(guess,), top1_mistake=miss, set_mistake=miss)
        return U, rec


class MCDBF(_Linear):
    """Learner that only ever sees ``1{y in sampled set}``.

    Each round it explores with probability mass ``gamma`` spread uniformly,
    samples an ordered m-tuple sequentially without replacement, asks the
    oracle about it, and applies the unbiased update estimate. With ``m = 1``
    this is the Banditron.
    """

    name = "mc-dbf"
    full_information = False

    def __init__(self, k: int, d: int, m: int, gamma: float, seed: int = 0):
        super().__init__(k, d, m)
        LearnerConfig(k=k, d=d, m=m, gamma=gamma, seed=seed)
        self.gamma = float(gamma)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.tau1, self.tau2 = tau_constants(self.k, self.m)
        self._floor = self.gamma / self.k
        self._boost = (1.0 - self.gamma) / self.m

    @classmethod
    def from_config(cls, config: LearnerConfig) -> "MCDBF":
        if config.gamma is None:
            raise InvalidParameterError("MC-DBF needs gamma")
        return cls(config.k, config.d, config.m, config.gamma, config.seed)

    def arm_probs(self, greedy0) -> List[float]:
        p = [self._floor] * self.k
        for i in greedy0:
            p[i] += self._boost
        return p

    def step(self, x: np.ndarray, oracle: FeedbackOracle) -> Tuple[np.ndarray, TrialRecord]:
        """Run one round. Raises :class:`OracleUnavailableError` with state untouched."""
        x = _check_x(x, self.d)
        top = top_m_indices(self.W @ x, self.m)
        greedy0 = top.tolist()
        p = self.arm_probs(greedy0)
        drawn = _draw(p, self.m, self.rng)
        sampled = tuple(b + 1 for b in drawn)
        try:
            fb = int(bool(oracle(sampled)))
        except Exception as exc:
            # one 64-bit output per uniform draw; rewind them
            self.rng.bit_generator.advance(-self.m)
            raise OracleUnavailableError(f"feedback oracle failed: {exc!r}") from exc
        z = superarm_prob(p, sampled) if fb else 0.0
        c = _diluted_coef(greedy0, drawn, fb, z, self.k, self.tau1, self.tau2)
        U = c[:, None] * x
        self.W += U
        self.t += 1
        greedy = tuple(i + 1 for i in greedy0)
        rec = TrialRecord(t=self.t, top1=greedy[0], greedy=greedy, sampled=sampled, feedback=fb)
        return U, rec


@dataclass
class RunMetrics:
    """Cumulative counts at checkpoints of one run.

    ``top1_mistakes[i]`` and ``set_mistakes[i]`` are totals over rounds
    ``1..checkpoints[i]``.
    """

    seed: Optional[int]
    rounds: int
    checkpoints: np.ndarray
    top1_mistakes: np.ndarray
    set_mistakes: np.ndarray
    truncated: bool = False
    wall_clock: float = 0.0
    records: List[TrialRecord] = field(default_factory=list)

    @property
    def error_curve(self) -> np.ndarray:
        if self.checkpoints.size == 0:
            return np.zeros(0)
        return self.top1_mistakes / self.checkpoints

    @property
    def final_error(self) -> float:
        return float(self.top1_mistakes[-1] / self.rounds) if self.rounds else 0.0

    @property
    def final_set_mistakes(self) -> int:
        return int(self.set_mistakes[-1]) if self.rounds else 0


def run_online(
    learner,
    stream: Iterable,
    T: int,
    log_every: int = 1000,
    record_every: Optional[int] = None,
    seed: Optional[int] = None,
) -> RunMetrics:
    """Feed up to ``T`` rounds of ``stream`` to ``learner``.

    Full-information learners receive the label; bandit learners only get a
    :class:`LabelOracle`. Counts are logged every ``log_every`` rounds and at
    the last round; every ``record_every``-th :class:`TrialRecord` is kept.
    A stream shorter than ``T`` yields a result flagged ``truncated``.
    """
    if T < 0 or log_every < 1:
        raise InvalidParameterError(f"need T >= 0 and log_every >= 1, got {T}, {log_every}")
    pairs = stream.pairs() if hasattr(stream, "pairs") else ((e.features, e.label) for e in stream)
    full = learner.full_information
    checkpoints, top1_cum, set_cum, records = [], [], [], []
    top1 = setm = 0
    t = 0
    start = time.perf_counter()
    for x, y in pairs:
        if t >= T:
            break
        if full:
            _, rec = learner.update(x, y)
            miss1, misss = rec.top1_mistake, rec.set_mistake
        else:
            _, rec = learner.step(x, LabelOracle(y))
            miss1 = int(rec.top1 != y)
            misss = int(y not in rec.greedy)
        t += 1
        top1 += miss1
        setm += misss
        if record_every and t % record_every == 0:
            if not full:
                rec = TrialRecord(**{**rec.__dict__, "top1_mistake": miss1, "set_mistake": misss})
            records.append(rec)
        if t % log_every == 0:
            checkpoints.append(t)
            top1_cum.append(top1)
            set_cum.append(setm)
    if t and (not checkpoints or checkpoints[-1] != t):
        checkpoints.append(t)
        top1_cum.append(top1)
        set_cum.append(setm)
    return RunMetrics(
        seed=seed,
        rounds=t,
        checkpoints=np.array(checkpoints, dtype=np.int64),
        top1_mistakes=np.array(top1_cum, dtype=np.int64),
        set_mistakes=np.array(set_cum, dtype=np.int64),
        truncated=t < T,
        wall_clock=time.perf_counter() - start,
        records=records,
    )


def make_learner(algorithm: str, k: int, d: int, m: int = 1, gamma: Optional[float] = None, seed: int = 0):
    """Instantiate a learner by name; ``banditron`` is MC-DBF with ``m = 1``."""
    if algorithm == "mc-slp":
        return MCSLP(k, d, m)
    if algorithm == "perceptron":
        return Perceptron(k, d)
    if algorithm in ("mc-dbf", "banditron"):
        if algorithm == "banditron":
            m = 1
        if gamma is None:
            raise InvalidParameterError(f"{algorithm} needs gamma")
        return MCDBF(k, d, m, gamma, seed)
    raise InvalidParameterError(f"unknown algorithm {algorithm!r}")
