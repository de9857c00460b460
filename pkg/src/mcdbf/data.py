"""Example streams: synthetic linearly separable data and feature CSV files.

Feature files are plain CSV::

    k,d
    label,f1,...,fd
    ...

with 1-based integer labels. Vectors are divided by ``max(1, ||x||_2)`` on
load so every instance lies in the unit ball.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .core import Example
from .errors import FeatureFileError, InvalidParameterError, RejectionBudgetExceeded

PathLike = Union[str, Path]


class Stream:
    """A finite, ordered sequence of examples backed by arrays.

    ``X`` has one row per round; ``y`` holds 1-based labels.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, k: int):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise InvalidParameterError(f"bad stream shapes X={X.shape} y={y.shape}")
        self.X = X
        self.y = y
        self.k = int(k)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self) -> Iterator[Example]:
        for x, label in zip(self.X, self.y):
            yield Example(x, int(label))

    def pairs(self) -> Iterator[Tuple[np.ndarray, int]]:
        """Raw ``(x, label)`` pairs without per-row validation."""
        return zip(self.X, self.y.tolist())

    def shuffled(self, seed: int) -> "Stream":
        order = np.random.default_rng(seed).permutation(len(self))
        return Stream(self.X[order], self.y[order], self.k)

    def head(self, n: int) -> "Stream":
        return Stream(self.X[:n], self.y[:n], self.k)


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the separable generator.

    ``gap`` is the geometric margin ``<v_y - v_i, x>`` demanded of accepted
    unit vectors; the returned comparator is ``(margin / gap) * V`` so its
    score margin is at least ``margin``. ``noise`` is the expected norm of the
    isotropic perturbation added to the class anchor before normalising.
    ``noise_rate`` flips that fraction of labels after generation.
    Defaults give a 9-class, 400-dimensional stream.
    """

    k: int = 9
    d: int = 400
    T: int = 10000
    margin: float = 1.0
    seed: int = 0
    noise_rate: float = 0.0
    gap: float = 0.5
    noise: float = 1.0

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParameterError(f"k must be >= 2, got {self.k}")
        if self.d < self.k:
            raise InvalidParameterError(f"generator needs d >= k, got d={self.d}, k={self.k}")
        if self.margin < 1:
            raise InvalidParameterError(f"margin must be >= 1, got {self.margin}")
        if not 0 <= self.noise_rate < 1:
            raise InvalidParameterError(f"noise_rate must be in [0, 1), got {self.noise_rate}")
        if not 0 < self.gap < 2 or self.noise < 0 or self.T < 0:
            raise InvalidParameterError("need 0 < gap < 2, noise >= 0, T >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def class_anchors(k: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-norm vertices of a randomly rotated regular simplex (k x d)."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    V = Q.T - Q.T.mean(axis=0)
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def generate_separable(
    config: SynthConfig, max_draws: Optional[int] = None
) -> Tuple[Stream, np.ndarray]:
    """Rejection-sample a stream that ``W_star`` separates with the configured margin.

    Returns
    -------
    stream : Stream
    W_star : ndarray, shape (k, d)

    Raises
    ------
    RejectionBudgetExceeded
        If fewer than ``T`` examples are accepted within ``max_draws`` proposals.
    """
    k, d, T = config.k, config.d, config.T
    rng = np.random.default_rng(config.seed)
    V = class_anchors(k, d, rng)
    W_star = (config.margin / config.gap) * V
    if max_draws is None:
        max_draws = max(200 * T, 10_000)
    sigma = config.noise / math.sqrt(d)
    # tiny slack so rescaled comparators keep their hinge loss at exactly 0
    need = config.margin * (1.0 + 1e-9)

    xs, ys = [], []
    accepted = drawn = 0
    batch = max(1024, min(T, 65536))
    while accepted < T:
        if drawn >= max_draws:
            raise RejectionBudgetExceeded(
                f"accepted {accepted}/{T} examples after {drawn} proposals; "
                "use a smaller gap or less noise"
            )
        y = rng.integers(k, size=batch)
        x = V[y] + sigma * rng.standard_normal((batch, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        S = x @ W_star.T
        rows = np.arange(batch)
        sy = S[rows, y].copy()
        S[rows, y] = -np.inf
        ok = sy - S.max(axis=1) >= need
        xs.append(x[ok])
        ys.append(y[ok])
        accepted += int(ok.sum())
        drawn += batch

    X = np.concatenate(xs)[:T] if xs else np.zeros((0, d))
    labels = (np.concatenate(ys)[:T] + 1) if ys else np.zeros(0, dtype=np.int64)
    if config.noise_rate > 0 and T > 0:
        flip = rng.random(T) < config.noise_rate
        shift = rng.integers(1, k, size=T)
        labels = np.where(flip, (labels - 1 + shift) % k + 1, labels)
    return Stream(X, labels, k), W_star


def normalize_rows(X: np.ndarray) -> np.ndarray:
    """Divide each row by ``max(1, ||row||_2)``."""
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.maximum(1.0, norms)


def load_features(
    path: PathLike, shuffle_seed: Optional[int] = None, normalize: bool = True
) -> Stream:
    """Read a feature CSV into a :class:`Stream` (file order unless shuffled)."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FeatureFileError(f"cannot open: {exc}", path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureFileError("missing 'k,d' header", path, 1) from None
        try:
            k, d = (int(v) for v in header)
        except ValueError:
            raise FeatureFileError(f"header must be 'k,d', got {header!r}", path, 1) from None
        if k < 2 or d < 1:
            raise FeatureFileError(f"invalid header k={k}, d={d}", path, 1)

        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d + 1:
                raise FeatureFileError(f"expected {d + 1} fields, got {len(row)}", path, lineno)
            try:
                label = int(row[0])
                feats = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise FeatureFileError(f"unparseable value ({exc})", path, lineno) from None
            if not 1 <= label <= k:
                raise FeatureFileError(f"label {label} outside 1..{k}", path, lineno)
            if not all(math.isfinite(v) for v in feats):
                raise FeatureFileError("non-finite feature", path, lineno)
            rows.append(feats)
            labels.append(label)

    X = np.array(rows, dtype=float).reshape(len(rows), d)
    if normalize:
        X = normalize_rows(X)
    stream = Stream(X, np.array(labels, dtype=np.int64), k)
    if shuffle_seed is not None:
        stream = stream.shuffled(shuffle_seed)
    return stream


def write_features(path: PathLike, stream: Stream) -> None:
    """Write ``stream`` in the feature CSV format (round-trip exact floats)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"{stream.k},{stream.d}\n")
        for x, label in zip(stream.X, stream.y):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in x) + "\n")
