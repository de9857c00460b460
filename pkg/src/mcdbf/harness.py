"""Experiment runner: multi-seed runs, gamma sweeps, comparisons and CSV reports."""
from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .bounds import (
    MistakeBoundInputs,
    complexity,
    constants,
    mistake_bound,
    optimal_gamma,
    separability_certificate,
    zero_loss_comparator,
)
from .data import Stream, SynthConfig, generate_separable, load_features
from .errors import ConfigurationError, InvalidParameterError
from .learners import RunMetrics, make_learner, run_online

logger = logging.getLogger(__name__)

ALGORITHMS = ("mc-dbf", "mc-slp", "perceptron", "banditron")
BANDIT = ("mc-dbf", "banditron")
CURVE_COLUMNS = ("algo", "t", "mean_error", "std_error")
LOGLOG_COLUMNS = ("log_t", "log_set_mistakes")
SUMMARY_COLUMNS = ("algo", "gamma", "m", "T", "final_error", "set_mistakes", "bound")

Gamma = Union[float, str, None]


@dataclass(frozen=True)
class DataSpec:
    """Either a synthetic generator config or a feature file path."""

    synthetic: Optional[SynthConfig] = None
    path: Optional[str] = None
    shuffle_seed: Optional[int] = None

    def __post_init__(self):
        if (self.synthetic is None) == (self.path is None):
            raise ConfigurationError("data source needs exactly one of 'synthetic' or 'path'")

    def to_dict(self) -> dict:
        if self.synthetic is not None:
            return {"synthetic": self.synthetic.to_dict()}
        return {"path": self.path, "shuffle_seed": self.shuffle_seed}

    @classmethod
    def from_dict(cls, d: dict) -> "DataSpec":
        if "synthetic" in d:
            return cls(synthetic=SynthConfig(**d["synthetic"]))
        return cls(path=d.get("path"), shuffle_seed=d.get("shuffle_seed"))

    def load(self, T: int) -> Tuple[Stream, Optional[np.ndarray]]:
        if self.synthetic is not None:
            return generate_separable(replace(self.synthetic, T=T))
        return load_features(self.path, shuffle_seed=self.shuffle_seed), None


@dataclass(frozen=True)
class ExperimentSpec:
    """One algorithm configuration run over several seeds.

    ``gamma`` may be ``"auto"`` for the bound-minimising rate (synthetic data
    only, since it needs the comparator's norm).
    """

    algorithm: str
    data: DataSpec
    T: int
    m: Optional[int] = None
    gamma: Gamma = None
    seeds: Tuple[int, ...] = (0,)
    log_every: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.T < 0 or self.log_every < 1:
            raise ConfigurationError("T must be >= 0 and log_every >= 1")
        if not self.seeds or any(s < 0 for s in self.seeds):
            raise ConfigurationError("seeds must be a nonempty list of nonnegative integers")
        if self.algorithm == "banditron":
            if self.m not in (None, 1):
                raise ConfigurationError("banditron is the m = 1 case; do not pass another m")
            object.__setattr__(self, "m", 1)
        if self.algorithm == "perceptron":
            object.__setattr__(self, "m", None)
        if self.algorithm in ("mc-dbf", "mc-slp") and self.m is None:
            raise ConfigurationError(f"{self.algorithm} needs m")
        if self.algorithm in BANDIT:
            if self.gamma is None:
                raise ConfigurationError(f"{self.algorithm} needs gamma (a value in (0,1) or 'auto')")
            if self.gamma == "auto":
                if self.data.synthetic is None:
                    raise ConfigurationError("gamma='auto' needs synthetic data with a known comparator")
            elif not (isinstance(self.gamma, (int, float)) and 0 < self.gamma < 1):
                raise ConfigurationError(f"gamma must be in (0, 1) or 'auto', got {self.gamma!r}")
        else:
            object.__setattr__(self, "gamma", None)
        k = self.data.synthetic.k if self.data.synthetic is not None else None
        if k is not None and self.m is not None and not 1 <= self.m < k:
            raise ConfigurationError(f"m must satisfy 1 <= m < k={k}, got {self.m}")

    @property
    def label(self) -> str:
        if self.algorithm in ("mc-dbf", "mc-slp"):
            return f"{self.algorithm}(m={self.m})"
        return self.algorithm

    @property
    def seed_key(self) -> str:
        # banditron shares MC-DBF(m=1) seeds so the two are interchangeable
        family = "mc-dbf" if self.algorithm in BANDIT else self.algorithm
        return f"{family}/m={self.m}"

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "data": self.data.to_dict(),
            "T": self.T,
            "m": self.m,
            "gamma": self.gamma,
            "seeds": list(self.seeds),
            "log_every": self.log_every,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        d["data"] = DataSpec.from_dict(d["data"])
        d["seeds"] = tuple(d.get("seeds", (0,)))
        return cls(**d)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    gamma: Optional[float]
    runs: List[RunMetrics]
    checkpoints: np.ndarray
    mean_error: np.ndarray
    std_error: np.ndarray
    mean_set_mistakes: np.ndarray
    bound: Optional[float] = None
    R_T: Optional[float] = None
    D: Optional[float] = None
    name: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.spec.label

    @property
    def final_error(self) -> float:
        return float(np.mean([r.final_error for r in self.runs]))

    @property
    def set_mistakes(self) -> float:
        return float(np.mean([r.final_set_mistakes for r in self.runs]))


@dataclass
class SweepResult:
    grid: List[float]
    results: List[ExperimentResult]

    @property
    def table(self) -> List[Tuple[float, float]]:
        return [(g, r.final_error) for g, r in zip(self.grid, self.results)]

    @property
    def best_gamma(self) -> float:
        errors = [r.final_error for r in self.results]
        return self.grid[int(np.argmin(errors))]


def derive_seed(base: int, index: int, key: str) -> int:
    """Per-run seed from (base seed, position in the seed list, algorithm key)."""
    ss = np.random.SeedSequence([int(base), int(index), zlib.crc32(key.encode())])
    return int(ss.generate_state(1, np.uint64)[0])


def _one_run(args) -> RunMetrics:
    algorithm, k, d, m, gamma, seed, stream, T, log_every, base = args
    learner = make_learner(algorithm, k, d, m=m or 1, gamma=gamma, seed=seed)
    metrics = run_online(learner, stream, T, log_every=log_every, seed=base)
    return metrics


def resolve_gamma(spec: ExperimentSpec, W_star: Optional[np.ndarray]) -> Optional[float]:
    if spec.gamma != "auto":
        return None if spec.gamma is None else float(spec.gamma)
    if W_star is None:
        raise ConfigurationError("gamma='auto' needs a known comparator")
    D = complexity(zero_loss_comparator(W_star, spec.m))
    return optimal_gamma(W_star.shape[0], spec.m, D, max(spec.T, 1))


def run_experiment(
    spec: ExperimentSpec,
    jobs: int = 1,
    loaded: Optional[Tuple[Stream, Optional[np.ndarray]]] = None,
) -> ExperimentResult:
    """Run ``spec`` once per seed and aggregate mean/std error curves.

    Results are ordered by seed index whatever ``jobs`` is.
    """
    stream, W_star = loaded if loaded is not None else spec.data.load(spec.T)
    if spec.m is not None and not 1 <= spec.m < stream.k:
        raise ConfigurationError(f"m must satisfy 1 <= m < k={stream.k}, got {spec.m}")
    gamma = resolve_gamma(spec, W_star)
    tasks = [
        (
            spec.algorithm,
            stream.k,
            stream.d,
            spec.m,
            gamma,
            derive_seed(base, i, spec.seed_key),
            stream,
            spec.T,
            spec.log_every,
            base,
        )
        for i, base in enumerate(spec.seeds)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_one_run, tasks))
    else:
        runs = [_one_run(t) for t in tasks]

    checkpoints = runs[0].checkpoints
    if runs[0].rounds:
        errors = np.vstack([r.error_curve for r in runs])
        setm = np.vstack([r.set_mistakes for r in runs]).astype(float)
        mean_error, std_error = errors.mean(axis=0), errors.std(axis=0)
        mean_set = setm.mean(axis=0)
    else:
        mean_error = std_error = mean_set = np.zeros(0)
    if any(r.truncated for r in runs):
        logger.warning("%s: stream ran out after %d of %d rounds", spec.label, runs[0].rounds, spec.T)

    result = ExperimentResult(spec, gamma, runs, checkpoints, mean_error, std_error, mean_set)
    if W_star is not None and spec.algorithm in BANDIT and runs[0].rounds:
        _attach_bound(result, stream.head(runs[0].rounds), W_star)
    return result


def _attach_bound(result: ExperimentResult, stream: Stream, W_star: np.ndarray) -> None:
    m = result.spec.m
    comparator = zero_loss_comparator(W_star, m)
    _, R_T = separability_certificate(comparator, stream, m=m)
    D = complexity(comparator)
    T = len(stream)
    c = constants(stream.k, m, result.gamma)
    result.R_T, result.D = R_T, D
    result.bound = mistake_bound(MistakeBoundInputs(R_T=R_T, D=D, T=T, gamma=result.gamma), c)
    if result.set_mistakes > result.bound:
        logger.warning(
            "%s: mean set mistakes %.1f exceed the mistake bound %.1f",
            result.label, result.set_mistakes, result.bound,
        )


def gamma_sweep(spec: ExperimentSpec, gamma_grid: Sequence[float], jobs: int = 1) -> SweepResult:
    """One :func:`run_experiment` per gamma; the stream is generated once."""
    if not gamma_grid:
        raise ConfigurationError("gamma grid is empty")
    if spec.algorithm not in BANDIT:
        raise ConfigurationError("gamma sweeps need a bandit algorithm")
    grid = [float(g) for g in gamma_grid]
    specs = [replace(spec, gamma=g) for g in grid]
    loaded = spec.data.load(spec.T)
    results = []
    for g, s in zip(grid, specs):
        r = run_experiment(s, jobs=jobs, loaded=loaded)
        r.name = f"{s.label}[gamma={g!r}]"
        results.append(r)
    return SweepResult(grid, results)


def compare(specs: Sequence[ExperimentSpec], jobs: int = 1) -> List[ExperimentResult]:
    """Run several specs on one shared stream."""
    if not specs:
        raise ConfigurationError("nothing to compare")
    first = specs[0]
    for s in specs[1:]:
        if s.data != first.data or s.T != first.T:
            raise ConfigurationError("compared experiments must share the data source and T")
    loaded = first.data.load(first.T)
    return [run_experiment(s, jobs=jobs, loaded=loaded) for s in specs]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def make_manifest(command: str, specs: Sequence[ExperimentSpec], gamma_grid=None, loglog=False) -> dict:
    return {
        "tool": "mcdbf",
        "version": __version__,
        "command": command,
        "experiments": [s.to_dict() for s in specs],
        "gamma_grid": None if gamma_grid is None else [float(g) for g in gamma_grid],
        "loglog": bool(loglog),
    }


def emit_report(
    results: Sequence[ExperimentResult],
    out_dir: Union[str, Path],
    manifest: Optional[dict] = None,
    loglog: bool = False,
    sweep: Optional[SweepResult] = None,
) -> Dict[str, Path]:
    """Write ``curves.csv``, ``summary.csv`` and ``manifest.json`` (plus ``sweep.csv``).

    Output depends only on the results, never on timing, so re-emitting the
    same results is byte-identical.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"curves": out / "curves.csv", "summary": out / "summary.csv"}
        with open(paths["curves"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_COLUMNS + (LOGLOG_COLUMNS if loglog else ()))
            for r in results:
                for i, t in enumerate(r.checkpoints):
                    row = [r.label, int(t), _fmt(r.mean_error[i]), _fmt(r.std_error[i])]
                    if loglog:
                        ms = r.mean_set_mistakes[i]
                        row += [_fmt(math.log(t)), _fmt(math.log(ms)) if ms > 0 else ""]
                    w.writerow(row)
        with open(paths["summary"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for r in results:
                rounds = r.runs[0].rounds if r.runs else 0
                w.writerow(
                    [r.label, _fmt(r.gamma), _fmt(r.spec.m), rounds, _fmt(r.final_error),
                     _fmt(r.set_mistakes), _fmt(r.bound)]
                )
        if sweep is not None:
            paths["sweep"] = out / "sweep.csv"
            with open(paths["sweep"], "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("gamma", "final_error", "best"))
                best = sweep.best_gamma
                for g, err in sweep.table:
                    w.writerow([_fmt(g), _fmt(err), int(g == best)])
        if manifest is not None:
            paths["manifest"] = out / "manifest.json"
            paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"writing report to {out}: {exc}") from exc
    return paths


def execute_manifest(manifest: dict, out_dir, jobs: int = 1) -> Dict[str, Path]:
    """Run whatever a manifest describes and write its report to ``out_dir``."""
    try:
        command = manifest["command"]
        specs = [ExperimentSpec.from_dict(d) for d in manifest["experiments"]]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed manifest: {exc!r}") from exc
    except InvalidParameterError as exc:
        raise ConfigurationError(str(exc)) from exc
    loglog = bool(manifest.get("loglog", False))
    if command == "run":
        if len(specs) != 1:
            raise ConfigurationError("a 'run' manifest holds exactly one experiment")
        results = [run_experiment(specs[0], jobs=jobs)]
        return emit_report(results, out_dir, manifest, loglog=loglog)
    if command == "compare":
        return emit_report(compare(specs, jobs=jobs), out_dir, manifest, loglog=loglog)
    if command == "sweep-gamma":
        sweep = gamma_sweep(specs[0], manifest.get("gamma_grid") or [], jobs=jobs)
        return emit_report(sweep.results, out_dir, manifest, loglog=loglog, sweep=sweep)
    raise ConfigurationError(f"unknown manifest command {command!r}")


def load_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
