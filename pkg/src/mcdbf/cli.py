"""Command line entry point: ``mcdbf {gen-data,run,sweep-gamma,compare,replay}``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from .data import SynthConfig, generate_separable, write_features
from .errors import ConfigurationError, FeatureFileError, InvalidParameterError
from .harness import (
    DataSpec,
    ExperimentSpec,
    compare,
    emit_report,
    execute_manifest,
    gamma_sweep,
    load_manifest,
    make_manifest,
    run_experiment,
)

logger = logging.getLogger("mcdbf")


def parse_int_list(text: str) -> List[int]:
    """``"0,1,5-7"`` -> ``[0, 1, 5, 6, 7]``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_gamma(text: Optional[str]):
    if text is None or text == "auto":
        return text
    return float(text)


def _synth_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic data (used when --data is absent)")
    g.add_argument("--k", type=int, default=9)
    g.add_argument("--d", type=int, default=400)
    g.add_argument("--margin", type=float, default=1.0)
    g.add_argument("--gap", type=float, default=0.5)
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--noise-rate", type=float, default=0.0)
    g.add_argument("--data-seed", type=int, default=0)


def _run_args(p: argparse.ArgumentParser, algo: bool = True) -> None:
    if algo:
        p.add_argument("--algo", choices=["mc-dbf", "mc-slp", "perceptron", "banditron"])
        p.add_argument("--m", type=int)
        p.add_argument("--gamma", help="value in (0,1) or 'auto'")
    p.add_argument("--T", type=int, default=10000)
    p.add_argument("--seeds", default="0", help="comma list and ranges, e.g. 0-9")
    p.add_argument("--data", help="feature CSV file ('k,d' header, then 'label,f1..fd')")
    p.add_argument("--shuffle-seed", type=int)
    p.add_argument("--log-every", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="manifest/config JSON; overrides all other flags")
    _synth_args(p)


def _data_spec(args) -> DataSpec:
    if args.data:
        return DataSpec(path=args.data, shuffle_seed=args.shuffle_seed)
    return DataSpec(
        synthetic=SynthConfig(
            k=args.k, d=args.d, T=args.T, margin=args.margin, seed=args.data_seed,
            noise_rate=args.noise_rate, gap=args.gap, noise=args.noise,
        )
    )


def _spec(args, algorithm=None, m=None, gamma=None) -> ExperimentSpec:
    return ExperimentSpec(
        algorithm=algorithm or args.algo,
        data=_data_spec(args),
        T=args.T,
        m=m if m is not None else getattr(args, "m", None),
        gamma=gamma if gamma is not None else parse_gamma(getattr(args, "gamma", None)),
        seeds=tuple(parse_int_list(args.seeds)),
        log_every=args.log_every,
    )


def parse_variant(text: str):
    """``"mc-dbf:m=2:gamma=auto"`` -> ``("mc-dbf", 2, "auto")``."""
    name, *opts = text.split(":")
    m = gamma = None
    for opt in opts:
        key, _, value = opt.partition("=")
        if key == "m":
            m = int(value)
        elif key == "gamma":
            gamma = parse_gamma(value)
        else:
            raise ConfigurationError(f"unknown variant option {key!r} in {text!r}")
    return name, m, gamma


def cmd_gen_data(args) -> None:
    cfg = SynthConfig(
        k=args.k, d=args.d, T=args.T, margin=args.margin, seed=args.data_seed,
        noise_rate=args.noise_rate, gap=args.gap, noise=args.noise,
    )
    stream, W_star = generate_separable(cfg)
    write_features(args.out, stream)
    if args.wstar:
        np.savetxt(args.wstar, W_star, delimiter=",", fmt="%.17g")
    print(f"wrote {len(stream)} examples (k={stream.k}, d={stream.d}) to {args.out}")


def _report(results, args, manifest, **kw):
    paths = emit_report(results, args.out, manifest, **kw)
    for r in results:
        line = f"{r.label:<24} gamma={r.gamma!s:<10} final_error={r.final_error:.5f} set_mistakes={r.set_mistakes:.1f}"
        if r.bound is not None:
            line += f" bound={r.bound:.1f}"
        print(line)
    print("wrote " + ", ".join(str(p) for p in paths.values()))


def cmd_run(args) -> None:
    if args.config:
        return cmd_replay(argparse.Namespace(manifest=args.config, out=args.out, jobs=args.jobs))
    spec = _spec(args)
    result = run_experiment(spec, jobs=args.jobs)
    _report([result], args, make_manifest("run", [spec]))


def cmd_sweep(args) -> None:
    if args.config:
        return cmd_replay(argparse.Namespace(manifest=args.config, out=args.out, jobs=args.jobs))
    grid = [float(g) for g in args.gammas.split(",") if g.strip()]
    spec = _spec(args, gamma=grid[0] if grid else None)
    sweep = gamma_sweep(spec, grid, jobs=args.jobs)
    _report(sweep.results, args, make_manifest("sweep-gamma", [spec], gamma_grid=grid), sweep=sweep)
    print(f"best gamma: {sweep.best_gamma!r}")


def cmd_compare(args) -> None:
    if args.config:
        return cmd_replay(argparse.Namespace(manifest=args.config, out=args.out, jobs=args.jobs))
    if not args.variant:
        raise ConfigurationError("compare needs at least one --variant")
    specs = []
    for v in args.variant:
        name, m, gamma = parse_variant(v)
        specs.append(_spec(args, algorithm=name, m=m, gamma=gamma))
    results = compare(specs, jobs=args.jobs)
    _report(results, args, make_manifest("compare", specs, loglog=args.loglog), loglog=args.loglog)


def cmd_replay(args) -> None:
    manifest = load_manifest(args.manifest)
    paths = execute_manifest(manifest, args.out, jobs=args.jobs)
    print("wrote " + ", ".join(str(p) for p in paths.values()))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcdbf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic separable stream as a feature CSV")
    p.add_argument("--T", type=int, default=10000)
    p.add_argument("--out", required=True)
    p.add_argument("--wstar", help="also write the comparator matrix here (CSV)")
    _synth_args(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("run", help="run one algorithm over several seeds")
    _run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-gamma", help="grid search over gamma for a bandit algorithm")
    _run_args(p)
    p.add_argument("--gammas", default="0.01,0.02,0.05,0.1,0.2,0.3,0.5")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run several algorithms on one stream")
    _run_args(p, algo=False)
    p.add_argument(
        "--variant", action="append",
        help="ALGO[:m=M][:gamma=G], repeatable, e.g. mc-dbf:m=2:gamma=0.2",
    )
    p.add_argument("--loglog", action="store_true", help="add log t / log mistakes columns")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("replay", help="re-run an experiment from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigurationError, InvalidParameterError, FeatureFileError, OSError, ValueError) as exc:
        print(f"mcdbf: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
