"""Command-line entry point: experiments, single acquisitions, serving sessions."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench, model
from .acquisition import quacq2
from .oracle import SimulatedOracle


class ConfigError(Exception):
    pass


def _seed_from(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("QUACQ_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(f"QUACQ_SEED must be an integer, got {env!r}") from e
    return 0


def _load_problem_spec(path: str) -> bench.ProblemSpec:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read problem file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"problem file {path} is not valid JSON: {e}") from e
    try:
        return bench.problem_spec_from_dict(data)
    except ValueError as e:
        raise ConfigError(f"invalid problem spec in {path}: {e}") from e


def _parse_bk(arg, spec: bench.ProblemSpec):
    """--bk accepts a fraction of the target or a path to a constraint file."""
    if arg is None:
        return None, None
    try:
        frac = float(arg)
    except ValueError:
        frac = None
    if frac is not None:
        if not 0.0 <= frac <= 1.0:
            raise ConfigError("--bk fraction must be within [0, 1]")
        return frac, None
    try:
        with open(arg, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read background file {arg}: {e}") from e
    entries = data.get("background", data) if isinstance(data, dict) else data
    try:
        constraints = [model.parse_constraint_entry(spec.vocab, e) for e in entries]
    except (ValueError, KeyError) as e:
        raise ConfigError(f"invalid background constraints in {arg}: {e}") from e
    return None, constraints


def _emit_metrics(rows, args):
    text = (bench.metrics_csv(rows, zero_times=args.no_times)
            if args.format == "csv"
            else bench.metrics_table(rows, zero_times=args.no_times))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--strategy", default="cutoff", choices=["basic", "cutoff", "maxviol"])
    p.add_argument("--cutoff-ms", type=float, default=1000.0)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bk", default=None,
                   help="background knowledge: fraction of the target, or a JSON file")
    p.add_argument("--gen-timeout-s", type=float, default=3600.0,
                   help="wall-clock limit on generating a single query")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "table"], default="csv")
    p.add_argument("--no-times", action="store_true",
                   help="zero the timing columns (for reproducible output)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-verify", action="store_true",
                   help="skip the post-run equivalence verification")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quacq",
        description="Interactive constraint acquisition from partial queries")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="reproduce benchmark metrics")
    b.add_argument("--instance", required=True)
    _experiment_flags(b)

    r = sub.add_parser("run", help="run experiments on a problem file")
    r.add_argument("--problem", required=True)
    _experiment_flags(r)

    l = sub.add_parser("learn", help="one simulated acquisition, print the network")
    l.add_argument("--problem", required=True)
    l.add_argument("--strategy", default="basic", choices=["basic", "cutoff", "maxviol"])
    l.add_argument("--cutoff-ms", type=float, default=1000.0)
    l.add_argument("--seed", type=int, default=None)

    s = sub.add_parser("serve", help="serve interactive acquisition sessions")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--log-dir", default=None,
                   help="append-only session logs for crash replay")
    return parser


def _cmd_experiment(spec: bench.ProblemSpec, args) -> int:
    if args.strategy == "cutoff" and args.cutoff_ms < 1:
        raise ConfigError("--cutoff-ms must be >= 1 for the cutoff strategy")
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    seed = _seed_from(args)
    bk_fraction, background = _parse_bk(args.bk, spec)
    row = bench.run_experiment(
        spec, args.strategy, args.runs, seed,
        cutoff_ms=args.cutoff_ms, bk_fraction=bk_fraction, background=background,
        query_gen_timeout_ms=args.gen_timeout_s * 1000.0,
        verify=not args.no_verify, jobs=args.jobs)
    _emit_metrics([row], args)
    if row.completed and any(r.equivalent is False for r in row.records):
        print("warning: a completed run did not match the target network",
              file=sys.stderr)
        return 3
    return 0


def _cmd_learn(args) -> int:
    spec = _load_problem_spec(args.problem)
    if not spec.target:
        raise ConfigError("learn needs a problem file with a target network")
    seed = _seed_from(args)
    oracle = SimulatedOracle(spec.vocab, spec.target)
    net = quacq2(spec.vocab, spec.basis, oracle, strategy=args.strategy,
                 cutoff_ms=args.cutoff_ms, seed=seed,
                 background=spec.background or None)
    for c in net.constraints:
        print(model.describe(c))
    print(f"# learned {len(net.constraints)} constraints "
          f"in {oracle.counters.asked} queries", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            try:
                spec = bench.build_benchmark(args.instance, seed=_seed_from(args))
            except ValueError as e:
                raise ConfigError(str(e)) from e
            return _cmd_experiment(spec, args)
        if args.command == "run":
            spec = _load_problem_spec(args.problem)
            if not spec.target:
                raise ConfigError("run needs a problem file with a target network")
            return _cmd_experiment(spec, args)
        if args.command == "learn":
            return _cmd_learn(args)
        if args.command == "serve":
            import uvicorn

            from .service import create_app

            uvicorn.run(create_app(log_dir=args.log_dir),
                        host=args.host, port=args.port, log_level="warning")
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # noqa: BLE001 - runs must not die silently
        print(f"run failed: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
