"""Command-line entry point: ``rplsim {run,suite,calibrate,trace}``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .config import (DEFAULT_INTERVALS, ConfigError, Scenario, default_scenario, load_scenario,
                     parse_scenario)
from .engine import SimulationError, Trace

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _seed_list(text: str) -> list[int]:
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r} (use 1,2,3 or 1-10)") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _apply_overrides(sc: Scenario, args, threshold: bool = True) -> Scenario:
    data = sc.model_dump()
    if getattr(args, "seed", None) is not None:
        data["seeds"] = [args.seed]
    if getattr(args, "seeds", None):
        data["seeds"] = args.seeds
    if getattr(args, "duration", None) is not None:
        data["duration_s"] = args.duration
    if getattr(args, "replay_interval", None) is not None:
        if data.get("attack") is None:
            raise ConfigError("--replay-interval: scenario has no attack block")
        data["attack"]["replay_interval_s"] = args.replay_interval
    if threshold and getattr(args, "threshold", None) is not None:
        if data.get("defense") is None:
            raise ConfigError("--threshold: scenario has no defense block")
        data["defense"]["threshold"] = args.threshold
    return parse_scenario(data)


def _base(args) -> Scenario:
    if args.config:
        return load_scenario(args.config)
    return default_scenario("rpl")


def _report(rows, out_dir) -> None:
    if out_dir:
        for p in harness.emit_report(rows, out_dir):
            print(f"wrote {p}")
    else:
        sys.stdout.write(harness.rows_to_csv(rows))


def cmd_run(args) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    result = harness.run_experiment(sc, workers=args.workers)
    _report(result.rows, args.out_dir)
    return EXIT_OK


def cmd_suite(args) -> int:
    base = _apply_overrides(_base(args), args, threshold=False)
    result = harness.run_suite(base, workers=args.workers, intervals=args.intervals,
                               threshold=args.threshold)
    _report(result.rows, args.out_dir)
    if args.out_dir is None:
        json.dump(result.summary, sys.stderr, indent=2, sort_keys=True)
        sys.stderr.write("\n")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    base = _apply_overrides(_base(args), args, threshold=False)
    if base.attack is not None:
        raise ConfigError("calibrate: the scenario must not contain an attack block")
    seeds = args.seeds or base.seeds
    threshold = harness.calibrate_threshold(base, seeds, args.safety)
    print(json.dumps({"threshold": threshold, "seeds": seeds, "safety": args.safety}))
    return EXIT_OK


def cmd_trace(args) -> int:
    sc = _apply_overrides(load_scenario(args.scenario), args)
    seed = args.seed if args.seed is not None else sc.seeds[0]
    trace = Trace()
    harness.run_once(sc, seed, trace=trace)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"trace_{sc.name}_{seed}.jsonl"
        with path.open("w") as fp:
            trace.dump(fp)
        print(f"wrote {path}")
    else:
        trace.dump(sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rplsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario_arg: bool):
        if scenario_arg:
            p.add_argument("scenario", help="scenario JSON file")
        else:
            p.add_argument("--config", help="base scenario JSON (default: built-in grid)")
        p.add_argument("--seed", type=int, help="run a single seed")
        p.add_argument("--seeds", type=_seed_list, help="seed list, e.g. 1,2,3 or 1-10")
        p.add_argument("--out-dir", help="directory for output files (default: stdout)")
        p.add_argument("--duration", type=float, help="simulated seconds")
        p.add_argument("--threshold", type=int, help="DAO receive threshold")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("run", help="run one scenario file over its seeds")
    common(p, True)
    p.add_argument("--replay-interval", type=float, help="attacker replay interval (s)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("suite", help="baseline vs under-attack vs secure, all replay intervals")
    common(p, False)
    p.add_argument("--intervals", type=_float_list, default=list(DEFAULT_INTERVALS),
                   help="replay intervals (s), default 1,2,4,8")
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("calibrate", help="derive the DAO threshold from attack-free runs")
    common(p, False)
    p.add_argument("--safety", type=float, default=2.0, help="multiplier on the observed maximum")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("trace", help="dump one run's event trace as JSON lines")
    common(p, True)
    p.add_argument("--replay-interval", type=float, help="attacker replay interval (s)")
    p.set_defaults(fn=cmd_trace)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, OSError) as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
