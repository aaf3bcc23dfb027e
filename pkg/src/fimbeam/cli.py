"""Command-line entry point.

``fimbeam run CONFIG`` runs a config file as is.  The ``sweep-gamma``,
``sweep-paths``, ``sweep-zeta`` and ``converge`` presets start from the
reference setup with their sweep axis filled in; an optional config file is
layered on top and the flags win over both.

On failure a single JSON object is printed to stderr, e.g.
``{"error": "config", "field": "run.trials", "message": "..."}``, and the
exit code is 2 for configuration problems and 1 for anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .experiment import (NO_SWEEP, PATH_AXIS, RANGE_AXIS, SINR_AXIS, ConfigError,
                         ExperimentConfig, emit_results, load_config, run_experiment)

PRESETS = {
    "sweep-gamma": {"sweep": {"axis": SINR_AXIS, "values": [float(g) for g in range(16)]},
                    "channel": {"paths": 8}, "operating_point": {"morphing_range": 1.0}},
    "sweep-paths": {"sweep": {"axis": PATH_AXIS, "values": [2, 4, 8, 16]},
                    "operating_point": {"sinr_target_db": 5.0, "morphing_range": 1.0}},
    "sweep-zeta": {"sweep": {"axis": RANGE_AXIS, "values": [0.0, 0.25, 0.5, 0.75, 1.0]},
                   "channel": {"paths": 8}, "operating_point": {"sinr_target_db": 5.0}},
    "converge": {"sweep": {"axis": NO_SWEEP, "values": []}, "channel": {"paths": 4},
                 "operating_point": {"sinr_target_db": 5.0, "morphing_range": 1.0},
                 "run": {"schemes": ["mmse-fim"]}},
}

EXIT_CONFIG = 2
EXIT_FAILURE = 1


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    p.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    p.add_argument("--seed", type=int, help="base seed; trial t uses seed + t")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the summary table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fimbeam", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", help="TOML config, or a results.json sidecar to replay")
    _common(run)
    for name, preset in PRESETS.items():
        p = sub.add_parser(name, help=f"preset with sweep axis {preset['sweep']['axis']!r}")
        p.add_argument("config", nargs="?", help="optional config layered over the preset")
        _common(p)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.command in PRESETS:
        cfg = ExperimentConfig.from_dict(PRESETS[args.command], cfg)
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = ExperimentConfig.from_dict({"run": overrides}, cfg)
    return cfg


def _fail(kind: str, message: str, field=None, code=EXIT_FAILURE) -> int:
    rec = {"error": kind, "message": message}
    if field is not None:
        rec["field"] = field
    print(json.dumps(rec), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers", f"must be >= 1, got {args.workers}")
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _fail("config", exc.message, exc.field, EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", str(exc), code=EXIT_CONFIG)

    t0 = time.perf_counter()
    try:
        result = run_experiment(cfg, workers=args.workers)
        paths = emit_results(result, args.out)
    except OSError as exc:
        return _fail("io", str(exc))
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable line
        return _fail(type(exc).__name__, str(exc))

    if not args.quiet:
        if not cfg.convergence_mode:
            print(f"{'sweep':>8} {'scheme':>11} {'mean dBm':>9} {'std':>6} {'ok':>4} {'fail':>4}")
            for s in result.summaries:
                print(f"{s.sweep_value!s:>8} {s.scheme:>11} {s.mean_power_dbm:9.3f} "
                      f"{s.std_power_dbm:6.2f} {s.trials_ok:4d} {s.trials_failed:4d}")
        print(f"wrote {', '.join(paths)} in {time.perf_counter() - t0:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
