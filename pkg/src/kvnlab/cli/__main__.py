"""Command line: ``kvnlab run <config>``, ``kvnlab verify [suite]``, ``kvnlab explain <scenario>``.

Exit codes: 0 success, 1 failed verification or failed run,
2 boundary-guard violation, 3 invalid configuration, 4 unknown scenario.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import platform
import sys
import time
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .. import __version__
from ..errors import BoundaryGuardError, ConfigurationError, KvnError, ParameterError
from . import config as cfgmod
from . import scenarios
from .output import atomic_write, csv_text, json_text, output_dir

EXIT_OK, EXIT_FAIL, EXIT_GUARD, EXIT_INVALID, EXIT_UNKNOWN = 0, 1, 2, 3, 4


def _err(msg: str) -> None:
    print(f"kvnlab: {msg}", file=sys.stderr)


def run_config(cfg: cfgmod.ScenarioConfig) -> tuple[int, Path | None]:
    """Run one validated scenario and write its artifacts."""
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    try:
        result = scenarios.run(cfg)
    except BoundaryGuardError as exc:
        _err(f"boundary guard violated: {exc}")
        return EXIT_GUARD, None
    except (ConfigurationError, ParameterError) as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_INVALID, None
    except KvnError as exc:
        _err(f"run failed: {type(exc).__name__}: {exc}")
        return EXIT_FAIL, None
    elapsed = time.perf_counter() - t0
    out = output_dir(cfg.scenario, cfg.output.dir)
    manifest = {
        "scenario": cfg.scenario,
        "config": cfg.model_dump(mode="json"),
        "ordering": result.ordering,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_at": started.isoformat(),
        "wall_clock_s": elapsed,
        "tolerances": scenarios.TOLERANCES,
        "finite_difference_order": scenarios.FD_ORDER,
        "csv_columns": result.columns,
    }
    atomic_write(out / "timeseries.csv", csv_text(result.columns, result.table))
    atomic_write(out / "summary.json", json_text(result.summary))
    atomic_write(out / "manifest.json", json_text(manifest))
    return EXIT_OK, out


def cmd_run(args) -> int:
    try:
        cfg = cfgmod.load(args.config)
    except cfgmod.UnknownScenarioError as exc:
        _err(str(exc))
        return EXIT_UNKNOWN
    except ValidationError as exc:
        _err(f"invalid configuration:\n{exc}")
        return EXIT_INVALID
    except ConfigurationError as exc:
        _err(str(exc))
        return EXIT_INVALID
    code, out = run_config(cfg)
    if code == EXIT_OK:
        summary = (out / "summary.json").read_text()
        print(f"wrote {out}/manifest.json, timeseries.csv, summary.json")
        if not args.quiet:
            print(summary, end="")
    return code


def cmd_verify(args) -> int:
    from .. import acceptance

    try:
        numbers = acceptance.select(args.suite)
    except KeyError:
        _err(f"unknown suite {args.suite!r}; choose one of {', '.join(acceptance.SUITES)} "
             f"or comma-separated criterion numbers 1-9")
        return EXIT_INVALID
    if args.dt is not None and not args.dt > 0:
        _err("--dt must be positive")
        return EXIT_INVALID
    failed = 0
    for n in numbers:
        r = acceptance.run_criterion(n, args.dt)
        print(r.line(), flush=True)
        failed += not r.passed
    print(f"{len(numbers) - failed}/{len(numbers)} criteria passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_explain(args) -> int:
    name = args.scenario
    if name not in cfgmod.SCENARIOS:
        _err(str(cfgmod.UnknownScenarioError(name)))
        return EXIT_UNKNOWN
    cfg = cfgmod.resolve({"scenario": name})
    print(f"{name}: {scenarios.DESCRIPTIONS[name]}\n")
    print("defaults:")
    print(cfgmod.dump(cfg), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kvnlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario from a YAML config")
    p.add_argument("config")
    p.add_argument("-q", "--quiet", action="store_true", help="do not echo the summary")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("suite", nargs="?", default="all")
    p.add_argument("--dt", type=float, default=None, help="override the step size of time-stepping criteria")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("explain", help="describe a scenario and print its defaults")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
