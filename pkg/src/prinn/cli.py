"""Command line: ``prinn list | run | verify | sweep``.

Exit status is 0 only when every verification check passes.
"""
from __future__ import annotations

import argparse
import difflib
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, override, parse_config
from .experiments import REGISTRY, list_experiments, output_root, run, verify
from .train import TrainingAborted

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_ABORT = 3


def _read_config(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"line 0: cannot read {path}: {exc.strerror}"]) from exc
    return parse_config(text)


def cmd_list(args) -> int:
    rows = list_experiments()
    if args.name:
        rows = [r for r in rows if r[0] == args.name]
        if not rows:
            hint = difflib.get_close_matches(args.name, list(REGISTRY), 1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            print(f"unknown experiment {args.name!r}{extra}", file=sys.stderr)
            return EXIT_USAGE
    for name, desc, anchor in rows:
        print(f"{name}\t{desc}\t[{anchor}]")
    return 0


def cmd_run(args) -> int:
    cfg = _read_config(args.config)
    art = run(cfg, args.out)
    print(art.report.summary())
    print(f"artifacts: {art.directory}")
    return 0 if art.report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    report = verify(args.directory)
    print(report.summary())
    return 0 if report.passed else EXIT_FAIL


def _sweep_one(job):
    cfg, directory = job
    return run(cfg, directory).report


def cmd_sweep(args) -> int:
    base = _read_config(args.config)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError(["line 0: --values is empty"])
    errors, jobs = [], []
    root = Path(args.out) if args.out else output_root(base) / base.name
    for v in values:
        try:
            cfg = override(base, args.param, v)
        except ConfigError as exc:
            errors += [f"{args.param}={v}: {e}" for e in exc.errors]
            continue
        jobs.append((cfg, root / f"sweep-{args.param}-{v}"))
    if errors:
        raise ConfigError(errors)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(_sweep_one, jobs))
    else:
        reports = [_sweep_one(j) for j in jobs]
    print(f"{args.param}\tstatus\tdirectory")
    for v, (_, d), rep in zip(values, jobs, reports):
        print(f"{v}\t{'pass' if rep.passed else 'fail'}\t{d}")
    return 0 if all(r.passed for r in reports) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prinn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("list", help="show the available experiments")
    sp.add_argument("name", nargs="?", help="show a single experiment")
    sp.set_defaults(func=cmd_list)

    sp = sub.add_parser("run", help="train, verify and write artifacts")
    sp.add_argument("config")
    sp.add_argument("--out", help="artifact directory (default <root>/<experiment>)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("verify", help="recompute the checks of an artifact directory")
    sp.add_argument("directory")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="run one config over several values of a key")
    sp.add_argument("config")
    sp.add_argument("--param", required=True, help="section.key, e.g. train.learning_rate")
    sp.add_argument("--values", required=True, help="comma-separated raw values")
    sp.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    sp.add_argument("--out", help="parent directory for the sweep runs")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingAborted as exc:
        print(f"training aborted ({exc.term or 'gradient'}): {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
