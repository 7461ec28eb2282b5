"""Command-line interface: single-architecture runs, paradigm comparisons
and sensitivity sweeps, emitting CSV plus static SVG figures.

Exit codes: 0 success, 1 model/infeasibility error, 2 usage or config
error.  The mapping cache directory honours PARACOST_CACHE_DIR.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .arch import ArchError, preset, resolve_arch
from .mapper import EmptyMapspaceError
from .mapping import MapspaceLimits, MappingError
from .report import (COMPARE_COLUMNS, RUN_COLUMNS, SWEEP_COLUMNS, SWEEP_KINDS,
                     compare_rows, run_rows, sweep_rows, write_csv)
from .workload import WorkloadError, load_workload


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser, needs_arch: bool):
    if needs_arch:
        p.add_argument("--arch", required=True,
                       help="preset name (cha|ndp|pim) or architecture config path")
    p.add_argument("--workload", required=True,
                   help="bundled workload name (mobilenet|resnet|bert|dlrm) or layer file path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=1, help="mapspace sampling seed")
    p.add_argument("--budget", type=int, default=400,
                   help="sampled mapping candidates per layer")
    p.add_argument("--exhaustive-threshold", type=int, default=4096,
                   help="full enumeration below this factorization-space size")
    p.add_argument("--word-bits", type=int, default=None, help="override operand word size")
    p.add_argument("--jobs", type=int, default=1, help="parallel mapper processes")
    p.add_argument("--no-plots", action="store_true", help="emit CSV only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="paracost",
        description="Analytical latency/energy comparison of DNN accelerator paradigms")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate one workload on one architecture")
    _add_common(p, needs_arch=True)

    p = sub.add_parser("compare", help="evaluate one workload on all three presets")
    _add_common(p, needs_arch=False)

    p = sub.add_parser("sweep", help="sensitivity sweep on one architecture")
    p.add_argument("--kind", required=True, choices=SWEEP_KINDS)
    _add_common(p, needs_arch=True)
    return ap


def _limits(args) -> MapspaceLimits:
    return MapspaceLimits(max_candidates=args.budget, random_seed=args.seed,
                          exhaustive_threshold=args.exhaustive_threshold)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    arch = resolve_arch(args.arch, args.word_bits)
    layers = load_workload(args.workload)
    out = _outdir(args)
    rows = run_rows(layers, arch, _limits(args), jobs=args.jobs)
    csv_path = out / f"run_{arch.name}.csv"
    write_csv(csv_path, RUN_COLUMNS, rows)
    print(csv_path)
    if not args.no_plots and rows:
        from .plots import render_run
        for p in render_run(rows, out, f"run_{arch.name}"):
            print(p)
    return 0


def cmd_compare(args) -> int:
    archs = [preset(name, args.word_bits or 8) for name in ("cha", "ndp", "pim")]
    layers = load_workload(args.workload)
    out = _outdir(args)
    rows = compare_rows(layers, archs, _limits(args), jobs=args.jobs)
    csv_path = out / "compare.csv"
    write_csv(csv_path, COMPARE_COLUMNS, rows)
    print(csv_path)
    if not args.no_plots and rows:
        from .plots import render_run
        for p in render_run(rows, out, "compare"):
            print(p)
    return 0


def cmd_sweep(args) -> int:
    arch = resolve_arch(args.arch, args.word_bits)
    layers = load_workload(args.workload)
    out = _outdir(args)
    rows = sweep_rows(args.kind, layers, arch, _limits(args), jobs=args.jobs)
    csv_path = out / f"sweep_{args.kind}_{arch.name}.csv"
    write_csv(csv_path, SWEEP_COLUMNS, rows)
    print(csv_path)
    if not args.no_plots and rows:
        from .plots import render_sweep
        for p in render_sweep(rows, out, f"sweep_{args.kind}_{arch.name}"):
            print(p)
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "compare":
            return cmd_compare(args)
        return cmd_sweep(args)
    except (ArchError, WorkloadError, MappingError, ValueError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmptyMapspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
