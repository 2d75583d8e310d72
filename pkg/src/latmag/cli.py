"""Command-line driver: ``latmag --mx 0.015 --b0-steps 96 --out sweep.csv``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from latmag.sweep import (
    EmptyWindow,
    SweepConfig,
    build_metadata,
    emit,
    hamiltonian_at,
    iter_sweep,
    run_gradient_family,
    summary_csv,
)

logger = logging.getLogger("latmag")

# config-file key -> argparse dest
_KEYS = {
    "nx": "nx",
    "ny": "ny",
    "mx": "mx",
    "b0-min": "b0_min",
    "b0-max": "b0_max",
    "b0-steps": "b0_steps",
    "grains": "grains",
    "k": "k",
    "delta0": "delta0",
    "seed": "seed",
    "out": "out",
    "format": "format",
    "dump-matrix": "dump_matrix",
    "workers": "workers",
    "solver": "solver",
    "rel-tol": "rel_tol",
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def read_config(path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key not in _KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[_KEYS[key]] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="latmag",
        description="Sweep the central field b0 and report QFI, position FI and low-lying spectrum.",
    )
    p.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    p.add_argument("--nx", type=int, default=31)
    p.add_argument("--ny", type=int, default=31)
    p.add_argument("--mx", type=_floats, default=[0.0], help="gradient, or comma list for a family")
    p.add_argument("--b0-min", type=float, default=0.05)
    p.add_argument("--b0-max", type=float, default=1.0)
    p.add_argument("--b0-steps", type=int, default=96)
    p.add_argument("--grains", type=_ints, default=[1, 3, 5, 10])
    p.add_argument("--k", type=int, default=10, help="number of eigenvalues to report")
    p.add_argument("--delta0", type=float, default=1e-4, help="initial finite-difference step in b0")
    p.add_argument("--rel-tol", type=float, default=1e-2, help="QFI step-halving tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default sweep.<format>)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--dump-matrix", default=None, metavar="PATH", help="write the first grid point's Hamiltonian")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--solver", choices=("sparse", "dense"), default="sparse")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        file_values = read_config(args.config)
        # re-parse with file values as defaults so explicit flags still win
        converted = {}
        for dest, raw in file_values.items():
            action = next(a for a in parser._actions if a.dest == dest)
            converted[dest] = action.type(raw) if action.type else raw
        parser.set_defaults(**converted)
        args = parser.parse_args(argv)
    return args


def config_from_args(args, m_x: float) -> SweepConfig:
    fmt = args.format
    return SweepConfig(
        n_x=args.nx,
        n_y=args.ny,
        m_x=m_x,
        b0_min=args.b0_min,
        b0_max=args.b0_max,
        b0_steps=args.b0_steps,
        grain_sizes=tuple(args.grains),
        k_eigenvalues=args.k,
        delta0=args.delta0,
        seed=args.seed,
        output_path=args.out or f"sweep.{fmt}",
        format=fmt,
        rel_tol=args.rel_tol,
        solver=args.solver,
        workers=args.workers,
    )


def _member_path(path: str, m_x: float) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}_mx{m_x:g}{p.suffix}"))


def _run_single(config: SweepConfig) -> bool:
    records = []
    try:
        for record in iter_sweep(config):
            records.append(record)
            logger.info("b0=%.6g status=%s qfi=%s", record.b0, record.status, record.qfi)
    except BaseException:
        if records:
            emit(records, config, build_metadata(config, records, complete=False))
            logger.error("sweep aborted; %d partial records written (marked incomplete)", len(records))
        raise
    emit(records, config, build_metadata(config, records, complete=True))
    return all(r.status == "ok" for r in records)


def _run_family(config: SweepConfig, m_values: list[float]) -> bool:
    family = run_gradient_family(config, m_values)
    for m, result in family.sweeps.items():
        member = replace(result.config, output_path=_member_path(config.output_path, m))
        emit(result.records, member, result.metadata)
    base = Path(config.output_path)
    summary = base.with_name(f"{base.stem}_summary{base.suffix}")
    if config.format == "csv":
        summary.write_text(summary_csv(family))
    else:
        rows = [
            {"b0": b0, "best_mx": best, "best_qfi": q, "qfi_by_mx": {f"{m:g}": v for m, v in values.items()}}
            for b0, best, q, values in family.summary
        ]
        summary.write_text(json.dumps({"skipped": {f"{m:g}": r for m, r in family.skipped.items()}, "rows": rows}, indent=1) + "\n")
    return family.ok


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ValueError, OSError) as exc:
        print(f"latmag: config error: {exc}", file=sys.stderr)
        return 2
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        base = config_from_args(args, args.mx[0])
        if args.dump_matrix:
            first = replace(base, m_x=max(args.mx)).grid()[0]
            hamiltonian_at(base.spec, first, max(args.mx)).dump(args.dump_matrix)
        if len(args.mx) == 1:
            ok = _run_single(base)
        else:
            ok = _run_family(base, args.mx)
    except (EmptyWindow, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return 2
    except KeyboardInterrupt:
        return 130
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
