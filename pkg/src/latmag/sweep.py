"""Parameter sweeps over the central field b0 and families over the gradient m_x."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from latmag import _kernels
from latmag.estimation import (
    DELTA_FLOOR,
    P_FLOOR,
    QFI_RTOL,
    fisher_information,
    grain_probabilities,
    make_partition,
    qfi_converged,
    site_probabilities,
)
from latmag.hamiltonian import HamiltonianMatrix, build_hamiltonian
from latmag.lattice import FieldProfile, LatticeSpec, ProfileError, sample_vector_potential, validate_profile
from latmag.spectrum import (
    DEGENERACY_RTOL,
    RESIDUAL_TOL,
    DegenerateGroundState,
    SolverError,
    solve_lowest,
)

logger = logging.getLogger(__name__)

DEFAULT_GRAINS = (1, 3, 5, 10)


class EmptyWindow(ValueError):
    """No admissible b0 remains after applying b0 >= m_x L."""


@dataclass(frozen=True)
class SweepConfig:
    n_x: int = 31
    n_y: int = 31
    m_x: float = 0.0
    b0_min: float = 0.05
    b0_max: float = 1.0
    b0_steps: int = 96
    grain_sizes: tuple = DEFAULT_GRAINS
    k_eigenvalues: int = 10
    delta0: float = 1e-4
    seed: int = 0
    output_path: str | None = None
    format: str = "csv"
    rel_tol: float = QFI_RTOL
    solver: str = "sparse"
    workers: int = 1

    def __post_init__(self):
        if not self.b0_min < self.b0_max:
            raise ValueError(f"need b0_min < b0_max, got {self.b0_min} >= {self.b0_max}")
        if self.b0_steps < 2:
            raise ValueError("b0_steps must be at least 2")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if not self.grain_sizes:
            raise ValueError("at least one grain size is required")
        object.__setattr__(self, "grain_sizes", tuple(int(g) for g in self.grain_sizes))
        side = min(self.n_x, self.n_y)
        bad = [g for g in self.grain_sizes if not 1 <= g <= side]
        if bad:
            raise ValueError(f"grain sizes {bad} outside 1..{side}")
        if not 1 <= self.k_eigenvalues <= self.n_x * self.n_y:
            raise ValueError(f"k_eigenvalues={self.k_eigenvalues} outside 1..{self.n_x * self.n_y}")

    @property
    def spec(self) -> LatticeSpec:
        return LatticeSpec(self.n_x, self.n_y)

    def effective_b0_min(self) -> float:
        return max(self.b0_min, self.m_x * self.spec.half_width)

    def grid(self) -> np.ndarray:
        lo = self.effective_b0_min()
        if lo >= self.b0_max:
            raise EmptyWindow(f"m_x={self.m_x}: admissible window [{lo}, {self.b0_max}] is empty")
        return np.linspace(lo, self.b0_max, self.b0_steps)


@dataclass
class SweepRecord:
    b0: float
    qfi: float | None = None
    fi: dict = field(default_factory=dict)
    ratio: dict = field(default_factory=dict)
    eigenvalues: tuple = ()
    gap: float | None = None
    sector_gap: float | None = None
    parity: int | None = None
    delta_used: float | None = None
    converged: bool = False
    status: str = "ok"
    message: str = ""


@dataclass
class SweepResult:
    config: SweepConfig
    records: list
    metadata: dict

    @property
    def ok(self) -> bool:
        return all(r.status == "ok" for r in self.records)

    def column(self, name: str) -> np.ndarray:
        """Numeric column by CSV name, NaN where unavailable."""
        cols = columns(self.config)
        i = cols.index(name)
        return np.array([_cells(r, self.config)[i] for r in self.records], dtype=float)


def hamiltonian_at(spec: LatticeSpec, b0: float, m_x: float) -> HamiltonianMatrix:
    profile = FieldProfile.centered(spec, b0, m_x)
    return build_hamiltonian(spec, sample_vector_potential(spec, profile))


def evaluate_point(config: SweepConfig, b0: float) -> SweepRecord:
    """All observables at one grid point; failures become a status, not an exception."""
    spec = config.spec
    record = SweepRecord(b0=float(b0))
    try:
        validate_profile(spec, FieldProfile.centered(spec, b0, config.m_x))
        center = solve_lowest(hamiltonian_at(spec, b0, config.m_x), k=config.k_eigenvalues, method=config.solver)
        record.eigenvalues = tuple(float(e) for e in center.eigenvalues)
        record.gap = center.gap
        if center.degenerate:
            raise DegenerateGroundState(center.gap, center.degeneracy_threshold)

        record.sector_gap = center.sector_gap
        record.parity = center.parity
        v0 = center.ground_state

        def ground(x):
            # follow the center's parity branch; the stencil may step delta/2
            # outside [m_x L, 1] and only the center is validated
            return solve_lowest(
                hamiltonian_at(spec, x, config.m_x), k=2, method=config.solver, v0=v0, parity=center.parity
            )

        est = qfi_converged(ground, b0, config.delta0, rel_tol=config.rel_tol)
        record.qfi = est.qfi
        record.delta_used = est.delta_used
        record.converged = est.converged
        p_lo = site_probabilities(est.lo.ground_state)
        p_hi = site_probabilities(est.hi.ground_state)
        for g in config.grain_sizes:
            part = make_partition(spec, g)
            f = fisher_information(grain_probabilities(p_lo, part), grain_probabilities(p_hi, part), est.delta_used)
            record.fi[g] = f
            record.ratio[g] = f / est.qfi if est.qfi > 0 else None
        if not est.converged:
            record.status = "not_converged"
            record.message = f"QFI unstable down to delta={est.delta_used:.3g}"
    except ProfileError as exc:
        record.status = f"invalid_{exc.reason}"
        record.message = str(exc)
    except DegenerateGroundState as exc:
        record.status = "degenerate"
        record.message = str(exc)
    except SolverError as exc:
        record.status = "solver_error"
        record.message = str(exc)
    if record.status != "ok":
        logger.warning("b0=%.6g: %s (%s)", b0, record.status, record.message)
    return record


def _evaluate(args):
    return evaluate_point(*args)


def iter_sweep(config: SweepConfig) -> Iterator[SweepRecord]:
    """Yield records in grid order; grid points may be computed by a process pool."""
    grid = config.grid()
    if grid[0] > config.b0_min:
        logger.info("b0_min raised from %g to m_x*L = %g", config.b0_min, grid[0])
    jobs = [(config, float(b)) for b in grid]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            yield from pool.map(_evaluate, jobs)
    else:
        for job in jobs:
            yield _evaluate(job)


def build_metadata(config: SweepConfig, records: list, complete: bool) -> dict:
    from latmag import __version__

    spec = config.spec
    effective = replace(config, b0_min=config.effective_b0_min())
    return {
        "package": "latmag",
        "version": __version__,
        "complete": complete,
        "n_records": len(records),
        "n_failed": sum(r.status != "ok" for r in records),
        "config": _config_dict(effective),
        "b0_min_requested": config.b0_min,
        "lattice_center": list(spec.center),
        "half_width": spec.half_width,
        "tolerances": {
            "residual_tol": RESIDUAL_TOL,
            "degeneracy_rtol": DEGENERACY_RTOL,
            "qfi_rel_tol": config.rel_tol,
            "delta_floor": DELTA_FLOOR,
            "p_floor": P_FLOOR,
        },
        "solver": config.solver,
        "kernel_backend": _kernels.BACKEND,
    }


def _config_dict(config: SweepConfig) -> dict:
    d = asdict(config)
    d["grain_sizes"] = list(config.grain_sizes)
    return d


def run_sweep(config: SweepConfig) -> SweepResult:
    records = list(iter_sweep(config))
    return SweepResult(config, records, build_metadata(config, records, complete=True))


@dataclass
class FamilyResult:
    sweeps: dict
    skipped: dict
    summary: list  # (b0, argmax m_x, max qfi, {m_x: qfi})

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.sweeps.values())


def run_gradient_family(config: SweepConfig, m_values) -> FamilyResult:
    """One sweep per gradient on a shared b0 grid, plus the per-b0 QFI maximizer.

    The shared grid starts at the largest m_x L among admissible members;
    members with an empty window are skipped.
    """
    m_values = [float(m) for m in m_values]
    skipped = {}
    members = []
    for m in m_values:
        try:
            replace(config, m_x=m).grid()
            members.append(m)
        except EmptyWindow as exc:
            skipped[m] = str(exc)
            logger.warning("skipping m_x=%g: %s", m, exc)
    if not members:
        raise EmptyWindow("no gradient in the family has an admissible b0 window")
    lo = max(replace(config, m_x=m).effective_b0_min() for m in members)
    sweeps = {m: run_sweep(replace(config, m_x=m, b0_min=lo)) for m in members}
    return FamilyResult(sweeps, skipped, summarize_family(sweeps))


def summarize_family(sweeps: dict) -> list:
    ms = list(sweeps)
    grids = [[r.b0 for r in sweeps[m].records] for m in ms]
    summary = []
    for i, b0 in enumerate(grids[0]):
        values = {m: sweeps[m].records[i].qfi for m in ms}
        valid = {m: q for m, q in values.items() if q is not None and sweeps[m].records[i].status == "ok"}
        if valid:
            best = max(valid, key=lambda m: (valid[m], -m))
            summary.append((b0, best, valid[best], values))
        else:
            summary.append((b0, None, None, values))
    return summary


def columns(config: SweepConfig) -> list[str]:
    gs = config.grain_sizes
    return (
        ["b0", "qfi"]
        + [f"fi_g{g}" for g in gs]
        + [f"r_g{g}" for g in gs]
        + [f"e{i}" for i in range(config.k_eigenvalues)]
        + ["gap", "delta_used", "status"]
    )


def _cells(record: SweepRecord, config: SweepConfig) -> list:
    eig = list(record.eigenvalues) + [None] * (config.k_eigenvalues - len(record.eigenvalues))
    return (
        [record.b0, record.qfi]
        + [record.fi.get(g) for g in config.grain_sizes]
        + [record.ratio.get(g) for g in config.grain_sizes]
        + eig
        + [record.gap, record.delta_used, record.status]
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    value = float(value)
    if not math.isfinite(value):
        return ""
    return f"{value:.17g}"


def _json_value(value):
    if value is None or isinstance(value, str):
        return value
    value = float(value)
    return value if math.isfinite(value) else None


def to_csv(records: list, config: SweepConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns(config))
    for r in records:
        writer.writerow([_fmt(c) for c in _cells(r, config)])
    return buf.getvalue()


def to_json(records: list, config: SweepConfig, metadata: dict) -> str:
    cols = columns(config)
    rows = [dict(zip(cols, (_json_value(c) for c in _cells(r, config)))) for r in records]
    return json.dumps({"metadata": metadata, "columns": cols, "records": rows}, indent=1) + "\n"


def metadata_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def emit(records: list, config: SweepConfig, metadata: dict, path=None, fmt: str | None = None) -> list[Path]:
    """Write records as CSV (plus a ``.meta.json`` sidecar) or as one JSON document."""
    if not records:
        raise ValueError("nothing to emit")
    fmt = fmt or config.format
    path = Path(path or config.output_path or f"sweep.{fmt}")
    try:
        if fmt == "csv":
            path.write_text(to_csv(records, config))
            meta = metadata_path(path)
            meta.write_text(json.dumps(metadata, indent=1, sort_keys=True) + "\n")
            return [path, meta]
        if fmt == "json":
            path.write_text(to_json(records, config, metadata))
            return [path]
    except OSError as exc:
        raise OSError(f"cannot write sweep output to {path}: {exc}") from exc
    raise ValueError(f"unknown format {fmt!r}")


def summary_csv(family: FamilyResult) -> str:
    ms = list(family.sweeps)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["b0", "best_mx", "best_qfi"] + [f"qfi_mx{m:g}" for m in ms])
    for b0, best, q, values in family.summary:
        writer.writerow([_fmt(b0), _fmt(best), _fmt(q)] + [_fmt(values[m]) for m in ms])
    return buf.getvalue()
