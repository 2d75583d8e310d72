"""Quantum and classical Fisher information for ground-state field estimation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from latmag import _kernels
from latmag.lattice import LatticeSpec
from latmag.spectrum import DegenerateGroundState, EigenSolution

logger = logging.getLogger(__name__)

NORM_TOL = 1e-8
P_FLOOR = 1e-14
SKIPPED_SLOPE_WARN = 1e-10
DELTA0 = 1e-4
DELTA_FLOOR = 1e-7
QFI_RTOL = 1e-2


def _unit(psi, name: str) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{name} is not normalized (norm {norm:.12g})")
    return psi / norm


def infidelity(psi_a, psi_b) -> float:
    """1 - |<a|b>| for unit vectors, evaluated as half the squared distance after phase alignment.

    The distance form keeps relative precision when the states are nearly equal,
    where 1 - |<a|b>| itself would cancel catastrophically.
    """
    a = _unit(psi_a, "psi_a")
    b = _unit(psi_b, "psi_b")
    overlap = np.vdot(a, b)
    mag = abs(overlap)
    if mag == 0.0:
        return 1.0
    diff = a - (np.conj(overlap) / mag) * b
    return 0.5 * float(np.vdot(diff, diff).real)


def qfi_from_fidelity(psi_lo, psi_hi, delta: float) -> float:
    """Pure-state QFI 8 (1 - |<psi_lo|psi_hi>|) / delta**2 for states ``delta`` apart."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return 8.0 * infidelity(psi_lo, psi_hi) / delta**2


@dataclass(frozen=True)
class QFIEstimate:
    qfi: float
    delta_used: float
    converged: bool
    lo: object  # solution (or bare state) at lambda - delta/2
    hi: object  # solution (or bare state) at lambda + delta/2
    history: tuple = ()


def _state(sol):
    if isinstance(sol, EigenSolution):
        if sol.degenerate:
            raise DegenerateGroundState(sol.gap, sol.degeneracy_threshold)
        return sol.ground_state
    return np.asarray(sol)


def qfi_converged(
    ground_state: Callable[[float], object],
    lam: float,
    delta0: float = DELTA0,
    rel_tol: float = QFI_RTOL,
    floor: float = DELTA_FLOOR,
) -> QFIEstimate:
    """QFI at ``lam`` from the symmetric pair lam +- delta/2, halving delta until stable.

    ``ground_state(x)`` returns an :class:`EigenSolution` or a bare unit vector.
    Stops when two successive estimates agree to ``rel_tol`` or delta would go
    below ``floor``; the last estimate is returned.
    """
    if not delta0 > 0:
        raise ValueError("delta0 must be positive")
    delta = delta0
    history = []
    prev = None
    while True:
        lo = ground_state(lam - 0.5 * delta)
        hi = ground_state(lam + 0.5 * delta)
        q = qfi_from_fidelity(_state(lo), _state(hi), delta)
        history.append((delta, q))
        if prev is not None and abs(q - prev) <= rel_tol * max(abs(q), abs(prev)):
            return QFIEstimate(q, delta, True, lo, hi, tuple(history))
        if delta / 2 < floor:
            return QFIEstimate(q, delta, False, lo, hi, tuple(history))
        prev = q
        delta /= 2


def site_probabilities(psi) -> np.ndarray:
    """|psi_s|^2 for every site in linear order."""
    psi = _unit(psi, "psi")
    p = psi.real**2 + psi.imag**2
    return p / p.sum()


@dataclass(frozen=True)
class GrainPartition:
    """Disjoint g x g blocks anchored at site (1, 1); far-edge blocks are truncated."""

    g: int
    n_x: int
    n_y: int
    labels: np.ndarray  # grain id per site, linear order

    @property
    def blocks_x(self) -> int:
        return -(-self.n_x // self.g)

    @property
    def blocks_y(self) -> int:
        return -(-self.n_y // self.g)

    @property
    def n_grains(self) -> int:
        return self.blocks_x * self.blocks_y

    @property
    def grains(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(np.bincount(self.labels, minlength=self.n_grains))[:-1]
        return np.split(order, bounds)


def make_partition(spec: LatticeSpec, g: int) -> GrainPartition:
    if not 1 <= g <= min(spec.n_x, spec.n_y):
        raise ValueError(f"grain size {g} outside 1..{min(spec.n_x, spec.n_y)}")
    k, j = np.divmod(np.arange(spec.dimension), spec.n_x)
    blocks_x = -(-spec.n_x // g)
    labels = (k // g) * blocks_x + j // g
    labels.setflags(write=False)
    return GrainPartition(g, spec.n_x, spec.n_y, labels)


def grain_probabilities(p, partition: GrainPartition) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != partition.labels.shape:
        raise ValueError("probability vector does not match the partition's lattice")
    return _kernels.grain_sums(p, partition.labels, partition.n_grains)


@dataclass(frozen=True)
class FisherTerms:
    value: float
    skipped_mass: float
    skipped_max_slope: float


def fisher_terms(p_lo, p_hi, delta: float, p_floor: float = P_FLOOR) -> FisherTerms:
    p_lo = np.asarray(p_lo, dtype=float)
    p_hi = np.asarray(p_hi, dtype=float)
    if p_lo.shape != p_hi.shape:
        raise ValueError("distributions have different supports")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    slope = (p_hi - p_lo) / delta
    mid = 0.5 * (p_hi + p_lo)
    keep = mid >= p_floor
    value = float(np.sum(slope[keep] ** 2 / mid[keep]))
    skipped = ~keep
    return FisherTerms(
        value=value,
        skipped_mass=float(mid[skipped].sum()),
        skipped_max_slope=float(np.max(np.abs(slope[skipped]), initial=0.0)),
    )


def fisher_information(p_lo, p_hi, delta: float, p_floor: float = P_FLOOR) -> float:
    """Classical FI sum (dP)^2 / P from two distributions at lambda -+ delta/2.

    Outcomes whose midpoint probability is below ``p_floor`` are skipped; a
    warning is logged if any of them still moves faster than 1e-10 per unit lambda.
    """
    terms = fisher_terms(p_lo, p_hi, delta, p_floor)
    if terms.skipped_max_slope * delta > SKIPPED_SLOPE_WARN:
        logger.warning(
            "skipped outcomes (mass %.3e) carry |dP| up to %.3e", terms.skipped_mass, terms.skipped_max_slope * delta
        )
    return terms.value


@dataclass(frozen=True)
class TwoLevelModel:
    """H2 = omega0 * 1 - Delta(lambda) sigma_z + gamma(lambda) sigma_x."""

    omega0: float
    delta_fn: Callable[[float], float]
    gamma_fn: Callable[[float], float]
    ratio_derivative: Callable[[float], float] | None = None  # d(gamma/Delta)/dlambda

    def matrix(self, lam: float) -> np.ndarray:
        d, g = self.delta_fn(lam), self.gamma_fn(lam)
        return np.array([[self.omega0 - d, g], [g, self.omega0 + d]], dtype=complex)

    def eigenvalues(self, lam: float) -> tuple[float, float]:
        r = np.hypot(self.delta_fn(lam), self.gamma_fn(lam))
        return self.omega0 - r, self.omega0 + r

    def ground_state(self, lam: float) -> np.ndarray:
        _, v = np.linalg.eigh(self.matrix(lam))
        return v[:, 0]


def two_level_qfi(model: TwoLevelModel, lam: float, step: float = 1e-6) -> float:
    """16 (Delta / (h+ - h-))^4 [d(gamma/Delta)/dlambda]^2."""
    d = model.delta_fn(lam)
    if d == 0:
        raise ZeroDivisionError("closed form is singular where Delta = 0")
    h_minus, h_plus = model.eigenvalues(lam)
    if model.ratio_derivative is not None:
        dr = model.ratio_derivative(lam)
    else:
        ratio = lambda x: model.gamma_fn(x) / model.delta_fn(x)  # noqa: E731
        dr = (ratio(lam + step) - ratio(lam - step)) / (2 * step)
    return 16.0 * (d / (h_plus - h_minus)) ** 4 * dr**2


@dataclass(frozen=True)
class CramerRaoResult:
    variance: float
    bound: float
    estimates: np.ndarray
    pinned: int

    @property
    def efficiency(self) -> float:
        """variance / bound; 1 means the bound is saturated."""
        return self.variance / self.bound

    def consistent(self, slack: float = 0.1) -> bool:
        return self.variance >= self.bound * (1.0 - slack)


def mle_grid(true_lambda: float, m_samples: int, fisher: float, n: int = 401, width: float = 10.0) -> np.ndarray:
    """Uniform grid of ``n`` points spanning +- width/sqrt(M F) around the true value."""
    if not fisher > 0:
        raise ValueError("Fisher information must be positive to size the grid")
    half = width / np.sqrt(m_samples * fisher)
    return np.linspace(true_lambda - half, true_lambda + half, n)


def cramer_rao_mc(
    p_true,
    fisher: float,
    m_samples: int,
    grid,
    curves,
    true_lambda: float,
    trials: int = 200,
    seed: int = 0,
) -> CramerRaoResult:
    """Monte-Carlo mean-square error of the grid MLE against the bound 1/(M F).

    ``curves[i]`` is the outcome distribution at ``grid[i]``; each trial draws
    ``m_samples`` outcomes from ``p_true`` and maximizes the log-likelihood over
    the grid. Estimates stuck on a grid edge are counted in ``pinned``.
    """
    if not fisher > 0:
        raise ValueError("zero Fisher information: the parameter is not identifiable")
    grid = np.asarray(grid, dtype=float)
    curves = np.asarray(curves, dtype=float)
    p_true = np.asarray(p_true, dtype=float)
    if curves.shape != (grid.size, p_true.size):
        raise ValueError(f"curves shape {curves.shape} does not match grid and outcomes")
    if not grid[0] < true_lambda < grid[-1]:
        raise ValueError("grid does not bracket the true parameter")
    if np.ptp(curves, axis=0).max() == 0.0:
        raise ValueError("outcome distribution does not depend on the parameter")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    counts = rng.multinomial(m_samples, p_true / p_true.sum(), size=trials)
    observed = counts.sum(axis=0) > 0
    # clip keeps 0 * log(0) finite for outcomes a trial never drew
    log_curves = np.log(np.maximum(curves[:, observed], np.finfo(float).tiny))
    loglik = counts[:, observed] @ log_curves.T
    best = np.argmax(loglik, axis=1)
    estimates = grid[best]
    pinned = int(np.count_nonzero((best == 0) | (best == grid.size - 1)))
    if pinned:
        logger.warning("%d of %d estimates pinned at the grid edge; widen the grid", pinned, trials)
    variance = float(np.mean((estimates - true_lambda) ** 2))
    return CramerRaoResult(variance, 1.0 / (m_samples * fisher), estimates, pinned)
