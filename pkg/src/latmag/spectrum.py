"""Lowest eigenpairs with residual certification and a fixed global phase.

The lattice Hamiltonians here commute with the inversion (j, k) -> (N_x+1-j,
N_y+1-k), which in row-major order is the index reversal s -> n-1-s. When that
symmetry holds exactly, each parity sector is diagonalized separately so that
eigenvectors stay well defined even when an even and an odd level are
degenerate to 1e-10 (tunnel-split doublets at low field are common).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from latmag.hamiltonian import HamiltonianMatrix

RESIDUAL_TOL = 1e-10
DEGENERACY_RTOL = 1e-10
DEFAULT_K = 10


class SolverError(RuntimeError):
    """Eigensolver failed to converge or produced uncertified pairs."""


class DegenerateGroundState(RuntimeError):
    """Ground state is degenerate within the configured threshold."""

    def __init__(self, gap: float, threshold: float):
        super().__init__(f"ground-state gap {gap:.3e} below degeneracy threshold {threshold:.3e}")
        self.gap = gap
        self.threshold = threshold


@dataclass(frozen=True)
class EigenSolution:
    """Lowest eigenvalues (ascending) and the phase-fixed ground state.

    ``gap`` is E1 - E0 over the whole spectrum. ``sector_gap`` is the distance
    to the next level of the ground state's own parity (equal to ``gap`` when
    no symmetry was used); it is the gap that controls how well the ground
    state is defined and how strongly it responds to the field.
    """

    eigenvalues: np.ndarray
    ground_state: np.ndarray
    residual: float
    gap: float
    degeneracy_threshold: float = 0.0
    sector_gap: float | None = None
    parity: int | None = None

    @property
    def degenerate(self) -> bool:
        g = self.gap if self.sector_gap is None else self.sector_gap
        return g < self.degeneracy_threshold

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude component is real and positive."""
    i = int(np.argmax(np.abs(v)))
    c = v[i]
    if c == 0:
        return v
    out = v * (np.conj(c) / abs(c))
    out[i] = abs(out[i])
    return out


@lru_cache(maxsize=8)
def _start_vector(n: int) -> np.ndarray:
    # fixed start vector keeps ARPACK runs reproducible
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v.setflags(write=False)
    return v


@lru_cache(maxsize=8)
def parity_basis(n: int, parity: int) -> sp.csr_matrix:
    """Orthonormal basis (columns) of the even (+1) or odd (-1) subspace under s -> n-1-s."""
    half = n // 2
    s = np.arange(half)
    r = 2.0**-0.5
    rows = np.concatenate([s, n - 1 - s])
    cols = np.concatenate([s, s])
    vals = np.concatenate([np.full(half, r), np.full(half, parity * r)])
    m = half
    if parity == 1 and n % 2:
        rows = np.append(rows, half)
        cols = np.append(cols, half)
        vals = np.append(vals, 1.0)
        m += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))


def is_inversion_symmetric(h: HamiltonianMatrix) -> bool:
    m = h.matrix
    flipped = m[::-1, ::-1]
    return (m != flipped).nnz == 0


def _diagonalize(m, n_eig: int, method: str, v0=None):
    n = m.shape[0]
    n_eig = min(n_eig, n)
    if method == "dense" or n_eig >= n - 1:
        dense = m.toarray() if sp.issparse(m) else np.asarray(m)
        return sl.eigh(dense, subset_by_index=[0, n_eig - 1])
    if method != "sparse":
        raise ValueError(f"unknown method {method!r}")
    diag = m.diagonal().real
    radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
    sigma = float(np.min(diag - radius)) - 1.0
    if v0 is None or not np.any(v0):
        v0 = _start_vector(n)
    try:
        return sla.eigsh(m.tocsc(), k=n_eig, sigma=sigma, which="LM", v0=v0, tol=0)
    except sla.ArpackNoConvergence as exc:
        raise SolverError(f"ARPACK did not converge: {exc}") from exc


def solve_lowest(
    h: HamiltonianMatrix,
    k: int = DEFAULT_K,
    method: str = "sparse",
    tol: float = RESIDUAL_TOL,
    degeneracy_rtol: float = DEGENERACY_RTOL,
    v0: np.ndarray | None = None,
    symmetry: str = "auto",
    parity: int | None = None,
) -> EigenSolution:
    """Return the ``k`` lowest eigenvalues and the normalized ground state.

    ``method="dense"`` diagonalizes full blocks with LAPACK; ``"sparse"`` uses
    shift-invert Lanczos below the Gershgorin bound. ``symmetry="auto"`` splits
    into parity sectors when the matrix is exactly inversion symmetric and
    ``"none"`` never does. ``parity`` restricts the solve to one sector, which
    is how a ground-state branch is followed across nearby parameter values.
    """
    n = h.dimension
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    n_eig = min(max(k, 2), n)
    lo, hi = h.gershgorin_bounds()
    threshold = degeneracy_rtol * (hi - lo)

    use_sym = symmetry == "auto" and n > 2 and is_inversion_symmetric(h)
    if symmetry not in ("auto", "none"):
        raise ValueError(f"unknown symmetry mode {symmetry!r}")
    if parity is not None and not use_sym:
        raise ValueError("parity requested but the Hamiltonian has no inversion symmetry")

    if use_sym:
        sectors = (parity,) if parity is not None else (1, -1)
        values, vectors, labels = [], [], []
        for p in sectors:
            u = parity_basis(n, p)
            block = (u.T @ h.matrix @ u).tocsr()
            start = None if v0 is None else u.T @ v0
            w, v = _diagonalize(block, n_eig, method, start)
            values.append(w)
            vectors.append(u @ v)
            labels.append(np.full(w.size, p))
        w = np.concatenate(values)
        v = np.hstack(vectors)
        labels = np.concatenate(labels)
    else:
        w, v = _diagonalize(h.matrix, n_eig, method, v0)
        labels = np.zeros(w.size, dtype=int)

    order = np.argsort(w, kind="stable")[:n_eig]
    w = np.asarray(w[order], dtype=float)
    v = v[:, order]
    labels = labels[order]
    v /= np.linalg.norm(v, axis=0)

    res = np.linalg.norm(h.matrix @ v - v * w, axis=0)
    if np.any(res > tol * np.maximum(1.0, np.abs(w))):
        raise SolverError(f"eigenpair residual {res.max():.3e} exceeds tolerance {tol:.1e}")

    same = np.nonzero(labels[1:] == labels[0])[0]
    if same.size:
        sector_gap = float(w[same[0] + 1] - w[0])
    else:
        # not enough levels of this parity were requested; fall back to a wider sector solve
        sector_gap = _sector_gap(h, int(labels[0]), method) if use_sym else float(w[1] - w[0])
    return EigenSolution(
        eigenvalues=w[:k],
        ground_state=canonical_phase(v[:, 0]),
        residual=float(res.max()),
        gap=float(w[1] - w[0]) if w.size > 1 else np.inf,
        degeneracy_threshold=threshold,
        sector_gap=sector_gap,
        parity=int(labels[0]) if use_sym else None,
    )


def _sector_gap(h: HamiltonianMatrix, parity: int, method: str) -> float:
    u = parity_basis(h.dimension, parity)
    w, _ = _diagonalize((u.T @ h.matrix @ u).tocsr(), 2, method)
    w = np.sort(w)
    return float(w[1] - w[0])


def gap_profile(lambdas, solutions, sector: bool = False) -> tuple[list[tuple[float, float]], float]:
    """Gap along a parameter grid and the parameter where it is smallest.

    ``solutions`` holds EigenSolutions or bare gap values. With ``sector=True``
    the same-parity gap is used. Ties resolve to the smallest parameter value.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 2 or lambdas.size != len(solutions):
        raise ValueError("need at least two points with one solution each")

    def pick(s):
        if isinstance(s, EigenSolution):
            return s.sector_gap if sector and s.sector_gap is not None else s.gap
        return float(s)

    gaps = np.array([pick(s) for s in solutions])
    order = np.argsort(lambdas, kind="stable")
    lambdas, gaps = lambdas[order], gaps[order]
    i = int(np.argmin(gaps))  # first occurrence on ties
    return list(zip(lambdas.tolist(), gaps.tolist())), float(lambdas[i])
