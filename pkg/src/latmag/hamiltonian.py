"""Five-point finite-difference Hamiltonian of a charged particle on a hard-wall lattice.

Row-major site ordering: ``linear = (k - 1) * n_x + (j - 1)`` for the 1-based
position ket |j, k>. Hops whose source site is off the lattice are dropped and
the on-site term is left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from latmag import _kernels
from latmag.lattice import LatticeSpec, VectorPotentialField

MAX_DIMENSION = 4_000_000
MAX_DENSE_DIMENSION = 20_000


def linear_index(spec: LatticeSpec, j: int, k: int) -> int:
    if not (1 <= j <= spec.n_x and 1 <= k <= spec.n_y):
        raise IndexError(f"site ({j}, {k}) outside {spec.n_x}x{spec.n_y} lattice")
    return (k - 1) * spec.n_x + (j - 1)


def site_of(spec: LatticeSpec, linear: int) -> tuple[int, int]:
    if not 0 <= linear < spec.dimension:
        raise IndexError(f"linear index {linear} outside 0..{spec.dimension - 1}")
    k, j = divmod(int(linear), spec.n_x)
    return j + 1, k + 1


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Hermitian operator in units of J, stored as CSR."""

    matrix: sp.csr_matrix
    spec: LatticeSpec

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        if self.dimension > MAX_DENSE_DIMENSION:
            raise MemoryError(f"refusing dense copy of dimension {self.dimension}")
        return self.matrix.toarray()

    def entry(self, a: int, b: int) -> complex:
        return complex(self.matrix[a, b])

    def gershgorin_bounds(self) -> tuple[float, float]:
        """Interval containing the whole spectrum."""
        m = self.matrix
        diag = m.diagonal().real
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def dump(self, path) -> None:
        """Write ``row col re im`` triplets (0-based, row-major) for every stored entry."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with Path(path).open("w") as fh:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def build_hamiltonian(spec: LatticeSpec, potential: VectorPotentialField) -> HamiltonianMatrix:
    if potential.shape != (spec.n_y, spec.n_x):
        raise ValueError(f"potential shape {potential.shape} does not match lattice {(spec.n_y, spec.n_x)}")
    n = spec.dimension
    if n > MAX_DIMENSION:
        raise MemoryError(f"lattice dimension {n} exceeds guard {MAX_DIMENSION}")
    rows, cols, vals = _kernels.stencil_upper(potential.a_x, potential.a_y, spec.hopping_energy)
    off = rows != cols
    # lower triangle is the exact conjugate of the upper one
    all_rows = np.concatenate([rows, cols[off]])
    all_cols = np.concatenate([cols, rows[off]])
    all_vals = np.concatenate([vals, np.conj(vals[off])])
    matrix = sp.csr_matrix((all_vals, (all_rows, all_cols)), shape=(n, n))
    matrix.sort_indices()
    return HamiltonianMatrix(matrix, spec)


def hermiticity_defect(h) -> float:
    """max |H_ab - conj(H_ba)|; accepts a HamiltonianMatrix, sparse or dense matrix."""
    m = h.matrix if isinstance(h, HamiltonianMatrix) else h
    if sp.issparse(m):
        diff = (m - m.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def apply(h: HamiltonianMatrix, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != h.dimension:
        raise ValueError(f"vector length {v.shape[0]} does not match dimension {h.dimension}")
    return h.matrix @ v
