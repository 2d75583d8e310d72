"""Ground-state magnetometry with a charged particle on a finite square lattice."""

from latmag.lattice import (
    FieldProfile,
    LatticeSpec,
    ProfileError,
    VectorPotentialField,
    discrete_curl,
    field_magnitude,
    magnetic_length,
    sample_vector_potential,
    validate_profile,
)
from latmag.hamiltonian import (
    HamiltonianMatrix,
    apply,
    build_hamiltonian,
    hermiticity_defect,
    linear_index,
    site_of,
)
from latmag.spectrum import (
    DegenerateGroundState,
    EigenSolution,
    SolverError,
    gap_profile,
    solve_lowest,
)
from latmag.estimation import (
    GrainPartition,
    TwoLevelModel,
    cramer_rao_mc,
    fisher_information,
    grain_probabilities,
    make_partition,
    qfi_converged,
    qfi_from_fidelity,
    site_probabilities,
    two_level_qfi,
)

__version__ = "0.1.0"
