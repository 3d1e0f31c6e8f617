"""Quench dynamics and local thermometry for coupled harmonic lattices."""

from .lattice import (
    CouplingTopology,
    LatticeError,
    LatticeSpec,
    assemble_total,
    build_interaction_potential,
    build_intra_potential,
    manhattan_distance,
    validate_stability,
)
from .gaussian import (
    CovarianceTrajectory,
    GaussianError,
    InstabilityError,
    NormalModeBasis,
    bures_distance,
    evolve,
    gaussian_fidelity,
    marginal,
    mean_energy,
    product_initial_state,
    propagator,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_covariance,
    williamson,
    williamson_from_potential,
)

__version__ = "0.1.0"
