"""Morse-type lattice energies: sums, fixed-density calculus and minimizers in 2D/3D."""

from .errors import (BracketingError, CapacityError, DegenerateBasisError, DivergenceError,
                     DomainError, LatticeForgeError, NonConvergenceError, TieError)
from .lattice import (LatticeBasis2, LatticeBasis3, LatticePoint, PeriodicConfig, ReducedParams2,
                      dual, enumerate_points, from_reduced_2d, hcp_config, named_lattice,
                      named_structure, reduce_2d, shortest_vector_length)
from .potentials import PotentialSpec, tail_majorant, value_sq
from .sums import (SumResult, SumTolerance, dual_energy_morse, energy_morse, energy_pair,
                   epstein_zeta, exp_sum, lattice_sum, theta)

__version__ = "0.1.0"

__all__ = [
    "BracketingError", "CapacityError", "DegenerateBasisError", "DivergenceError", "DomainError",
    "LatticeForgeError", "NonConvergenceError", "TieError",
    "LatticeBasis2", "LatticeBasis3", "LatticePoint", "PeriodicConfig", "ReducedParams2", "dual",
    "enumerate_points", "from_reduced_2d", "hcp_config", "named_lattice", "named_structure",
    "reduce_2d", "shortest_vector_length",
    "PotentialSpec", "tail_majorant", "value_sq",
    "SumResult", "SumTolerance", "dual_energy_morse", "energy_morse", "energy_pair",
    "epstein_zeta", "exp_sum", "lattice_sum", "theta",
]
