"""Discrete ferromagnetic thin films: stochastic thin lattices, finite-range
spin energies, exact min-cut ground states and surface-tension estimates."""

__version__ = "0.1.0"

from .energy import SpinConfig, energy, slice_energy
from .geometry import OrientedRect, Rect
from .groundstate import (build_cut_instance, build_potts_instance, maximal_minimizer, minimal_minimizer,
                          solve_mincut, solve_multistate, solve_volume_constrained)
from .kernel import DecayMajorant, Kernel
from .lattice import (DepositionParams, ThinLattice, generate_deposition, generate_layered, nearest_neighbors,
                      project_and_average, validate_admissibility)
from .rng import RNG_NAME
from .tension import CellProblemSpec, LatticeSource, cell_minimum, estimate_phi, sample_tension

__all__ = [
    "__version__", "RNG_NAME", "SpinConfig", "energy", "slice_energy", "OrientedRect", "Rect",
    "build_cut_instance", "build_potts_instance", "maximal_minimizer", "minimal_minimizer", "solve_mincut",
    "solve_multistate", "solve_volume_constrained", "DecayMajorant", "Kernel", "DepositionParams", "ThinLattice",
    "generate_deposition", "generate_layered", "nearest_neighbors", "project_and_average",
    "validate_admissibility", "CellProblemSpec", "LatticeSource", "cell_minimum", "estimate_phi", "sample_tension",
]
