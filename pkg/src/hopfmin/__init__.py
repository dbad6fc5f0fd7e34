"""Distortion and weighted Dirichlet energies of planar triangle-mesh maps:
evaluation, identity checks, quadratic-differential trajectories, and
boundary-value minimization."""

from .geometry import (BoundaryMap, Domain, GeometryError, TriangleMesh,
                       boundary_targets, make_domain, triangulate)
from .mapping import (DerivField, DiscreteMap, MapError, compose, derivatives,
                      evaluate, invert)
from .energy import (EnergyBreakdown, EnergyError, HolderReport, WeightFn,
                     holder_check, inverse_energy, mean_distortion,
                     weighted_dirichlet)
from .hopf import (HopfField, HopfResidual, IdentityReport,
                   StretchDerivatives, gamma_field, holomorphy_residual,
                   hopf_differential, hv_derivatives, integral_identity)
from .quaddiff import (FubiniReport, MinimalityReport, QuadraticDifferential,
                       Trajectory, fubini_check, minimality_check,
                       natural_parameter, phi_length, trace, vertical_family)
from .optimize import (ChoquetReport, EquivalenceReport, Functional, Problem,
                       SolveOptions, SolveReport, UniquenessReport,
                       choquet_boundary_map, choquet_experiment,
                       equivalence_check, harmonic_extension, minimize,
                       uniqueness_experiment)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryMap", "ChoquetReport", "DerivField", "DiscreteMap",
    "Domain", "EnergyBreakdown", "EnergyError", "EquivalenceReport",
    "FubiniReport", "Functional", "GeometryError", "HolderReport",
    "HopfField", "HopfResidual", "IdentityReport", "MapError",
    "MinimalityReport", "Problem", "QuadraticDifferential", "SolveOptions",
    "SolveReport", "StretchDerivatives", "Trajectory", "TriangleMesh",
    "UniquenessReport", "WeightFn", "boundary_targets",
    "choquet_boundary_map", "choquet_experiment", "compose", "derivatives",
    "equivalence_check", "evaluate", "fubini_check", "gamma_field",
    "harmonic_extension", "holder_check", "holomorphy_residual",
    "hopf_differential", "hv_derivatives", "integral_identity",
    "inverse_energy", "invert", "make_domain", "mean_distortion",
    "minimality_check", "minimize", "natural_parameter", "phi_length",
    "trace", "triangulate", "uniqueness_experiment", "vertical_family",
    "weighted_dirichlet",
]
