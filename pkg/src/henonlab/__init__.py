"""Ground states of the mixed local-nonlocal Henon problem on the unit ball."""

from .discretization import (
    EnergyModel,
    functional_J,
    gagliardo_energy,
    gradient_energy,
    gradient_J,
    hardy_integral,
    henon_norm,
    lebesgue_norm,
    pairing,
)
from .errors import HenonError
from .experiments import (
    scaling_diagnostic,
    stability_sweep,
    stampacchia_diagnostic,
    strauss_check,
)
from .kernel import (
    KernelTable,
    angular_kernel,
    bbm_constant,
    build_kernel_table,
    dominated_constant,
    tail_weight,
)
from .mesh import DiscreteField, RadialMesh
from .problem import ProblemSpec, RegimeReport, classify_regime, critical_exponent, henon_critical_exponent
from .solver import GroundState, SolverOptions, minimize_rayleigh, rescale_to_solution, residual_norm
from .symmetry import SymmetryReport, find_alpha_star, second_variation_gap

__version__ = "0.1.0"

__all__ = [
    "DiscreteField",
    "EnergyModel",
    "GroundState",
    "HenonError",
    "KernelTable",
    "ProblemSpec",
    "RadialMesh",
    "RegimeReport",
    "SolverOptions",
    "SymmetryReport",
    "angular_kernel",
    "bbm_constant",
    "build_kernel_table",
    "classify_regime",
    "critical_exponent",
    "dominated_constant",
    "find_alpha_star",
    "functional_J",
    "gagliardo_energy",
    "gradient_J",
    "gradient_energy",
    "hardy_integral",
    "henon_critical_exponent",
    "henon_norm",
    "lebesgue_norm",
    "minimize_rayleigh",
    "pairing",
    "rescale_to_solution",
    "residual_norm",
    "scaling_diagnostic",
    "second_variation_gap",
    "stability_sweep",
    "stampacchia_diagnostic",
    "strauss_check",
    "tail_weight",
]
