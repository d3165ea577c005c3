"""Numerical laboratory for stationary mean-field games with congestion.

Solves the coupled value/density system on the periodic unit torus by
Newton-corrected homotopy continuation from an explicit starting
solution, and certifies computed states against the a priori structure
of the continuous problem (mass, energy identity, entropy, inverse
moments, monotonicity of the linearized operator).
"""

from .grid import ScalarField, TorusGrid, VectorField, read_field_csv, write_field_csv
from .hamiltonian import (HamiltonianModel, PotentialModel,
                          check_parameter_admissibility, coefficient_field)
from .solver import (ContinuationConfig, NewtonConfig, SolvePath,
                     continuation_run, newton_solve)
from .system import MFGModels, MFGState, assemble_jacobian, bilinear_form, residual
from .diagnostics import DiagnosticsReport, certify, estimate_suite

__all__ = [
    "TorusGrid", "ScalarField", "VectorField", "read_field_csv",
    "write_field_csv", "HamiltonianModel", "PotentialModel",
    "check_parameter_admissibility", "coefficient_field", "MFGModels",
    "MFGState", "residual", "assemble_jacobian", "bilinear_form",
    "NewtonConfig", "ContinuationConfig", "SolvePath", "newton_solve",
    "continuation_run", "DiagnosticsReport", "estimate_suite", "certify",
]

__version__ = "0.1.0"
