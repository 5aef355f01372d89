"""Linearized AC power flow in rectangular voltage coordinates.

The package solves for complex voltage perturbations around a nominal
profile, provides closed forms for distribution feeders (no-load nominal)
and lossless transmission grids (flat nominal, classical DC as a further
simplification), evaluates the exact quadratic terms every linear model
neglects together with a-priori bounds on them, and ships a rectangular-
coordinate Newton-Raphson solver as the nonlinear reference.
"""

from .caseio import dump_case, load_case, parse_case, save_case
from .distribution import (CouplingTerms, DecoupledEstimate,
                           ImpedanceDecomposition, complex_error_bound,
                           coupling_decomposition, decoupled_estimate,
                           impedance_decomposition, solve_distribution,
                           solve_no_current_closed_form)
from .errors import (CaseValidationError, InternalCheckError, RectpfError,
                     SolverError)
from .linearize import (LinearSolution, NominalOrigin, NominalVoltage,
                        PerturbationCoefficients, SolutionMethod,
                        SolveDiagnostics, assemble_coefficients,
                        compute_noload_voltage, flat_nominal,
                        linear_injection, real_block_matrix, solve_general,
                        solve_general_2n, solve_noload_closed_form)
from .netmodel import (AdmittancePartition, Branch, Bus, BusKind,
                       NetworkCase, PvSetpoint, SlackVoltage,
                       StructureDiagnosis, ZipLoad, build_admittance,
                       check_noload_structure, extract_shunts,
                       scale_power_injections)
from .newton import (InitialGuess, NewtonResult, NewtonSettings,
                     jacobian_check, solve_newton)
from .report import (CompareReport, RunReport, emit_compare, emit_check,
                     emit_report, run_check, run_compare, run_pipeline)
from .residuals import (BoundCheck, BoundVerification, ResidualReport,
                        complex_injection, injection_mismatch, max_row_norm,
                        nonlinear_mismatch, quadratic_residual, verify_bounds)
from .transmission import (FlatSolveConditions, LosslessSystem,
                           build_lossless_system, check_flat_conditions,
                           reactive_error_bound, solve_classical_dc,
                           solve_lossless_flat)

__version__ = "0.1.0"

__all__ = [
    "AdmittancePartition", "BoundCheck", "BoundVerification", "Branch",
    "Bus", "BusKind", "CaseValidationError", "CompareReport",
    "CouplingTerms", "DecoupledEstimate", "FlatSolveConditions",
    "ImpedanceDecomposition", "InitialGuess", "InternalCheckError",
    "LinearSolution", "LosslessSystem", "NetworkCase", "NewtonResult",
    "NewtonSettings", "NominalOrigin", "NominalVoltage",
    "PerturbationCoefficients", "PvSetpoint", "RectpfError",
    "ResidualReport", "RunReport", "SlackVoltage", "SolutionMethod",
    "SolveDiagnostics", "SolverError", "StructureDiagnosis", "ZipLoad",
    "assemble_coefficients", "build_admittance", "build_lossless_system",
    "check_flat_conditions", "check_noload_structure",
    "complex_error_bound", "complex_injection", "compute_noload_voltage",
    "coupling_decomposition", "decoupled_estimate", "dump_case",
    "emit_check", "emit_compare", "emit_report", "extract_shunts",
    "flat_nominal", "impedance_decomposition", "injection_mismatch",
    "jacobian_check", "linear_injection", "load_case", "max_row_norm",
    "nonlinear_mismatch", "parse_case", "quadratic_residual",
    "reactive_error_bound", "real_block_matrix", "run_check", "run_compare",
    "run_pipeline", "save_case", "scale_power_injections",
    "solve_classical_dc", "solve_distribution", "solve_general",
    "solve_general_2n", "solve_lossless_flat", "solve_newton",
    "solve_no_current_closed_form", "solve_noload_closed_form",
    "verify_bounds",
]
