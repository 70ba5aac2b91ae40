"""Numerical analysis toolkit for multi-delay periodic hematopoiesis models.

Evaluates the averaged balance function and its pointwise envelopes, checks
the hypotheses of the existence/multiplicity results mechanically,
synthesizes production weights that force prescribed sign patterns,
integrates the delay equation by the method of steps, and locates periodic
solutions by Fourier collocation.
"""

from ._backend import available_backends, backend_name
from .analysis import (
    EnvelopeGrid,
    alpha,
    alternation_chain,
    beta,
    count_predicted_solutions,
    find_phi_brackets,
    phi,
    phi_component,
    scan_envelopes,
)
from .dde import History, Trajectory, integrate, rhs, rhs_log
from .model import (
    Model,
    ModelError,
    Term,
    TermClassification,
    classify,
    dump_model,
    load_model,
    section4_model_path,
)
from .orbits import (
    FourierSeries,
    PeriodicOrbit,
    collocation_residual,
    find_all_orbits,
    solve_orbit,
    validate_orbit,
)
from .periodic import PeriodicFn
from .theorems import (
    TheoremReport,
    check_existence,
    check_multiplicity,
    synthesize_lambdas,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "EnvelopeGrid", "FourierSeries", "History", "Model", "ModelError",
    "PeriodicFn", "PeriodicOrbit", "Term", "TermClassification",
    "TheoremReport", "Trajectory", "alpha", "alternation_chain",
    "available_backends", "backend_name", "beta", "check_existence",
    "check_multiplicity", "classify", "collocation_residual",
    "count_predicted_solutions", "dump_model", "find_all_orbits",
    "find_phi_brackets", "integrate", "load_model", "phi", "phi_component",
    "rhs", "rhs_log", "scan_envelopes", "section4_model_path", "solve_orbit",
    "synthesize_lambdas", "validate_orbit", "write_report",
]
