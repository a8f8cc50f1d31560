"""Spectral Galerkin toolkit for 2D stochastic Navier-Stokes with colored noise."""

from .ergodicity import (MCConfig, Model, Observable, bismut_gradient, derivative_flow,
                         finite_difference_gradient, gronwall_flow_check,
                         irreducibility_probe, noise_inverse_bound_check, semigroup_estimate,
                         sf_lipschitz_probe, simulate_u, time_average, tv_distance_proxy)
from .noise import (Coloring, PathSample, hs_integral_check, holder_exponent_estimate,
                    make_coloring, ou_sample_path, validate_range_condition)
from .nonlinearity import (TriadTable, B_apply, assemble_structure_constants,
                           assemble_torus_basis, b_bound_constant_probe, b_eval, load_table,
                           save_table, torus_table)
from .rng import Streams
from .solver import (BlowUpError, Cutoff, SolverConfig, apriori_lp_monitor,
                     apriori_sup_monitor, galerkin_convergence_probe, gronwall_comparator,
                     integrate, integrate_truncated, mild_residual, regularization_probe,
                     synthesize_control, verify_control)
from .spectral import (Spectrum, build_spectrum, fractional_apply, fractional_norm,
                       interpolation_check, semigroup_apply, smoothing_bound_check)

__version__ = "0.1.0"

__all__ = [
    "MCConfig",
    "Model",
    "Observable",
    "bismut_gradient",
    "derivative_flow",
    "finite_difference_gradient",
    "gronwall_flow_check",
    "irreducibility_probe",
    "semigroup_estimate",
    "sf_lipschitz_probe",
    "simulate_u",
    "time_average",
    "tv_distance_proxy",
    "Coloring",
    "PathSample",
    "hs_integral_check",
    "holder_exponent_estimate",
    "make_coloring",
    "noise_inverse_bound_check",
    "ou_sample_path",
    "validate_range_condition",
    "TriadTable",
    "B_apply",
    "assemble_structure_constants",
    "assemble_torus_basis",
    "b_bound_constant_probe",
    "b_eval",
    "load_table",
    "save_table",
    "torus_table",
    "Streams",
    "BlowUpError",
    "Cutoff",
    "SolverConfig",
    "apriori_lp_monitor",
    "apriori_sup_monitor",
    "galerkin_convergence_probe",
    "gronwall_comparator",
    "integrate",
    "integrate_truncated",
    "mild_residual",
    "regularization_probe",
    "synthesize_control",
    "verify_control",
    "Spectrum",
    "build_spectrum",
    "fractional_apply",
    "fractional_norm",
    "interpolation_check",
    "semigroup_apply",
    "smoothing_bound_check",
]
