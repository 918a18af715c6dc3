"""Nodal geometry of Laplace eigenfunctions on grids.

Build a domain, solve or sample an eigenfunction, then measure what its
nodal set does: sign components and their inner radii, sign-volume balance
on balls centered along the zero set, doubling exponents on wavelength
balls, and capacity-based spectral bounds for single components.  The
sweep harness strings those together over a mode range and renders the
scaling plots.
"""

from .asymmetry import (
    AsymmetryRecord,
    DoublingScan,
    ScanSummary,
    check_prop42,
    clamp_growth,
    doubling_scan,
    elliptic_diagnostics,
    growth_exponent,
    scan_asymmetry,
    verify_positivity_bound,
    wavelength_ball_centers,
)
from .bessel import bessel_j, bessel_zeros
from .capacity import (
    alpha_scan,
    asym_alpha,
    build_cube_partition,
    capacity,
    check_isocapacity,
    check_mazya_poincare,
    local_rayleigh_min,
    solve_capacity,
    verify_2d_remark,
    verify_thm61,
)
from .config import ExperimentConfig, load_config, parse_config
from .domain import (
    CoefficientField,
    DomainSpec,
    Grid,
    ScalarField,
    build_grid,
    iter_rescaled,
    sample_closed_form,
    wavelength_rescale,
)
from .eigensolve import (
    EigenPair,
    assemble_operator,
    dirichlet_ground_value,
    lowest_eigenpairs,
    rayleigh_quotient,
)
from .errors import NodelabError
from .fieldio import read_field, save_field
from .harness import run_sweep
from .nodal import (
    NodalDecomposition,
    distance_transform,
    extract_nodal_domains,
    inner_radius,
    positivity_volume_in_ball,
)
from .powerlaw import PowerLawFit, fit_power_law
from .report import emit_report

__version__ = "0.1.0"

__all__ = [
    "AsymmetryRecord",
    "CoefficientField",
    "DomainSpec",
    "DoublingScan",
    "EigenPair",
    "ExperimentConfig",
    "Grid",
    "NodalDecomposition",
    "NodelabError",
    "PowerLawFit",
    "ScalarField",
    "ScanSummary",
    "alpha_scan",
    "assemble_operator",
    "asym_alpha",
    "bessel_j",
    "bessel_zeros",
    "build_cube_partition",
    "build_grid",
    "capacity",
    "check_isocapacity",
    "check_mazya_poincare",
    "check_prop42",
    "clamp_growth",
    "dirichlet_ground_value",
    "distance_transform",
    "doubling_scan",
    "elliptic_diagnostics",
    "emit_report",
    "extract_nodal_domains",
    "fit_power_law",
    "growth_exponent",
    "inner_radius",
    "iter_rescaled",
    "load_config",
    "local_rayleigh_min",
    "lowest_eigenpairs",
    "parse_config",
    "positivity_volume_in_ball",
    "rayleigh_quotient",
    "read_field",
    "run_sweep",
    "sample_closed_form",
    "save_field",
    "scan_asymmetry",
    "solve_capacity",
    "verify_2d_remark",
    "verify_positivity_bound",
    "verify_thm61",
    "wavelength_ball_centers",
    "wavelength_rescale",
]
