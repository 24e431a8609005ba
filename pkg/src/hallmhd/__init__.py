"""Pseudospectral Hall-MHD on the periodic box.

Fourier-space fields and operators, Littlewood-Paley norms, the extended and
electron formulations of the Hall-MHD system, exponential and Picard time
integrators, and monitors for energy, smallness, consistency and blow-up
criteria.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .diagnostics import (
    DiagnosticsRecord,
    blowup_monitors,
    consistency_check,
    energy_report,
    smallness_check,
    sobolev_monitor,
)
from .equations import (
    ElectronState,
    ExtendedState,
    PhysParams,
    bilinear_Q,
    cancellation_residual,
    nonlinear_Q,
    q_a,
    q_b,
    rescale,
    rhs_electron,
    rhs_extended,
    state_convert,
    unscale,
)
from .initial import make_initial_state
from .littlewood_paley import (
    SHARP,
    SMOOTH,
    BesovSpec,
    BlockProfile,
    besov_norm,
    bony_decomposition,
    chemin_lerner_norm,
    dyadic_block,
    inequality_ratio,
    low_cutoff,
    sobolev_norm,
)
from .solver import (
    SolverConfig,
    Trajectory,
    friedrichs_project,
    galerkin_run,
    heat_propagate,
    mollify_data,
    picard_iterate,
    picard_iterate_split,
    run,
    step_etd2,
)
from .spectral import (
    Grid,
    SpectralField,
    curl,
    curl_inverse,
    differential,
    divergence,
    gradient,
    inner_product,
    laplacian,
    leray_project,
    pointwise_product,
    strict_deterministic,
    transform,
)

__all__ = [
    "__version__",
    "BesovSpec",
    "BlockProfile",
    "DiagnosticsRecord",
    "ElectronState",
    "ExtendedState",
    "Grid",
    "PhysParams",
    "SHARP",
    "SMOOTH",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "besov_norm",
    "bilinear_Q",
    "blowup_monitors",
    "bony_decomposition",
    "cancellation_residual",
    "chemin_lerner_norm",
    "consistency_check",
    "curl",
    "curl_inverse",
    "differential",
    "divergence",
    "dyadic_block",
    "energy_report",
    "friedrichs_project",
    "galerkin_run",
    "gradient",
    "heat_propagate",
    "inequality_ratio",
    "inner_product",
    "laplacian",
    "leray_project",
    "low_cutoff",
    "make_initial_state",
    "mollify_data",
    "nonlinear_Q",
    "picard_iterate",
    "picard_iterate_split",
    "pointwise_product",
    "q_a",
    "q_b",
    "rescale",
    "rhs_electron",
    "rhs_extended",
    "run",
    "smallness_check",
    "sobolev_monitor",
    "sobolev_norm",
    "state_convert",
    "step_etd2",
    "strict_deterministic",
    "transform",
    "unscale",
]
