"""Kato toolkit: numerical potential theory for Brownian, stable and relativistic stable processes.

Layered Architecture:
- HIGH-LEVEL API: one call per question, shorthand text accepted everywhere
- MID-LEVEL API: module operations and builders for custom studies
- LOW-LEVEL API: types, kernels, quadrature and sampling primitives
"""

__version__ = "0.1.0"
__author__ = "Kato Toolkit Developers"
__description__ = "Kato, Dynkin and Green-tight classes of measures, with kernels, forms and Feynman-Kac runs"

# =============================================================================
# HIGH-LEVEL API: one call per question
# =============================================================================

from .api import (
    classify_measure,           # classify_measure("brownian:d=3", "lebesgue:ball(0,1)", p=2)
    potential_at,               # p-potential at a point
    sup_potential,              # searched sup of a p-potential
    kato_profile,               # local Kato profile r -> phi(r)
    b0,                         # B0 profile of a domain
    embedding_spectrum,         # singular values on bounded domains
    compactness_study,          # truncation study on unbounded domains
    feynman_kac_at,             # P_t^{-V} 1(x)
    ground_state_energy,        # decay rate of P_t^{-V} 1
    exit_time,                  # E_x[tau_D]
)

# =============================================================================
# MID-LEVEL API: module operations and builders
# =============================================================================

from .api import ClassificationBuilder
from .potentials import (
    ClassReport,
    MeasureClass,
    audit_implications,
    chen_condition_check,
    classify,
    local_kato_profile,
    p_potential,
    resolvent_ladder_profile,
    sup_p_potential,
    tail_profile,
)
from .forms import (
    assemble_local,
    assemble_nonlocal,
    dirichlet_eigenvalues,
    embedding_singular_values,
    stollmann_voigt_check,
    tightness_diagnostic,
    truncation_study,
)
from .stochastic import (
    PathConfig,
    exit_time_estimate,
    feynman_kac,
    fk_decay_rate,
    green_bounded_probe,
    lifetime_tail,
    sample_increment,
    schrodinger_sublevel_probe,
)
from .geometry import b0_profile, ball_mass, integrate

# =============================================================================
# LOW-LEVEL API: types and numerical building blocks
# =============================================================================

from .config import Config, MonteCarloConfig, SearchConfig, ToleranceConfig, get_config
from .geometry import DensityFunction, Domain, MeasureSpec, PotentialFunction, ProfileFunction
from .kernels import (
    ProcessSpec,
    green_kernel,
    heat_kernel,
    jump_kernel,
    psi,
    resolvent_kernel,
    self_test,
)
from .profiles import DecayProfile, Verdict
from .shorthand import describe, parse_domain, parse_measure, parse_potential, parse_process
from .utils import ToolkitError, setup_logging

# =============================================================================
# Clean Public API
# =============================================================================

__all__ = [
    # ===== HIGH-LEVEL API =====
    "classify_measure",
    "potential_at",
    "sup_potential",
    "kato_profile",
    "b0",
    "embedding_spectrum",
    "compactness_study",
    "feynman_kac_at",
    "ground_state_energy",
    "exit_time",

    # ===== MID-LEVEL API =====
    "ClassificationBuilder",
    "ClassReport",
    "MeasureClass",
    "audit_implications",
    "chen_condition_check",
    "classify",
    "local_kato_profile",
    "p_potential",
    "resolvent_ladder_profile",
    "sup_p_potential",
    "tail_profile",
    "assemble_local",
    "assemble_nonlocal",
    "dirichlet_eigenvalues",
    "embedding_singular_values",
    "stollmann_voigt_check",
    "tightness_diagnostic",
    "truncation_study",
    "PathConfig",
    "exit_time_estimate",
    "feynman_kac",
    "fk_decay_rate",
    "green_bounded_probe",
    "lifetime_tail",
    "sample_increment",
    "schrodinger_sublevel_probe",
    "b0_profile",
    "ball_mass",
    "integrate",

    # ===== LOW-LEVEL API =====
    "Config",
    "MonteCarloConfig",
    "SearchConfig",
    "ToleranceConfig",
    "get_config",
    "DensityFunction",
    "Domain",
    "MeasureSpec",
    "PotentialFunction",
    "ProfileFunction",
    "ProcessSpec",
    "green_kernel",
    "heat_kernel",
    "jump_kernel",
    "psi",
    "resolvent_kernel",
    "self_test",
    "DecayProfile",
    "Verdict",
    "describe",
    "parse_domain",
    "parse_measure",
    "parse_potential",
    "parse_process",
    "ToolkitError",
    "setup_logging",

    # ===== METADATA =====
    "__version__",
    "__author__",
    "__description__",
]
