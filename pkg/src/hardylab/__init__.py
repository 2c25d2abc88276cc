"""Numerical laboratory for capacity density, maximal functions, Hardy
inequalities, and Hausdorff contents on uniformly discretized domains."""

from .geometry import (
    Ball,
    DistanceFields,
    DomainSpec,
    GradientField,
    GridDomain,
    ScalarField,
    build_domain,
    distance_fields,
    domain_from_text,
    domain_to_text,
    doubling_profile,
    dyadic_layers,
    gradient_magnitude,
    gradient_values,
    p_energy,
)
from .capacity import (
    CapacityResult,
    CondenserProblem,
    cap_comparison_check,
    sobolev_capacity_ratio,
    solve_capacity,
)
from .maximal import MaximalQuery, restricted_maximal, telescoping_check
from .fatness import (
    FatnessProfile,
    fatness_profile,
    fatness_verdict,
    measure_density_check,
)
from .hardy import (
    AbsorptionTrace,
    absorption_beta,
    ball_average_check,
    boundary_poincare_check,
    fatness_from_pointwise_experiment,
    fractional_pointwise_check,
    hardy_certificate,
    integral_hardy_quotient,
    pointwise_hardy_check,
    test_family,
)
from .content import (
    ContentEstimate,
    complement_density_check,
    estimate_content,
    inner_density_check,
)
from .harness import EquivalenceReport, ExperimentConfig, run, verify

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
