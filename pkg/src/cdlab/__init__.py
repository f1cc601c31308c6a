"""Numerical laboratory for demand models and their potential-outcome
counterparts: share maps, inversion, unit-level counterfactuals,
homogeneity diagnostics, extrapolation rules, and micro-data parallel
trends, plus a CSV/SVG-emitting CLI."""

from .demand import (
    Integration,
    ShareMap,
    gauss_hermite,
    mixed_logit,
    monte_carlo,
    plain_logit,
    share_jacobian,
    shares,
)
from .errors import (
    CdlabError,
    ConfigError,
    InsufficientData,
    IntegrationFailure,
    InversionFailure,
    NoConvergence,
    NonUnique,
    NotIdentified,
    RootNotBracketed,
    SimplexViolation,
)
from .inversion import InversionConfig, invert, structural_shock
from .population import PopulationSpec, sample_population, true_counterfactual
from .types import (
    Bundle,
    MarketDraw,
    MixingSpec,
    SharesVector,
    bundle,
    degenerate,
    finite_mixture,
    lognormal_mixing,
    normal_mixing,
    validate_shares,
)

__version__ = "0.1.0"

__all__ = [
    "Bundle",
    "CdlabError",
    "ConfigError",
    "InsufficientData",
    "Integration",
    "IntegrationFailure",
    "InversionConfig",
    "InversionFailure",
    "MarketDraw",
    "MixingSpec",
    "NoConvergence",
    "NonUnique",
    "NotIdentified",
    "PopulationSpec",
    "RootNotBracketed",
    "ShareMap",
    "SharesVector",
    "SimplexViolation",
    "bundle",
    "degenerate",
    "finite_mixture",
    "gauss_hermite",
    "invert",
    "lognormal_mixing",
    "mixed_logit",
    "monte_carlo",
    "normal_mixing",
    "plain_logit",
    "sample_population",
    "share_jacobian",
    "shares",
    "structural_shock",
    "true_counterfactual",
    "validate_shares",
]
