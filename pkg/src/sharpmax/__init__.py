"""Sharp maximal L^p inequalities for supermartingales, 0 < p < 1.

Constants, special-function verification, exact simulation of the extremal
stopped Brownian motions, and closed-form sharpness chains.
"""
from .constants import (
    ConstantsBundle,
    alpha,
    constant_C,
    constant_c,
    constant_frak_c,
    constants_bundle,
    solve_p0,
    tail_integral_I1,
    tail_integral_I2,
)
from .errors import DivergenceError, DomainError
from .rng import SeedSpec
from .simulator import (
    MCEstimate,
    OutcomeBatch,
    SampleOutcome,
    StagedParams,
    Variant,
    mc_moment,
    sample_conditional_min,
    sample_mplus_tail,
    sample_outcome,
    sample_sigma,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ConstantsBundle", "alpha", "constant_C", "constant_c", "constant_frak_c",
    "constants_bundle", "solve_p0", "tail_integral_I1", "tail_integral_I2",
    "DivergenceError", "DomainError", "SeedSpec",
    "MCEstimate", "OutcomeBatch", "SampleOutcome", "StagedParams", "Variant",
    "mc_moment", "sample_conditional_min", "sample_mplus_tail", "sample_outcome",
    "sample_sigma", "simulate",
]
