"""Bayesian inference for nonlinear state space models with a scalar AR(1) state.

The package implements an interweaved Gibbs sampler whose latent-state
updates use blocked elliptical slice sampling, together with the two
observation-model families it was built for: dynamic bivariate copulas
(including a Gumbel / Student-t mixture with asymmetric tail dependence)
and stochastic volatility with standardized skew Student-t errors.
"""

from ar1ess.ar1 import Ar1Params, Block, GaussianMoments
from ar1ess.engine import WHOLE, DrawsStore, PriorHyper, SamplerSpec, run_chain

__all__ = [
    "Ar1Params",
    "Block",
    "GaussianMoments",
    "WHOLE",
    "DrawsStore",
    "PriorHyper",
    "SamplerSpec",
    "run_chain",
]

__version__ = "0.1.0"
