"""Bayesian nonparametric estimation of marker densities and accuracy measures.

Dirichlet process mixtures of normal regressions, sampled with Neal's
auxiliary-parameter Gibbs scheme (Algorithm 8). The unconditional model
uses a constant design; the conditional model regresses cluster means on
a cubic B-spline basis of the covariate (a single-weights DDP).
"""

from .config import BaseMeasureHyper, McmcConfig
from .estimators import DdpDensity, DpmDensity, fit_ddp, fit_dpm
from .sampler import ChainDraw, DpmState, init_state, neal8_sweep, run_chain
from .predictive import PosteriorPredictiveDensity
from .summaries import (
    AccuracySummary,
    posterior_affinity,
    posterior_affinity_conditional,
    posterior_auc,
    posterior_mean_density,
    posterior_ovl,
    posterior_youden,
)

__all__ = [
    "AccuracySummary",
    "BaseMeasureHyper",
    "ChainDraw",
    "DdpDensity",
    "DpmDensity",
    "DpmState",
    "McmcConfig",
    "PosteriorPredictiveDensity",
    "fit_ddp",
    "fit_dpm",
    "init_state",
    "neal8_sweep",
    "posterior_affinity",
    "posterior_affinity_conditional",
    "posterior_auc",
    "posterior_mean_density",
    "posterior_ovl",
    "posterior_youden",
    "run_chain",
]
