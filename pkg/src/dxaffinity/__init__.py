"""Affinity-based measures of diagnostic test accuracy.

Analytic measures (Hellinger affinity, AUC, Youden index, overlap) for
parametric marker density pairs, Bayesian nonparametric estimation of the
same measures from data (Dirichlet process mixtures, with and without
covariates), and a simulation harness that checks the estimators against
brute-force truths.
"""

from .densities import (
    Beta,
    CovariateMap,
    Density,
    Exponential,
    GridDensity,
    Mixture,
    Normal,
    Standardization,
    TruncatedNormal,
    affine_transform,
    default_quadrature,
    eval_density,
    rescale_covariate,
    standardize,
)
from .errors import ConfigError, DataError, NumericError
from .measures import (
    LOWER_TAILED,
    UPPER_TAILED,
    ConditionalTestPair,
    LrIdentityResult,
    TestPair,
    YoudenResult,
    affinity,
    affinity_biexponential,
    affinity_binormal,
    affinity_bibeta,
    affinity_conditional,
    affinity_lr_identity_check,
    affinity_normalized,
    auc,
    auc_conditional,
    auc_mixture_normal,
    ovl,
    youden,
    youden_abs,
)
from .quadrature import GAUSS_LEGENDRE, SIMPSON, QuadratureSpec, integrate
from .splines import BSplineBasis, bspline_design

__version__ = "0.1.0"

__all__ = [
    "Beta",
    "BSplineBasis",
    "ConfigError",
    "ConditionalTestPair",
    "CovariateMap",
    "DataError",
    "Density",
    "Exponential",
    "GAUSS_LEGENDRE",
    "GridDensity",
    "LOWER_TAILED",
    "LrIdentityResult",
    "Mixture",
    "Normal",
    "NumericError",
    "QuadratureSpec",
    "SIMPSON",
    "Standardization",
    "TestPair",
    "TruncatedNormal",
    "UPPER_TAILED",
    "YoudenResult",
    "affine_transform",
    "affinity",
    "affinity_biexponential",
    "affinity_binormal",
    "affinity_bibeta",
    "affinity_conditional",
    "affinity_lr_identity_check",
    "affinity_normalized",
    "auc",
    "auc_conditional",
    "auc_mixture_normal",
    "bspline_design",
    "default_quadrature",
    "eval_density",
    "integrate",
    "ovl",
    "rescale_covariate",
    "standardize",
    "youden",
    "youden_abs",
]
