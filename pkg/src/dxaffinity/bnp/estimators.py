"""Fitting front ends: functional wrappers and sklearn-style estimators."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..densities import CovariateMap, rescale_covariate, standardize
from ..errors import ConfigError, DataError
from ..splines import BSplineBasis
from .config import BaseMeasureHyper, McmcConfig
from .predictive import PosteriorPredictiveDensity, build_predictive
from .sampler import run_chain
from .summaries import posterior_mean_density

_MIN_N_DPM = 10
_MIN_N_DDP = 20

# cubic basis with no interior knots (plain Bernstein); knots can be
# added through the basis argument when the mean structure needs them
DEFAULT_INTERIOR_KNOTS: tuple[float, ...] = ()


def _check_responses(ys, minimum: int) -> np.ndarray:
    ys = np.asarray(ys, dtype=float).ravel()
    if ys.size < minimum:
        raise DataError(f"need at least {minimum} observations, got {ys.size}")
    if not np.isfinite(ys).all():
        raise DataError("responses contain non-finite values")
    return ys


def _assemble(draws, n_obs, alpha, hyper, std, seed, basis, n_fresh):
    # one child stream per kept draw keeps the G_0 attachments
    # independent of how many draws precede them
    children = np.random.SeedSequence(seed).spawn(len(draws))
    return [
        build_predictive(
            draw, n_obs, alpha, hyper, std,
            np.random.default_rng(child), basis=basis, n_fresh=n_fresh,
        )
        for draw, child in zip(draws, children)
    ]


def fit_dpm(
    ys,
    cfg: McmcConfig | None = None,
    hyper: BaseMeasureHyper | None = None,
    alpha: float = 1.0,
    n_fresh: int = 50,
) -> list[PosteriorPredictiveDensity]:
    """Fit the unconditional DP mixture and return per-iterate predictives
    on the original scale."""
    cfg = cfg or McmcConfig()
    ys = _check_responses(ys, _MIN_N_DPM)
    std = standardize(ys)
    hyper = hyper or BaseMeasureHyper.default(1)
    if hyper.dim != 1:
        raise ConfigError(f"unconditional model needs p=1 hyper, got p={hyper.dim}")
    X = np.ones((ys.size, 1))
    draws = run_chain(X, std.z, cfg, hyper, alpha)
    # predictive seed derived from the chain seed, offset to stay
    # disjoint from the chain's own SeedSequence children
    return _assemble(draws, ys.size, alpha, hyper, std, (cfg.seed, 1), None, n_fresh)


def fit_ddp(
    ys,
    xs,
    cfg: McmcConfig | None = None,
    hyper: BaseMeasureHyper | None = None,
    basis: BSplineBasis | None = None,
    alpha: float = 1.0,
    n_fresh: int = 50,
) -> list[PosteriorPredictiveDensity]:
    """Fit the covariate-dependent mixture (B-spline cluster means).

    Covariates must already sit in [-1, 1]; rescale observed units with
    rescale_covariate first and keep the map for evaluation.
    """
    cfg = cfg or McmcConfig()
    ys = _check_responses(ys, _MIN_N_DDP)
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size != ys.size:
        raise DataError(f"{ys.size} responses but {xs.size} covariates")
    if not np.isfinite(xs).all():
        raise DataError("covariates contain non-finite values")
    if xs.min() < -1.0 or xs.max() > 1.0:
        raise ConfigError("covariates must lie in [-1, 1]; apply rescale_covariate first")
    basis = basis or BSplineBasis(interior_knots=DEFAULT_INTERIOR_KNOTS)
    std = standardize(ys)
    hyper = hyper or BaseMeasureHyper.default(basis.dim)
    if hyper.dim != basis.dim:
        raise ConfigError(f"hyper dimension {hyper.dim} != basis dimension {basis.dim}")
    X = basis.design_matrix(xs)
    draws = run_chain(X, std.z, cfg, hyper, alpha)
    return _assemble(draws, ys.size, alpha, hyper, std, (cfg.seed, 1), basis, n_fresh)


class DpmDensity(BaseEstimator):
    """Unconditional DP mixture density estimator.

    Parameters mirror McmcConfig plus the base-measure settings; fitted
    state lands in draws_ (per-iterate predictive mixtures) and
    standardization_.
    """

    def __init__(
        self,
        burn_in: int = 2000,
        thin: int = 40,
        n_keep: int = 300,
        m_aux: int = 3,
        seed: int = 0,
        ig_shape: float = 1.0,
        ig_scale: float = 0.02,
        iwish_df: float | None = None,
        literal_prior: bool = False,
        alpha: float = 1.0,
        n_fresh: int = 50,
    ):
        self.burn_in = burn_in
        self.thin = thin
        self.n_keep = n_keep
        self.m_aux = m_aux
        self.seed = seed
        self.ig_shape = ig_shape
        self.ig_scale = ig_scale
        self.iwish_df = iwish_df
        self.literal_prior = literal_prior
        self.alpha = alpha
        self.n_fresh = n_fresh

    def _mcmc_config(self) -> McmcConfig:
        return McmcConfig(
            burn_in=self.burn_in, thin=self.thin, n_keep=self.n_keep,
            m_aux=self.m_aux, seed=self.seed,
        )

    def _hyper(self, p: int) -> BaseMeasureHyper:
        if self.literal_prior:
            return BaseMeasureHyper.default(p, literal_prior=True)
        return BaseMeasureHyper(
            np.zeros(p), np.eye(p),
            ig_shape=self.ig_shape, ig_scale=self.ig_scale,
            iwish_df=0.0 if self.iwish_df is None else float(self.iwish_df),
        )

    def fit(self, X, y=None):
        ys = np.asarray(X, dtype=float)
        if ys.ndim == 2:
            if ys.shape[1] != 1:
                raise DataError(f"expected a single marker column, got shape {ys.shape}")
            ys = ys[:, 0]
        self.draws_ = fit_dpm(
            ys, self._mcmc_config(), self._hyper(1),
            alpha=self.alpha, n_fresh=self.n_fresh,
        )
        self.standardization_ = self.draws_[0].std
        self.n_obs_ = ys.size
        return self

    def posterior_mean_density(self, grid) -> np.ndarray:
        self._check_fitted()
        return posterior_mean_density(self.draws_, grid)

    def _check_fitted(self) -> None:
        if not hasattr(self, "draws_"):
            raise ConfigError("estimator is not fitted")


class DdpDensity(DpmDensity):
    """Conditional density estimator: cluster means regress on a cubic
    B-spline basis of one covariate (single-weights DDP)."""

    def __init__(
        self,
        interior_knots: tuple[float, ...] = DEFAULT_INTERIOR_KNOTS,
        burn_in: int = 2000,
        thin: int = 40,
        n_keep: int = 300,
        m_aux: int = 3,
        seed: int = 0,
        ig_shape: float = 1.0,
        ig_scale: float = 0.02,
        iwish_df: float | None = None,
        literal_prior: bool = False,
        alpha: float = 1.0,
        n_fresh: int = 50,
    ):
        super().__init__(
            burn_in=burn_in, thin=thin, n_keep=n_keep, m_aux=m_aux, seed=seed,
            ig_shape=ig_shape, ig_scale=ig_scale, iwish_df=iwish_df,
            literal_prior=literal_prior, alpha=alpha, n_fresh=n_fresh,
        )
        self.interior_knots = interior_knots

    def fit(self, X, y=None):
        xs = np.asarray(X, dtype=float)
        if xs.ndim == 2:
            if xs.shape[1] != 1:
                raise DataError(f"expected a single covariate column, got shape {xs.shape}")
            xs = xs[:, 0]
        if y is None:
            raise DataError("DdpDensity.fit requires responses y")
        ys = np.asarray(y, dtype=float).ravel()
        x01, cmap = rescale_covariate(xs)
        basis = BSplineBasis(interior_knots=tuple(self.interior_knots))
        self.draws_ = fit_ddp(
            ys, x01, self._mcmc_config(), self._hyper(basis.dim), basis,
            alpha=self.alpha, n_fresh=self.n_fresh,
        )
        self.standardization_ = self.draws_[0].std
        self.covariate_map_ = cmap
        self.basis_ = basis
        self.n_obs_ = ys.size
        return self

    def to_unit(self, x_original) -> np.ndarray:
        """Map covariates in observed units onto the spline domain."""
        self._check_fitted()
        cmap: CovariateMap = self.covariate_map_
        return np.atleast_1d(cmap.forward(x_original))

    def posterior_mean_density(self, grid, x: float | None = None) -> np.ndarray:
        self._check_fitted()
        if x is None:
            raise ConfigError("conditional estimator needs a covariate value")
        return posterior_mean_density(self.draws_, grid, x=float(x))
