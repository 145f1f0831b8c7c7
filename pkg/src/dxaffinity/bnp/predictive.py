"""Posterior predictive densities assembled from chain snapshots.

Per kept iterate the predictive over a new observation is a normal
mixture: each occupied cluster contributes weight n_j / (n + alpha),
and the remaining alpha / (n + alpha) goes to the G_0 predictive, which
is approximated by `n_fresh` Monte Carlo draws from the iterate's base
measure. Components live on the standardized scale; evaluation applies
the stored location-scale record, so measures computed downstream see
both arms on the shared original scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..densities import Mixture, Normal, Standardization
from ..errors import ConfigError
from ..splines import BSplineBasis
from .config import BaseMeasureHyper
from .sampler import ChainDraw

_INV_SQRT_2PI = 0.3989422804014327


@dataclass(frozen=True)
class PosteriorPredictiveDensity:
    """One MCMC iterate's predictive mixture.

    weights/coefs/sigmas stack the occupied clusters first, then the
    fresh base-measure draws. `basis` is None for the unconditional
    model, where coefs has a single intercept column.
    """

    weights: np.ndarray  # (C,)
    coefs: np.ndarray    # (C, p)
    sigmas: np.ndarray   # (C,) component standard deviations, z scale
    std: Standardization
    basis: BSplineBasis | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ConfigError("predictive weights must sum to 1")
        if (w < 0).any() or (np.asarray(self.sigmas) <= 0).any():
            raise ConfigError("predictive needs nonnegative weights and positive sigmas")

    @property
    def conditional(self) -> bool:
        return self.basis is not None

    def _design(self, x: float | None) -> np.ndarray:
        if self.basis is None:
            if x is not None:
                raise ConfigError("unconditional predictive takes no covariate")
            return np.ones(1)
        if x is None:
            raise ConfigError("conditional predictive requires a covariate in [-1, 1]")
        return self.basis.design(float(x))

    def component_params(self, x: float | None = None):
        """(weights, means, sds) on the original marker scale."""
        row = self._design(x)
        mu_z = self.coefs @ row
        return (
            self.weights,
            self.std.location + self.std.scale * mu_z,
            self.std.scale * self.sigmas,
        )

    def as_mixture(self, x: float | None = None) -> Mixture:
        w, mu, sd = self.component_params(x)
        return Mixture(list(w), [Normal(m, s) for m, s in zip(mu, sd)])

    def pdf(self, ys, x: float | None = None):
        w, mu, sd = self.component_params(x)
        ys_arr = np.atleast_1d(np.asarray(ys, dtype=float))
        t = (ys_arr[None, :] - mu[:, None]) / sd[:, None]
        dens = (w / sd) @ (_INV_SQRT_2PI * np.exp(-0.5 * t * t))
        return dens if np.ndim(ys) else float(dens[0])


def build_predictive(
    draw: ChainDraw,
    n_obs: int,
    alpha: float,
    hyper: BaseMeasureHyper,
    std: Standardization,
    rng: np.random.Generator,
    basis: BSplineBasis | None = None,
    n_fresh: int = 50,
) -> PosteriorPredictiveDensity:
    """Attach n_fresh G_0 draws (under the iterate's beta0/Sigma0) to the
    occupied clusters and normalize the weights."""
    if n_fresh < 1:
        raise ConfigError(f"n_fresh must be >= 1, got {n_fresh}")
    k, p = draw.beta.shape
    denom = n_obs + alpha
    L0 = np.linalg.cholesky(draw.Sigma0)
    fresh_beta = draw.beta0[None, :] + rng.standard_normal((n_fresh, p)) @ L0.T
    fresh_sigma2 = hyper.ig_scale / rng.gamma(hyper.ig_shape, size=n_fresh)
    weights = np.concatenate(
        [draw.counts.astype(float) / denom, np.full(n_fresh, alpha / (n_fresh * denom))]
    )
    weights /= weights.sum()
    return PosteriorPredictiveDensity(
        weights=weights,
        coefs=np.vstack([draw.beta, fresh_beta]),
        sigmas=np.sqrt(np.concatenate([draw.sigma2, np.maximum(fresh_sigma2, 1e-12)])),
        std=std,
        basis=basis,
    )
