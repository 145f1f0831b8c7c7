"""Sampler settings and base-measure hyperparameters."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)

# the hyperprior block is fixed: beta_0 ~ N(0, I), Sigma_0 ~ IWish(df, I)
BETA0_PRIOR_MEAN = 0.0
BETA0_PRIOR_COV = 1.0
IWISH_SCALE = 1.0


@dataclass(frozen=True)
class McmcConfig:
    """Chain schedule; total sweeps = burn_in + thin * n_keep."""

    burn_in: int = 2000
    thin: int = 40
    n_keep: int = 300
    m_aux: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("burn_in", "thin", "n_keep", "m_aux"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")

    @property
    def total_sweeps(self) -> int:
        return self.burn_in + self.thin * self.n_keep


@dataclass
class BaseMeasureHyper:
    """Base measure G_0 = N(beta0, Sigma0) x IG(ig_shape, ig_scale).

    beta0 and Sigma0 are state: the sampler updates them in place under
    beta_0 ~ N(0, I) and Sigma_0 ~ IWish(iwish_df, I) hyperpriors. The
    default second inverse-gamma parameter is the scale 1/50 = 0.02
    (prior mode 0.01 on standardized data, favoring component variances
    well below one); `literal_prior` switches to the literal (1, 50)
    pairing, whose prior mode is 25.
    """

    beta0: np.ndarray
    Sigma0: np.ndarray
    ig_shape: float = 1.0
    ig_scale: float = 0.02
    iwish_df: float = field(default=0.0)

    def __post_init__(self) -> None:
        self.beta0 = np.atleast_1d(np.asarray(self.beta0, dtype=float))
        self.Sigma0 = np.asarray(self.Sigma0, dtype=float)
        p = self.beta0.shape[0]
        if self.beta0.ndim != 1:
            raise ConfigError("beta0 must be a vector")
        if self.Sigma0.shape != (p, p):
            raise ConfigError(f"Sigma0 must be {p}x{p}, got {self.Sigma0.shape}")
        if not np.allclose(self.Sigma0, self.Sigma0.T, atol=1e-10):
            raise ConfigError("Sigma0 must be symmetric")
        try:
            np.linalg.cholesky(self.Sigma0)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("Sigma0 must be positive definite") from exc
        if not (np.isfinite(self.ig_shape) and self.ig_shape > 0):
            raise ConfigError(f"ig_shape must be > 0, got {self.ig_shape}")
        if not (np.isfinite(self.ig_scale) and self.ig_scale > 0):
            raise ConfigError(f"ig_scale must be > 0, got {self.ig_scale}")
        if self.iwish_df == 0.0:
            self.iwish_df = float(p + 2)
        if not np.isfinite(self.iwish_df) or self.iwish_df <= 0:
            raise ConfigError(f"iwish_df must be > 0, got {self.iwish_df}")
        if self.iwish_df <= p - 1:
            # improper prior: the conjugate update only runs once the
            # posterior degrees of freedom iwish_df + K exceed p - 1
            logger.warning(
                "inverse-Wishart df %.3g <= p - 1 = %d is improper; "
                "Sigma0 updates are skipped while the posterior df stays insufficient",
                self.iwish_df,
                p - 1,
            )

    @property
    def dim(self) -> int:
        return self.beta0.shape[0]

    def copy(self) -> "BaseMeasureHyper":
        return BaseMeasureHyper(
            self.beta0.copy(), self.Sigma0.copy(), self.ig_shape, self.ig_scale, self.iwish_df
        )

    @classmethod
    def default(cls, p: int, literal_prior: bool = False) -> "BaseMeasureHyper":
        if literal_prior:
            logger.warning(
                "literal prior selected: IG(1, 50) on component variances "
                "(prior mode 25) and inverse-Wishart df = 1"
            )
            return cls(np.zeros(p), np.eye(p), ig_shape=1.0, ig_scale=50.0, iwish_df=1.0)
        return cls(np.zeros(p), np.eye(p))
