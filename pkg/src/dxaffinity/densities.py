"""Univariate density families and the numeric plumbing they share.

Every family exposes the same small surface: vectorized `pdf` and `cdf`,
seeded `sample`, a finite `padded_interval()` enclosing all but a
negligible sliver of mass (the default integration bounds), and a
`preferred_rule` steering quadrature toward Gauss-Legendre for
bounded-support families. Mixtures are closed under this surface, which
is what lets posterior-predictive draws flow through the same measure
code as textbook parametric pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import betaln, betainc, ndtr, ndtri, xlogy

from .errors import ConfigError, DataError
from .quadrature import GAUSS_LEGENDRE, SIMPSON, QuadratureSpec

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# Gaussian mass beyond 10 sd is below 1e-23; exponential needs the wider
# 30/rate cut for the same headroom because affinity integrands decay at
# half the density's rate.
_PAD_SDS = 10.0
_EXP_PAD_SDS = 30.0


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _finite_scalar(name: str, value) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value}")
    return value


def _positive_scalar(name: str, value) -> float:
    value = _finite_scalar(name, value)
    if value <= 0.0:
        raise ConfigError(f"{name} must be > 0, got {value}")
    return value


class Density:
    """Abstract evaluable univariate density."""

    def pdf(self, y):
        raise NotImplementedError

    def cdf(self, y):
        raise NotImplementedError

    def sample(self, n: int, seed) -> np.ndarray:
        raise NotImplementedError

    def padded_interval(self) -> tuple[float, float]:
        """Finite interval carrying all but a negligible sliver of mass."""
        raise NotImplementedError

    @property
    def preferred_rule(self) -> str:
        return SIMPSON

    def _pdf_scalar_ok(self, y, values):
        if np.isscalar(y) or np.ndim(y) == 0:
            return float(values)
        return values


@dataclass(frozen=True)
class Normal(Density):
    """Normal density with mean `mu` and standard deviation `sigma`."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _finite_scalar("mu", self.mu)
        _positive_scalar("sigma", self.sigma)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y - self.mu) / self.sigma
        out = np.exp(-0.5 * z * z) * (_INV_SQRT_2PI / self.sigma)
        return self._pdf_scalar_ok(y, out)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = ndtr((y - self.mu) / self.sigma)
        return self._pdf_scalar_ok(y, out)

    def sample(self, n: int, seed) -> np.ndarray:
        return _as_rng(seed).normal(self.mu, self.sigma, size=int(n))

    def padded_interval(self) -> tuple[float, float]:
        pad = _PAD_SDS * self.sigma
        return self.mu - pad, self.mu + pad


@dataclass(frozen=True)
class TruncatedNormal(Density):
    """Normal(mu, sigma) restricted to [a, b] and renormalized."""

    a: float
    b: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _finite_scalar("a", self.a)
        _finite_scalar("b", self.b)
        _finite_scalar("mu", self.mu)
        _positive_scalar("sigma", self.sigma)
        if not self.a < self.b:
            raise ConfigError(f"truncation requires a < b, got [{self.a}, {self.b}]")
        if self._mass() <= 0.0:
            raise ConfigError("truncation interval carries no numerical mass")

    def _alpha_beta(self) -> tuple[float, float]:
        return (self.a - self.mu) / self.sigma, (self.b - self.mu) / self.sigma

    def _mass(self) -> float:
        alpha, beta = self._alpha_beta()
        return float(ndtr(beta) - ndtr(alpha))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y - self.mu) / self.sigma
        out = np.exp(-0.5 * z * z) * (_INV_SQRT_2PI / (self.sigma * self._mass()))
        out = np.where((y >= self.a) & (y <= self.b), out, 0.0)
        return self._pdf_scalar_ok(y, out)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        alpha, _ = self._alpha_beta()
        lo = ndtr(alpha)
        inner = (ndtr((y - self.mu) / self.sigma) - lo) / self._mass()
        out = np.clip(inner, 0.0, 1.0)
        out = np.where(y < self.a, 0.0, np.where(y > self.b, 1.0, out))
        return self._pdf_scalar_ok(y, out)

    def sample(self, n: int, seed) -> np.ndarray:
        # inverse-CDF sampling keeps the draw count independent of the
        # acceptance rate, so streams stay aligned across parameter values
        alpha, _ = self._alpha_beta()
        lo = ndtr(alpha)
        u = _as_rng(seed).uniform(size=int(n))
        return self.mu + self.sigma * ndtri(lo + u * self._mass())

    def padded_interval(self) -> tuple[float, float]:
        return self.a, self.b

    @property
    def preferred_rule(self) -> str:
        return GAUSS_LEGENDRE


@dataclass(frozen=True)
class Beta(Density):
    """Beta density on (0, 1) with shape parameters `a`, `b`."""

    a: float
    b: float

    def __post_init__(self) -> None:
        _positive_scalar("a", self.a)
        _positive_scalar("b", self.b)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            logpdf = xlogy(self.a - 1.0, y) + xlogy(self.b - 1.0, 1.0 - y)
        out = np.where((y >= 0.0) & (y <= 1.0), np.exp(logpdf - betaln(self.a, self.b)), 0.0)
        return self._pdf_scalar_ok(y, out)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = betainc(self.a, self.b, np.clip(y, 0.0, 1.0))
        return self._pdf_scalar_ok(y, out)

    def sample(self, n: int, seed) -> np.ndarray:
        return _as_rng(seed).beta(self.a, self.b, size=int(n))

    def padded_interval(self) -> tuple[float, float]:
        return 0.0, 1.0

    @property
    def preferred_rule(self) -> str:
        return GAUSS_LEGENDRE


@dataclass(frozen=True)
class Exponential(Density):
    """Exponential density with rate `rate` (mean 1/rate) on [0, inf)."""

    rate: float

    def __post_init__(self) -> None:
        _positive_scalar("rate", self.rate)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y >= 0.0, self.rate * np.exp(-self.rate * np.maximum(y, 0.0)), 0.0)
        return self._pdf_scalar_ok(y, out)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y >= 0.0, -np.expm1(-self.rate * np.maximum(y, 0.0)), 0.0)
        return self._pdf_scalar_ok(y, out)

    def sample(self, n: int, seed) -> np.ndarray:
        return _as_rng(seed).exponential(1.0 / self.rate, size=int(n))

    def padded_interval(self) -> tuple[float, float]:
        return 0.0, _EXP_PAD_SDS / self.rate

    @property
    def preferred_rule(self) -> str:
        return GAUSS_LEGENDRE


@dataclass(frozen=True)
class Mixture(Density):
    """Finite mixture of densities with weights summing to 1."""

    weights: tuple[float, ...]
    components: tuple[Density, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.weights) != len(self.components) or not self.components:
            raise ConfigError("mixture needs matching, nonempty weights and components")
        w = np.asarray(self.weights)
        if (w < 0.0).any() or not np.isfinite(w).all():
            raise ConfigError("mixture weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights must sum to 1, got {w.sum()!r}")
        for c in self.components:
            if not isinstance(c, Density):
                raise ConfigError(f"mixture component {c!r} is not a Density")

    def pdf(self, y):
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr)
        for w, c in zip(self.weights, self.components):
            out += w * c.pdf(y_arr)
        return self._pdf_scalar_ok(y, out)

    def cdf(self, y):
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr)
        for w, c in zip(self.weights, self.components):
            out += w * c.cdf(y_arr)
        return self._pdf_scalar_ok(y, out)

    def sample(self, n: int, seed) -> np.ndarray:
        rng = _as_rng(seed)
        idx = rng.choice(len(self.components), size=int(n), p=np.asarray(self.weights))
        out = np.empty(int(n))
        for j, c in enumerate(self.components):
            mask = idx == j
            k = int(mask.sum())
            if k:
                out[mask] = c.sample(k, rng)
        return out

    def padded_interval(self) -> tuple[float, float]:
        los, his = zip(*(c.padded_interval() for c in self.components))
        return min(los), max(his)

    @property
    def preferred_rule(self) -> str:
        rules = {c.preferred_rule for c in self.components}
        return GAUSS_LEGENDRE if rules == {GAUSS_LEGENDRE} else SIMPSON


@dataclass(frozen=True)
class GridDensity(Density):
    """Piecewise-linear density on a fixed grid, zero outside it.

    Used for posterior summaries and externally supplied density curves;
    sampling is deliberately unsupported.
    """

    grid: np.ndarray
    values: np.ndarray
    normalize: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or grid.shape != values.shape:
            raise DataError("grid density needs matching 1-D grid and values with >= 2 points")
        if not np.isfinite(grid).all() or not np.isfinite(values).all():
            raise DataError("grid density entries must be finite")
        if (np.diff(grid) <= 0.0).any():
            raise DataError("grid must be strictly increasing")
        if (values < 0.0).any():
            raise DataError("grid density values must be nonnegative")
        total = float(np.trapezoid(values, grid))
        if self.normalize:
            if total <= 0.0:
                raise DataError("grid density has zero mass, cannot normalize")
            values = values / total
        elif abs(total - 1.0) > 1e-6:
            raise DataError(f"grid density integrates to {total!r}, not 1 (pass normalize=True)")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        cum = np.concatenate(
            ([0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(grid)))
        )
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    def pdf(self, y):
        y_arr = np.asarray(y, dtype=float)
        out = np.interp(y_arr, self.grid, self.values, left=0.0, right=0.0)
        return self._pdf_scalar_ok(y, out)

    def cdf(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        idx = np.clip(np.searchsorted(self.grid, y_arr, side="right") - 1, 0, self.grid.size - 2)
        x0 = self.grid[idx]
        dx = np.clip(y_arr - x0, 0.0, self.grid[idx + 1] - x0)
        f0 = self.values[idx]
        slope = (self.values[idx + 1] - f0) / (self.grid[idx + 1] - x0)
        # exact integral of the linear interpolant within the segment
        out = self._cum[idx] + f0 * dx + 0.5 * slope * dx * dx
        out = np.where(y_arr < self.grid[0], 0.0, np.where(y_arr > self.grid[-1], self._cum[-1], out))
        out = np.minimum(out, 1.0)
        return self._pdf_scalar_ok(y, out.reshape(np.shape(y)))

    def sample(self, n: int, seed) -> np.ndarray:
        raise ConfigError("grid densities do not support sampling")

    def padded_interval(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])


def eval_density(d: Density, y):
    """Evaluate a density at point(s) `y`; convenience alias for `d.pdf(y)`."""
    return d.pdf(y)


def default_quadrature(*densities: Density, n_points: int = 4096) -> QuadratureSpec:
    """Build the default integration spec for one or more densities.

    Bounds are the union of the densities' padded intervals. The rule is
    Gauss-Legendre only when every density prefers it (bounded-support
    parametric families); otherwise composite Simpson.
    """
    if not densities:
        raise ConfigError("default_quadrature needs at least one density")
    los, his = zip(*(d.padded_interval() for d in densities))
    rules = {d.preferred_rule for d in densities}
    rule = GAUSS_LEGENDRE if rules == {GAUSS_LEGENDRE} else SIMPSON
    return QuadratureSpec(lower=min(los), upper=max(his), n_points=n_points, rule=rule)


def affine_transform(d: Density, shift: float, scale: float) -> Density:
    """Push a density through y = shift + scale * z with scale > 0.

    Supported for the normal-kernel families (and their mixtures) plus
    grid densities; this is how standardized posterior draws come back to
    the original biomarker scale.
    """
    shift = _finite_scalar("shift", shift)
    scale = _positive_scalar("scale", scale)
    if isinstance(d, Normal):
        return Normal(shift + scale * d.mu, scale * d.sigma)
    if isinstance(d, TruncatedNormal):
        return TruncatedNormal(
            shift + scale * d.a, shift + scale * d.b, shift + scale * d.mu, scale * d.sigma
        )
    if isinstance(d, Mixture):
        return Mixture(d.weights, tuple(affine_transform(c, shift, scale) for c in d.components))
    if isinstance(d, GridDensity):
        return GridDensity(shift + scale * d.grid, d.values / scale)
    if isinstance(d, Exponential) and shift == 0.0:
        return Exponential(d.rate / scale)
    raise ConfigError(f"affine transform unsupported for {type(d).__name__}")


class Standardization(NamedTuple):
    z: np.ndarray
    location: float
    scale: float


def standardize(ys) -> Standardization:
    """Center and scale to sample mean 0, sample sd 1 (n-1 denominator)."""
    ys = np.asarray(ys, dtype=float)
    if ys.ndim != 1 or ys.size < 2:
        raise DataError("standardize needs a 1-D sample with n >= 2")
    if not np.isfinite(ys).all():
        raise DataError("standardize got non-finite values")
    location = float(np.mean(ys))
    scale = float(np.std(ys, ddof=1))
    if scale <= 0.0:
        raise DataError("standardize got a zero-variance sample")
    return Standardization((ys - location) / scale, location, scale)


@dataclass(frozen=True)
class CovariateMap:
    """Affine map sending an observed covariate range onto [-1, 1]."""

    lo: float
    hi: float

    def forward(self, xs):
        xs_arr = np.asarray(xs, dtype=float)
        out = (2.0 * xs_arr - self.lo - self.hi) / (self.hi - self.lo)
        # rounding must not push boundary covariates off the closed
        # spline domain; genuinely out-of-range values stay out of range
        out = np.where(np.abs(out + 1.0) <= 1e-9, -1.0, out)
        out = np.where(np.abs(out - 1.0) <= 1e-9, 1.0, out)
        if np.isscalar(xs) or np.ndim(xs) == 0:
            return float(out)
        return out

    def inverse(self, ts):
        ts_arr = np.asarray(ts, dtype=float)
        out = 0.5 * ((self.hi - self.lo) * ts_arr + self.lo + self.hi)
        if np.isscalar(ts) or np.ndim(ts) == 0:
            return float(out)
        return out


def rescale_covariate(xs) -> tuple[np.ndarray, CovariateMap]:
    """Map observed covariates linearly onto [-1, 1] (min -> -1, max -> 1)."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise DataError("rescale_covariate needs a 1-D sample with n >= 2")
    if not np.isfinite(xs).all():
        raise DataError("rescale_covariate got non-finite values")
    lo, hi = float(xs.min()), float(xs.max())
    if lo == hi:
        raise DataError("covariate is constant; cannot rescale to [-1, 1]")
    cmap = CovariateMap(lo, hi)
    return cmap.forward(xs), cmap
