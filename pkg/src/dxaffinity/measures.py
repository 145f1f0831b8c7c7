"""Summary measures of diagnostic test accuracy.

The central quantity is the Hellinger affinity

    kappa = integral of sqrt(f_d(y) * f_nd(y)) dy,

which is 1 for identical marker densities and 0 for perfectly separated
ones, and is invariant under monotone transformations of the marker.
Alongside it: the normalized L2 inner product, AUC, Youden index (plain
and absolute), and the overlap coefficient, each with closed forms where
the families admit them and quadrature otherwise. Covariate-specific
versions evaluate the same measures along a grid of covariate values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import betaln, ndtr

from .densities import Beta, Density, Exponential, Mixture, Normal, default_quadrature
from .errors import ConfigError, NumericError
from .quadrature import QuadratureSpec, integrate

UPPER_TAILED = "upper_tailed"
LOWER_TAILED = "lower_tailed"
_DIRECTIONS = (UPPER_TAILED, LOWER_TAILED)

# quadrature noise bands: clamp within, fail beyond
_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class TestPair:
    """Marker densities for the diseased (`f_d`) and non-diseased (`f_nd`) arms."""

    __test__ = False  # keep pytest from collecting this as a test class

    f_d: Density
    f_nd: Density

    def __post_init__(self) -> None:
        for name, d in (("f_d", self.f_d), ("f_nd", self.f_nd)):
            if not isinstance(d, Density):
                raise ConfigError(f"{name} must be a Density, got {type(d).__name__}")

    def swapped(self) -> "TestPair":
        return TestPair(self.f_nd, self.f_d)

    def spec(self, n_points: int = 4096) -> QuadratureSpec:
        return default_quadrature(self.f_d, self.f_nd, n_points=n_points)


@dataclass(frozen=True)
class ConditionalTestPair:
    """Covariate-indexed marker densities; callables x -> Density on `domain`."""

    f_d: Callable[[float], Density]
    f_nd: Callable[[float], Density]
    domain: tuple[float, float] = (-1.0, 1.0)

    def at(self, x: float) -> TestPair:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ConfigError(f"covariate {x} outside domain [{lo}, {hi}]")
        return TestPair(self.f_d(x), self.f_nd(x))


def _check_direction(direction: str) -> str:
    if direction not in _DIRECTIONS:
        raise ConfigError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
    return direction


def _clamp_unit(value: float, what: str) -> float:
    if -_CLAMP_TOL <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + _CLAMP_TOL:
        return 1.0
    if not 0.0 <= value <= 1.0:
        raise NumericError(f"{what} = {value!r} outside [0, 1] beyond quadrature tolerance")
    return value


def affinity(pair: TestPair, spec: QuadratureSpec | None = None) -> float:
    """Hellinger affinity of the pair; in [0, 1], quadrature of sqrt(f_d * f_nd)."""
    spec = spec or pair.spec()
    value = integrate(lambda y: np.sqrt(pair.f_d.pdf(y) * pair.f_nd.pdf(y)), spec)
    return _clamp_unit(value, "affinity")


def affinity_binormal(d: Normal, nd: Normal) -> float:
    """Closed-form affinity for two normal densities."""
    ssum = d.sigma**2 + nd.sigma**2
    return math.sqrt(2.0 * d.sigma * nd.sigma / ssum) * math.exp(
        -0.25 * (d.mu - nd.mu) ** 2 / ssum
    )


def affinity_bibeta(d: Beta, nd: Beta) -> float:
    """Closed-form affinity for two beta densities (via log-beta functions)."""
    return math.exp(
        betaln(0.5 * (d.a + nd.a), 0.5 * (d.b + nd.b))
        - 0.5 * (betaln(d.a, d.b) + betaln(nd.a, nd.b))
    )


def affinity_biexponential(d: Exponential, nd: Exponential) -> float:
    """Closed-form affinity for two exponential densities."""
    return 2.0 * math.sqrt(d.rate * nd.rate) / (d.rate + nd.rate)


def affinity_normalized(pair: TestPair, spec: QuadratureSpec | None = None) -> float:
    """Normalized L2 inner product <f_d, f_nd> / (||f_d|| ||f_nd||).

    Requires both densities square-integrable; divergence is detected by
    comparing each squared norm at the spec resolution and at double
    resolution.
    """
    spec = spec or pair.spec()

    def sq_norm(d: Density, name: str) -> float:
        coarse = integrate(lambda y: d.pdf(y) ** 2, spec)
        dense_spec = QuadratureSpec(spec.lower, spec.upper, 2 * spec.n_points, spec.rule)
        dense = integrate(lambda y: d.pdf(y) ** 2, dense_spec)
        if not np.isfinite(dense) or dense > coarse * (1.0 + 1e-4) + 1e-12:
            raise NumericError(f"{name} is not square-integrable: norm grows under refinement")
        return dense

    inner = integrate(lambda y: pair.f_d.pdf(y) * pair.f_nd.pdf(y), spec)
    denom = math.sqrt(sq_norm(pair.f_d, "f_d") * sq_norm(pair.f_nd, "f_nd"))
    return _clamp_unit(inner / denom, "normalized affinity")


def auc(pair: TestPair, direction: str = UPPER_TAILED, spec: QuadratureSpec | None = None) -> float:
    """P(Y_d > Y_nd) for an upper-tailed test, P(Y_d < Y_nd) for lower-tailed."""
    _check_direction(direction)
    spec = spec or pair.spec()
    if direction == UPPER_TAILED:
        value = integrate(lambda y: pair.f_d.pdf(y) * pair.f_nd.cdf(y), spec)
    else:
        value = integrate(lambda y: pair.f_d.pdf(y) * (1.0 - pair.f_nd.cdf(y)), spec)
    return _clamp_unit(value, "auc")


def _normal_mixture_terms(d: Density, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(d, Normal):
        return np.array([1.0]), np.array([d.mu]), np.array([d.sigma])
    if isinstance(d, Mixture):
        ws, mus, sigmas = [], [], []
        for w, c in zip(d.weights, d.components):
            cw, cm, cs = _normal_mixture_terms(c, name)
            ws.append(w * cw)
            mus.append(cm)
            sigmas.append(cs)
        return np.concatenate(ws), np.concatenate(mus), np.concatenate(sigmas)
    raise ConfigError(f"{name} must be a normal or a mixture of normals, got {type(d).__name__}")


def _auc_normal_components(wd, md, sd, wn, mn, sn, direction: str) -> float:
    z = (md[:, None] - mn[None, :]) / np.sqrt(sd[:, None] ** 2 + sn[None, :] ** 2)
    if direction == LOWER_TAILED:
        z = -z
    return float(wd @ ndtr(z) @ wn)


def auc_mixture_normal(d: Density, nd: Density, direction: str = UPPER_TAILED) -> float:
    """Exact AUC for normal mixtures:
    sum_h sum_k pi_h pi_k Phi((mu_dh - mu_ndk) / sqrt(s2_dh + s2_ndk))."""
    _check_direction(direction)
    wd, md, sd = _normal_mixture_terms(d, "d")
    wn, mn, sn = _normal_mixture_terms(nd, "nd")
    return _clamp_unit(_auc_normal_components(wd, md, sd, wn, mn, sn, direction), "auc")


class YoudenResult(NamedTuple):
    """Maximum of the cutoff objective, its smallest argmax, and the
    contiguous grid interval over which the maximum is attained."""

    value: float
    cutoff: float
    cutoff_lo: float
    cutoff_hi: float


_PLATEAU_TOL = 1e-9


def _youden_scan(pair: TestPair, objective, grid_size: int) -> YoudenResult:
    if grid_size < 100:
        raise ConfigError(f"youden grid_size must be >= 100, got {grid_size}")
    spec = default_quadrature(pair.f_d, pair.f_nd)
    grid = np.linspace(spec.lower, spec.upper, grid_size)
    vals = objective(grid)
    best = int(np.argmax(vals))
    best_val = float(vals[best])
    # refine inside the bracketing interval; plateaus keep the grid answer
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid_size - 1)]
    ref_c, ref_v = _golden_max(lambda c: float(objective(np.array([c]))[0]), a, b)
    left = best
    while left - 1 >= 0 and vals[left - 1] >= best_val - _PLATEAU_TOL:
        left -= 1
    right = best
    while right + 1 < grid_size and vals[right + 1] >= best_val - _PLATEAU_TOL:
        right += 1
    if ref_v > best_val + _PLATEAU_TOL:
        value, cutoff = ref_v, ref_c
        c_lo = c_hi = ref_c
    else:
        value, cutoff = best_val, float(grid[left])
        c_lo, c_hi = float(grid[left]), float(grid[right])
    return YoudenResult(_clamp_unit(value, "youden"), cutoff, c_lo, c_hi)


def _golden_max(f, a: float, b: float, iters: int = 60) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    mid = 0.5 * (a + b)
    return mid, f(mid)


def youden(pair: TestPair, direction: str = UPPER_TAILED, grid_size: int = 10_000) -> YoudenResult:
    """Youden index max_c {F_nd(c) - F_d(c)} (upper-tailed) over a cutoff grid.

    Ties are broken by the smallest cutoff; when the maximum sits on a
    plateau the interval endpoints are reported in `cutoff_lo`/`cutoff_hi`.
    """
    _check_direction(direction)
    if direction == UPPER_TAILED:
        objective = lambda c: pair.f_nd.cdf(c) - pair.f_d.cdf(c)
    else:
        objective = lambda c: pair.f_d.cdf(c) - pair.f_nd.cdf(c)
    return _youden_scan(pair, objective, grid_size)


def youden_abs(pair: TestPair, grid_size: int = 10_000) -> YoudenResult:
    """Direction-free Youden index: max_c |F_nd(c) - F_d(c)|."""
    objective = lambda c: np.abs(pair.f_nd.cdf(c) - pair.f_d.cdf(c))
    return _youden_scan(pair, objective, grid_size)


def ovl(pair: TestPair, spec: QuadratureSpec | None = None) -> float:
    """Overlap coefficient: quadrature of min(f_d, f_nd); 1 iff identical."""
    spec = spec or pair.spec()
    value = integrate(lambda y: np.minimum(pair.f_d.pdf(y), pair.f_nd.pdf(y)), spec)
    return _clamp_unit(value, "ovl")


def affinity_conditional(
    cpair: ConditionalTestPair, xs, spec: QuadratureSpec | None = None
) -> np.ndarray:
    """Covariate-specific affinity kappa(x) at each x in `xs`."""
    return np.array([affinity(cpair.at(float(x)), spec) for x in np.atleast_1d(xs)])


def auc_conditional(
    cpair: ConditionalTestPair,
    xs,
    direction: str = UPPER_TAILED,
    spec: QuadratureSpec | None = None,
) -> np.ndarray:
    """Covariate-specific AUC(x) at each x in `xs`."""
    _check_direction(direction)
    return np.array([auc(cpair.at(float(x)), direction, spec) for x in np.atleast_1d(xs)])


class LrIdentityResult(NamedTuple):
    mc_estimate: float
    quad_value: float
    mc_se: float


def affinity_lr_identity_check(pair: TestPair, n: int, seed: int) -> LrIdentityResult:
    """Monte Carlo check of kappa = E_nd[ sqrt(f_d(Y) / f_nd(Y)) ], Y ~ f_nd.

    Returns the MC mean, the quadrature affinity, and the MC standard
    error; the two estimates agree within a few standard errors when the
    identity holds.
    """
    if n < 2:
        raise ConfigError(f"lr identity check needs n >= 2, got {n}")
    ys = pair.f_nd.sample(int(n), seed)
    f_nd = pair.f_nd.pdf(ys)
    f_d = pair.f_d.pdf(ys)
    ratios = np.zeros_like(f_nd)
    positive = f_nd > 0.0
    # the affinity integrand vanishes with f_nd, so a sampled point with
    # f_nd = 0 contributes 0 when f_d = 0 there too; a positive f_d at
    # such a point is a numerical breakdown, not a contribution
    if (~positive & (f_d > 0.0)).any():
        raise NumericError("f_d positive at a sampled point where f_nd vanishes")
    ratios[positive] = np.sqrt(f_d[positive] / f_nd[positive])
    mc = float(np.mean(ratios))
    se = float(np.std(ratios, ddof=1) / math.sqrt(n))
    return LrIdentityResult(mc, affinity(pair), se)
