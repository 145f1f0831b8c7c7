"""Accuracy-measure summaries over paired posterior draws.

The two arms' draws are paired by iteration index; every measure is
computed per pair on the shared original scale and then summarized by
the mean and equal-tailed 2.5/97.5 percentile bands. Density work is
batched: components of many draws are stacked into flat arrays, the
normal kernel is evaluated once per chunk, and per-draw rows come back
via np.add.reduceat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from ..errors import ConfigError, NumericError
from ..measures import LOWER_TAILED, UPPER_TAILED, _auc_normal_components, _check_direction
from ..quadrature import SIMPSON, QuadratureSpec
from .predictive import PosteriorPredictiveDensity

_INV_SQRT_2PI = 0.3989422804014327
_PAD_SDS = 8.0  # per-component mass beyond 8 sd is ~1e-15
_CHUNK_DRAWS = 48
_DEFAULT_POINTS = 2048
_MEASURE_TAGS = ("kappa", "auc_upper", "auc_lower", "yi", "ovl")
_UNIT_TOL = 1e-9
# per-draw overlap quadrature: Simpson aliasing on a normal component is
# ~exp(-2 pi^2 (k/2)^2) at k nodes per sd, so k = 3 is already ~1e-19
_POINTS_PER_SD = 3.0
_MIN_POINTS = 256
_MAX_POINTS = 1 << 17
_CHUNK_VALUES = 4_000_000  # component rows x nodes per evaluation block
# components this far below a draw's largest weight may not widen its
# integration window; they are still evaluated inside it (see
# _per_draw_support for the error bound)
_SUPPORT_WEIGHT_FLOOR = 1e-3


@dataclass(frozen=True)
class AccuracySummary:
    """Per-draw measure values with pointwise mean and 95% bands."""

    measure: str
    draws: np.ndarray          # (n_keep, G); G = 1 for scalar measures
    mean: np.ndarray           # (G,)
    lo95: np.ndarray
    hi95: np.ndarray
    grid: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        if self.measure not in _MEASURE_TAGS:
            raise ConfigError(f"measure must be one of {_MEASURE_TAGS}, got {self.measure!r}")
        if self.draws.ndim != 2:
            raise ConfigError("draws must be (n_keep, grid length)")
        g = self.draws.shape[1]
        if self.grid.size not in (0, g):
            raise ConfigError("grid length does not match draws")
        if not ((self.lo95 <= self.mean + 1e-12).all() and (self.mean <= self.hi95 + 1e-12).all()):
            raise NumericError("credible band does not bracket the mean")
        # every supported tag is a [0, 1] quantity
        if self.draws.min() < -_UNIT_TOL or self.draws.max() > 1.0 + _UNIT_TOL:
            raise NumericError(f"{self.measure} draws escape [0, 1]")

    @property
    def scalar(self) -> bool:
        return self.grid.size == 0

    @classmethod
    def from_draws(cls, measure: str, draws: np.ndarray, grid=None) -> "AccuracySummary":
        draws = np.atleast_2d(np.asarray(draws, dtype=float))
        lo, hi = np.percentile(draws, [2.5, 97.5], axis=0)
        return cls(
            measure=measure,
            draws=draws,
            mean=draws.mean(axis=0),
            lo95=lo,
            hi95=hi,
            grid=np.empty(0) if grid is None else np.asarray(grid, dtype=float),
        )

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "grid": self.grid.tolist(),
            "mean": self.mean.tolist(),
            "lo95": self.lo95.tolist(),
            "hi95": self.hi95.tolist(),
            "draws": self.draws.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AccuracySummary":
        return cls(
            measure=payload["measure"],
            draws=np.asarray(payload["draws"], dtype=float),
            mean=np.asarray(payload["mean"], dtype=float),
            lo95=np.asarray(payload["lo95"], dtype=float),
            hi95=np.asarray(payload["hi95"], dtype=float),
            grid=np.asarray(payload["grid"], dtype=float),
        )


def _check_paired(d_draws, nd_draws) -> int:
    if len(d_draws) != len(nd_draws):
        raise ConfigError(
            f"arms carry different draw counts: {len(d_draws)} vs {len(nd_draws)}"
        )
    if len(d_draws) == 0:
        raise ConfigError("no posterior draws supplied")
    return len(d_draws)


def _stack(draws: list[PosteriorPredictiveDensity], x: float | None):
    parts = [d.component_params(x) for d in draws]
    offsets = np.zeros(len(draws) + 1, dtype=np.int64)
    for t, (w, _, _) in enumerate(parts):
        offsets[t + 1] = offsets[t] + len(w)
    w = np.concatenate([p[0] for p in parts])
    mu = np.concatenate([p[1] for p in parts])
    sd = np.concatenate([p[2] for p in parts])
    return w, mu, sd, offsets


def _bounds(*stacks) -> tuple[float, float]:
    lo = min(float((mu - _PAD_SDS * sd).min()) for _, mu, sd, _ in stacks)
    hi = max(float((mu + _PAD_SDS * sd).max()) for _, mu, sd, _ in stacks)
    return lo, hi


def _matrices(stack, nodes, want_pdf=True, want_cdf=False):
    """Per-draw density and/or cdf rows over `nodes`, chunked by draws."""
    w, mu, sd, offsets = stack
    n_draws = len(offsets) - 1
    pdf = np.empty((n_draws, nodes.size)) if want_pdf else None
    cdf = np.empty((n_draws, nodes.size)) if want_cdf else None
    for a in range(0, n_draws, _CHUNK_DRAWS):
        b = min(a + _CHUNK_DRAWS, n_draws)
        rows = slice(offsets[a], offsets[b])
        t = (nodes[None, :] - mu[rows, None]) / sd[rows, None]
        starts = offsets[a : b] - offsets[a]
        if want_pdf:
            e = (w[rows] / sd[rows])[:, None] * (_INV_SQRT_2PI * np.exp(-0.5 * t * t))
            pdf[a:b] = np.add.reduceat(e, starts, axis=0)
        if want_cdf:
            c = w[rows][:, None] * ndtr(t)
            cdf[a:b] = np.add.reduceat(c, starts, axis=0)
    return pdf, cdf


def _clamp_unit_draws(values: np.ndarray, what: str) -> np.ndarray:
    if values.min() < -_UNIT_TOL or values.max() > 1.0 + _UNIT_TOL:
        raise NumericError(f"posterior {what} draw outside [0, 1] beyond tolerance")
    return np.clip(values, 0.0, 1.0)


def _resolve_spec(stacks, spec: QuadratureSpec | None) -> QuadratureSpec:
    if spec is not None:
        return spec
    lo, hi = _bounds(*stacks)
    return QuadratureSpec(lo, hi, n_points=_DEFAULT_POINTS, rule=SIMPSON)


def _per_draw_support(stack) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-draw padded mass interval and narrowest component sd.

    Only components carrying at least _SUPPORT_WEIGHT_FLOOR of the
    draw's largest weight shape the interval. The predictive's fresh
    base-measure atoms each hold ~alpha / (n * n_fresh) mass, and the
    occasional one drawn with a huge sd would otherwise stretch the
    window (and with it the node count) by an order of magnitude.
    Excluded atoms are still evaluated on the final grid; the only loss
    is their mass outside the window, at most ~1e-4 of affinity and
    always downward. smin keeps every component: any spike, however
    light, is resolved wherever it does land inside the window.
    """
    w, mu, sd, off = stack
    starts = off[:-1]
    wmax = np.maximum.reduceat(w, starts)
    keep = w >= _SUPPORT_WEIGHT_FLOOR * np.repeat(wmax, np.diff(off))
    lo = np.minimum.reduceat(np.where(keep, mu - _PAD_SDS * sd, np.inf), starts)
    hi = np.maximum.reduceat(np.where(keep, mu + _PAD_SDS * sd, -np.inf), starts)
    smin = np.minimum.reduceat(sd, starts)
    return lo, hi, smin


def _mixture_rows(stack, ids: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Mixture pdf of draws `ids` at per-draw node rows (len(ids), G)."""
    w, mu, sd, off = stack
    counts = np.diff(off)[ids]
    take = np.concatenate([np.arange(off[i], off[i + 1]) for i in ids])
    rep = np.repeat(np.arange(len(ids)), counts)
    t = (nodes[rep] - mu[take, None]) / sd[take, None]
    e = (w[take] / sd[take])[:, None] * (_INV_SQRT_2PI * np.exp(-0.5 * t * t))
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.add.reduceat(e, starts, axis=0)


def _overlap_integrals(d_stack, nd_stack, integrand, spec: QuadratureSpec | None) -> np.ndarray:
    """Per-draw integral of a pointwise functional of (f_d, f_nd) that
    vanishes wherever either density does (affinity, overlap).

    With no explicit spec, each draw is integrated over the intersection
    of the two arms' padded mass regions, at a resolution that resolves
    that draw's narrowest component. A shared window would let one
    far-flung component (spline extrapolation can produce them) starve
    every spike of quadrature points.
    """
    if spec is not None:
        nodes, wq = spec.nodes_weights()
        fd, _ = _matrices(d_stack, nodes)
        fnd, _ = _matrices(nd_stack, nodes)
        return integrand(fd, fnd) @ wq
    lo_d, hi_d, smin_d = _per_draw_support(d_stack)
    lo_n, hi_n, smin_n = _per_draw_support(nd_stack)
    lo = np.maximum(lo_d, lo_n)
    hi = np.minimum(hi_d, hi_n)
    smin = np.minimum(smin_d, smin_n)
    out = np.zeros(lo.size)
    active = np.nonzero(lo < hi)[0]  # disjoint arms integrate to exactly 0
    if active.size == 0:
        return out
    width = hi - lo
    need = np.ceil(_POINTS_PER_SD * width[active] / smin[active]).astype(np.int64)
    need = np.maximum(need, _MIN_POINTS)
    if (need > _MAX_POINTS).any():
        t = int(active[int(np.argmax(need))])
        raise NumericError(
            f"draw {t} needs more than {_MAX_POINTS} quadrature panels "
            f"(window {width[t]:.3g} against component sd {smin[t]:.3g})"
        )
    # round panel counts up to powers of two so draws batch well
    panels = np.left_shift(1, np.ceil(np.log2(need)).astype(np.int64))
    counts = np.diff(d_stack[3]) + np.diff(nd_stack[3])
    for g in np.unique(panels):
        g = int(g)
        sel = active[panels == g]
        pattern = np.ones(g + 1)
        pattern[1:-1:2] = 4.0
        pattern[2:-1:2] = 2.0
        lin = np.linspace(0.0, 1.0, g + 1)
        block = max(1, int(_CHUNK_VALUES / (counts[sel].max() * (g + 1))))
        for a in range(0, sel.size, block):
            ids = sel[a : a + block]
            nodes = lo[ids][:, None] + width[ids][:, None] * lin[None, :]
            fd = _mixture_rows(d_stack, ids, nodes)
            fnd = _mixture_rows(nd_stack, ids, nodes)
            out[ids] = (integrand(fd, fnd) @ pattern) * width[ids] / (3.0 * g)
    return out


def _kappa_draws(d_stack, nd_stack, spec: QuadratureSpec | None) -> np.ndarray:
    values = _overlap_integrals(d_stack, nd_stack, lambda a, b: np.sqrt(a * b), spec)
    return _clamp_unit_draws(values, "kappa")


def _ovl_draws(d_stack, nd_stack, spec: QuadratureSpec | None) -> np.ndarray:
    values = _overlap_integrals(d_stack, nd_stack, np.minimum, spec)
    return _clamp_unit_draws(values, "ovl")


def _yi_draws(d_stack, nd_stack, spec, direction: str, absolute: bool) -> np.ndarray:
    spec = _resolve_spec((d_stack, nd_stack), spec)
    nodes, _ = spec.nodes_weights()
    _, cd = _matrices(d_stack, nodes, want_pdf=False, want_cdf=True)
    _, cnd = _matrices(nd_stack, nodes, want_pdf=False, want_cdf=True)
    diff = cnd - cd if direction == UPPER_TAILED else cd - cnd
    if absolute:
        diff = np.abs(diff)
    return _clamp_unit_draws(diff.max(axis=1), "yi")


def _auc_draws(d_stack, nd_stack, direction: str) -> np.ndarray:
    wd, md, sd, od = d_stack
    wn, mn, sn, on = nd_stack
    n_draws = len(od) - 1
    out = np.empty(n_draws)
    for t in range(n_draws):
        i, j = slice(od[t], od[t + 1]), slice(on[t], on[t + 1])
        out[t] = _auc_normal_components(wd[i], md[i], sd[i], wn[j], mn[j], sn[j], direction)
    return _clamp_unit_draws(out, "auc")


def posterior_affinity(
    d_draws: list[PosteriorPredictiveDensity],
    nd_draws: list[PosteriorPredictiveDensity],
    spec: QuadratureSpec | None = None,
) -> AccuracySummary:
    """Posterior affinity draws, paired by iteration."""
    _check_paired(d_draws, nd_draws)
    values = _kappa_draws(_stack(d_draws, None), _stack(nd_draws, None), spec)
    return AccuracySummary.from_draws("kappa", values[:, None])


def posterior_affinity_conditional(
    d_draws: list[PosteriorPredictiveDensity],
    nd_draws: list[PosteriorPredictiveDensity],
    xgrid,
    spec: QuadratureSpec | None = None,
) -> AccuracySummary:
    """Covariate-specific posterior affinity kappa(x) over xgrid."""
    n_keep = _check_paired(d_draws, nd_draws)
    xgrid = np.atleast_1d(np.asarray(xgrid, dtype=float))
    draws = np.empty((n_keep, xgrid.size))
    for g, x in enumerate(xgrid):
        draws[:, g] = _kappa_draws(_stack(d_draws, x), _stack(nd_draws, x), spec)
    return AccuracySummary.from_draws("kappa", draws, grid=xgrid)


def posterior_auc(
    d_draws: list[PosteriorPredictiveDensity],
    nd_draws: list[PosteriorPredictiveDensity],
    direction: str = UPPER_TAILED,
    xgrid=None,
) -> AccuracySummary:
    """Posterior AUC draws via the exact normal-mixture formula."""
    _check_direction(direction)
    n_keep = _check_paired(d_draws, nd_draws)
    tag = "auc_upper" if direction == UPPER_TAILED else "auc_lower"
    if xgrid is None:
        values = _auc_draws(_stack(d_draws, None), _stack(nd_draws, None), direction)
        return AccuracySummary.from_draws(tag, values[:, None])
    xgrid = np.atleast_1d(np.asarray(xgrid, dtype=float))
    draws = np.empty((n_keep, xgrid.size))
    for g, x in enumerate(xgrid):
        draws[:, g] = _auc_draws(_stack(d_draws, x), _stack(nd_draws, x), direction)
    return AccuracySummary.from_draws(tag, draws, grid=xgrid)


def posterior_youden(
    d_draws: list[PosteriorPredictiveDensity],
    nd_draws: list[PosteriorPredictiveDensity],
    direction: str = UPPER_TAILED,
    xgrid=None,
    absolute: bool = False,
    spec: QuadratureSpec | None = None,
) -> AccuracySummary:
    """Posterior Youden index draws (grid maximization of the cdf gap)."""
    _check_direction(direction)
    n_keep = _check_paired(d_draws, nd_draws)
    if xgrid is None:
        values = _yi_draws(_stack(d_draws, None), _stack(nd_draws, None), spec, direction, absolute)
        return AccuracySummary.from_draws("yi", values[:, None])
    xgrid = np.atleast_1d(np.asarray(xgrid, dtype=float))
    draws = np.empty((n_keep, xgrid.size))
    for g, x in enumerate(xgrid):
        draws[:, g] = _yi_draws(
            _stack(d_draws, x), _stack(nd_draws, x), spec, direction, absolute
        )
    return AccuracySummary.from_draws("yi", draws, grid=xgrid)


def posterior_ovl(
    d_draws: list[PosteriorPredictiveDensity],
    nd_draws: list[PosteriorPredictiveDensity],
    xgrid=None,
    spec: QuadratureSpec | None = None,
) -> AccuracySummary:
    """Posterior overlap-coefficient draws."""
    n_keep = _check_paired(d_draws, nd_draws)
    if xgrid is None:
        values = _ovl_draws(_stack(d_draws, None), _stack(nd_draws, None), spec)
        return AccuracySummary.from_draws("ovl", values[:, None])
    xgrid = np.atleast_1d(np.asarray(xgrid, dtype=float))
    draws = np.empty((n_keep, xgrid.size))
    for g, x in enumerate(xgrid):
        draws[:, g] = _ovl_draws(_stack(d_draws, x), _stack(nd_draws, x), spec)
    return AccuracySummary.from_draws("ovl", draws, grid=xgrid)


def posterior_mean_density(
    draws: list[PosteriorPredictiveDensity], grid, x: float | None = None
) -> np.ndarray:
    """Pointwise posterior mean of the predictive density on `grid`."""
    if not draws:
        raise ConfigError("no posterior draws supplied")
    grid = np.asarray(grid, dtype=float)
    stack = _stack(draws, x)
    pdf, _ = _matrices(stack, grid)
    return pdf.mean(axis=0)
