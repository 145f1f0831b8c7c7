"""Clamped B-spline basis on [-1, 1] evaluated by the Cox-de Boor recursion.

Order 4 (cubic) with boundary knots of full multiplicity; with no
interior knots the four basis functions reduce to the cubic Bernstein
polynomials, which is the regression design used for covariate-dependent
cluster means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class BSplineBasis:
    """Basis of `len(interior_knots) + order` splines on [-1, 1]."""

    order: int = 4
    interior_knots: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if int(self.order) != self.order or self.order < 2:
            raise ConfigError(f"spline order must be an integer >= 2, got {self.order}")
        object.__setattr__(self, "order", int(self.order))
        knots = tuple(float(k) for k in self.interior_knots)
        if any(not -1.0 < k < 1.0 for k in knots):
            raise ConfigError("interior knots must lie strictly inside (-1, 1)")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ConfigError("interior knots must be strictly increasing")
        object.__setattr__(self, "interior_knots", knots)
        full = np.concatenate(
            (np.full(self.order, -1.0), np.asarray(knots), np.full(self.order, 1.0))
        )
        full.setflags(write=False)
        object.__setattr__(self, "_knots", full)

    @property
    def dim(self) -> int:
        return len(self.interior_knots) + self.order

    @property
    def knots(self) -> np.ndarray:
        """Full clamped knot vector including boundary multiplicities."""
        return self._knots

    def design(self, x: float) -> np.ndarray:
        """Evaluate all basis functions at a single x in [-1, 1]."""
        x = float(x)
        if not -1.0 <= x <= 1.0:
            raise ConfigError(f"spline argument {x} outside [-1, 1]")
        t = self._knots
        k = self.order
        # knot span: largest j with t[j] <= x < t[j+1]; x = 1 folds into
        # the final nondegenerate span so the last basis function hits 1
        hi_span = len(t) - k - 1
        if x >= 1.0:
            j = hi_span
        else:
            j = int(np.searchsorted(t, x, side="right")) - 1
            j = min(max(j, k - 1), hi_span)
        # Cox-de Boor triangle over the k nonzero functions on span j
        local = np.zeros(k)
        local[0] = 1.0
        left = np.zeros(k)
        right = np.zeros(k)
        for d in range(1, k):
            left[d] = x - t[j + 1 - d]
            right[d] = t[j + d] - x
            saved = 0.0
            for r in range(d):
                denom = right[r + 1] + left[d - r]
                tmp = local[r] / denom
                local[r] = saved + right[r + 1] * tmp
                saved = left[d - r] * tmp
            local[d] = saved
        out = np.zeros(self.dim)
        out[j - k + 1 : j + 1] = local
        return out

    def design_matrix(self, xs) -> np.ndarray:
        """Stack `design(x)` rows for each x; shape (len(xs), dim)."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 1:
            raise ConfigError("design_matrix expects a 1-D array of covariates")
        out = np.empty((xs.size, self.dim))
        for i, x in enumerate(xs):
            out[i] = self.design(x)
        return out


def bspline_design(x: float, basis: BSplineBasis | None = None) -> np.ndarray:
    """Cubic Bernstein design vector at x (default basis: no interior knots)."""
    return (basis or BSplineBasis()).design(x)
