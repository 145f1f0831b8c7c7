"""Chain state, initialization, and the Gibbs chain driver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError, DataError, NumericError
from .config import BaseMeasureHyper, McmcConfig
from ._kernels import run_sweeps


class ChainDraw(NamedTuple):
    """Compacted snapshot of one kept MCMC iterate."""

    beta: np.ndarray    # (K, p) cluster coefficient vectors
    sigma2: np.ndarray  # (K,)
    counts: np.ndarray  # (K,) int
    beta0: np.ndarray   # (p,)
    Sigma0: np.ndarray  # (p, p)


@dataclass
class DpmState:
    """Mutable sampler state over one arm's standardized responses.

    Cluster slots 0..n_clusters-1 are occupied; the arrays are sized to
    n + m_aux + 1 so auxiliary components and births never reallocate.
    `M` caches the design-coefficient products X @ beta.T per slot.
    """

    X: np.ndarray
    z: np.ndarray
    assignments: np.ndarray
    counts: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    logsig: np.ndarray
    M: np.ndarray
    n_clusters: int
    hyper: BaseMeasureHyper
    m_aux: int = 3
    alpha: float = 1.0

    @property
    def clusters(self) -> dict[int, tuple[np.ndarray, float]]:
        return {
            j: (self.beta[j].copy(), float(self.sigma2[j]))
            for j in range(self.n_clusters)
        }

    def copy(self) -> "DpmState":
        return DpmState(
            self.X, self.z.copy(), self.assignments.copy(), self.counts.copy(),
            self.beta.copy(), self.sigma2.copy(), self.logsig.copy(), self.M.copy(),
            self.n_clusters, self.hyper.copy(), self.m_aux, self.alpha,
        )

    def snapshot(self) -> ChainDraw:
        k = self.n_clusters
        return ChainDraw(
            self.beta[:k].copy(), self.sigma2[:k].copy(), self.counts[:k].copy(),
            self.hyper.beta0.copy(), self.hyper.Sigma0.copy(),
        )

    def check(self) -> None:
        k = self.n_clusters
        n = self.z.shape[0]
        if not (1 <= k <= n):
            raise NumericError(f"occupied cluster count {k} outside [1, {n}]")
        if self.assignments.min() < 0 or self.assignments.max() >= k:
            raise NumericError("observation assigned to a nonexistent cluster")
        if int(self.counts[:k].sum()) != n:
            raise NumericError("cluster counts do not add up to n")
        if (self.sigma2[:k] <= 0).any():
            raise NumericError("nonpositive cluster variance")


def init_state(
    X: np.ndarray,
    z: np.ndarray,
    hyper: BaseMeasureHyper,
    m_aux: int,
    rng: np.random.Generator,
    alpha: float = 1.0,
) -> DpmState:
    """All observations in one cluster, parameters from one conjugate
    scan given that assignment (beta at unit variance, then sigma2)."""
    X = np.ascontiguousarray(X, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    n, p = X.shape
    if z.shape != (n,):
        raise DataError(f"responses shaped {z.shape}, expected ({n},)")
    if hyper.dim != p:
        raise ConfigError(f"hyper dimension {hyper.dim} != design dimension {p}")
    if alpha <= 0:
        raise ConfigError(f"alpha must be > 0, got {alpha}")
    cap = n + m_aux + 1
    state = DpmState(
        X=X,
        z=z,
        assignments=np.zeros(n, dtype=np.int32),
        counts=np.zeros(cap, dtype=np.int32),
        beta=np.zeros((cap, p)),
        sigma2=np.ones(cap),
        logsig=np.zeros(cap),
        M=np.zeros((n, cap)),
        n_clusters=1,
        hyper=hyper.copy(),
        m_aux=int(m_aux),
        alpha=float(alpha),
    )
    state.counts[0] = n
    prec = np.linalg.inv(hyper.Sigma0) + X.T @ X
    mean = np.linalg.solve(prec, np.linalg.solve(hyper.Sigma0, hyper.beta0) + X.T @ z)
    L = np.linalg.cholesky(np.linalg.inv(prec))
    state.beta[0] = mean + L @ rng.standard_normal(p)
    resid = z - X @ state.beta[0]
    shape = hyper.ig_shape + 0.5 * n
    scale = hyper.ig_scale + 0.5 * float(resid @ resid)
    state.sigma2[0] = max(scale / rng.gamma(shape), 1e-12)
    state.logsig[0] = np.log(state.sigma2[0])
    state.M[:, 0] = X @ state.beta[0]
    return state


def _advance(state: DpmState, n_sweeps: int, seed: int, update_hyper: bool = True) -> None:
    h = state.hyper
    k = run_sweeps(
        state.X, state.z, state.assignments, state.counts,
        state.beta, state.sigma2, state.logsig, state.M,
        state.n_clusters, h.beta0, h.Sigma0,
        state.alpha, np.int64(state.m_aux),
        h.ig_shape, h.ig_scale, h.iwish_df,
        update_hyper, np.int64(n_sweeps), np.uint32(seed),
    )
    if k < 0:
        raise NumericError("Cholesky factorization failed in the sampler after jitter retries")
    state.n_clusters = int(k)


def neal8_sweep(state: DpmState, seed: int, update_hyper: bool = True) -> DpmState:
    """One full Gibbs sweep (reassignment, cluster refresh, hyper refresh)
    on a copy of the state; the input is left untouched."""
    out = state.copy()
    _advance(out, 1, seed, update_hyper)
    out.check()
    return out


def run_chain(
    X: np.ndarray,
    z: np.ndarray,
    cfg: McmcConfig,
    hyper: BaseMeasureHyper,
    alpha: float = 1.0,
) -> list[ChainDraw]:
    """Burn in, then collect n_keep thinned snapshots. Deterministic in
    cfg.seed: the init draw and every kernel call get seeds derived from
    one SeedSequence."""
    root = np.random.SeedSequence(cfg.seed)
    init_ss, sweep_ss = root.spawn(2)
    state = init_state(X, z, hyper, cfg.m_aux, np.random.default_rng(init_ss), alpha)
    call_seeds = sweep_ss.generate_state(1 + cfg.n_keep, dtype=np.uint32)
    _advance(state, cfg.burn_in, int(call_seeds[0]))
    draws = []
    for t in range(cfg.n_keep):
        _advance(state, cfg.thin, int(call_seeds[1 + t]))
        draws.append(state.snapshot())
    state.check()
    return draws
