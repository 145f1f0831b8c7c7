"""Compiled inner loops of the auxiliary-parameter Gibbs sampler.

Everything below runs in nopython mode. numba keeps its own RNG state
for compiled code, so each entry point seeds it explicitly via
np.random.seed; callers derive per-call seeds from one stream. Linear
algebra is hand-rolled on small (p x p) problems because nopython code
cannot raise through np.linalg: every factorization returns a success
flag and the sweep reports failure through a negative cluster count.

Cluster slots are kept compacted: occupied clusters live in 0..K-1,
deaths swap the last cluster into the vacated slot, births append at K.
The (n x cap) matrix M caches x_i^T beta_j for occupied clusters so the
per-observation weight loop is O(K) instead of O(K p).
"""

import numpy as np
from numba import njit

_HALF_LOG_2PI = 0.9189385332046727
_SIGMA2_FLOOR = 1e-12


@njit(cache=True)
def _cholesky(a, out):
    p = a.shape[0]
    for i in range(p):
        for j in range(p):
            out[i, j] = 0.0
    for i in range(p):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= out[i, k] * out[j, k]
            if i == j:
                if s <= 0.0 or not np.isfinite(s):
                    return False
                out[i, i] = np.sqrt(s)
            else:
                out[i, j] = s / out[j, j]
    return True


@njit(cache=True)
def _cholesky_jittered(a, out, scratch):
    if _cholesky(a, out):
        return True
    p = a.shape[0]
    tr = 0.0
    for i in range(p):
        tr += a[i, i]
    base = tr / p if tr > 0.0 else 1.0
    eps = 1e-10
    while eps <= 1e-4:
        for i in range(p):
            for j in range(p):
                scratch[i, j] = a[i, j]
            scratch[i, i] += base * eps
        if _cholesky(scratch, out):
            return True
        eps *= 100.0
    return False


@njit(cache=True)
def _solve_lower(L, b, out):
    p = L.shape[0]
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * out[k]
        out[i] = s / L[i, i]


@njit(cache=True)
def _solve_upper_t(L, b, out):
    # solves L^T x = b with L lower triangular
    p = L.shape[0]
    for i in range(p - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, p):
            s -= L[k, i] * out[k]
        out[i] = s / L[i, i]


@njit(cache=True)
def _inv_spd(a, out, L, col, sol, scratch):
    if not _cholesky_jittered(a, L, scratch):
        return False
    p = a.shape[0]
    for j in range(p):
        for i in range(p):
            col[i] = 1.0 if i == j else 0.0
        _solve_lower(L, col, sol)
        _solve_upper_t(L, sol, col)
        for i in range(p):
            out[i, j] = col[i]
    for i in range(p):
        for j in range(i):
            v = 0.5 * (out[i, j] + out[j, i])
            out[i, j] = v
            out[j, i] = v
    return True


@njit(cache=True)
def _mvn_from_precision(P, rhs, out, L, t1, t2, scratch):
    # draw from N(P^{-1} rhs, P^{-1}); L^{-T} eps has covariance P^{-1}
    if not _cholesky_jittered(P, L, scratch):
        return False
    _solve_lower(L, rhs, t1)
    _solve_upper_t(L, t1, out)
    p = P.shape[0]
    for i in range(p):
        t1[i] = np.random.standard_normal()
    _solve_upper_t(L, t1, t2)
    for i in range(p):
        out[i] += t2[i]
    return True


@njit(cache=True)
def _draw_inv_gamma(shape, scale):
    g = np.random.gamma(shape, 1.0)
    if g < 1e-300:
        g = 1e-300
    return scale / g


@njit(cache=True)
def _draw_inv_wishart(nu, S, out, Psi, A, B, W, L, col, sol, scratch):
    # out ~ IW(nu, S) by the Bartlett construction on W ~ Wishart(nu, S^{-1})
    p = S.shape[0]
    if not _inv_spd(S, Psi, L, col, sol, scratch):
        return False
    if not _cholesky_jittered(Psi, L, scratch):
        return False
    for i in range(p):
        for j in range(p):
            A[i, j] = 0.0
    for i in range(p):
        A[i, i] = np.sqrt(np.random.chisquare(nu - i))
        for j in range(i):
            A[i, j] = np.random.standard_normal()
    for i in range(p):
        for j in range(p):
            s = 0.0
            # both factors lower triangular: only j <= k <= i contributes
            for k in range(j, i + 1):
                s += L[i, k] * A[k, j]
            B[i, j] = s
    for i in range(p):
        for j in range(p):
            s = 0.0
            for k in range(p):
                s += B[i, k] * B[j, k]
            W[i, j] = s
    return _inv_spd(W, out, L, col, sol, scratch)


@njit(cache=True)
def _sweep(
    X,
    z,
    assign,
    counts,
    beta,
    sigma2,
    logsig,
    M,
    K,
    beta0,
    Sigma0,
    alpha,
    m_aux,
    ig_shape,
    ig_scale,
    iw_df,
    update_hyper,
    Sigma0_inv,
    L0,
    logw,
    XtX,
    Xtz,
    rss,
    P,
    rhs,
    bvec,
    Lw,
    t1,
    t2,
    col,
    sol,
    scr,
    Smat,
    Psi,
    Abar,
    Bbar,
    Wbar,
):
    n, p = X.shape
    if not _inv_spd(Sigma0, Sigma0_inv, Lw, col, sol, scr):
        return -1
    if not _cholesky_jittered(Sigma0, L0, scr):
        return -1
    log_alpha_m = np.log(alpha / m_aux)

    # --- per-observation reassignment (Algorithm 8) ---
    for i in range(n):
        c = assign[i]
        counts[c] -= 1
        if counts[c] == 0:
            # singleton: retire its component into the first auxiliary slot
            last = K - 1
            if c != last:
                for q in range(p):
                    tmp = beta[c, q]
                    beta[c, q] = beta[last, q]
                    beta[last, q] = tmp
                tmp = sigma2[c]
                sigma2[c] = sigma2[last]
                sigma2[last] = tmp
                tmp = logsig[c]
                logsig[c] = logsig[last]
                logsig[last] = tmp
                counts[c] = counts[last]
                counts[last] = 0
                for t in range(n):
                    if assign[t] == last:
                        assign[t] = c
                for t in range(n):
                    tmp = M[t, c]
                    M[t, c] = M[t, last]
                    M[t, last] = tmp
            K = last
            fresh_lo = K + 1
        else:
            fresh_lo = K
        hi = K + m_aux
        for s in range(fresh_lo, hi):
            for q in range(p):
                t1[q] = np.random.standard_normal()
            for q in range(p):
                acc = beta0[q]
                for r in range(q + 1):
                    acc += L0[q, r] * t1[r]
                beta[s, q] = acc
            s2 = _draw_inv_gamma(ig_shape, ig_scale)
            if s2 < _SIGMA2_FLOOR:
                s2 = _SIGMA2_FLOOR
            sigma2[s] = s2
            logsig[s] = np.log(s2)

        zi = z[i]
        wmax = -np.inf
        for j in range(hi):
            if j < K:
                mu = M[i, j]
                lw = np.log(float(counts[j]))
            else:
                mu = 0.0
                for q in range(p):
                    mu += X[i, q] * beta[j, q]
                lw = log_alpha_m
            d = zi - mu
            lw += -_HALF_LOG_2PI - 0.5 * logsig[j] - 0.5 * d * d / sigma2[j]
            logw[j] = lw
            if lw > wmax:
                wmax = lw
        total = 0.0
        for j in range(hi):
            w = np.exp(logw[j] - wmax)
            logw[j] = w
            total += w
        u = np.random.random() * total
        pick = hi - 1
        acc = 0.0
        for j in range(hi):
            acc += logw[j]
            if u < acc:
                pick = j
                break
        if pick < K:
            assign[i] = pick
            counts[pick] += 1
        else:
            if pick != K:
                for q in range(p):
                    beta[K, q] = beta[pick, q]
                sigma2[K] = sigma2[pick]
                logsig[K] = logsig[pick]
            for t in range(n):
                mu = 0.0
                for q in range(p):
                    mu += X[t, q] * beta[K, q]
                M[t, K] = mu
            counts[K] = 1
            assign[i] = K
            K += 1

    # --- cluster-parameter refresh ---
    for j in range(K):
        for q in range(p):
            Xtz[j, q] = 0.0
            for r in range(p):
                XtX[j, q, r] = 0.0
    for t in range(n):
        c = assign[t]
        zt = z[t]
        for q in range(p):
            xq = X[t, q]
            Xtz[c, q] += xq * zt
            for r in range(p):
                XtX[c, q, r] += xq * X[t, r]
    for j in range(K):
        inv_s2 = 1.0 / sigma2[j]
        for q in range(p):
            racc = 0.0
            for r in range(p):
                P[q, r] = Sigma0_inv[q, r] + XtX[j, q, r] * inv_s2
                racc += Sigma0_inv[q, r] * beta0[r]
            rhs[q] = racc + Xtz[j, q] * inv_s2
        if not _mvn_from_precision(P, rhs, bvec, Lw, t1, t2, scr):
            return -1
        for q in range(p):
            beta[j, q] = bvec[q]
        for t in range(n):
            mu = 0.0
            for q in range(p):
                mu += X[t, q] * beta[j, q]
            M[t, j] = mu
    for j in range(K):
        rss[j] = 0.0
    for t in range(n):
        c = assign[t]
        d = z[t] - M[t, c]
        rss[c] += d * d
    for j in range(K):
        s2 = _draw_inv_gamma(ig_shape + 0.5 * counts[j], ig_scale + 0.5 * rss[j])
        if s2 < _SIGMA2_FLOOR:
            s2 = _SIGMA2_FLOOR
        sigma2[j] = s2
        logsig[j] = np.log(s2)

    # --- hyperparameter refresh ---
    if update_hyper:
        for q in range(p):
            sacc = 0.0
            for j in range(K):
                sacc += beta[j, q]
            t2[q] = sacc
        for q in range(p):
            racc = 0.0
            for r in range(p):
                P[q, r] = K * Sigma0_inv[q, r]
                racc += Sigma0_inv[q, r] * t2[r]
            P[q, q] += 1.0
            rhs[q] = racc
        if not _mvn_from_precision(P, rhs, bvec, Lw, t1, t2, scr):
            return -1
        for q in range(p):
            beta0[q] = bvec[q]
        nu_post = iw_df + K
        if nu_post > p - 1.0 + 1e-9:
            for q in range(p):
                for r in range(p):
                    sacc = 0.0
                    for j in range(K):
                        sacc += (beta[j, q] - beta0[q]) * (beta[j, r] - beta0[r])
                    Smat[q, r] = sacc
                Smat[q, q] += 1.0
            if not _draw_inv_wishart(
                nu_post, Smat, Sigma0, Psi, Abar, Bbar, Wbar, Lw, col, sol, scr
            ):
                return -1
    return K


@njit(cache=True)
def run_sweeps(
    X,
    z,
    assign,
    counts,
    beta,
    sigma2,
    logsig,
    M,
    K,
    beta0,
    Sigma0,
    alpha,
    m_aux,
    ig_shape,
    ig_scale,
    iw_df,
    update_hyper,
    n_sweeps,
    seed,
):
    """Run n_sweeps full Gibbs sweeps in place; returns the new cluster
    count, or -1 on an unrecoverable factorization failure."""
    np.random.seed(seed)
    n, p = X.shape
    cap = beta.shape[0]
    Sigma0_inv = np.empty((p, p))
    L0 = np.empty((p, p))
    logw = np.empty(cap)
    XtX = np.empty((cap, p, p))
    Xtz = np.empty((cap, p))
    rss = np.empty(cap)
    P = np.empty((p, p))
    rhs = np.empty(p)
    bvec = np.empty(p)
    Lw = np.empty((p, p))
    t1 = np.empty(p)
    t2 = np.empty(p)
    col = np.empty(p)
    sol = np.empty(p)
    scr = np.empty((p, p))
    Smat = np.empty((p, p))
    Psi = np.empty((p, p))
    Abar = np.empty((p, p))
    Bbar = np.empty((p, p))
    Wbar = np.empty((p, p))
    k = K
    for _ in range(n_sweeps):
        k = _sweep(
            X, z, assign, counts, beta, sigma2, logsig, M, k, beta0, Sigma0,
            alpha, m_aux, ig_shape, ig_scale, iw_df, update_hyper,
            Sigma0_inv, L0, logw, XtX, Xtz, rss, P, rhs, bvec, Lw,
            t1, t2, col, sol, scr, Smat, Psi, Abar, Bbar, Wbar,
        )
        if k < 0:
            return k
    return k


@njit(cache=True)
def run_geweke_cycles(
    X,
    z,
    assign,
    counts,
    beta,
    sigma2,
    logsig,
    M,
    K,
    beta0,
    Sigma0,
    alpha,
    m_aux,
    ig_shape,
    ig_scale,
    iw_df,
    n_cycles,
    seed,
    out_beta0,
    out_logs0,
    out_k,
    out_zbar,
):
    """Successive-conditional cycles for the joint-distribution test:
    one posterior sweep, then a fresh response vector from the current
    state. Records beta0, log diag Sigma0, K, and mean(z) per cycle."""
    np.random.seed(seed)
    n, p = X.shape
    cap = beta.shape[0]
    Sigma0_inv = np.empty((p, p))
    L0 = np.empty((p, p))
    logw = np.empty(cap)
    XtX = np.empty((cap, p, p))
    Xtz = np.empty((cap, p))
    rss = np.empty(cap)
    P = np.empty((p, p))
    rhs = np.empty(p)
    bvec = np.empty(p)
    Lw = np.empty((p, p))
    t1 = np.empty(p)
    t2 = np.empty(p)
    col = np.empty(p)
    sol = np.empty(p)
    scr = np.empty((p, p))
    Smat = np.empty((p, p))
    Psi = np.empty((p, p))
    Abar = np.empty((p, p))
    Bbar = np.empty((p, p))
    Wbar = np.empty((p, p))
    k = K
    for t in range(n_cycles):
        k = _sweep(
            X, z, assign, counts, beta, sigma2, logsig, M, k, beta0, Sigma0,
            alpha, m_aux, ig_shape, ig_scale, iw_df, True,
            Sigma0_inv, L0, logw, XtX, Xtz, rss, P, rhs, bvec, Lw,
            t1, t2, col, sol, scr, Smat, Psi, Abar, Bbar, Wbar,
        )
        if k < 0:
            return k
        zacc = 0.0
        for i in range(n):
            c = assign[i]
            z[i] = M[i, c] + np.sqrt(sigma2[c]) * np.random.standard_normal()
            zacc += z[i]
        for q in range(p):
            out_beta0[t, q] = beta0[q]
            out_logs0[t, q] = np.log(Sigma0[q, q])
        out_k[t] = k
        out_zbar[t] = zacc / n
    return k
