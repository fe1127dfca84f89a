"""Independent reference implementations used only by the tests.

Each oracle solves the same problem as a library routine by a different
method (bisection, active-set enumeration, explicit inverses, finite
differences) so agreement is meaningful.
"""

import itertools

import numpy as np


def waterfill_bisect(levels, budget, iters=300):
    levels = np.asarray(levels, dtype=float)
    finite = np.isfinite(levels)
    lo = levels[finite].min()
    hi = lo + budget
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        used = np.sum(np.maximum(mid - levels[finite], 0.0))
        if used > budget:
            hi = mid
        else:
            lo = mid
    zeta = 0.5 * (lo + hi)
    alloc = np.where(finite, np.maximum(zeta - np.where(finite, levels, 0.0), 0.0), 0.0)
    return zeta, alloc


def reverse_waterfill_bisect(g, rate, m_s=1, iters=400):
    """xi with ``m_s * sum log(g_i / min(g_i, xi)) = rate`` by bisection on log(xi)."""
    g = np.asarray(g, dtype=float)
    pos = g[g > 0]
    if pos.size == 0:
        return 0.0, 0.0
    if rate <= 0:
        return float(pos.max()), m_s * float(g.sum())

    def achieved(log_xi):
        xi = np.exp(log_xi)
        return m_s * np.sum(np.log(pos / np.minimum(pos, xi)))

    hi = np.log(pos.max())
    lo = hi - rate / m_s - 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if achieved(mid) > rate:
            lo = mid
        else:
            hi = mid
    xi = float(np.exp(0.5 * (lo + hi)))
    return xi, m_s * float(np.sum(np.minimum(g, xi)))


def project_capped_simplex_enum(v, budget):
    """Exact projection onto ``{x >= 0, sum x <= budget}`` by enumerating KKT active sets."""
    v = np.asarray(v, dtype=float)
    n = v.size
    best, best_d = None, np.inf
    for zeros in itertools.product([False, True], repeat=n):
        zeros = np.array(zeros)
        free = ~zeros
        for tight in (False, True):
            x = np.zeros(n)
            if tight:
                if not free.any():
                    continue
                shift = (v[free].sum() - budget) / free.sum()
                x[free] = v[free] - shift
            else:
                x[free] = v[free]
            if (x < -1e-12).any() or x.sum() > budget * (1 + 1e-12):
                continue
            d = np.linalg.norm(x - v)
            if d < best_d:
                best, best_d = x, d
    return best


def mmse_inverse_form(sigma, r, sigma2, m_s):
    """``M_s tr((R / sigma^2 + Sigma^{-1})^{-1})`` for invertible ``Sigma``."""
    post = np.linalg.inv(r / sigma2 + np.linalg.inv(sigma))
    return m_s * float(np.real(np.trace(post)))


def estimate_cov_inverse_form(sigma, r, sigma2):
    """Estimate covariance as prior minus posterior error covariance."""
    post = np.linalg.inv(r / sigma2 + np.linalg.inv(sigma))
    return sigma - post


def central_diff(fun, x, h):
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return grad


def sw_brute(sensing, comm, cfg, points=4001):
    """Dense-grid separated-design optimum using only closed-form pieces."""
    lam_s = sensing.eig.values
    lam_c = comm.gram_eig.values
    m_s = sensing.m_s
    best = np.inf
    for x in np.linspace(0.0, cfg.power_budget, points):
        pc = _wf(cfg.sigma2_c, lam_c, cfg.power_budget - x)
        rate = np.sum(np.log1p(lam_c * pc / cfg.sigma2_c))
        ps = _wf(cfg.sigma2_s, lam_s, x)
        f = lam_s * cfg.sigma2_s / (cfg.sigma2_s + lam_s * ps)
        g = lam_s - f
        _, dc = reverse_waterfill_bisect(g, rate, m_s)
        best = min(best, m_s * f.sum() + dc)
    return best


def _wf(noise, gains, budget):
    levels = np.where(gains > 0, noise / np.where(gains > 0, gains, 1.0), np.inf)
    if budget <= 0:
        return np.zeros_like(gains)
    return waterfill_bisect(levels, budget)[1]


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def random_psd(rng, n, trace=1.0, rank=None):
    rank = n if rank is None else rank
    a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    r = a @ a.conj().T
    return r * (trace / np.real(np.trace(r)))
