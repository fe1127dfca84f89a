"""Separated sensing / communication waveform design.

For a fixed power split ``(P_s, P_c)`` both waveforms are water-filled on
their own eigen-subchannels, so the design reduces to a scalar search over
``P_s``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import InvalidInputError
from .core import CasResult, comm_mi_eig, mmse_terms
from .numerics import reverse_waterfill, waterfill

__all__ = [
    "SwDesign",
    "sw_eval",
    "alg1_search",
    "p3_objective",
    "p3_solve",
    "golden_section",
]


@dataclass
class SwDesign:
    p_split: tuple
    p_s: np.ndarray
    p_c: np.ndarray
    result: CasResult


def _levels(noise, gains):
    gains = np.asarray(gains, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(gains > 0, noise / np.where(gains > 0, gains, 1.0), np.inf)


def _waterfill_or_zero(levels, budget):
    if not np.isfinite(levels).any():
        return np.zeros_like(levels)
    return waterfill(levels, budget).allocation


def sw_eval(split_p_s, sensing, comm, cfg):
    """CAS distortion of the separated design at sensing power ``split_p_s``."""
    p_t = cfg.power_budget
    split = float(split_p_s)
    if not -1e-12 * p_t <= split <= p_t * (1 + 1e-12):
        raise InvalidInputError(f"split {split} outside [0, {p_t}]")
    split = min(max(split, 0.0), p_t)
    lam_s = np.maximum(sensing.eig.values, 0.0)
    lam_c = comm.gram_eig.values

    p_c = _waterfill_or_zero(_levels(cfg.sigma2_c, lam_c), p_t - split)
    rate = comm_mi_eig(lam_c, p_c, cfg.sigma2_c)
    p_s = _waterfill_or_zero(_levels(cfg.sigma2_s, lam_s), split)
    f, g = mmse_terms(lam_s, p_s, cfg.sigma2_s)
    rw = reverse_waterfill(g, rate, sensing.m_s)
    d_s = sensing.m_s * float(f.sum())
    result = CasResult(
        d_s,
        rw.total_distortion,
        rate,
        rw.factor,
        {"achieved_rate": rw.achieved_rate, "k_active": rw.active_count, "p_s_total": split},
    )
    return SwDesign((split, p_t - split), p_s, p_c, result)


def alg1_search(sensing, comm, cfg, grid_l=20, eps=None, max_rounds=200, validate=False,
                validate_points=2001):
    """Iterative grid refinement over the sensing power ``P_s``.

    Each round evaluates ``grid_l + 1`` equally spaced splits in the current
    bracket, keeps the best (ties go to the smaller ``P_s``) and shrinks the
    bracket to its two neighbours. Stops once the best distortion changes
    by at most `eps` between rounds.

    With ``validate=True`` a dense uniform grid is also evaluated and any
    disagreement is reported in ``result.meta`` rather than raised.
    """
    grid_l = int(grid_l)
    if grid_l < 2:
        raise InvalidInputError("grid_l must be >= 2")
    if eps is None:
        eps = 1e-6 * sensing.prior_variance
    if not eps > 0:
        raise InvalidInputError("eps must be positive")

    p_t = cfg.power_budget
    lo, hi = 0.0, p_t
    best = None
    d_prev = np.inf
    rounds = 0
    evaluations = 0
    while rounds < max_rounds:
        rounds += 1
        grid = lo + np.arange(grid_l + 1) / grid_l * (hi - lo)
        designs = [sw_eval(min(x, p_t), sensing, comm, cfg) for x in grid]
        evaluations += len(designs)
        d = np.array([s.result.d_total for s in designs])
        l_star = int(np.argmin(d))
        if best is None or d[l_star] < best.result.d_total:
            best = designs[l_star]
        lo = grid[max(l_star - 1, 0)]
        hi = grid[min(l_star + 1, grid_l)]
        if abs(d[l_star] - d_prev) <= eps or hi - lo <= 1e-15 * p_t:
            break
        d_prev = d[l_star]

    best.result.meta.update({"rounds": rounds, "evaluations": evaluations, "solver": "alg1"})
    if validate:
        dense = np.linspace(0.0, p_t, int(validate_points))
        dd = np.array([sw_eval(x, sensing, comm, cfg).result.d_total for x in dense])
        j = int(np.argmin(dd))
        best.result.meta.update({
            "dense_best_split": float(dense[j]),
            "dense_best_d": float(dd[j]),
            "dense_disagrees": bool(dd[j] < best.result.d_total - eps),
        })
    return best


def _require_iid(sensing):
    lam = sensing.eig.values
    if not sensing.is_diagonal or lam[0] <= 0 or lam[-1] < lam[0] * (1 - 1e-12):
        raise InvalidInputError("closed-form power split requires an i.i.d. sensing model")
    return float(lam[0])


def _comm_rate(comm, cfg, p_c):
    lam_c = comm.gram_eig.values
    p = _waterfill_or_zero(_levels(cfg.sigma2_c, lam_c), max(p_c, 0.0))
    return comm_mi_eig(lam_c, p, cfg.sigma2_c)


def p3_objective(split_p_s, sensing, comm, cfg):
    """Closed-form CAS distortion for i.i.d. sensing subchannels.

    ``h(P_s) = N M_s [(1 - e^{-I}) f(P_s) + lambda_s e^{-I}]`` with
    ``I = I_c(P_T - P_s) / (M_s N)`` and ``f`` the per-element MMSE under a
    uniform sensing allocation.
    """
    lam = _require_iid(sensing)
    n, m_s = sensing.n, sensing.m_s
    p_t = cfg.power_budget
    x = float(split_p_s)
    if not 0.0 <= x <= p_t:
        raise InvalidInputError(f"split {x} outside [0, {p_t}]")
    f = n * lam * cfg.sigma2_s / (n * cfg.sigma2_s + lam * x)
    e = np.exp(-_comm_rate(comm, cfg, p_t - x) / (m_s * n))
    return n * m_s * ((1.0 - e) * f + lam * e)


def golden_section(fun, lo, hi, rtol=1e-10, max_iter=500):
    """Minimize a unimodal scalar function on ``[lo, hi]``; returns ``(x, f(x))``."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fun(c), fun(d)
    scale = max(abs(hi - lo), 1e-300)
    for _ in range(max_iter):
        if b - a <= rtol * scale:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fun(d)
    # endpoints are candidates too: the minimum may sit on the boundary
    cands = [(fc, c), (fd, d), (fun(lo), float(lo)), (fun(hi), float(hi))]
    fx, x = min(cands)
    return x, fx


def p3_solve(sensing, comm, cfg, rtol=1e-10):
    """Optimal power split for i.i.d. sensing subchannels (convex scalar problem)."""
    _require_iid(sensing)
    x, h = golden_section(lambda s: p3_objective(s, sensing, comm, cfg), 0.0, cfg.power_budget, rtol)
    design = sw_eval(x, sensing, comm, cfg)
    design.result.meta.update({"solver": "p3", "p3_objective": h})
    return design
