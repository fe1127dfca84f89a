"""Dual-functional waveform design.

One waveform covariance ``R`` serves both sensing and communication. Two
solvers:

* heuristic MI maximization: sweep a weight ``alpha`` and maximize
  ``alpha I_s(R) + (1 - alpha) I_c(R)`` for each, keeping the ``R`` with the
  lowest CAS distortion;
* modified gradient projection, for independent sensing subchannels aligned
  with the communication eigenmodes, acting directly on the power vector.

`oracle_2d` brute-forces the two-antenna aligned case.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from ._validation import InvalidInputError, check_vector
from .core import CasResult, evaluate_covariance, mmse_terms
from .numerics import project_capped_simplex, project_psd_trace, psd_sqrt, reverse_waterfill, waterfill

__all__ = [
    "DwDesign",
    "AlignedInstance",
    "weighted_mi_objective",
    "weighted_mi_gradient",
    "weighted_mi_solve",
    "weighted_mi_solve_aligned",
    "kkt_residual",
    "hmi_search",
    "mgp_objective",
    "mgp_gradient",
    "mgp_solve",
    "oracle_2d",
    "aligned_eval",
]

ARMIJO_C = 1e-4


@dataclass
class DwDesign:
    r: np.ndarray
    result: CasResult
    p: np.ndarray = None
    alpha: float = None
    k_active: int = None


# -- weighted MI maximization -------------------------------------------------


class _WeightedMI:
    """Objective and gradient of ``alpha I_s(R) + (1 - alpha) I_c(R)``."""

    def __init__(self, alpha, sensing, comm, cfg):
        self.alpha = float(alpha)
        self.m_s = sensing.m_s
        self.s_half = psd_sqrt(sensing.sigma_s)
        self.h = comm.h_c
        self.sig_s = cfg.sigma2_s
        self.sig_c = cfg.sigma2_c
        self.n = sensing.n

    def _sense(self, r):
        m = self.sig_s * np.eye(self.n) + self.s_half @ r @ self.s_half
        return scipy.linalg.cho_factor(0.5 * (m + m.conj().T), lower=True)

    def _comm(self, r):
        m = self.sig_c * np.eye(self.h.shape[0]) + self.h @ r @ self.h.conj().T
        return scipy.linalg.cho_factor(0.5 * (m + m.conj().T), lower=True)

    def value(self, r):
        v = 0.0
        if self.alpha > 0:
            c, _ = self._sense(r)
            logdet = 2 * np.sum(np.log(np.abs(np.diag(c)))) - self.n * np.log(self.sig_s)
            v += self.alpha * self.m_s * logdet
        if self.alpha < 1:
            c, _ = self._comm(r)
            logdet = 2 * np.sum(np.log(np.abs(np.diag(c)))) - self.h.shape[0] * np.log(self.sig_c)
            v += (1 - self.alpha) * logdet
        return float(v)

    def gradient(self, r):
        g = np.zeros((self.n, self.n), dtype=complex)
        if self.alpha > 0:
            cf = self._sense(r)
            g += self.alpha * self.m_s * (self.s_half @ scipy.linalg.cho_solve(cf, self.s_half))
        if self.alpha < 1:
            cf = self._comm(r)
            g += (1 - self.alpha) * (self.h.conj().T @ scipy.linalg.cho_solve(cf, self.h))
        return 0.5 * (g + g.conj().T)


def weighted_mi_objective(r, alpha, sensing, comm, cfg):
    return _WeightedMI(alpha, sensing, comm, cfg).value(r)


def weighted_mi_gradient(r, alpha, sensing, comm, cfg):
    return _WeightedMI(alpha, sensing, comm, cfg).gradient(r)


def _inner(a, b):
    return float(np.real(np.vdot(a, b)))


def kkt_residual(r, grad, budget, step=None):
    """Relative norm of the projected-gradient map at ``r``.

    ``||Proj(r + s G) - r|| / (s ||G||)`` with a small step ``s``; zero exactly
    at a stationary point of the trace-constrained PSD problem.
    """
    gn = np.linalg.norm(grad)
    if gn == 0:
        return 0.0
    if step is None:
        step = 1e-3 * budget / gn
    moved = project_psd_trace(r + step * grad, budget) - r
    return float(np.linalg.norm(moved) / (step * gn))


def weighted_mi_solve(alpha, sensing, comm, cfg, max_iter=5000, rtol=1e-10, kkt_tol=1e-9,
                      r0=None, return_info=False):
    """Maximize the weighted MI over ``{R >= 0, tr(R) <= P_T}``.

    Projected gradient ascent. The trial step starts from the
    Barzilai-Borwein estimate (1.0 on the first iteration) and is halved
    until the Armijo sufficient-increase condition holds along the
    projection arc. Stops when the relative objective gain drops below
    `rtol` with the projected-gradient residual below `kkt_tol`, or after
    `max_iter` iterations.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")
    p_t = cfg.power_budget
    n = sensing.n
    prob = _WeightedMI(alpha, sensing, comm, cfg)

    r = np.eye(n, dtype=complex) * (p_t / n) if r0 is None else project_psd_trace(r0, p_t)
    f = prob.value(r)
    g = prob.gradient(r)
    step = 1.0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        t = step
        for _ in range(60):
            r_new = project_psd_trace(r + t * g, p_t)
            d = r_new - r
            f_new = prob.value(r_new)
            if f_new >= f + ARMIJO_C * _inner(g, d):
                break
            t *= 0.5
        else:
            converged = True
            break
        g_new = prob.gradient(r_new)
        s, y = d, g_new - g
        gain = f_new - f
        r, f, g = r_new, f_new, g_new
        # BB step for a concave objective: s' s / -(s' y)
        sy = -_inner(s, y)
        step = _inner(s, s) / sy if sy > 0 else min(2 * t, 1e6)
        if gain <= rtol * max(abs(f), 1e-300) and kkt_residual(r, g, p_t) <= kkt_tol:
            converged = True
            break
    if return_info:
        return r, {"iterations": it, "converged": converged, "objective": f,
                   "kkt": kkt_residual(r, g, p_t)}
    return r


# -- aligned (independent sensing subchannel) instances -----------------------


@dataclass(frozen=True)
class AlignedInstance:
    """Sensing and communication eigenmodes paired in descending order."""

    lambda_s: np.ndarray
    lambda_c: np.ndarray
    sigma2_s: float
    sigma2_c: float
    m_s: int
    power_budget: float
    basis: np.ndarray = None

    @classmethod
    def from_models(cls, sensing, comm, cfg):
        """Pair the sensing spectrum with the communication eigenmodes.

        `sensing` must have independent subchannels (diagonal covariance)
        or already share the communication eigenbasis.
        """
        u = comm.gram_eig.basis
        lam_s = sensing.eig.values
        shared = np.allclose(sensing.eig.basis, u, atol=1e-12)
        if not (sensing.is_diagonal or shared):
            raise InvalidInputError("aligned design needs independent sensing subchannels")
        lam_s = np.sort(np.maximum(lam_s, 0.0))[::-1]
        return cls(lam_s, comm.gram_eig.values.copy(), cfg.sigma2_s, cfg.sigma2_c,
                   sensing.m_s, cfg.power_budget, u)

    @property
    def n(self):
        return self.lambda_s.size

    @property
    def prior_variance(self):
        return self.m_s * float(self.lambda_s.sum())

    def covariance(self, p):
        u = self.basis if self.basis is not None else np.eye(self.n)
        return (u * p) @ u.conj().T


def _rate(inst, p):
    return float(np.sum(np.log1p(inst.lambda_c * p / inst.sigma2_c)))


def aligned_eval(p, inst, meta=None):
    """CAS distortion of power vector `p` on the aligned eigenmodes."""
    p = check_vector(p, "p", nonnegative=True)
    f, g = mmse_terms(inst.lambda_s, p, inst.sigma2_s)
    rate = _rate(inst, p)
    rw = reverse_waterfill(g, rate, inst.m_s)
    info = {"achieved_rate": rw.achieved_rate, "k_active": rw.active_count}
    info.update(meta or {})
    return CasResult(inst.m_s * float(f.sum()), rw.total_distortion, rate, rw.factor, info)


def _aligned_powers(nu, a, s, b, c):
    """Largest p >= 0 with ``a/(s+p) + b/(c+p) = nu`` (0 when unreachable)."""
    a_on = a > 0
    b_on = b > 0
    s = np.where(a_on, s, 1.0)
    c = np.where(b_on, c, 1.0)
    a = np.where(a_on, a, 0.0)
    b = np.where(b_on, b, 0.0)
    phi0 = a / s + b / c
    bb = nu * (s + c) - a - b
    cc = nu * s * c - a * c - b * s
    disc = np.sqrt(np.maximum(bb * bb - 4 * nu * cc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(bb >= 0, -2 * cc / (bb + disc), (-bb + disc) / (2 * nu))
    return np.where(phi0 > nu, np.maximum(root, 0.0), 0.0)


def weighted_mi_solve_aligned(alpha, inst):
    """Weighted MI maximization when both covariances share an eigenbasis.

    The problem separates over eigenmodes; the power budget multiplier is
    found by bracketed root finding.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")
    with np.errstate(divide="ignore"):
        s = np.where(inst.lambda_s > 0, inst.sigma2_s / np.where(inst.lambda_s > 0, inst.lambda_s, 1), np.inf)
        c = np.where(inst.lambda_c > 0, inst.sigma2_c / np.where(inst.lambda_c > 0, inst.lambda_c, 1), np.inf)
    a = np.where(np.isfinite(s), alpha * inst.m_s, 0.0)
    b = np.where(np.isfinite(c), 1.0 - alpha, 0.0)
    if not (a > 0).any() and not (b > 0).any():
        return np.full(inst.n, inst.power_budget / inst.n)
    # a pure single-term problem is plain water-filling
    if not (b > 0).any():
        return waterfill(s, inst.power_budget).allocation
    if not (a > 0).any():
        return waterfill(c, inst.power_budget).allocation
    p_t = inst.power_budget

    def excess(log_nu):
        return _aligned_powers(np.exp(log_nu), a, s, b, c).sum() - p_t

    phi0 = np.max(np.where(a > 0, a / np.where(a > 0, s, 1), 0) + np.where(b > 0, b / np.where(b > 0, c, 1), 0))
    hi = np.log(phi0)
    lo = hi - 1.0
    while excess(lo) < 0:
        lo -= 1.0
    log_nu = scipy.optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    p = _aligned_powers(np.exp(log_nu), a, s, b, c)
    # remove the bisection residue so the budget is met exactly
    return p * (p_t / p.sum())


def _commuting(sensing, comm):
    sig = sensing.sigma_s
    gram = comm.h_c.conj().T @ comm.h_c
    comm_err = np.linalg.norm(sig @ gram - gram @ sig)
    scale = np.linalg.norm(sig) * np.linalg.norm(gram)
    return comm_err <= 1e-10 * max(scale, 1e-300)


def hmi_search(sensing, comm, cfg, grid_l=10, alphas=None, aligned=None, solver_kw=None):
    """Heuristic MI maximization over a grid of weights.

    Evaluates ``alpha = l / grid_l`` for ``l = 0..grid_l`` (or the explicit
    `alphas` list) and returns the covariance with the lowest CAS
    distortion; ties go to the earlier weight.

    When the sensing and communication covariances commute (independent
    sensing subchannels after alignment) the separable solver is used
    unless ``aligned=False``.
    """
    if alphas is None:
        grid_l = int(grid_l)
        if grid_l < 1:
            raise InvalidInputError("grid_l must be >= 1")
        alphas = np.arange(grid_l + 1) / grid_l
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise InvalidInputError("empty alpha list")
    if aligned is None:
        aligned = _commuting(sensing, comm)
    inst = None
    if aligned:
        u = comm.gram_eig.basis
        # sensing variances read off in the communication eigenbasis
        lam_s = np.real(np.einsum("ji,jk,ki->i", u.conj(), sensing.sigma_s, u))
        inst = AlignedInstance(np.maximum(lam_s, 0.0), comm.gram_eig.values, cfg.sigma2_s,
                               cfg.sigma2_c, sensing.m_s, cfg.power_budget, u)

    best = None
    curve = []
    for a in alphas:
        if aligned:
            p = weighted_mi_solve_aligned(a, inst)
            res = aligned_eval(p, inst, {"alpha": a})
            r = inst.covariance(p)
        else:
            r, info = weighted_mi_solve(a, sensing, comm, cfg, return_info=True, **(solver_kw or {}))
            p = None
            res = evaluate_covariance(sensing, comm, r, cfg, {"alpha": a, "iterations": info["iterations"]})
        curve.append(res.d_total)
        if best is None or res.d_total < best.result.d_total:
            best = DwDesign(r, res, p, a, res.meta["k_active"])
    best.result.meta.update({"solver": "hmi", "alphas": alphas, "alpha_curve": curve,
                             "power": float(np.real(np.trace(best.r)))})
    return best


# -- modified gradient projection ---------------------------------------------


def _state(p, inst):
    _, g = mmse_terms(inst.lambda_s, p, inst.sigma2_s)
    rate = _rate(inst, p)
    rw = reverse_waterfill(g, rate, inst.m_s)
    active = g > rw.factor
    return g, rate, rw, active


def mgp_objective(p, inst):
    """``h(p) = sum_active g_i(p) - K xi`` with ``(K, xi)`` from reverse water-filling.

    Returns ``(h, K, xi)``. The CAS distortion is ``M_s (sum(lambda_s) - h)``.
    """
    p = check_vector(p, "p", nonnegative=True)
    if p.size != inst.n or p.sum() > inst.power_budget * (1 + 1e-9):
        raise InvalidInputError("p is not in the feasible set")
    g, _, rw, active = _state(p, inst)
    h = float(np.sum(g[active] - rw.factor))
    return h, int(active.sum()), rw.factor


def _frozen_objective(p, inst, active):
    """``h`` with the active set held fixed (``xi`` from the SCT equality)."""
    _, g = mmse_terms(inst.lambda_s, p, inst.sigma2_s)
    k = int(active.sum())
    if k == 0:
        return 0.0
    f_tilde = (np.sum(np.log(g[active])) - _rate(inst, p) / inst.m_s) / k
    return float(np.sum(g[active]) - k * np.exp(f_tilde))


def mgp_gradient(p, inst, active=None, inactive="zero", p_floor=None):
    """Gradient of `mgp_objective` with the active set frozen.

    Active components follow the closed form. With ``inactive="zero"``
    the remaining components are zero; ``inactive="exact"`` keeps their
    true contribution through the communication rate.
    """
    p = check_vector(p, "p", nonnegative=True)
    if p_floor is None:
        p_floor = 1e-12 * inst.power_budget
    if active is None:
        _, _, rw, active = _state(p, inst)
        xi = rw.factor
    else:
        active = np.asarray(active, dtype=bool)
        _, g = mmse_terms(inst.lambda_s, p, inst.sigma2_s)
        k = int(active.sum())
        xi = np.exp((np.sum(np.log(g[active])) - _rate(inst, p) / inst.m_s) / k) if k else 0.0
    k = int(active.sum())
    grad = np.zeros_like(p)
    if k == 0:
        return grad
    lam, sig = inst.lambda_s, inst.sigma2_s
    lc, sc = inst.lambda_c, inst.sigma2_c
    pa = np.maximum(p, p_floor)
    d_rate = lc / (sc + lc * pa)
    d_g = lam**2 * sig / (sig + lam * pa) ** 2
    d_f = (sig / (sig * pa + lam * pa**2) - d_rate / inst.m_s) / k
    full = d_g - k * xi * d_f
    grad[active] = full[active]
    if inactive == "exact":
        grad[~active] = xi * d_rate[~active] / inst.m_s
    elif inactive != "zero":
        raise InvalidInputError("inactive must be 'zero' or 'exact'")
    return grad


def mgp_solve(inst, p0=None, beta=None, eps=None, max_iter=10000, max_backtracks=40,
              inactive="zero"):
    """Modified gradient projection on the aligned power vector.

    Each iteration recomputes ``(K, xi)``, steps along the gradient, projects
    onto ``{p >= 0, sum(p) <= P_T}`` and backtracks (Armijo) toward the
    projected point. If no backtrack improves the objective the step is
    rejected and the solver stops at the current point.
    """
    p_t = inst.power_budget
    n = inst.n
    p = np.full(n, p_t / (2 * n)) if p0 is None else check_vector(p0, "p0", nonnegative=True).copy()
    if p.size != n or p.sum() > p_t * (1 + 1e-12):
        raise InvalidInputError("p0 is not in the feasible set")
    if eps is None:
        eps = 1e-9 * inst.prior_variance

    h, k, xi = mgp_objective(p, inst)
    if beta is None:
        g0 = mgp_gradient(p, inst, inactive=inactive)
        gn = np.linalg.norm(g0)
        beta = p_t / (n * gn) if gn > 0 else 1.0
    history = [h]
    k_changes = 0
    rejected = False
    it = 0
    for it in range(1, max_iter + 1):
        _, _, _, active = _state(p, inst)
        grad = mgp_gradient(p, inst, active=active, inactive=inactive)
        target = project_capped_simplex(p + beta * grad, p_t)
        d = target - p
        slope = float(grad @ d)
        t = 1.0
        for _ in range(max_backtracks):
            cand = p + t * d
            h_new, k_new, xi_new = mgp_objective(np.maximum(cand, 0.0), inst)
            if h_new >= h + ARMIJO_C * t * slope and h_new >= h:
                break
            t *= 0.5
        else:
            rejected = True
            break
        p = np.maximum(cand, 0.0)
        k_changes += int(k_new != k)
        delta = h_new - h
        h, k, xi = h_new, k_new, xi_new
        history.append(h)
        if abs(delta) <= eps:
            break

    res = aligned_eval(p, inst, {
        "solver": "mgp", "iterations": it, "k_transitions": k_changes, "rejected_step": rejected,
        "h_history": history, "power": float(p.sum()),
    })
    return DwDesign(inst.covariance(p), res, p, None, k)


# -- exhaustive 2-D oracle ----------------------------------------------------


def oracle_2d(inst, grid=200):
    """Brute force over a ``grid x grid`` lattice of ``[0, P_T]^2`` (feasible points only).

    Ties (within round-off of the prior variance) go to the lexicographically
    smallest ``(p1, p2)``.
    """
    if inst.n != 2:
        raise InvalidInputError("oracle_2d requires N = 2")
    grid = int(grid)
    axis = np.linspace(0.0, inst.power_budget, grid)
    best_d, best_p = np.inf, None
    tol = 1e-12 * inst.power_budget
    tie = 1e-12 * max(inst.prior_variance, 1e-300)
    for p1 in axis:
        for p2 in axis:
            if p1 + p2 > inst.power_budget + tol:
                break
            p = np.array([p1, p2])
            d = aligned_eval(p, inst).d_total
            if d < best_d - tie:
                best_d, best_p = d, p
    res = aligned_eval(best_p, inst, {"solver": "oracle2d", "grid": grid,
                                      "cell": float(axis[1] - axis[0]) if grid > 1 else 0.0,
                                      "power": float(best_p.sum())})
    return DwDesign(inst.covariance(best_p), res, best_p, None, res.meta["k_active"])
