"""Scalar and vector optimization primitives.

Water-filling (capacity / MMSE power allocation), reverse water-filling
(Gaussian rate-distortion), Euclidean projections onto the power-feasible
sets, and a Hermitian eigendecomposition facade. All logarithms are natural
(rates in nats).
"""

from dataclasses import dataclass

import numpy as np

from ._validation import InvalidInputError, check_hermitian, check_positive, check_vector

__all__ = [
    "WaterfillSolution",
    "ReverseWaterfillSolution",
    "EigSystem",
    "waterfill",
    "reverse_waterfill",
    "project_capped_simplex",
    "hermitian_eig",
    "project_psd_trace",
    "psd_sqrt",
]


@dataclass(frozen=True)
class WaterfillSolution:
    factor: float
    allocation: np.ndarray
    active_count: int


@dataclass(frozen=True)
class ReverseWaterfillSolution:
    factor: float
    per_component_distortion: np.ndarray
    total_distortion: float
    achieved_rate: float
    active_count: int


@dataclass(frozen=True)
class EigSystem:
    values: np.ndarray
    basis: np.ndarray

    def reconstruct(self):
        return (self.basis * self.values) @ self.basis.conj().T


def waterfill(levels, budget):
    """Water-filling over parallel subchannels.

    Finds the water level ``zeta`` with ``sum((zeta - levels)^+) == budget``
    and returns the allocation ``max(zeta - levels, 0)``.

    Parameters
    ----------
    levels : array_like
        Noise-to-gain ratios ``sigma^2 / lambda_i``. ``inf`` marks a dead
        subchannel, which never receives power.
    budget : float
        Total power, nonnegative.

    Returns
    -------
    WaterfillSolution
    """
    levels = check_vector(levels, "levels", allow_inf=True)
    budget = float(budget)
    if budget < 0 or not np.isfinite(budget):
        raise InvalidInputError(f"budget must be nonnegative and finite, got {budget}")
    finite = np.isfinite(levels)
    if levels.size == 0 or not finite.any():
        raise InvalidInputError("waterfill needs at least one finite level")
    if (levels[finite] < 0).any():
        raise InvalidInputError("levels must be nonnegative")

    # exact active-set solve on the sorted finite levels
    srt = np.sort(levels[finite], kind="stable")
    csum = np.cumsum(srt)
    m = srt.size
    zeta = srt[0]
    for k in range(1, m + 1):
        zeta = (budget + csum[k - 1]) / k
        if k == m or zeta <= srt[k]:
            break

    alloc = np.zeros_like(levels)
    alloc[finite] = np.maximum(zeta - levels[finite], 0.0)
    return WaterfillSolution(float(zeta), alloc, int(np.count_nonzero(alloc > 0)))


def reverse_waterfill(variances, rate_budget, weight=1):
    """Reverse water-filling for independent complex Gaussian sources.

    Each of ``weight`` identical copies of the source vector is coded, so
    the rate spent is ``weight * sum(log(g_i / D_i))`` with
    ``D_i = min(g_i, xi)``.

    Parameters
    ----------
    variances : array_like
        Source variances ``g_i >= 0``. Zero-variance components cost no rate
        and contribute no distortion.
    rate_budget : float
        Coding rate in nats.
    weight : int
        Number of identically distributed copies (the receive-antenna count).

    Returns
    -------
    ReverseWaterfillSolution
        ``total_distortion`` already includes the ``weight`` factor.
    """
    g = check_vector(variances, "variances", nonnegative=True)
    rate = float(rate_budget)
    if not rate >= 0 or not np.isfinite(rate):
        raise InvalidInputError(f"rate_budget must be nonnegative and finite, got {rate}")
    weight = int(weight)
    if weight < 1:
        raise InvalidInputError("weight must be a positive integer")

    pos = g[g > 0]
    if pos.size == 0:
        return ReverseWaterfillSolution(0.0, np.zeros_like(g), 0.0, 0.0, 0)

    r = rate / weight
    srt = np.sort(pos)[::-1]
    logs = np.log(srt)
    csum = np.cumsum(logs)
    m = srt.size
    log_xi = logs[0]
    for k in range(1, m + 1):
        log_xi = (csum[k - 1] - r) / k
        if k == m or log_xi >= logs[k]:
            break
    xi = float(np.exp(log_xi))

    d = np.minimum(g, xi)
    active = g > xi
    achieved = weight * float(np.sum(np.log(g[active]) - log_xi))
    return ReverseWaterfillSolution(
        xi, d, weight * float(d.sum()), achieved, int(np.count_nonzero(active))
    )


def project_capped_simplex(v, budget):
    """Euclidean projection onto ``{x >= 0, sum(x) <= budget}``."""
    v = check_vector(v, "v")
    budget = check_positive(budget, "budget")
    clamped = np.maximum(v, 0.0)
    if clamped.sum() <= budget:
        return clamped
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - budget
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def hermitian_eig(a):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Ties keep the solver's original ordering, so results are deterministic.
    """
    a = check_hermitian(a, "A")
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    return EigSystem(w[order], v[:, order])


def project_psd_trace(a, budget):
    """Project a Hermitian matrix onto ``{R >= 0, tr(R) <= budget}``."""
    budget = check_positive(budget, "budget")
    eig = hermitian_eig(a)
    vals = project_capped_simplex(eig.values, budget)
    r = (eig.basis * vals) @ eig.basis.conj().T
    return 0.5 * (r + r.conj().T)


def psd_sqrt(a):
    """Hermitian square root of a PSD matrix (negative round-off clipped)."""
    eig = hermitian_eig(a)
    s = np.sqrt(np.maximum(eig.values, 0.0))
    r = (eig.basis * s) @ eig.basis.conj().T
    return 0.5 * (r + r.conj().T)
