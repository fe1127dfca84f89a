"""Sensing and communication metrics and the CAS distortion pipeline.

The CAS distortion of a waveform is ``D = D_s + D_c``: the MMSE of the
target-response estimate at the base station plus the distortion added
when that estimate is rate-distortion coded at the achievable rate of the
communication link.

Convention: waveform covariances ``R`` are power-normalized with the symbol
count already absorbed, i.e. the Gram matrix of the transmitted block
``X X^H`` equals ``R`` and ``tr(R) <= P_T``. `waveform_from_covariance` is
the one place that maps a covariance back to a block ``X``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._validation import InvalidInputError, check_psd, check_vector
from .numerics import hermitian_eig, psd_sqrt, reverse_waterfill

__all__ = [
    "CasResult",
    "SourceSpectrum",
    "MonteCarloMSE",
    "comm_mi_eig",
    "comm_mi_cov",
    "sensing_mmse_eig",
    "sensing_mmse_cov",
    "mmse_terms",
    "source_variances_cov",
    "sensing_mi",
    "comm_distortion",
    "evaluate_covariance",
    "mmse_estimator_mc",
    "waveform_from_covariance",
]

SPECTRUM_FLOOR = 1e-12


@dataclass
class CasResult:
    d_s: float
    d_c: float
    rate: float
    xi: float
    meta: dict = field(default_factory=dict)
    d_total: float = field(init=False)

    def __post_init__(self):
        self.d_s = float(self.d_s)
        self.d_c = float(self.d_c)
        self.d_total = self.d_s + self.d_c


@dataclass(frozen=True)
class SourceSpectrum:
    variances: np.ndarray


@dataclass(frozen=True)
class MonteCarloMSE:
    mean: float
    stderr: float
    trials: int


def _check_power(p, name):
    p = check_vector(p, name)
    if (p < 0).any():
        raise InvalidInputError(f"{name} must be nonnegative")
    return p


def comm_mi_eig(lambda_c, p_c, sigma2_c):
    """Achievable rate ``sum log(1 + lambda_c p_c / sigma_c^2)`` over eigen-subchannels."""
    lam = check_vector(lambda_c, "lambda_c", nonnegative=True)
    p = _check_power(p_c, "p_c")
    if lam.shape != p.shape:
        raise InvalidInputError("lambda_c and p_c lengths differ")
    return float(np.sum(np.log1p(lam * p / sigma2_c)))


def comm_mi_cov(comm, r, sigma2_c):
    """``logdet(I_Mc + H_c R H_c^H / sigma_c^2)`` in nats."""
    r = check_psd(r, "R")
    h = comm.h_c
    if r.shape[0] != h.shape[1]:
        raise InvalidInputError("R does not match the channel's transmit dimension")
    w = np.linalg.eigvalsh(h @ r @ h.conj().T / sigma2_c)
    return float(np.sum(np.log1p(np.maximum(w, 0.0))))


def mmse_terms(lambda_s, p_s, sigma2_s):
    """Per-subchannel MMSE ``f_i`` and estimate variance ``g_i = lambda_i - f_i``."""
    lam = check_vector(lambda_s, "lambda_s", nonnegative=True)
    p = _check_power(p_s, "p_s")
    denom = sigma2_s + lam * p
    f = lam * sigma2_s / denom
    g = lam**2 * p / denom
    return f, g


def sensing_mmse_eig(lambda_s, p_s, sigma2_s, m_s):
    f, _ = mmse_terms(lambda_s, p_s, sigma2_s)
    return int(m_s) * float(f.sum())


def _check_dims(sensing, r):
    r = check_psd(r, "R")
    if r.shape != sensing.sigma_s.shape:
        raise InvalidInputError(f"R has shape {r.shape}, expected {sensing.sigma_s.shape}")
    return r


def sensing_mmse_cov(sensing, r, sigma2_s):
    """Sensing distortion ``M_s tr((R / sigma_s^2 + Sigma_s^{-1})^{-1})``.

    Evaluated as ``Sigma^{1/2} (I + Sigma^{1/2} R Sigma^{1/2} / sigma^2)^{-1} Sigma^{1/2}``
    so a singular ``Sigma_s`` needs no inverse.
    """
    r = _check_dims(sensing, r)
    s_half = psd_sqrt(sensing.sigma_s)
    n = r.shape[0]
    a = np.eye(n) + s_half @ r @ s_half / sigma2_s
    a = 0.5 * (a + a.conj().T)
    c = scipy.linalg.cho_factor(a, lower=True)
    err = s_half @ scipy.linalg.cho_solve(c, s_half)
    return sensing.m_s * max(float(np.real(np.trace(err))), 0.0)


def _estimate_covariance(sensing, r, sigma2_s):
    """``R_eta = Sigma R^{1/2} (sigma^2 I + R^{1/2} Sigma R^{1/2})^{-1} R^{1/2} Sigma``."""
    r_half = psd_sqrt(r)
    sigma = sensing.sigma_s
    n = r.shape[0]
    c = sigma2_s * np.eye(n) + r_half @ sigma @ r_half
    c = 0.5 * (c + c.conj().T)
    b = r_half @ sigma
    cf = scipy.linalg.cho_factor(c, lower=True)
    r_eta = b.conj().T @ scipy.linalg.cho_solve(cf, b)
    return 0.5 * (r_eta + r_eta.conj().T)


def source_variances_cov(sensing, r, sigma2_s):
    """Spectrum of the estimate covariance, descending, with round-off truncated."""
    r = _check_dims(sensing, r)
    vals = hermitian_eig(_estimate_covariance(sensing, r, sigma2_s)).values
    top = vals[0] if vals.size else 0.0
    vals = np.where(vals > SPECTRUM_FLOOR * max(top, 0.0), vals, 0.0)
    return SourceSpectrum(vals)


def sensing_mi(sensing, r, sigma2_s):
    """``M_s logdet(I + Sigma_s R / sigma_s^2)`` via ``R^{1/2} Sigma_s R^{1/2}``."""
    r = _check_dims(sensing, r)
    r_half = psd_sqrt(r)
    w = np.linalg.eigvalsh(r_half @ sensing.sigma_s @ r_half / sigma2_s)
    return sensing.m_s * float(np.sum(np.log1p(np.maximum(w, 0.0))))


def comm_distortion(spectrum, rate, m_s):
    if isinstance(spectrum, SourceSpectrum):
        spectrum = spectrum.variances
    return reverse_waterfill(spectrum, rate, m_s)


def evaluate_covariance(sensing, comm, r, cfg, meta=None):
    """CAS distortion of a dual-functional waveform covariance ``R``."""
    d_s = sensing_mmse_cov(sensing, r, cfg.sigma2_s)
    rate = comm_mi_cov(comm, r, cfg.sigma2_c)
    rw = comm_distortion(source_variances_cov(sensing, r, cfg.sigma2_s), rate, sensing.m_s)
    info = {"achieved_rate": rw.achieved_rate, "k_active": rw.active_count}
    info.update(meta or {})
    return CasResult(d_s, rw.total_distortion, rate, rw.factor, info)


def waveform_from_covariance(r, n_symbols):
    """An ``N x T`` block ``X`` with ``X X^H = R`` (needs ``rank(R) <= T``)."""
    eig = hermitian_eig(check_psd(r, "R"))
    vals = np.maximum(eig.values, 0.0)
    n, t = vals.size, int(n_symbols)
    if np.count_nonzero(vals > 1e-12 * max(vals[0], 1e-300)) > t:
        raise InvalidInputError("rank of R exceeds the number of symbols")
    k = min(n, t)
    x = np.zeros((n, t), dtype=complex)
    x[:, :k] = eig.basis[:, :k] * np.sqrt(vals[:k])
    return x


def mmse_estimator_mc(sensing, x, sigma2_s, trials, rng, chunk=20000):
    """Empirical squared error of the linear MMSE estimate of the response matrix.

    Each trial draws ``h_m ~ CN(0, Sigma_s)`` for every receive antenna,
    observes ``y_m = X^H h_m + z_m`` with ``z_m ~ CN(0, sigma^2 I_T)`` and
    estimates ``h_m`` by ``Sigma_s X R_y^{-1} y_m`` where
    ``R_y = X^H Sigma_s X + sigma^2 I_T``.
    """
    from .channels import complex_normal

    x = np.asarray(x, dtype=complex)
    n = sensing.n
    if x.ndim != 2 or x.shape[0] != n:
        raise InvalidInputError(f"x must have {n} rows")
    trials = int(trials)
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    t = x.shape[1]
    m_s = sensing.m_s
    sigma = sensing.sigma_s
    s_half = psd_sqrt(sigma)
    r_y = x.conj().T @ sigma @ x + sigma2_s * np.eye(t)
    gain = sigma @ x @ np.linalg.inv(r_y)  # N x T
    noise_amp = np.sqrt(sigma2_s)

    errs = np.empty(trials)
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        # rows of H are h_m^T
        h = complex_normal(rng, (b, m_s, n)) @ s_half.T
        z = noise_amp * complex_normal(rng, (b, m_s, t))
        y = h @ x.conj() + z
        h_hat = y @ gain.T
        errs[done:done + b] = np.sum(np.abs(h - h_hat) ** 2, axis=(1, 2))
        done += b
    se = float(errs.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloMSE(float(errs.mean()), se, trials)
