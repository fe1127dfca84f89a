"""System configuration and channel synthesis.

Random draws go through a Philox (counter-based) generator. Trial ``i`` of
an experiment seeded with ``s`` uses the substream keyed by ``s ^ i``, so
trials are reproducible individually and can run in any order.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import InvalidInputError, check_positive, check_psd, check_vector
from .numerics import EigSystem, hermitian_eig

__all__ = [
    "SystemConfig",
    "SensingModel",
    "CommModel",
    "make_rng",
    "complex_normal",
    "steering_vector",
    "gen_sensing_covariance",
    "gen_random_sensing",
    "gen_rayleigh_channel",
    "make_iid_sensing",
    "make_independent_sensing",
    "make_aligned_sensing",
    "noise_power_from_snr",
]

_MASK64 = (1 << 64) - 1


def noise_power_from_snr(power_budget, snr_db):
    """``sigma^2 = P_T / 10^(SNR_dB / 10)``."""
    return float(power_budget) / 10.0 ** (float(snr_db) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    n_tx: int = 10
    m_s: int = 5
    m_c: int = 5
    n_symbols: int = 100
    power_budget: float = None
    sigma2_s: float = 1.0
    sigma2_c: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.power_budget is None:
            # transmit power normalized to the symbol count
            object.__setattr__(self, "power_budget", float(self.n_symbols))
        for name in ("n_tx", "m_s", "m_c", "n_symbols"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        check_positive(self.power_budget, "power_budget")
        check_positive(self.sigma2_s, "sigma2_s")
        check_positive(self.sigma2_c, "sigma2_c")
        if not 0 <= int(self.seed) <= _MASK64:
            raise InvalidInputError("seed must fit in an unsigned 64-bit integer")

    def with_snr(self, snr_s_db=None, snr_c_db=None):
        """Copy with noise powers set from SNRs in dB (relative to the power budget)."""
        kw = {}
        if snr_s_db is not None:
            kw["sigma2_s"] = noise_power_from_snr(self.power_budget, snr_s_db)
        if snr_c_db is not None:
            kw["sigma2_c"] = noise_power_from_snr(self.power_budget, snr_c_db)
        return replace(self, **kw)


@dataclass(frozen=True)
class SensingModel:
    """Per-column covariance of the target response matrix."""

    sigma_s: np.ndarray
    m_s: int = 1
    eig: EigSystem = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        sigma = check_psd(self.sigma_s, "sigma_s", tol=1e-10)
        object.__setattr__(self, "sigma_s", sigma)
        eig = hermitian_eig(sigma) if self.eig is None else self.eig
        # PSD round-off: clip tiny negative eigenvalues
        object.__setattr__(self, "eig", EigSystem(np.maximum(eig.values, 0.0), eig.basis))
        if int(self.m_s) < 1:
            raise InvalidInputError("m_s must be >= 1")

    @property
    def n(self):
        return self.sigma_s.shape[0]

    @property
    def prior_variance(self):
        """Total prior uncertainty ``M_s * tr(Sigma_s)``."""
        return self.m_s * float(np.sum(np.maximum(self.eig.values, 0.0)))

    @property
    def is_diagonal(self):
        off = self.sigma_s - np.diag(np.diag(self.sigma_s))
        return np.abs(off).max(initial=0.0) <= 1e-12 * max(np.abs(self.sigma_s).max(), 1.0)

    def with_m_s(self, m_s):
        return SensingModel(self.sigma_s, m_s, self.eig)


@dataclass(frozen=True)
class CommModel:
    h_c: np.ndarray
    gram_eig: EigSystem = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        h = np.asarray(self.h_c, dtype=complex)
        if h.ndim != 2:
            raise InvalidInputError("h_c must be a matrix")
        object.__setattr__(self, "h_c", h)
        if self.gram_eig is None:
            eig = hermitian_eig(h.conj().T @ h)
            object.__setattr__(self, "gram_eig", EigSystem(np.maximum(eig.values, 0.0), eig.basis))

    @property
    def n(self):
        return self.h_c.shape[1]

    @property
    def m_c(self):
        return self.h_c.shape[0]

    @classmethod
    def from_gains(cls, lambda_c, basis=None):
        """Channel whose Gram matrix has eigenvalues `lambda_c` (and eigenvectors `basis`)."""
        lam = check_vector(lambda_c, "lambda_c", nonnegative=True)
        u = np.eye(lam.size, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
        h = np.sqrt(lam)[:, None] * u.conj().T
        order = np.argsort(-lam, kind="stable")
        return cls(h, EigSystem(lam[order], u[:, order]))


def make_rng(seed=0, trial=0):
    """Philox generator for the substream ``seed ^ trial``."""
    key = (int(seed) ^ int(trial)) & _MASK64
    return np.random.Generator(np.random.Philox(key=key))


def complex_normal(rng, shape):
    """CN(0, 1) samples by Box-Muller on uniform draws.

    With ``u1, u2 ~ U[0, 1)``: ``sqrt(-log(1 - u1)) * exp(2j*pi*u2)``, so
    real and imaginary parts each have variance 1/2.
    """
    u1 = rng.random(shape)
    u2 = rng.random(shape)
    return np.sqrt(-np.log1p(-u1)) * np.exp(2j * np.pi * u2)


def steering_vector(theta, n):
    """Half-wavelength ULA steering vector with unit norm, exponents 0..n-1."""
    n = int(n)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    k = np.arange(n)
    return np.exp(1j * np.pi * k * np.sin(theta)) / np.sqrt(n)


def gen_sensing_covariance(angles, gains, n):
    """``Sigma_s = sum_k gains_k^2 a(theta_k) a(theta_k)^H``."""
    angles = check_vector(angles, "angles")
    gains = check_vector(gains, "gains", nonnegative=True)
    if angles.size < 1 or angles.size != gains.size:
        raise InvalidInputError("angles and gains must be non-empty and equally long")
    a = np.stack([steering_vector(t, n) for t in angles], axis=1)
    sigma = (a * gains**2) @ a.conj().T
    return 0.5 * (sigma + sigma.conj().T)


def gen_random_sensing(rng, n, m_s, n_paths=10):
    """Sensing model from `n_paths` unit-gain paths at uniform angles in [-90, 90] degrees."""
    angles = rng.uniform(-np.pi / 2, np.pi / 2, size=n_paths)
    return SensingModel(gen_sensing_covariance(angles, np.ones(n_paths), n), m_s)


def gen_rayleigh_channel(m_c, n, rng):
    """Rayleigh-fading channel with i.i.d. CN(0, 1) entries."""
    if int(m_c) < 1 or int(n) < 1:
        raise InvalidInputError("channel dimensions must be >= 1")
    return CommModel(complex_normal(rng, (int(m_c), int(n))))


def make_iid_sensing(lambda_s, n, m_s=1):
    lambda_s = check_positive(lambda_s, "lambda_s")
    return SensingModel(lambda_s * np.eye(int(n), dtype=complex), m_s)


def make_independent_sensing(variances, m_s=1):
    """Diagonal sensing covariance (independent sensing subchannels)."""
    v = check_vector(variances, "variances", nonnegative=True)
    order = np.argsort(-v, kind="stable")
    eig = EigSystem(v[order], np.eye(v.size, dtype=complex)[:, order])
    return SensingModel(np.diag(v).astype(complex), m_s, eig)


def make_aligned_sensing(variances, comm, m_s=1):
    """Independent sensing subchannels rotated onto the communication subspace.

    Both spectra are paired in descending order: the largest sensing
    variance shares an eigenvector with the strongest communication
    eigenmode. Returns ``U_c diag(sorted variances) U_c^H``.
    """
    v = np.sort(check_vector(variances, "variances", nonnegative=True))[::-1]
    u = comm.gram_eig.basis
    if u.shape[0] != v.size:
        raise InvalidInputError("variances length must match the transmit dimension")
    sigma = (u * v) @ u.conj().T
    return SensingModel(0.5 * (sigma + sigma.conj().T), m_s, EigSystem(v, u))
