"""Input validation helpers shared by the solvers."""

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


def check_vector(v, name="v", nonnegative=False, allow_inf=False):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {v.shape}")
    if np.isnan(v).any() or (not allow_inf and np.isinf(v).any()):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if nonnegative and (v < 0).any():
        raise InvalidInputError(f"{name} must be nonnegative")
    return v


def check_square(a, name="A"):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def check_hermitian(a, name="A", tol=HERMITIAN_TOL):
    """Return the Hermitian part of `a` after checking it is close to Hermitian."""
    a = check_square(a, name).astype(complex)
    scale = max(np.abs(a).max(initial=0.0), 1.0)
    if np.abs(a - a.conj().T).max(initial=0.0) > tol * scale:
        raise InvalidInputError(f"{name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def check_psd(a, name="R", tol=PSD_TOL):
    a = check_hermitian(a, name, tol=max(tol, HERMITIAN_TOL))
    w = np.linalg.eigvalsh(a)
    if w.size and w[0] < -tol * max(abs(w[-1]), 1e-12):
        raise InvalidInputError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return a


def check_positive(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise InvalidInputError(f"{name} must be a positive finite number, got {x}")
    return x
