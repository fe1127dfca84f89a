"""Estimator-style wrappers around the waveform designers.

Each designer takes a problem instance ``(sensing, comm, config)`` in
`fit` and exposes the optimized design as fitted attributes:

* ``design_``: the raw design object
* ``covariance_``: transmit covariance ``R`` with ``tr(R) <= P_T``
* ``distortion_``: CAS distortion ``D = D_s + D_c``
* ``result_``: the full `CasResult`

Hyperparameters live in ``__init__`` so `get_params` / `set_params` and
`sklearn.base.clone` work as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import InvalidInputError
from .channels import CommModel, SensingModel, SystemConfig
from .dual import AlignedInstance, hmi_search, mgp_solve, oracle_2d
from .separated import alg1_search, p3_solve

__all__ = [
    "PowerSplitSearch",
    "IIDPowerSplit",
    "WeightedMIDesign",
    "GradientProjectionDesign",
    "GridOracle2D",
]


def _check_problem(sensing, comm, config):
    if not isinstance(sensing, SensingModel):
        raise InvalidInputError("sensing must be a SensingModel")
    if not isinstance(comm, CommModel):
        raise InvalidInputError("comm must be a CommModel")
    config = SystemConfig() if config is None else config
    if not isinstance(config, SystemConfig):
        raise InvalidInputError("config must be a SystemConfig")
    if sensing.n != comm.n:
        raise InvalidInputError(f"sensing has {sensing.n} transmit dims, channel has {comm.n}")
    return config


class _WaveformDesigner(BaseEstimator):
    def fit(self, sensing, comm, config=None):
        config = _check_problem(sensing, comm, config)
        self.design_ = self._solve(sensing, comm, config)
        self.result_ = self.design_.result
        self.distortion_ = self.result_.d_total
        self.covariance_ = self._covariance(sensing, comm)
        self.n_features_in_ = sensing.n
        return self

    def _covariance(self, sensing, comm):
        return self.design_.r

    def score(self, sensing=None, comm=None, config=None):
        """Negative CAS distortion of the fitted design (higher is better)."""
        check_is_fitted(self, "distortion_")
        return -self.distortion_


class _SeparatedDesigner(_WaveformDesigner):
    def _covariance(self, sensing, comm):
        d = self.design_
        u_s, u_c = sensing.eig.basis, comm.gram_eig.basis
        return (u_s * d.p_s) @ u_s.conj().T + (u_c * d.p_c) @ u_c.conj().T


class PowerSplitSearch(_SeparatedDesigner):
    """Separated waveforms with the power split found by grid refinement."""

    def __init__(self, grid_l=20, eps=None, max_rounds=200):
        self.grid_l = grid_l
        self.eps = eps
        self.max_rounds = max_rounds

    def _solve(self, sensing, comm, config):
        return alg1_search(sensing, comm, config, self.grid_l, self.eps, self.max_rounds)


class IIDPowerSplit(_SeparatedDesigner):
    """Separated waveforms for i.i.d. sensing subchannels, split found by golden section."""

    def __init__(self, rtol=1e-10):
        self.rtol = rtol

    def _solve(self, sensing, comm, config):
        return p3_solve(sensing, comm, config, self.rtol)


class WeightedMIDesign(_WaveformDesigner):
    """Dual-functional waveform from a sweep over MI weights on ``n_alphas`` points of [0, 1]."""

    def __init__(self, n_alphas=11, aligned=None, max_iter=5000, rtol=1e-10):
        self.n_alphas = n_alphas
        self.aligned = aligned
        self.max_iter = max_iter
        self.rtol = rtol

    def _solve(self, sensing, comm, config):
        if int(self.n_alphas) < 2:
            raise InvalidInputError("n_alphas must be >= 2")
        alphas = np.linspace(0.0, 1.0, int(self.n_alphas))
        design = hmi_search(sensing, comm, config, alphas=alphas, aligned=self.aligned,
                            solver_kw={"max_iter": self.max_iter, "rtol": self.rtol})
        self.alpha_ = design.alpha
        return design


class GradientProjectionDesign(_WaveformDesigner):
    """Dual-functional waveform for aligned independent sensing subchannels."""

    def __init__(self, beta=None, eps=None, max_iter=10000, inactive="zero"):
        self.beta = beta
        self.eps = eps
        self.max_iter = max_iter
        self.inactive = inactive

    def _solve(self, sensing, comm, config):
        inst = AlignedInstance.from_models(sensing, comm, config)
        design = mgp_solve(inst, beta=self.beta, eps=self.eps, max_iter=self.max_iter,
                           inactive=self.inactive)
        self.power_ = design.p
        self.n_iter_ = design.result.meta["iterations"]
        return design


class GridOracle2D(_WaveformDesigner):
    """Exhaustive grid search for the two-antenna aligned problem."""

    def __init__(self, grid=200):
        self.grid = grid

    def _solve(self, sensing, comm, config):
        design = oracle_2d(AlignedInstance.from_models(sensing, comm, config), self.grid)
        self.power_ = design.p
        return design
