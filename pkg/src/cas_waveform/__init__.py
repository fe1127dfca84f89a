"""Waveform design for communication-assisted sensing.

A base station estimates a target response matrix from its own echoes and
forwards the estimate to a user over a MIMO link. The quality measure is
the CAS distortion: sensing MMSE plus the rate-distortion loss of sending
the estimate at the link's achievable rate.
"""

from ._validation import InvalidInputError
from .channels import (
    CommModel,
    SensingModel,
    SystemConfig,
    gen_random_sensing,
    gen_rayleigh_channel,
    make_aligned_sensing,
    make_iid_sensing,
    make_independent_sensing,
    make_rng,
)
from .core import CasResult, evaluate_covariance
from .dual import AlignedInstance, DwDesign, hmi_search, mgp_solve, oracle_2d, weighted_mi_solve
from .estimators import (
    GradientProjectionDesign,
    GridOracle2D,
    IIDPowerSplit,
    PowerSplitSearch,
    WeightedMIDesign,
)
from .separated import SwDesign, alg1_search, p3_solve, sw_eval

__version__ = "0.1.0"

__all__ = [
    "InvalidInputError",
    "CommModel",
    "SensingModel",
    "SystemConfig",
    "gen_random_sensing",
    "gen_rayleigh_channel",
    "make_aligned_sensing",
    "make_iid_sensing",
    "make_independent_sensing",
    "make_rng",
    "CasResult",
    "evaluate_covariance",
    "AlignedInstance",
    "DwDesign",
    "hmi_search",
    "mgp_solve",
    "oracle_2d",
    "weighted_mi_solve",
    "SwDesign",
    "alg1_search",
    "p3_solve",
    "sw_eval",
    "PowerSplitSearch",
    "IIDPowerSplit",
    "WeightedMIDesign",
    "GradientProjectionDesign",
    "GridOracle2D",
]
