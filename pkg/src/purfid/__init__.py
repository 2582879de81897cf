"""Quantum channels with classical control parameters under stochastic errors.

Computes the noiseless purity ``P0``, the error-averaged channel purity ``P``
and the channel fidelity ``F``, and checks the small-error law
``F = (P + P0) / 2`` against perturbative predictors.
"""

from .channels import (
    KrausSet,
    ParamChannel,
    apply,
    check_completeness,
    custom_channel,
    depolarizing_channel,
    identity_channel,
    ion_trap_channel,
    kraus_at,
    unitary_generator_channel,
)
from .matcore import DensityMatrix, bloch_to_density, hs_product, purity, validate_density
from .metrics import MetricsReport, channel_fidelity, channel_purity, evaluate, purity_noiseless
from .noise import AveragingSpec, FluctuationModel, average_output, gaussian, moments, shift, uniform
from .perturb import PredictorOutput, depolarizing_predict, ion_trap_predict, predict

__version__ = "0.1.0"

__all__ = [
    "AveragingSpec",
    "DensityMatrix",
    "FluctuationModel",
    "KrausSet",
    "MetricsReport",
    "ParamChannel",
    "PredictorOutput",
    "apply",
    "average_output",
    "bloch_to_density",
    "channel_fidelity",
    "channel_purity",
    "check_completeness",
    "custom_channel",
    "depolarizing_channel",
    "depolarizing_predict",
    "evaluate",
    "gaussian",
    "hs_product",
    "identity_channel",
    "ion_trap_channel",
    "ion_trap_predict",
    "kraus_at",
    "moments",
    "predict",
    "purity",
    "purity_noiseless",
    "shift",
    "uniform",
    "unitary_generator_channel",
    "validate_density",
]
