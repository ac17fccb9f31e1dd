"""Sub-Nyquist automatic modulation recognition via Nth-power spectral lines."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .sigsyn import (
    ALL_CLASSES,
    BasebandRecord,
    ModulationType,
    ParameterError,
    SignalParams,
    add_awgn,
    desk_profile,
    paper_profile,
    synthesize,
)
from .npt import PeakSet, SpectrumEstimate, detect_peaks, expected_peak_count, nyquist_spectrum
from .sensing import MeasurementModel, SensingOperator, make_model, measure
from .recon import SolverConfig, build_smoothing, reconstruct_order, solve_bp
from .features import energy_ratio, extract_features
from .classify import KernelSpec, SvmModel, hierarchical_orders, predict, train
from .estimate import ParamEstimate, estimate_params

__all__ = [
    "__version__",
    "BACKEND",
    "ALL_CLASSES",
    "BasebandRecord",
    "ModulationType",
    "ParameterError",
    "SignalParams",
    "add_awgn",
    "desk_profile",
    "paper_profile",
    "synthesize",
    "PeakSet",
    "SpectrumEstimate",
    "detect_peaks",
    "expected_peak_count",
    "nyquist_spectrum",
    "MeasurementModel",
    "SensingOperator",
    "make_model",
    "measure",
    "SolverConfig",
    "build_smoothing",
    "reconstruct_order",
    "solve_bp",
    "energy_ratio",
    "extract_features",
    "KernelSpec",
    "SvmModel",
    "hierarchical_orders",
    "predict",
    "train",
    "ParamEstimate",
    "estimate_params",
]
