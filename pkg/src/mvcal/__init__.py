"""Minimum-volume set estimation with offset-calibrated one-class SVMs.

A one-class SVM is trained with a deliberately large nu so its decision
function resolves the distribution tail; the set threshold is then
calibrated on a held-out split to hit a target mass, models from several
random splits are averaged, and the kernel bandwidth is picked by
minimizing the area under the Mass-Volume curve.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibratedModel,
    MassGrid,
    SplitSpec,
    calibrate,
    calibrate_offset,
    split,
)
from .ensemble import (
    Ensemble,
    build_ensemble,
    ensemble_score,
    ensemble_scores,
    membership,
)
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DimensionMismatchError,
    MvcalError,
    ValidationError,
)
from .geometry import (
    HyperRect,
    IndicatorSet,
    MassVolumeCurve,
    enclosing_hypercube,
    mass_volume_curve,
    mc_volume,
    select_bandwidth,
    symmetric_difference_volume,
)
from .kernel import KernelBandwidth, gaussian_kernel, kernel_matrix
from .ocsvm import (
    OcsvmConfig,
    OcsvmModel,
    decision_function,
    fit,
    outlier_and_sv_fractions,
    uniform_model,
)

__all__ = [
    "CalibratedModel",
    "ConvergenceError",
    "DegenerateDataError",
    "DimensionMismatchError",
    "Ensemble",
    "HyperRect",
    "IndicatorSet",
    "KernelBandwidth",
    "MassGrid",
    "MassVolumeCurve",
    "MvcalError",
    "OcsvmConfig",
    "OcsvmModel",
    "SplitSpec",
    "ValidationError",
    "build_ensemble",
    "calibrate",
    "calibrate_offset",
    "decision_function",
    "enclosing_hypercube",
    "ensemble_score",
    "ensemble_scores",
    "fit",
    "gaussian_kernel",
    "kernel_matrix",
    "mass_volume_curve",
    "mc_volume",
    "membership",
    "outlier_and_sv_fractions",
    "select_bandwidth",
    "split",
    "symmetric_difference_volume",
    "uniform_model",
]
