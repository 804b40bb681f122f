"""Unambiguous velocity ranges and joint estimation for multipoint PC-MRI encodings."""

__version__ = "0.1.0"

from .encoding import (
    DifferenceSystem,
    EncodingScheme,
    Preprocessor,
    apply_preprocessor,
    build_difference_system,
    builtin_preprocessor,
    builtin_scheme,
    with_snr,
)
from .estimator import (
    JointEstimator,
    noise_covariance,
    noise_sensitivity,
    phase_differences,
    preprocessed_sensitivity,
    weighted_solve,
    wrap_search,
)
from .lattice import (
    ambiguity_lattice,
    centered_parallelepiped,
    compute_search_box,
    enumerate_lattice_points,
    extract_basis,
    preprocessed_range_volume,
    reduce_to_fundamental,
    slab_region_volume,
)
from .simulator import TrialConfig, generate_measurements, run_campaign

__all__ = [
    "DifferenceSystem",
    "EncodingScheme",
    "JointEstimator",
    "Preprocessor",
    "TrialConfig",
    "ambiguity_lattice",
    "apply_preprocessor",
    "build_difference_system",
    "builtin_preprocessor",
    "builtin_scheme",
    "centered_parallelepiped",
    "compute_search_box",
    "enumerate_lattice_points",
    "extract_basis",
    "generate_measurements",
    "noise_covariance",
    "noise_sensitivity",
    "phase_differences",
    "preprocessed_range_volume",
    "preprocessed_sensitivity",
    "reduce_to_fundamental",
    "run_campaign",
    "slab_region_volume",
    "weighted_solve",
    "with_snr",
    "wrap_search",
]
