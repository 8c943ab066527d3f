"""Joint user scheduling and hybrid precoding for wideband mmWave downlinks."""

from .baselines import (METHODS, lisa_digital_wideband, lisa_hybrid_wideband,
                        lisa_per_subcarrier, run_method)
from .channel import (ChannelRealization, SystemConfig, channel_matrix,
                      channel_tensor, effective_rank, generate_realization,
                      stacked_channel, steering_vector)
from .harness import (ConfigError, ExperimentSpec, MethodSpec, ResultRow,
                      load_spec, parse_spec, run_cdf, run_gains, run_rank,
                      run_sweep, trial_seed)
from .hybrid import phase_project, quantize_phases
from .lisa import LisaOptions, run_lisa, subband_indices
from .metrics import (equivalent_gains, sum_rate_general, sum_rate_zf,
                      switchoff_cdf, zf_residual)
from .numerics import (dominant_singular_triplet, lower_triangular_inverse,
                       orthonormal_range, waterfilling)
from .state import Solution

__version__ = "0.1.0"

__all__ = [
    "METHODS", "lisa_digital_wideband", "lisa_hybrid_wideband",
    "lisa_per_subcarrier", "run_method", "ChannelRealization", "SystemConfig",
    "channel_matrix", "channel_tensor", "effective_rank",
    "generate_realization", "stacked_channel", "steering_vector",
    "ConfigError", "ExperimentSpec", "MethodSpec", "ResultRow", "load_spec",
    "parse_spec", "run_cdf", "run_gains", "run_rank", "run_sweep",
    "trial_seed", "phase_project", "quantize_phases", "LisaOptions",
    "run_lisa", "subband_indices", "equivalent_gains", "sum_rate_general",
    "sum_rate_zf", "switchoff_cdf", "zf_residual", "dominant_singular_triplet",
    "lower_triangular_inverse", "orthonormal_range", "waterfilling",
    "Solution",
]
