"""Fuzzy-weighted fusion of multi-lead ECG trajectories in reconstructed phase space."""

from .embedding import (
    EmbeddingParams,
    TimeSeries,
    Trajectory,
    delay_embed,
    estimate_delay_ad,
    estimate_dimension_fnn,
    estimate_params,
    select_joint_params,
)
from .fis import build_fis_alpha, build_fis_d, evaluate, load_fis_config
from .lwlpa import extract_series, predict_next, weighted_affine_fit
from .nfda import FusionConfig, disorder_metric, fuse, trajectory_weights
from .synthgen import EcgModelParams, add_noise_at_snr, measure_snr, synth_vcg
from .vcgprep import MultiLeadRecord, detect_constant_leads, inverse_dower, select_eight_leads

__version__ = "0.1.0"

__all__ = [
    "EcgModelParams",
    "EmbeddingParams",
    "FusionConfig",
    "MultiLeadRecord",
    "TimeSeries",
    "Trajectory",
    "add_noise_at_snr",
    "build_fis_alpha",
    "build_fis_d",
    "delay_embed",
    "detect_constant_leads",
    "disorder_metric",
    "estimate_delay_ad",
    "estimate_dimension_fnn",
    "estimate_params",
    "evaluate",
    "extract_series",
    "fuse",
    "inverse_dower",
    "load_fis_config",
    "measure_snr",
    "predict_next",
    "select_eight_leads",
    "select_joint_params",
    "synth_vcg",
    "trajectory_weights",
    "weighted_affine_fit",
]
