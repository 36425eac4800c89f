"""Quantum diffusion in random band matrices: sampling, propagation and diagrams."""

from .errors import ConfigError, ResourceLimitError, TruncationError
from .lattice import BandProfile, LatticeConfig, band_count, periodic_distance, s_power_checks
from .propagator import (
    a_coeff,
    alpha_coeff,
    coefficient_table,
    dense_expm_oracle,
    nb_column,
    nb_power_bruteforce,
    propagate_column,
)
from .sampler import BandMatrixSample, SeedSpec, apply, sample_band_matrix

__version__ = "0.1.0"

__all__ = [
    "BandMatrixSample",
    "BandProfile",
    "ConfigError",
    "LatticeConfig",
    "ResourceLimitError",
    "SeedSpec",
    "TruncationError",
    "a_coeff",
    "alpha_coeff",
    "apply",
    "band_count",
    "coefficient_table",
    "dense_expm_oracle",
    "nb_column",
    "nb_power_bruteforce",
    "periodic_distance",
    "propagate_column",
    "s_power_checks",
    "sample_band_matrix",
]
