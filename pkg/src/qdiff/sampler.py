"""Reproducible sampling of the phase band matrix ``H_xy = sqrt(S_xy) A_xy``.

Each replica gets its own Philox (counter-based) stream keyed by a
splitmix64 mix of ``(master_seed, replica_index)``.  Replica ``i`` never
touches the state of replica ``j``, so sampling is embarrassingly parallel and
bit-reproducible for any worker count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ResourceLimitError
from .lattice import LatticeConfig

__all__ = [
    "GENERATOR_VERSION",
    "SeedSpec",
    "BandMatrixSample",
    "band_pairs",
    "derive_stream_key",
    "sample_band_matrix",
    "apply",
]

GENERATOR_VERSION = "philox4x64/splitmix64-key/u64>>11-angle v1"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream_key(master_seed: int, replica_index: int) -> int:
    """64-bit Philox key: ``splitmix64(master ^ splitmix64(replica))``.

    splitmix64 is a bijection on 64-bit words, so distinct replica indices
    give distinct keys for a fixed master seed.
    """
    return _splitmix64((master_seed & _MASK64) ^ _splitmix64(replica_index & _MASK64))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    replica_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ConfigError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.replica_index < 0:
            raise ConfigError(f"replica_index must be >= 0, got {self.replica_index}")

    @property
    def stream_key(self) -> int:
        return derive_stream_key(self.master_seed, self.replica_index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.stream_key))

    def to_dict(self) -> dict:
        return {"master_seed": self.master_seed, "replica_index": self.replica_index}


_PAIR_CACHE: dict = {}


def band_pairs(cfg: LatticeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Unordered band pairs ``(x, y)`` with ``x < y``, sorted lexicographically."""
    key = (cfg.d, cfg.n, cfg.w)
    if key not in _PAIR_CACHE:
        nbr = cfg.neighbor_table()
        ix = np.repeat(np.arange(cfg.volume, dtype=np.int64), nbr.shape[1])
        iy = nbr.ravel()
        keep = ix < iy
        ix, iy = ix[keep], iy[keep]
        order = np.lexsort((iy, ix))
        _PAIR_CACHE[key] = (ix[order], iy[order])
    return _PAIR_CACHE[key]


@dataclass(frozen=True)
class BandMatrixSample:
    """One sampled ``H``.  ``values[k]`` is ``H[rows[k], cols[k]]`` with rows < cols."""

    config: LatticeConfig
    seed: SeedSpec
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    generator_version: str = GENERATOR_VERSION

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        V = self.config.volume
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        v = np.concatenate([self.values, np.conj(self.values)])
        return sp.csr_matrix((v, (r, c)), shape=(V, V))

    def dense(self) -> np.ndarray:
        if self.config.volume > 4096:
            raise ResourceLimitError(f"dense H refused for volume {self.config.volume}")
        V = self.config.volume
        out = np.zeros((V, V), dtype=np.complex128)
        # band pairs are distinct, so plain assignment equals the summed csr form
        out[self.rows, self.cols] = self.values
        out[self.cols, self.rows] = np.conj(self.values)
        return out

    def to_json(self) -> str:
        pairs = [
            [int(i), int(j), float(z.real), float(z.imag)]
            for i, j, z in zip(self.rows, self.cols, self.values)
        ]
        return json.dumps(
            {
                "config": self.config.to_dict(),
                "pairs": pairs,
                "seed": self.seed.to_dict(),
                "generator_version": self.generator_version,
            }
        )


def sample_band_matrix(cfg: LatticeConfig, seed: SeedSpec) -> BandMatrixSample:
    """Draw one uniform phase per unordered band pair, in linearised order."""
    rows, cols = band_pairs(cfg)
    raw = seed.generator().bit_generator.random_raw(rows.size)
    # top 53 bits -> [0, 1), then scale to [0, 2*pi)
    theta = (raw >> np.uint64(11)).astype(np.float64) * (2.0 * np.pi / 2.0**53)
    amp = np.sqrt(1.0 / (cfg.M - 1))
    values = amp * np.exp(1j * theta)
    return BandMatrixSample(config=cfg, seed=seed, rows=rows, cols=cols, values=values)


def apply(H: BandMatrixSample, v: np.ndarray) -> np.ndarray:
    """Sparse product ``H v``; cost ``O(M N^d)``."""
    v = np.asarray(v)
    if v.shape[0] != H.config.volume:
        raise ConfigError(f"vector length {v.shape[0]} != lattice volume {H.config.volume}")
    return H.matrix @ v
