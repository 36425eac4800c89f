"""Periodic lattice, band count and the step band profile ``S``.

Sites of the torus are stored in canonical signed coordinates, each
component in ``[-N//2, N - N//2)``.  Linear indices are row-major over
``(c_0 + N//2, ..., c_{d-1} + N//2)``; this order is fixed because sampling
draws one phase per pair in that order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ConfigError, ResourceLimitError

__all__ = [
    "LatticeConfig",
    "BandProfile",
    "band_count",
    "band_offsets",
    "periodic_distance",
    "s_power_checks",
    "SPowerReport",
]

Site = tuple  # d-tuple of ints, canonical representative


def band_offsets(d: int, w: int) -> np.ndarray:
    """All integer vectors ``o`` with ``1 <= |o| <= w``, shape ``(M, d)``.

    Ordered lexicographically, which fixes the neighbour order used by the
    sampler.
    """
    if w < 2:
        raise ConfigError(f"band width must be >= 2, got {w}")
    rng = range(-w, w + 1)
    out = [o for o in itertools.product(rng, repeat=d) if 1 <= sum(c * c for c in o) <= w * w]
    return np.array(out, dtype=np.int64).reshape(-1, d)


def band_count(d: int, w: int) -> int:
    """Number ``M`` of points of ``Z^d`` at Euclidean distance in ``[1, w]``."""
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    return int(band_offsets(d, w).shape[0])


@dataclass(frozen=True)
class LatticeConfig:
    """Dimension ``d``, linear size ``n`` and band width ``w``.

    ``n >= 2w + 1`` is required so that the band ball around a site wraps onto
    distinct torus sites and ``M`` agrees with the infinite-lattice count.
    """

    d: int
    n: int
    w: int

    def __post_init__(self):
        for name in ("d", "n", "w"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.w < 2:
            raise ConfigError(f"w must be >= 2, got {self.w}")
        if self.n < 2 * self.w + 1:
            raise ConfigError(
                f"n={self.n} too small for w={self.w}: need n >= 2w+1 = {2 * self.w + 1}"
            )

    @cached_property
    def M(self) -> int:
        return band_count(self.d, self.w)

    @property
    def volume(self) -> int:
        return self.n**self.d

    @cached_property
    def offsets(self) -> np.ndarray:
        return band_offsets(self.d, self.w)

    @cached_property
    def coords(self) -> np.ndarray:
        """Canonical coordinates of every site in linear-index order, ``(V, d)``."""
        lo = self.n // 2
        grids = np.indices((self.n,) * self.d).reshape(self.d, -1).T
        return (grids - lo).astype(np.int64)

    def canonical(self, x) -> Site:
        lo = self.n // 2
        return tuple(int((c + lo) % self.n - lo) for c in x)

    def add(self, x, y) -> Site:
        return self.canonical(tuple(a + b for a, b in zip(x, y)))

    def index(self, x) -> int:
        lo = self.n // 2
        idx = 0
        for c in self.canonical(x):
            idx = idx * self.n + (c + lo)
        return idx

    def site(self, i: int) -> Site:
        return tuple(int(c) for c in self.coords[i])

    @property
    def origin_index(self) -> int:
        return self.index((0,) * self.d)

    def neighbor_table(self) -> np.ndarray:
        """``nbr[i, k]`` = linear index of ``site(i) + offsets[k]``, shape ``(V, M)``."""
        lo = self.n // 2
        shifted = self.coords[:, None, :] + self.offsets[None, :, :]
        shifted = (shifted + lo) % self.n
        idx = np.zeros(shifted.shape[:2], dtype=np.int64)
        for k in range(self.d):
            idx = idx * self.n + shifted[..., k]
        return idx

    def to_dict(self) -> dict:
        return {"d": int(self.d), "n": int(self.n), "w": int(self.w)}

    @classmethod
    def from_dict(cls, obj: dict) -> "LatticeConfig":
        try:
            return cls(d=int(obj["d"]), n=int(obj["n"]), w=int(obj["w"]))
        except KeyError as exc:
            raise ConfigError(f"lattice config missing field {exc}") from None


def periodic_distance(cfg: LatticeConfig, x, y) -> float:
    """Euclidean distance on the torus, minimised over ``nu in {-1,0,1}^d``."""
    diff = [a - b for a, b in zip(cfg.canonical(x), cfg.canonical(y))]
    best = math.inf
    for nu in itertools.product((-1, 0, 1), repeat=cfg.d):
        sq = sum((c + cfg.n * k) ** 2 for c, k in zip(diff, nu))
        best = min(best, sq)
    return math.sqrt(best)


def _periodic_sq_dist_matrix(cfg: LatticeConfig) -> np.ndarray:
    diff = cfg.coords[:, None, :] - cfg.coords[None, :, :]
    diff = np.abs(diff) % cfg.n
    diff = np.minimum(diff, cfg.n - diff)
    return (diff**2).sum(axis=-1)


class BandProfile:
    """The matrix ``S_xy = 1(1 <= |x-y| <= W) / (M-1)``, held implicitly."""

    def __init__(self, cfg: LatticeConfig):
        self.cfg = cfg

    @property
    def value(self) -> Fraction:
        return Fraction(1, self.cfg.M - 1)

    def in_band(self, x, y) -> bool:
        dist = periodic_distance(self.cfg, x, y)
        return 1 <= dist <= self.cfg.w

    def s_entry(self, x, y) -> Fraction:
        return self.value if self.in_band(x, y) else Fraction(0)

    def band_mask(self) -> np.ndarray:
        """Dense boolean ``(V, V)`` band indicator; only for small lattices."""
        if self.cfg.volume > 4096:
            raise ResourceLimitError(f"dense band mask refused for volume {self.cfg.volume}")
        sq = _periodic_sq_dist_matrix(self.cfg)
        return (sq >= 1) & (sq <= self.cfg.w**2)

    def dense(self) -> np.ndarray:
        return self.band_mask() / (self.cfg.M - 1)

    def dense_power(self, l: int) -> np.ndarray:
        return np.linalg.matrix_power(self.dense(), l)

    def power_kernel_counts(self, l: int) -> np.ndarray:
        """Exact integer path counts ``(M-1)^l (S^l)_{0,y}`` over all ``y``.

        ``S`` is translation invariant, so row 0 determines every row.
        """
        cfg = self.cfg
        shape = (cfg.n,) * cfg.d
        lo = cfg.n // 2
        counts = np.zeros(shape, dtype=np.int64)
        counts[(lo,) * cfg.d] = 1
        for _ in range(l):
            nxt = np.zeros_like(counts)
            for off in cfg.offsets:
                nxt += np.roll(counts, tuple(int(o) for o in off), axis=tuple(range(cfg.d)))
            counts = nxt
        return counts


@dataclass(frozen=True)
class SPowerReport:
    l: int
    row_sum_max_error: float
    sup_entry: float
    sup_bound: float

    @property
    def passed(self) -> bool:
        return self.row_sum_max_error <= 1e-12 and self.sup_entry <= self.sup_bound * (1 + 1e-12)


def s_power_checks(profile: BandProfile, l: int) -> SPowerReport:
    """Row-sum and sup-entry identities for ``S^l``.

    ``sum_y (S^l)_xy = (M/(M-1))^l`` and ``(S^l)_xy <= (M/(M-1))^(l-1)/(M-1)``.
    Computed by exact integer convolution of the band kernel.
    """
    cfg = profile.cfg
    if l < 1:
        raise ConfigError("l must be >= 1")
    if l > 8 or cfg.volume > 10**5:
        raise ResourceLimitError(f"S^{l} refused on volume {cfg.volume}")
    M = cfg.M
    counts = profile.power_kernel_counts(l)
    row = counts.astype(np.float64) / float(M - 1) ** l
    target = (M / (M - 1)) ** l
    # every row is a translate of row 0; columns likewise by symmetry
    row_err = abs(math.fsum(row.ravel()) - target)
    sup_entry = float(row.max())
    sup_bound = (M / (M - 1)) ** (l - 1) / (M - 1)
    return SPowerReport(l=l, row_sum_max_error=row_err, sup_entry=sup_entry, sup_bound=sup_bound)
