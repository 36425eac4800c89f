"""Exact moments of products of phase band-matrix entries."""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..lattice import BandProfile, LatticeConfig

__all__ = ["edge_product_expectation", "balanced_in_band", "band_mask_cached"]


@lru_cache(maxsize=32)
def band_mask_cached(cfg: LatticeConfig) -> np.ndarray:
    mask = BandProfile(cfg).band_mask()
    mask.flags.writeable = False
    return mask


def _as_index(cfg: LatticeConfig, x) -> int:
    return int(x) if np.isscalar(x) else cfg.index(x)


def edge_product_expectation(cfg: LatticeConfig, edges) -> Fraction:
    """``E prod_e H_{u_e v_e}`` for a multiset of directed site pairs.

    Phases on distinct unordered pairs are independent and ``E e^{i k theta}``
    vanishes unless ``k = 0``, so each support ``{u, v}`` must be crossed as
    often from ``u`` as from ``v``; it then contributes ``S_uv^p``.
    """
    mask = band_mask_cached(cfg)
    s = Fraction(1, cfg.M - 1)
    fwd: Counter = Counter()
    for u, v in edges:
        u, v = _as_index(cfg, u), _as_index(cfg, v)
        if not mask[u, v]:
            return Fraction(0)
        fwd[(u, v)] += 1
    out = Fraction(1)
    for (u, v), p in fwd.items():
        if u < v:
            if fwd.get((v, u), 0) != p:
                return Fraction(0)
            out *= s**p
        elif (v, u) not in fwd:
            return Fraction(0)
    return out


def balanced_in_band(X: np.ndarray, tail, head, mask: np.ndarray) -> np.ndarray:
    """Rows of ``X`` whose edge multiset has nonzero expectation.

    Vectorised counterpart of ``edge_product_expectation``: every edge in the
    band and the sorted forward codes equal the sorted reversed codes.
    """
    if len(tail) == 0:
        return np.ones(X.shape[0], dtype=bool)
    V = mask.shape[0]
    u = X[:, tail]
    v = X[:, head]
    ok = mask[u, v].all(axis=1)
    f = np.sort(u * V + v, axis=1)
    r = np.sort(v * V + u, axis=1)
    return ok & (f == r).all(axis=1)
