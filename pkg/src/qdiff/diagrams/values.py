r"""The label sum ``R(Sigma)`` for a skeleton with bridge multiplicities.

.. math::

    R(\Sigma) = \sum_x 1(x_{r_1} = 0) 1(x_{r_2} = 0)
        \prod_{\{e,e'\}} (S^{l})_{x_e} \prod_\sigma J_\sigma(x).

The ``J`` factors force every orbit of ``tau`` onto a single label, so the
sum runs over one label per free orbit; it is contracted with ``einsum``.
"""

from __future__ import annotations

import itertools
import string
from functools import lru_cache

import numpy as np

from ..errors import ConfigError, ResourceLimitError
from ..lattice import BandProfile, LatticeConfig
from .chains import j_indicator
from .orbits import orbit_partition
from .pairings import Pairing

__all__ = ["r_value", "r_value_naive", "s_power_dense", "r_signature"]


@lru_cache(maxsize=64)
def s_power_dense(cfg: LatticeConfig, l: int) -> np.ndarray:
    if cfg.volume > 4096:
        raise ResourceLimitError(f"dense S^{l} refused for volume {cfg.volume}")
    out = BandProfile(cfg).dense_power(l)
    out.flags.writeable = False
    return out


def _check_l(sigma: Pairing, l) -> tuple:
    l = tuple(int(v) for v in l)
    if len(l) != sigma.size or min(l, default=1) < 1:
        raise ConfigError(f"need one multiplicity >= 1 per bridge, got {l}")
    return l


def r_value(cfg: LatticeConfig, sigma: Pairing, l) -> float:
    l = _check_l(sigma, l)
    op = orbit_partition(sigma)
    free = op.free_orbits
    if len(free) > 6:
        raise ResourceLimitError(f"{len(free)} free orbit labels exceed the limit 6")
    letter = {z: string.ascii_letters[k] for k, z in enumerate(free)}
    o = cfg.origin_index
    scalar = 1.0
    subs, ops = [], []
    for (z1, z2), m in zip(op.zeta, l):
        K = s_power_dense(cfg, m)
        p1, p2 = z1 in op.root_orbits, z2 in op.root_orbits
        if p1 and p2:
            scalar *= K[o, o]
        elif p1:
            subs.append(letter[z2])
            ops.append(K[o])
        elif p2:
            subs.append(letter[z1])
            ops.append(K[:, o])
        else:
            subs.append(letter[z1] + letter[z2])
            ops.append(K)
    # orbits touched by no bridge factor still range over the whole lattice
    used = set("".join(subs))
    idle = sum(1 for z in free if letter[z] not in used)
    scalar *= float(cfg.volume) ** idle
    if not ops:
        return scalar
    val = np.einsum(",".join(subs) + "->", *ops, optimize="greedy")
    return float(scalar * val)


def r_value_naive(cfg: LatticeConfig, sigma: Pairing, l) -> float:
    """Direct sum over every vertex labeling; the ``J`` factors are tested, not used."""
    l = _check_l(sigma, l)
    g = sigma.graph
    V = cfg.volume
    free = [i for i in range(g.n_vertices) if i not in g.roots]
    if V ** len(free) > 2 * 10**6:
        raise ResourceLimitError("naive R enumeration too large")
    o = cfg.origin_index
    mats = [s_power_dense(cfg, m) for m in l]
    total = 0.0
    x = [o] * g.n_vertices
    for vals in itertools.product(range(V), repeat=len(free)):
        for i, v in zip(free, vals):
            x[i] = v
        w = 1.0
        for (e, f), K in zip(sigma.bridges, mats):
            if not j_indicator(g, (e, f), x):
                w = 0.0
                break
            a, b = g.edges[e]
            w *= K[x[a], x[b]]
            if w == 0.0:
                break
        total += w
    return total


def r_signature(sigma: Pairing, l) -> tuple:
    """A relabeling-invariant key: equal keys give equal ``R`` on any lattice."""
    op = orbit_partition(sigma)
    free = op.free_orbits
    best = None
    for perm in itertools.permutations(range(len(free))):
        lab = {z: p for z, p in zip(free, perm)}
        for z in op.root_orbits:
            lab[z] = -1
        key = tuple(sorted((*sorted((lab[z1], lab[z2])), m) for (z1, z2), m in zip(op.zeta, l)))
        if best is None or key < best:
            best = key
    return (len(free), best)
