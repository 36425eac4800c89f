"""Orbits of the vertex map ``tau`` and the small-skeleton classification.

For vertex ``i`` with out-edge ``e = (i, b(i))`` paired with ``e'``,
``tau(i) = b(e')``.  The orbits are exactly the classes of labels identified
by the ``J`` indicators, which is why they control the label sums.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .pairings import Pairing, enumerate_skeletons, identification_classes

__all__ = [
    "OrbitPartition",
    "orbit_partition",
    "two_thirds_bound",
    "touch_pattern",
    "forces_equal_summits",
    "configuration_classes",
    "PATH_SYMMETRIES",
]


@dataclass(frozen=True)
class OrbitPartition:
    skeleton: Pairing
    tau: tuple
    orbits: tuple  # tuple of sorted vertex tuples
    orbit_of: tuple  # vertex -> orbit index
    root_orbits: frozenset
    zeta: tuple  # per bridge (zeta_1, zeta_2) under the edge order

    @property
    def L(self) -> int:
        """``|Z*|``: orbits other than those of the two roots."""
        return len(self.orbits) - len(self.root_orbits)

    @property
    def free_orbits(self) -> tuple:
        return tuple(k for k in range(len(self.orbits)) if k not in self.root_orbits)

    def to_dict(self) -> dict:
        return {
            "orbits": [list(o) for o in self.orbits],
            "L": self.L,
            "zeta": [list(z) for z in self.zeta],
        }


def orbit_partition(sigma: Pairing) -> OrbitPartition:
    g = sigma.graph
    tau = tuple(g.edges[sigma.partner[i]][1] for i in range(g.n_vertices))
    orbit_of = [-1] * g.n_vertices
    orbits = []
    for i in range(g.n_vertices):
        if orbit_of[i] >= 0:
            continue
        cyc = []
        j = i
        while orbit_of[j] < 0:
            orbit_of[j] = len(orbits)
            cyc.append(j)
            j = tau[j]
        orbits.append(tuple(sorted(cyc)))
    roots = frozenset(orbit_of[r] for r in g.roots)
    zeta = []
    for e, _ in sigma.bridges:  # bridges are stored with e < e'
        a, b = g.edges[e]
        zeta.append((orbit_of[a], orbit_of[b]))
    return OrbitPartition(sigma, tau, tuple(orbits), tuple(orbit_of), roots, tuple(zeta))


def two_thirds_bound(m: int) -> float:
    return 2 * m / 3 + 2 / 3


def _path_maps():
    maps = []
    for swap, f1, f2 in itertools.product((0, 1), repeat=3):
        perm = [0, 1, 2, 3]
        if f1:
            perm[0], perm[1] = 1, 0
        if f2:
            perm[2], perm[3] = 3, 2
        if swap:
            perm = [(q + 2) % 4 for q in perm]
        maps.append(tuple(perm))
    return tuple(maps)


# reversal of either chain (exchanging its two paths) and exchange of the chains
PATH_SYMMETRIES = _path_maps()


def touch_pattern(sigma: Pairing) -> tuple:
    """Which paths each bridge touches, canonical under ``PATH_SYMMETRIES``.

    Paths are numbered 1..4 as ``r1->s1, s1->r1, r2->s2, s2->r2``.
    """
    g = sigma.graph
    raw = [(g.path_of(e), g.path_of(f)) for e, f in sigma.bridges]
    best = None
    for perm in PATH_SYMMETRIES:
        q = tuple(sorted(tuple(sorted((perm[a] + 1, perm[b] + 1))) for a, b in raw))
        best = q if best is None or q < best else best
    return best


def forces_equal_summits(sigma: Pairing) -> bool:
    """Whether the ``J`` identifications with pinned roots force ``y1 = y2``."""
    cls = identification_classes(sigma)
    s1, s2 = sigma.graph.summits
    return cls[s1] == cls[s2]


def _free_touch_pattern(sigma: Pairing) -> tuple:
    g = sigma.graph
    raw = [(g.path_of(e), g.path_of(f)) for e, f in sigma.bridges]
    return min(
        tuple(sorted(tuple(sorted((p[a] + 1, p[b] + 1))) for a, b in raw))
        for p in itertools.permutations(range(4))
    )


def configuration_classes(m: int) -> dict:
    """Admissible skeletons with ``m`` bridges grouped by touch pattern up to any
    permutation of the four paths.

    Returns ``{pattern: (count, count forcing y1 = y2)}``.
    """
    out: dict = {}
    for sigma in enumerate_skeletons(m):
        key = _free_touch_pattern(sigma)
        n, f = out.get(key, (0, 0))
        out[key] = (n + 1, f + int(forces_equal_summits(sigma)))
    return out
