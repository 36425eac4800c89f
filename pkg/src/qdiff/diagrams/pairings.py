"""Connected pairings, parallel-bridge collapse, skeletons and their expansion.

A pairing is stored as its chain graph plus a sorted tuple of bridges
``(e, f)`` with ``e < f``.  Equality of pairings is equality of that
canonical form, which is what skeleton enumeration deduplicates on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

from ..errors import ConfigError, ResourceLimitError
from .chains import ChainGraph

__all__ = [
    "Pairing",
    "perfect_matchings",
    "enumerate_pairings",
    "merged_vertices",
    "has_parallel_bridges",
    "collapse_parallel_bridges",
    "expand_skeleton",
    "identification_classes",
    "is_admissible",
    "chain_tuples",
    "enumerate_skeletons",
    "skeleton_by_id",
    "adjacency_violations",
]


@dataclass(frozen=True)
class Pairing:
    graph: ChainGraph
    bridges: tuple

    def __post_init__(self):
        seen = sorted(itertools.chain.from_iterable(self.bridges))
        if seen != list(range(self.graph.n_edges)):
            raise ConfigError(f"bridges {self.bridges} are not a perfect matching of the edges")
        canon = tuple(sorted(tuple(sorted(b)) for b in self.bridges))
        object.__setattr__(self, "bridges", canon)

    @cached_property
    def partner(self) -> tuple:
        p = [0] * self.graph.n_edges
        for e, f in self.bridges:
            p[e], p[f] = f, e
        return tuple(p)

    @property
    def size(self) -> int:
        return len(self.bridges)

    def is_connected(self) -> bool:
        g = self.graph
        return any(g.chain_of(e) != g.chain_of(f) for e, f in self.bridges)

    def key(self) -> tuple:
        return (self.graph.n, self.bridges)

    def to_dict(self) -> dict:
        return {"n": list(self.graph.n), "bridges": [list(b) for b in self.bridges]}


def perfect_matchings(items):
    items = list(items)
    if not items:
        yield ()
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1 :]
        for m in perfect_matchings(rest):
            yield ((a, items[i]),) + m


def enumerate_pairings(g: ChainGraph, connected_only: bool = True) -> list:
    """All (connected) pairings of ``E(g)``; empty for odd ``|E|``."""
    if g.n_edges % 2:
        return []
    if g.n_edges > 12:
        raise ResourceLimitError(f"pairing enumeration limited to 12 edges, got {g.n_edges}")
    out = []
    for m in perfect_matchings(range(g.n_edges)):
        p = Pairing(g, m)
        if not connected_only or p.is_connected():
            out.append(p)
    return out


def merged_vertices(p: Pairing) -> frozenset:
    """Black vertices in the middle of two parallel bridges.

    At black ``v`` with in-edge ``e1`` and out-edge ``e2`` (different
    bridges), the bridges are parallel iff ``b(e2') = a(e1')`` and that vertex
    is black, ``e'`` denoting the partner edge.
    """
    g = p.graph
    out = set()
    for v in g.black:
        e1, e2 = g.in_edge(v), v
        f1, f2 = p.partner[e1], p.partner[e2]
        if f1 == e2:
            continue
        w = g.edges[f2][1]
        if w == g.edges[f1][0] and w not in g.white:
            out.add(v)
    return frozenset(out)


def has_parallel_bridges(p: Pairing) -> bool:
    return bool(merged_vertices(p))


def collapse_parallel_bridges(p: Pairing) -> tuple:
    """``(Sigma, l)`` with ``l[k]`` the multiplicity of ``Sigma.bridges[k]``."""
    g = p.graph
    gone = merged_vertices(p)
    new_n = []
    seg_of = {}  # old edge -> new edge
    segments = []  # new edge -> list of old edges
    for chain, (root, L) in enumerate(((0, g.L1), (g.L1, g.L2))):
        up = g.n[2 * chain]  # position of the summit along the chain
        n_up = n_all = 0
        cur: list = []
        for step in range(L):
            cur.append(root + step)
            if g.edges[root + step][1] in gone:
                continue
            segments.append(cur)
            for old in cur:
                seg_of[old] = len(segments) - 1
            n_all += 1
            n_up += step + 1 <= up
            cur = []
        new_n += [n_up, n_all - n_up]
    h = ChainGraph(*new_n)
    bridges = []
    mult = []
    for k, seg in enumerate(segments):
        j = seg_of[p.partner[seg[0]]]
        if k < j:
            other = segments[j]
            if [p.partner[e] for e in seg] != other[::-1]:
                raise AssertionError("collapsed run is not an anti-parallel ladder")
            bridges.append((k, j))
            mult.append(len(seg))
    sigma = Pairing(h, tuple(bridges))
    order = {b: m for b, m in zip(bridges, mult)}
    return sigma, tuple(order[b] for b in sigma.bridges)


def expand_skeleton(sigma: Pairing, l) -> Pairing:
    """Replace bridge ``k`` of ``sigma`` by ``l[k]`` parallel bridges.

    Edge ``E`` becomes ``E_1 .. E_l`` and its partner ``E'`` becomes
    ``E'_1 .. E'_l``; the new bridges are ``{E_k, E'_{l+1-k}}``.
    """
    g = sigma.graph
    l = tuple(int(v) for v in l)
    if len(l) != sigma.size or min(l, default=1) < 1:
        raise ConfigError(f"need one multiplicity >= 1 per bridge, got {l}")
    width = [0] * g.n_edges
    for (e, f), m in zip(sigma.bridges, l):
        width[e] = width[f] = m
    n = [0, 0, 0, 0]
    for e in range(g.n_edges):
        n[g.path_of(e)] += width[e]
    offset = list(itertools.accumulate([0] + width[:-1]))
    bridges = []
    for (e, f), m in zip(sigma.bridges, l):
        for k in range(m):
            bridges.append((offset[e] + k, offset[f] + m - 1 - k))
    return Pairing(ChainGraph(*n), tuple(bridges))


def identification_classes(p: Pairing, pin_roots: bool = True) -> list:
    """Union-find classes of vertices forced equal by every ``J`` (and the root pins)."""
    g = p.graph
    parent = list(range(g.n_vertices))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        parent[find(i)] = find(j)

    for e, f in p.bridges:
        union(g.edges[e][0], g.edges[f][1])
        union(g.edges[f][0], g.edges[e][1])
    if pin_roots:
        union(*g.roots)
    return [find(i) for i in range(g.n_vertices)]


def _nonvanishing(p: Pairing) -> bool:
    g = p.graph
    cls = identification_classes(p)
    if any(cls[a] == cls[b] for a, b in g.edges):
        return False
    for v in g.black:
        if cls[g.edges[g.in_edge(v)][0]] == cls[g.edges[v][1]]:
            return False
    return True


def is_admissible(sigma: Pairing, probe: int = 3) -> bool:
    """Whether the expansion with every multiplicity ``probe`` can carry a nonzero labeling.

    A labeling contributes only if no edge joins two labels forced equal
    (``S_xx = 0``) and no black vertex is forced to backtrack.  On a large
    lattice distinct classes can always be placed inside one band, so these
    two conditions are also sufficient.
    """
    return _nonvanishing(expand_skeleton(sigma, (probe,) * sigma.size))


def adjacency_violations(sigma: Pairing) -> list:
    """Bridges ``{e, e'}`` whose edges meet at a black vertex."""
    g = sigma.graph
    bad = []
    for e, f in sigma.bridges:
        for x, y in ((e, f), (f, e)):
            v = g.edges[x][1]
            if v == g.edges[y][0] and v not in g.white:
                bad.append((e, f))
    return bad


def chain_tuples(total: int):
    for n in itertools.product(range(total + 1), repeat=4):
        if sum(n) == total and n[0] + n[1] >= 1 and n[2] + n[3] >= 1:
            yield n


@lru_cache(maxsize=None)
def enumerate_skeletons(m: int, admissible_only: bool = True) -> tuple:
    """All connected pairings with ``m`` bridges and no parallel bridges.

    With ``admissible_only`` the list is restricted to skeletons that arise
    from some contributing pairing (see ``is_admissible``).
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    if m > 5:
        raise ResourceLimitError(f"skeleton enumeration limited to m <= 5, got {m}")
    out = []
    for n in chain_tuples(2 * m):
        g = ChainGraph(*n)
        for match in perfect_matchings(range(2 * m)):
            p = Pairing(g, match)
            if not p.is_connected() or has_parallel_bridges(p):
                continue
            if admissible_only and not is_admissible(p):
                continue
            out.append(p)
    return tuple(out)


def skeleton_by_id(m: int, idx: int) -> Pairing:
    sk = enumerate_skeletons(m)
    if not 0 <= idx < len(sk):
        raise ConfigError(f"skeleton id {idx} out of range for m={m} (0..{len(sk) - 1})")
    return sk[idx]
