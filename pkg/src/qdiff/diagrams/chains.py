"""Two rooted directed chains, labelings, lumpings and the Q and J indicators.

Numbering is fixed: chain 1 holds vertices and edges ``0 .. L1-1``, chain 2
holds ``L1 .. L1+L2-1``.  Edge ``j`` leaves vertex ``j`` and enters the next
vertex of its chain, so the out-edge of vertex ``i`` is edge ``i``.  The roots
are ``0`` and ``L1``; the summit of chain ``k`` sits ``n_k1`` steps after its
root.  Labels are linear site indices of a ``LatticeConfig``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import ConfigError

__all__ = [
    "ChainGraph",
    "build_chain_graph",
    "lumping_of_labels",
    "lumping_codes",
    "q_indicator",
    "q_mask",
    "j_indicator",
]


@dataclass(frozen=True)
class ChainGraph:
    n11: int
    n12: int
    n21: int
    n22: int

    def __post_init__(self):
        if min(self.n) < 0:
            raise ConfigError(f"chain lengths must be nonnegative, got {self.n}")
        if self.n11 + self.n12 < 1 or self.n21 + self.n22 < 1:
            raise ConfigError(f"both chains need at least one edge, got {self.n}")

    @property
    def n(self) -> tuple:
        return (self.n11, self.n12, self.n21, self.n22)

    @property
    def L1(self) -> int:
        return self.n11 + self.n12

    @property
    def L2(self) -> int:
        return self.n21 + self.n22

    @property
    def n_vertices(self) -> int:
        return self.L1 + self.L2

    n_edges = n_vertices

    @cached_property
    def edges(self) -> tuple:
        """``(a(e), b(e))`` for every edge, in edge order."""
        L1, L2 = self.L1, self.L2
        out = [(i, (i + 1) % L1) for i in range(L1)]
        out += [(L1 + i, L1 + (i + 1) % L2) for i in range(L2)]
        return tuple(out)

    @cached_property
    def tail(self) -> np.ndarray:
        return np.array([a for a, _ in self.edges], dtype=np.int64)

    @cached_property
    def head(self) -> np.ndarray:
        return np.array([b for _, b in self.edges], dtype=np.int64)

    def chain_of(self, e: int) -> int:
        return 0 if e < self.L1 else 1

    def path_of(self, e: int) -> int:
        """Which of the four directed paths ``r1->s1, s1->r1, r2->s2, s2->r2`` holds ``e``."""
        if e < self.L1:
            return 0 if e < self.n11 else 1
        return 2 if e - self.L1 < self.n21 else 3

    @property
    def roots(self) -> tuple:
        return (0, self.L1)

    @property
    def summits(self) -> tuple:
        return (self.n11 % self.L1, self.L1 + self.n21 % self.L2)

    @cached_property
    def white(self) -> frozenset:
        return frozenset(self.roots + self.summits)

    @cached_property
    def black(self) -> tuple:
        return tuple(i for i in range(self.n_vertices) if i not in self.white)

    def in_edge(self, i: int) -> int:
        """The edge ``e`` with ``b(e) = i``."""
        if i < self.L1:
            return (i - 1) % self.L1
        return self.L1 + (i - self.L1 - 1) % self.L2

    def succ(self, e: int) -> int:
        """The edge leaving ``b(e)``; vertex ``i`` owns out-edge ``i``."""
        return self.edges[e][1]

    def pred(self, e: int) -> int:
        """The edge entering ``a(e) = e``."""
        return self.in_edge(e)

def build_chain_graph(n11: int, n12: int, n21: int, n22: int) -> ChainGraph:
    return ChainGraph(int(n11), int(n12), int(n21), int(n22))


def lumping_of_labels(g: ChainGraph, x) -> tuple:
    """Partition of ``E`` by unordered endpoint labels, as sorted tuples of edges."""
    groups: dict = {}
    for e, (a, b) in enumerate(g.edges):
        key = frozenset((x[a], x[b])) if x[a] != x[b] else frozenset((x[a],))
        groups.setdefault(key, []).append(e)
    return tuple(sorted(tuple(v) for v in groups.values()))


def lumping_codes(g: ChainGraph, X: np.ndarray, volume: int) -> np.ndarray:
    """Vectorised lumpings: row ``k`` gives, per edge, the first edge in its lump.

    ``X`` has shape ``(K, n_vertices)``.  Two rows have the same lumping iff
    their code rows agree.
    """
    u = X[:, g.tail]
    v = X[:, g.head]
    key = np.minimum(u, v) * volume + np.maximum(u, v)
    eq = key[:, :, None] == key[:, None, :]
    return np.argmax(eq, axis=2)


def q_indicator(g: ChainGraph, x, y1, y2, origin=0) -> int:
    """Root/summit pinning times the non-backtracking condition at black vertices."""
    r1, r2 = g.roots
    s1, s2 = g.summits
    if x[r1] != origin or x[r2] != origin or x[s1] != y1 or x[s2] != y2:
        return 0
    for i in g.black:
        if x[g.edges[g.in_edge(i)][0]] == x[g.edges[i][1]]:
            return 0
    return 1


def q_mask(g: ChainGraph, X: np.ndarray) -> np.ndarray:
    """Non-backtracking part of ``Q`` for each row of ``X`` (pinning is the caller's)."""
    ok = np.ones(X.shape[0], dtype=bool)
    for i in g.black:
        ok &= X[:, g.edges[g.in_edge(i)][0]] != X[:, g.edges[i][1]]
    return ok


def j_indicator(g: ChainGraph, bridge, x) -> int:
    """``1(x_a(e) = x_b(e')) 1(x_a(e') = x_b(e))``: the two edges are traversed oppositely."""
    e, f = bridge
    (ae, be), (af, bf) = g.edges[e], g.edges[f]
    return int(x[ae] == x[bf] and x[af] == x[be])
