r"""Exact covariances ``< H^{(n11)}_{0 y1} H^{(n12)}_{y1 0} ; H^{(n21)}_{0 y2} H^{(n22)}_{y2 0} >``.

Two routes are provided.  ``covariance_table`` sums ``Q(x) A(x)`` over all
labelings with a vectorised balance test.  ``lumping_decomposition`` groups
labelings by their lumping, evaluates ``A`` with exact rational expectations
and keeps only connected even lumpings.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ResourceLimitError
from ..lattice import LatticeConfig
from ..sampler import SeedSpec, sample_band_matrix
from .chains import ChainGraph, lumping_codes, q_mask
from .expectation import balanced_in_band, band_mask_cached, edge_product_expectation

__all__ = [
    "CovarianceTable",
    "LumpingDecomposition",
    "covariance_table",
    "covariance_bruteforce",
    "covariance_via_lumpings",
    "lumping_decomposition",
    "set_partitions",
    "is_connected_even",
    "labelings",
    "MonteCarloCovariance",
    "covariance_monte_carlo",
]

MAX_LABELINGS = 10**7
_CHUNK = 1 << 16


def labelings(cfg: LatticeConfig, g: ChainGraph):
    """Yield blocks of labelings with both roots at the origin, shape ``(k, |V|)``."""
    V = cfg.volume
    free = [i for i in range(g.n_vertices) if i not in g.roots]
    total = V ** len(free)
    if total > MAX_LABELINGS:
        raise ResourceLimitError(f"{total} labelings exceed the limit {MAX_LABELINGS}")
    o = cfg.origin_index
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        X = np.full((idx.size, g.n_vertices), o, dtype=np.int64)
        for i in reversed(free):
            X[:, i] = idx % V
            idx //= V
        yield X


def _unit(cfg: LatticeConfig, g: ChainGraph) -> Fraction:
    if g.n_edges % 2:
        return Fraction(0)
    return Fraction(1, (cfg.M - 1) ** (g.n_edges // 2))


@dataclass(frozen=True)
class CovarianceTable:
    """``value(y1, y2) = counts[y1, y2] * unit`` exactly."""

    graph: ChainGraph
    counts: np.ndarray
    unit: Fraction

    def value(self, y1: int, y2: int) -> Fraction:
        return int(self.counts[y1, y2]) * self.unit

    def as_float(self) -> np.ndarray:
        return self.counts * float(self.unit)


def covariance_table(cfg: LatticeConfig, g: ChainGraph) -> CovarianceTable:
    """``sum_x Q_{y1,y2}(x) A(x)`` for all ``(y1, y2)`` at once."""
    V = cfg.volume
    counts = np.zeros((V, V), dtype=np.int64)
    if g.n_edges % 2 == 0:
        mask = band_mask_cached(cfg)
        e1 = list(range(g.L1))
        e2 = list(range(g.L1, g.n_edges))
        s1, s2 = g.summits
        for X in labelings(cfg, g):
            full = balanced_in_band(X, g.tail, g.head, mask)
            sep = balanced_in_band(X, g.tail[e1], g.head[e1], mask) & balanced_in_band(
                X, g.tail[e2], g.head[e2], mask
            )
            A = full.astype(np.int64) - sep.astype(np.int64)
            A *= q_mask(g, X)
            nz = A != 0
            np.add.at(counts, (X[nz, s1], X[nz, s2]), A[nz])
    counts.flags.writeable = False
    return CovarianceTable(graph=g, counts=counts, unit=_unit(cfg, g))


def covariance_bruteforce(cfg: LatticeConfig, g: ChainGraph, y1: int, y2: int) -> Fraction:
    return covariance_table(cfg, g).value(y1, y2)


def set_partitions(items):
    """All set partitions of ``items`` as lists of lists (restricted growth order)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        yield [[first]] + p
        for k in range(len(p)):
            yield p[:k] + [[first] + p[k]] + p[k + 1 :]


def is_connected_even(g: ChainGraph, lumping) -> bool:
    even = all(len(b) % 2 == 0 for b in lumping)
    conn = any({g.chain_of(e) for e in b} == {0, 1} for b in lumping)
    return even and conn


@dataclass(frozen=True)
class LumpingDecomposition:
    """Values ``V_{y1,y2}(Gamma)`` for every realised lumping, plus the split totals."""

    graph: ChainGraph
    values: dict  # lumping -> {(y1, y2): Fraction}
    connected_even: tuple  # all lumpings in P_c(E), realised or not
    odd_rows_nonzero: int  # labelings with an odd lump but A != 0 (must be 0)

    def connected_sum(self, y1: int, y2: int) -> Fraction:
        total = Fraction(0)
        for gam in self.connected_even:
            total += self.values.get(gam, {}).get((y1, y2), Fraction(0))
        return total

    def complement_sum(self, y1: int, y2: int) -> Fraction:
        ce = set(self.connected_even)
        return sum(
            (v.get((y1, y2), Fraction(0)) for gam, v in self.values.items() if gam not in ce),
            Fraction(0),
        )


def _canonical(lumping) -> tuple:
    return tuple(sorted(tuple(sorted(b)) for b in lumping))


def lumping_decomposition(cfg: LatticeConfig, g: ChainGraph) -> LumpingDecomposition:
    """Group labelings by lumping and evaluate ``V(Gamma)`` with exact expectations.

    Lumpings with an odd block carry an unpaired phase, so their labelings are
    only checked (vectorised) to have ``A = 0``; every labeling whose lumping
    is even is evaluated through ``edge_product_expectation``.
    """
    if g.n_edges > 12:
        raise ResourceLimitError("lumping enumeration limited to 12 edges")
    connected_even = tuple(
        _canonical(p) for p in set_partitions(range(g.n_edges)) if is_connected_even(g, p)
    )
    mask = band_mask_cached(cfg)
    e1 = list(range(g.L1))
    e2 = list(range(g.L1, g.n_edges))
    s1, s2 = g.summits
    values: dict = {}
    odd_bad = 0
    for X in labelings(cfg, g):
        X = X[q_mask(g, X)]
        codes = lumping_codes(g, X, cfg.volume)
        uniq, inv = np.unique(codes, axis=0, return_inverse=True)
        inv = inv.ravel()
        for k, row in enumerate(uniq):
            blocks: dict = {}
            for e, rep in enumerate(row):
                blocks.setdefault(int(rep), []).append(e)
            gam = _canonical(blocks.values())
            rows = X[inv == k]
            if any(len(b) % 2 for b in gam):
                full = balanced_in_band(rows, g.tail, g.head, mask)
                sep = balanced_in_band(rows, g.tail[e1], g.head[e1], mask) & balanced_in_band(
                    rows, g.tail[e2], g.head[e2], mask
                )
                odd_bad += int(np.count_nonzero(full != sep))
                continue
            acc = values.setdefault(gam, {})
            for x in rows:
                xe = [(x[a], x[b]) for a, b in g.edges]
                A = edge_product_expectation(cfg, xe) - edge_product_expectation(
                    cfg, xe[: g.L1]
                ) * edge_product_expectation(cfg, xe[g.L1 :])
                if A:
                    key = (int(x[s1]), int(x[s2]))
                    acc[key] = acc.get(key, Fraction(0)) + A
    return LumpingDecomposition(
        graph=g, values=values, connected_even=connected_even, odd_rows_nonzero=odd_bad
    )


def covariance_via_lumpings(cfg: LatticeConfig, g: ChainGraph, y1: int, y2: int) -> Fraction:
    """``sum_{Gamma in P_c(E)} V_{y1,y2}(Gamma)``."""
    return lumping_decomposition(cfg, g).connected_sum(y1, y2)


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class MonteCarloCovariance:
    estimate: complex
    se_real: float
    se_imag: float
    samples: int

    def within(self, exact: float, k: float = 5.0) -> bool:
        """``estimate`` lies within ``k`` standard errors of a real ``exact`` value."""
        re_ok = abs(self.estimate.real - exact) <= k * self.se_real + 1e-14
        im_ok = abs(self.estimate.imag) <= k * self.se_imag + 1e-14
        return re_ok and im_ok


def _nb_powers_batch(H: np.ndarray, n_max: int, M: int) -> list:
    """``[H^{(0)}, ..., H^{(n_max)}]`` for a stack of matrices of shape ``(B, V, V)``."""
    eye = np.broadcast_to(np.eye(H.shape[1], dtype=H.dtype), H.shape)
    out = [eye, H]
    if n_max >= 2:
        out.append(H @ H - (M / (M - 1)) * eye)
    for _ in range(3, n_max + 1):
        out.append(H @ out[-1] - out[-2])
    return out[: n_max + 1]


def covariance_monte_carlo(
    cfg: LatticeConfig, g: ChainGraph, y1: int, y2: int, samples: int, master_seed: int, batch: int = 4096
) -> MonteCarloCovariance:
    """Sample covariance of the two chain products over independent matrices.

    Sample ``i`` uses stream ``(master_seed, i)``.  The standard error is the
    usual one for the product of centred variables, taken separately for the
    real and imaginary parts.
    """
    if samples < 2:
        raise ResourceLimitError("need at least two samples")
    o = cfg.origin_index
    n = (g.n11, g.n12, g.n21, g.n22)
    xs, ys = [], []
    for start in range(0, samples, batch):
        idx = range(start, min(samples, start + batch))
        H = np.stack([sample_band_matrix(cfg, SeedSpec(master_seed, i)).dense() for i in idx])
        P = _nb_powers_batch(H, max(n), cfg.M)
        xs.append(P[n[0]][:, o, y1] * P[n[1]][:, y1, o])
        ys.append(P[n[2]][:, o, y2] * P[n[3]][:, y2, o])
    X = np.concatenate(xs)
    Y = np.concatenate(ys)
    z = (X - X.mean()) * (Y - Y.mean())
    est = complex(z.sum() / (samples - 1))
    se_re = float(np.std(z.real, ddof=1) / np.sqrt(samples))
    se_im = float(np.std(z.imag, ddof=1) / np.sqrt(samples))
    return MonteCarloCovariance(est, se_re, se_im, samples)
