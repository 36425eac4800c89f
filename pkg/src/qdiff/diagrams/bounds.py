"""Numerical spot checks of the inequalities with unspecified constants.

Constants are never assumed.  Each study calibrates its constant on the
smallest member of a grid and then requires every other member to respect
it, which keeps the check falsifiable.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import ConfigError, ResourceLimitError
from ..lattice import LatticeConfig
from ..propagator import coefficient_table
from .chains import ChainGraph, q_mask
from .covariance import covariance_table, labelings
from .expectation import band_mask_cached
from .pairings import (
    Pairing,
    chain_tuples,
    collapse_parallel_bridges,
    enumerate_pairings,
    enumerate_skeletons,
)
from .values import r_signature, r_value

__all__ = [
    "FittedBoundReport",
    "PairingBoundReport",
    "pairing_tables",
    "pairing_bound_check",
    "aggregated_pairing_check",
    "coeff_sum_cutoff",
    "cutoff_study",
    "r_bound_study",
]


@dataclass(frozen=True)
class FittedBoundReport:
    """Ratios ``value / shape`` per grid point, a constant fitted on the
    calibration points and the worst held-out ratio."""

    name: str
    fitted_C: float
    calibration: dict
    held_out: dict
    rows: list = field(repr=False, default_factory=list)

    @property
    def worst_held_out(self) -> float:
        return max(self.held_out.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst_held_out <= self.fitted_C * (1 + 1e-9)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "fitted_C": self.fitted_C,
            "calibration": {str(k): v for k, v in self.calibration.items()},
            "held_out": {str(k): v for k, v in self.held_out.items()},
            "pass": self.passed,
        }


# ---------------------------------------------------------------- pairing bound


def _rhs_counts(cfg: LatticeConfig, g: ChainGraph, pairings) -> tuple:
    """``sum_x Q prod S_{x_e} prod J`` per pairing, as integer counts per (y1, y2).

    Also returns the root-pinned sums without ``Q`` (used against ``R``).
    """
    V = cfg.volume
    mask = band_mask_cached(cfg)
    s1, s2 = g.summits
    with_q = np.zeros((len(pairings), V, V), dtype=np.int64)
    no_q = np.zeros(len(pairings), dtype=np.int64)
    for X in labelings(cfg, g):
        q = q_mask(g, X)
        for k, p in enumerate(pairings):
            ok = np.ones(X.shape[0], dtype=bool)
            for e, f in p.bridges:
                (ae, be), (af, bf) = g.edges[e], g.edges[f]
                ok &= (X[:, ae] == X[:, bf]) & (X[:, af] == X[:, be]) & mask[X[:, ae], X[:, be]]
            no_q[k] += int(np.count_nonzero(ok))
            ok &= q
            np.add.at(with_q[k], (X[ok, s1], X[ok, s2]), 1)
    return with_q, no_q


@lru_cache(maxsize=8)
def pairing_tables(cfg: LatticeConfig, n_max: int) -> tuple:
    """Per chain tuple with total order ``<= n_max``: covariance and pairing counts.

    Entries are ``(n, unit, cov_counts, rhs_counts_per_pairing, no_q_counts, pairings)``;
    multiplying counts by ``unit = (M-1)^{-|E|/2}`` gives exact values.
    """
    if cfg.volume ** max(n_max - 2, 0) > 10**7:
        raise ResourceLimitError("pairing tables too large for this lattice")
    out = []
    for total in range(2, n_max + 1, 2):
        for n in chain_tuples(total):
            g = ChainGraph(*n)
            cov = covariance_table(cfg, g)
            prs = enumerate_pairings(g)
            rhs, noq = _rhs_counts(cfg, g, prs)
            out.append((n, float(cov.unit), cov.counts, rhs, noq, tuple(prs)))
    return tuple(out)


@dataclass(frozen=True)
class PairingBoundReport:
    t: float
    n_max: int
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    coeff_tail: float

    @property
    def max_violation(self) -> float:
        return float(np.max(self.lhs - self.rhs))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs * (1 + 1e-12) + 1e-15))

    def at(self, y1: int, y2: int) -> tuple:
        return float(self.lhs[y1, y2]), float(self.rhs[y1, y2])


def _a(t: float, M: int, n_max: int) -> np.ndarray:
    return np.asarray(coefficient_table(t, M, n_max).a)


def pairing_bound_check(cfg: LatticeConfig, t: float, n_max: int = 8) -> PairingBoundReport:
    """Both sides of the pairing bound for every ``(y1, y2)``, truncated at total order ``n_max``.

    Odd total orders vanish identically (an odd number of phases), and chains
    with no edges are deterministic, so only even totals with two nonempty
    chains enter.  The reported ``coeff_tail`` is ``sum_{n > n_max} 3 t^n / n!``.
    """
    if n_max > 8:
        raise ResourceLimitError("pairing bound check limited to total order 8")
    a = _a(t, cfg.M, n_max)
    V = cfg.volume
    lhs = np.zeros((V, V), dtype=complex)
    rhs = np.zeros((V, V))
    for n, unit, cov, rc, _, _ in pairing_tables(cfg, n_max):
        c = a[n[0]] * np.conj(a[n[1]]) * a[n[2]] * np.conj(a[n[3]])
        lhs += c * cov * unit
        rhs += abs(c) * rc.sum(axis=0) * unit
    tail = sum(3 * abs(t) ** k / math.factorial(k) for k in range(n_max + 1, n_max + 60))
    return PairingBoundReport(t=t, n_max=n_max, lhs=np.abs(lhs), rhs=rhs, coeff_tail=tail)


def aggregated_pairing_check(cfg: LatticeConfig, t: float, n_max: int = 8) -> dict:
    """Sum the pairing bound over ``(y1, y2)`` and compare with the skeleton form.

    For each pairing the root-pinned label sum without ``Q`` must equal
    ``R(S(Pi), l)``; dropping ``Q`` can only increase the total.
    """
    a = _a(t, cfg.M, n_max)
    summed = 0.0
    skeleton_form = 0.0
    worst = 0.0
    for n, unit, _, rc, noq, prs in pairing_tables(cfg, n_max):
        c = abs(a[n[0]] * a[n[1]] * a[n[2]] * a[n[3]])
        summed += c * float(rc.sum()) * unit
        for k, p in enumerate(prs):
            sigma, l = collapse_parallel_bridges(p)
            r = r_value(cfg, sigma, l)
            worst = max(worst, abs(r - noq[k] * unit))
            skeleton_form += c * r
    return {
        "t": t,
        "n_max": n_max,
        "summed_pairing_rhs": summed,
        "skeleton_form": skeleton_form,
        "max_identity_error": worst,
        "pass": summed <= skeleton_form * (1 + 1e-12) + 1e-15 and worst <= 1e-12,
    }


# ---------------------------------------------------------------- cutoff sums


def path_matrix(sigma: Pairing) -> np.ndarray:
    """``C[p, k]`` = number of edges of bridge ``k`` on path ``p``; ``n = C l``."""
    g = sigma.graph
    C = np.zeros((4, sigma.size), dtype=np.int64)
    for k, (e, f) in enumerate(sigma.bridges):
        C[g.path_of(e), k] += 1
        C[g.path_of(f), k] += 1
    return C


@functools.lru_cache(maxsize=64)
def _compositions(m: int, cap: int) -> np.ndarray:
    """All ``l`` in ``N^m`` (entries >= 1) with ``|l| <= cap``."""
    if cap < m:
        return np.zeros((0, m), dtype=np.int64)
    grid = np.indices((cap - m + 1,) * m).reshape(m, -1).T + 1
    out = grid[grid.sum(axis=1) <= cap]
    out.flags.writeable = False
    return out


def coeff_sum_cutoff(sigma: Pairing, t: float, M: int, mu: float) -> float:
    r"""``sum_{|l| <= M^mu} |a_{n11} a_{n12} a_{n21} a_{n22}|`` over ``l in N^Sigma``."""
    if sigma.size not in (3, 4):
        raise ConfigError("cutoff sums are defined here for |Sigma| in {3, 4}")
    cap = math.floor(M**mu + 1e-12)
    if cap > 24:
        raise ResourceLimitError(f"M^mu = {M**mu:.3g} exceeds 24")
    return _cutoff_sum(path_matrix(sigma), t, M, cap)


def _cutoff_sum(C: np.ndarray, t: float, M: int, cap: int) -> float:
    ls = _compositions(C.shape[1], cap)
    if ls.size == 0:
        return 0.0
    n = ls @ C.T
    absa = np.abs(_a(t, M, int(n.max())))
    return float(np.prod(absa[n], axis=1).sum())


def cutoff_study(
    m_values=(3, 4),
    M_values=(1000, 5000, 20000, 100000),
    t_values=(0.5, 2.0, 5.0),
    mu_values=(0.25, 0.3),
) -> FittedBoundReport:
    """Fit ``C`` in ``sum <= C M^{mu(m-2)} / (m-3)!`` on the lower half of ``M_values``, test the rest.

    The smallest ``M`` must satisfy ``M^mu >= max(m_values)`` so that no
    calibration sum is empty.
    """
    M_values = sorted(M_values)
    if any(math.floor(M_values[0] ** mu + 1e-12) < max(m_values) for mu in mu_values):
        raise ConfigError("calibration M too small: some cutoff sums would be empty")
    rows = []
    for m in m_values:
        mats = {}
        for sigma in enumerate_skeletons(m):
            C = path_matrix(sigma)
            key = tuple(sorted(map(tuple, C.T)))
            mats.setdefault(key, C)
        for M, t, mu in itertools.product(M_values, t_values, mu_values):
            cap = math.floor(M**mu + 1e-12)
            if cap > 24:
                continue
            shape = M ** (mu * (m - 2)) / math.factorial(m - 3)
            worst = max(_cutoff_sum(C, t, M, cap) for C in mats.values())
            rows.append({"m": m, "M": M, "t": t, "mu": mu, "value": worst, "ratio": worst / shape})
    return _fit("cutoff_sum", rows, M_values[: max(1, len(M_values) // 2)])


def _fit(name: str, rows: list, calib_M) -> FittedBoundReport:
    """``C`` is the largest ratio over rows whose ``M`` is in ``calib_M``; the other rows are held out."""
    cal, held = {}, {}
    for r in rows:
        key = tuple(v for k, v in r.items() if k not in ("value", "ratio"))
        (cal if r["M"] in calib_M else held)[key] = r["ratio"]
    C = max(cal.values())
    return FittedBoundReport(name, C, cal, held, rows)


# ---------------------------------------------------------------- R(Sigma) bound


def r_bound_study(w_values=(2, 3, 4), m_max: int = 4, l_max: int = 3, d: int = 1) -> FittedBoundReport:
    """Fit ``C`` in ``R <= C (M/(M-1))^{|l|} M^{-m/3 + 2/3}`` on the lower half of ``w_values``.

    Grid: every admissible skeleton with ``m <= m_max`` bridges and every
    ``l in {1..l_max}^m``.  Instances with equal orbit signatures share ``R``.
    """
    w_values = sorted(w_values)
    groups: dict = {}
    for m in range(1, m_max + 1):
        for sigma in enumerate_skeletons(m):
            for l in itertools.product(range(1, l_max + 1), repeat=m):
                groups.setdefault((m, sum(l), r_signature(sigma, l)), (sigma, l))
    rows = []
    for w in w_values:
        cfg = LatticeConfig(d=d, n=max(2 * w + 1, 4 * l_max * w + 1), w=w)
        M = cfg.M
        worst: dict = {}
        for (m, size, _), (sigma, l) in groups.items():
            shape = (M / (M - 1)) ** size * M ** (-m / 3 + 2 / 3)
            ratio = r_value(cfg, sigma, l) / shape
            worst[m] = max(worst.get(m, 0.0), ratio)
        for m, ratio in worst.items():
            rows.append({"m": m, "M": M, "W": w, "ratio": ratio, "value": ratio})
    calib = w_values[: max(1, len(w_values) // 2)]
    return _fit("r_bound", rows, {LatticeConfig(d=d, n=4 * l_max * w + 1, w=w).M for w in calib})
