r"""Non-backtracking Chebyshev expansion of ``exp(-i t H / 2)``.

.. math::

    e^{-itH/2} = \sum_{m \ge 0} a_m(t) H^{(m)}, \qquad
    a_m(t) = \sum_{k \ge 0} \frac{\alpha_{m+2k}(t)}{(M-1)^k},

with ``alpha_k(t) = (2/pi) int_{-1}^{1} sqrt(1-z^2) exp(-itz) U_k(z) dz`` and
``H^{(m)}`` the non-backtracking powers.  Because ``|H_xy|^2 = S_xy`` holds
deterministically for the phase ensemble, the columns obey

    v_2 = H v_1 - M/(M-1) v_0,      v_{m+1} = H v_m - v_{m-1}  (m >= 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ConfigError, ResourceLimitError, TruncationError
from .sampler import BandMatrixSample

__all__ = [
    "CoefficientTable",
    "alpha_coeff",
    "alpha_coeffs",
    "alpha_coeffs_bessel",
    "alpha_bound",
    "a_coeff",
    "coefficient_table",
    "nb_column",
    "nb_columns_iter",
    "nb_power_bruteforce",
    "propagation_order",
    "propagate_column",
    "dense_expm_oracle",
]


QUADRATURE_RESOLUTION = 1e-14


def _node_count(kmax: int, t: float) -> int:
    return max(64, 2 * kmax + 2 * math.ceil(abs(t))) + 16


def alpha_coeffs(kmax: int, t: float) -> np.ndarray:
    """``alpha_0 .. alpha_kmax`` by Gauss-Chebyshev quadrature of the second kind.

    With ``z_j = cos(theta_j)``, ``theta_j = j pi/(n+1)`` the rule reads
    ``alpha_k = 2/(n+1) sum_j sin(theta_j) sin((k+1) theta_j) exp(-i t z_j)``.
    """
    if kmax < 0:
        return np.zeros(0, dtype=complex)
    n = _node_count(kmax, t)
    theta = np.arange(1, n + 1) * (np.pi / (n + 1))
    f = np.sin(theta) * np.exp(-1j * t * np.cos(theta))
    k1 = np.arange(1, kmax + 2)[:, None]
    return (2.0 / (n + 1)) * (np.sin(k1 * theta[None, :]) @ f)


def alpha_coeffs_bessel(kmax: int, t: float) -> np.ndarray:
    """``alpha_k = 2 (-i)^k (k+1) J_{k+1}(t) / t``; relative accuracy for tiny values."""
    k = np.arange(kmax + 1)
    if t == 0.0:
        return (k == 0).astype(complex)
    if abs(t) < 1e-8:
        # two terms of the power series of J_{k+1}(t) / t, relative error O(t^4)
        with np.errstate(under="ignore"):
            lead = np.exp(k * math.log(abs(t)) - (k + 1) * math.log(2) - special.gammaln(k + 2))
        ratio = lead * (1 - t * t / (4 * (k + 2))) * np.sign(t) ** k
        return 2.0 * (-1j) ** k * (k + 1) * ratio
    return 2.0 * (-1j) ** k * (k + 1) * special.jv(k + 1, t) / t


def alpha_coeff(k: int, t: float) -> complex:
    return complex(alpha_coeffs(k, t)[k])


def alpha_bound(j, t: float):
    """Upper bound on ``|alpha_j(t)|``: ``2(j+1) min(1, (e|t|/(2j+2))^(j+1) 2/|t|)``."""
    j = np.asarray(j, dtype=np.float64)
    t = abs(t)
    if t == 0.0:
        return np.where(j == 0, 1.0, 0.0)
    with np.errstate(over="ignore", under="ignore"):
        log_small = (j + 1) * (1 + math.log(t) - np.log(2 * j + 2)) + math.log(2) - math.log(t)
        small = np.exp(np.minimum(log_small, 0.0))
    return 2 * (j + 1) * small


def _k_truncation(m: int, t: float, M: int, tol: float) -> int:
    """Smallest ``K`` whose omitted tail ``sum_{k > K}`` is bounded by ``tol``."""
    if t == 0.0:
        return 0
    ratio = 1.0 / (M - 1)
    kcap = 64
    while True:
        k = np.arange(kcap + 1)
        with np.errstate(under="ignore"):
            terms = alpha_bound(m + 2 * k, t) * ratio**k
        # beyond the cap the bound decays at least geometrically with ratio q
        q = terms[-1] / terms[-2] if terms[-2] > 0 else 0.0
        if q < 0.5:
            beyond = terms[-1] * q / (1 - q)
            tails = np.cumsum(terms[::-1])[::-1] - terms + beyond
            ok = np.nonzero(tails <= tol)[0]
            if ok.size:
                return int(ok[0])
        kcap *= 2
        if kcap > 1 << 16:
            raise TruncationError(f"a_{m}({t}) series does not reach tol={tol}")


def a_coeff(m: int, t: float, M: int, tol: float = 1e-14) -> complex:
    """``a_m(t)`` with the ``k``-series truncated at a certified tail ``<= tol``."""
    if tol <= 0:
        raise ConfigError("tol must be positive")
    if M < 2:
        raise ConfigError("M must be >= 2")
    K = _k_truncation(m, t, M, tol)
    alpha = alpha_coeffs(m + 2 * K, t)
    w = (1.0 / (M - 1)) ** np.arange(K + 1)
    return complex(np.dot(alpha[m::2][: K + 1], w))


@dataclass(frozen=True)
class CoefficientTable:
    t: float
    M: int
    m_max: int
    alpha: np.ndarray
    a: np.ndarray
    tail_bound: float

    @property
    def sum_sq(self) -> float:
        return float(np.sum(np.abs(self.a) ** 2))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "M": self.M,
            "m": list(range(self.m_max + 1)),
            "a_re": [float(z.real) for z in self.a],
            "a_im": [float(z.imag) for z in self.a],
            "sum_sq": self.sum_sq,
            "tail_bound": self.tail_bound,
        }


def _a_upper(m_lo: int, m_hi: int, t: float, M: int) -> np.ndarray:
    """Upper bounds on ``|a_m(t)|`` for ``m_lo <= m < m_hi``."""
    m = np.arange(m_lo, m_hi)[:, None]
    k = np.arange(200)[None, :]
    with np.errstate(under="ignore"):
        return (alpha_bound(m + 2 * k, t) * (1.0 / (M - 1)) ** k).sum(axis=1)


@lru_cache(maxsize=256)
def _coefficient_table(t: float, M: int, m_max: int, tol: float, method: str) -> CoefficientTable:
    K = max(_k_truncation(m, t, M, tol) for m in (0, 1))
    jmax = m_max + 2 * K
    if t == 0.0:
        # exp(0) = H^(0): exact, no quadrature rounding
        alpha = np.zeros(jmax + 1, dtype=complex)
        alpha[0] = 1.0
    elif method == "quadrature":
        alpha = alpha_coeffs(jmax, t)
    else:
        alpha = alpha_coeffs_bessel(jmax, t)
    w = (1.0 / (M - 1)) ** np.arange(K + 1)
    a = np.empty(m_max + 1, dtype=complex)
    for m in range(m_max + 1):
        seg = alpha[m::2][: K + 1]
        a[m] = np.dot(seg, w[: seg.size])
    # Quadrature is accurate to ~1e-15 absolute.  A coefficient whose certified
    # bound is below that is pure rounding noise, and ||H^(m) e_0|| can grow
    # with m, so it is set to zero; its bound moves into the tail.
    dropped = 0.0
    if method == "quadrature":
        bound = _a_upper(0, m_max + 1, t, M)
        noise = bound < QUADRATURE_RESOLUTION
        a[noise] = 0.0
        dropped = float(np.sum(bound[noise] ** 2))
    # omitted m > m_max contribute at most sum |a_m|^2; plus the k-truncation error
    upper = _a_upper(m_max + 1, m_max + 400, t, M)
    tail = float(np.sum(upper**2)) + dropped + 2.0 * (m_max + 1) * tol * (float(np.abs(a).max()) + tol)
    alpha.flags.writeable = False
    a.flags.writeable = False
    return CoefficientTable(t=t, M=M, m_max=m_max, alpha=alpha, a=a, tail_bound=tail)


def coefficient_table(
    t: float, M: int, m_max: int, tol: float = 1e-14, method: str = "quadrature"
) -> CoefficientTable:
    """Tabulate ``a_0 .. a_{m_max}`` for one ``(t, M)``.

    ``method="quadrature"`` is accurate to about 1e-15 in absolute terms.
    ``method="bessel"`` keeps relative accuracy for coefficients far below
    that, which is what growth bounds like ``|a_m| <= C t^m/m!`` need at
    large ``m``.

    ``k`` is truncated where the bound on ``sum_{k > K} |alpha_{m+2k}|/(M-1)^k``
    drops below ``tol``; the bound is decreasing in ``m`` so ``m in {0, 1}``
    (one per parity) fixes ``K`` for the whole table.
    """
    if M < 2:
        raise ConfigError("M must be >= 2")
    if m_max < 0:
        raise ConfigError("m_max must be >= 0")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    if method not in ("quadrature", "bessel"):
        raise ConfigError(f"unknown coefficient method {method!r}")
    return _coefficient_table(float(t), int(M), int(m_max), float(tol), method)


def nb_columns_iter(H: BandMatrixSample, m_max: int):
    """Yield ``(m, v_m)`` with ``v_m = H^{(m)} e_0`` for ``m = 0 .. m_max``."""
    cfg = H.config
    A = H.matrix
    v_prev = np.zeros(cfg.volume, dtype=complex)
    v_prev[cfg.origin_index] = 1.0
    yield 0, v_prev
    if m_max == 0:
        return
    v = A @ v_prev
    yield 1, v
    diag = cfg.M / (cfg.M - 1)
    for m in range(1, m_max):
        c = diag if m == 1 else 1.0
        v_next = A @ v - c * v_prev
        v_prev, v = v, v_next
        yield m + 1, v


def nb_column(H: BandMatrixSample, m_max: int) -> np.ndarray:
    """Columns ``H^{(m)} e_0`` stacked as ``(m_max + 1, V)``."""
    if m_max < 0:
        raise ConfigError("m_max must be >= 0")
    return np.array([v for _, v in nb_columns_iter(H, m_max)])


def nb_power_bruteforce(H: BandMatrixSample, n: int) -> np.ndarray:
    """``H^{(n)} e_0`` from the path-sum definition.

    ``(H^{(n)})_{x,0}`` sums ``H_{x x_{n-1}} ... H_{x_1 0}`` over band walks
    ``0 = x_0, x_1, ..., x_n = x`` with ``x_i != x_{i+2}``.  Walks are
    enumerated explicitly (no state merging), so cost is ``M^n``.
    """
    cfg = H.config
    if n < 0:
        raise ConfigError("n must be >= 0")
    if n > 6 or cfg.volume > 4096 or cfg.M**n > 5 * 10**6:
        raise ResourceLimitError(f"path enumeration refused for n={n}, M={cfg.M}, V={cfg.volume}")
    Hd = H.dense()
    nbr = cfg.neighbor_table()
    out = np.zeros(cfg.volume, dtype=complex)
    o = cfg.origin_index
    if n == 0:
        out[o] = 1.0
        return out
    # frontier of explicit walks: (x_{i-1}, x_i, amplitude)
    prev = np.full(1, -1, dtype=np.int64)
    cur = np.full(1, o, dtype=np.int64)
    amp = np.ones(1, dtype=complex)
    for _ in range(n):
        nxt = nbr[cur].ravel()
        p = np.repeat(cur, nbr.shape[1])
        pp = np.repeat(prev, nbr.shape[1])
        a = np.repeat(amp, nbr.shape[1]) * Hd[nxt, p]
        keep = nxt != pp
        prev, cur, amp = p[keep], nxt[keep], a[keep]
    np.add.at(out, cur, amp)
    return out


def propagation_order(t: float, tol: float) -> int:
    """``max(ceil(2 e |t|), 30) + 4 ceil(log10(1/tol))``."""
    return max(math.ceil(2 * math.e * abs(t)), 30) + 4 * math.ceil(math.log10(1.0 / tol))


def propagate_column(H: BandMatrixSample, t: float, tol: float = 1e-10) -> np.ndarray:
    """``psi ~ exp(-i t H / 2) e_0`` from the truncated non-backtracking expansion.

    Raises ``TruncationError`` when ``||psi||_2`` leaves ``[1 - tol, 1 + tol]``.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    m_max = propagation_order(t, tol)
    table = coefficient_table(t, H.config.M, m_max, tol=min(tol * 1e-3, 1e-14))
    psi = np.zeros(H.config.volume, dtype=complex)
    for m, v in nb_columns_iter(H, m_max):
        psi += table.a[m] * v
    norm = float(np.linalg.norm(psi))
    if not abs(norm - 1.0) <= tol:
        raise TruncationError(f"||psi|| = {norm!r} outside 1 +/- {tol} at t={t}, m_max={m_max}")
    return psi


def dense_expm_oracle(H: BandMatrixSample, t: float) -> np.ndarray:
    """``exp(-i t H/2) e_0`` via a Hermitian eigendecomposition of dense ``H``."""
    Hd = H.dense()
    evals, U = np.linalg.eigh(Hd)
    o = H.config.origin_index
    return U @ (np.exp(-0.5j * t * evals) * np.conj(U[o, :]))


def nb_walk_count(M: int, n: int) -> int:
    return 1 if n == 0 else M * (M - 1) ** (n - 1)

