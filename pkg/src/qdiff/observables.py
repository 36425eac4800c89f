"""Transition profile, the scaled observable ``Y_T(phi)`` and its Monte Carlo variance.

Macroscopic time ``T`` and space ``X`` map to lattice units through
``t = W^{d kappa} T`` and ``x = W^{1 + d kappa / 2} X``.  ``Y`` averages a
bounded test function against ``P(t, .)``, which is a probability vector.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, TruncationError
from .lattice import LatticeConfig
from .propagator import propagate_column
from .sampler import BandMatrixSample, SeedSpec, sample_band_matrix

__all__ = [
    "ScalingParams",
    "TestFunction",
    "TransitionProfile",
    "VarianceReport",
    "SweepResult",
    "transition_profile",
    "y_observable",
    "jackknife_variance",
    "mc_variance",
    "scaling_sweep",
    "sweep_lattice_size",
    "fit_slope",
]

_KINDS = ("const", "gaussian", "box", "cos")


@dataclass(frozen=True)
class ScalingParams:
    T: float
    kappa: float
    T0: float = math.inf

    def __post_init__(self):
        if not 0 < self.kappa < 1 / 3:
            raise ConfigError(f"kappa must lie in (0, 1/3), got {self.kappa}")
        if not 0 <= self.T <= self.T0:
            raise ConfigError(f"T must lie in [0, T0={self.T0}], got {self.T}")

    def time(self, w: int, d: int) -> float:
        return w ** (d * self.kappa) * self.T

    def length_scale(self, w: int, d: int) -> float:
        return w ** (1 + d * self.kappa / 2)


@dataclass(frozen=True)
class TestFunction:
    """``phi(scale * X)`` for one of the named bounded functions.

    ``const:c`` is ``c``; ``gaussian:s`` is ``exp(-|X|^2 / (2 s^2))``;
    ``box:h`` is the indicator of ``max_i |X_i| <= h``; ``cos:k`` is
    ``cos(k X_1)``.
    """

    __test__ = False  # not a pytest class

    kind: str
    param: float
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown test function {self.kind!r}; expected one of {_KINDS}")
        if self.kind in ("gaussian", "box") and not self.param > 0:
            raise ConfigError(f"{self.kind} needs a positive parameter, got {self.param}")

    @classmethod
    def parse(cls, text: str) -> "TestFunction":
        kind, sep, value = text.partition(":")
        if not sep:
            raise ConfigError(f"test function must look like kind:param, got {text!r}")
        try:
            return cls(kind.strip(), float(value))
        except ValueError:
            raise ConfigError(f"bad test function parameter in {text!r}") from None

    def __str__(self) -> str:
        base = f"{self.kind}:{self.param:g}"
        return base if self.scale == 1.0 else f"{base}@{self.scale:g}"

    def scaled(self, c: float) -> "TestFunction":
        """``X -> phi(c X)``."""
        return TestFunction(self.kind, self.param, self.scale * c)

    @property
    def sup_norm(self) -> float:
        return abs(self.param) if self.kind == "const" else 1.0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64) * self.scale
        if X.ndim == 1:
            X = X[:, None]
        if self.kind == "const":
            return np.full(X.shape[0], float(self.param))
        if self.kind == "gaussian":
            return np.exp(-np.sum(X * X, axis=1) / (2 * self.param**2))
        if self.kind == "box":
            return (np.max(np.abs(X), axis=1) <= self.param).astype(np.float64)
        return np.cos(self.param * X[:, 0])


@dataclass(frozen=True)
class TransitionProfile:
    config: LatticeConfig
    t: float
    values: np.ndarray = field(repr=False)
    seed: SeedSpec | None = None

    @property
    def total(self) -> float:
        return math.fsum(self.values)


def transition_profile(H: BandMatrixSample, t: float, tol: float = 1e-10) -> TransitionProfile:
    """``P(t, x) = |(e^{-itH/2})_{0x}|^2``.

    Row 0 of the unitary is the conjugate of column 0 of its inverse, so
    ``|U_{0x}|^2 = |(e^{+itH/2} e_0)_x|^2`` and one column propagation suffices.
    """
    psi = propagate_column(H, -t, tol=tol)
    p = np.abs(psi) ** 2
    p.flags.writeable = False
    return TransitionProfile(config=H.config, t=t, values=p, seed=H.seed)


def y_observable(
    P: TransitionProfile, phi: TestFunction, w: int, kappa: float, length_scale: float | None = None
) -> float:
    """``Y = sum_x P(t, x) phi(x / W^{1 + d kappa/2})`` over signed canonical coordinates."""
    cfg = P.config
    if length_scale is None:
        length_scale = w ** (1 + cfg.d * kappa / 2)
    vals = phi(cfg.coords / length_scale)
    return math.fsum(P.values * vals)


@dataclass(frozen=True)
class VarianceReport:
    W: int
    N: int
    d: int
    kappa: float
    T: float
    phi: str
    R: int
    mean: float
    variance: float
    se: float
    master_seed: int
    wall_time: float
    valid: bool = True
    failed_replicas: tuple = ()
    warnings: tuple = ()

    def metrics(self) -> dict:
        """Everything except wall time, i.e. the deterministic part."""
        out = asdict(self)
        out.pop("wall_time")
        out["failed_replicas"] = list(self.failed_replicas)
        out["warnings"] = list(self.warnings)
        return out

    def to_dict(self) -> dict:
        out = self.metrics()
        out["wall_time"] = self.wall_time
        return out


def jackknife_variance(y: np.ndarray) -> tuple:
    """Unbiased sample variance and its leave-one-out jackknife standard error."""
    y = np.asarray(y, dtype=np.float64)
    R = y.size
    if R < 2:
        raise ConfigError("need at least two replicas")
    var = float(np.var(y, ddof=1))
    if R < 3:
        return var, math.nan
    # leave-one-out variances from running sums, shifted by the mean for stability
    z = y - y.mean()
    s1, s2 = z.sum(), np.sum(z * z)
    m = R - 1
    loo = ((s2 - z * z) - (s1 - z) ** 2 / m) / (m - 1)
    se = math.sqrt((R - 1) / R * float(np.sum((loo - loo.mean()) ** 2)))
    return var, se


def _replica(args) -> tuple:
    cfg, t, phi, w, kappa, master, i, tol = args
    try:
        H = sample_band_matrix(cfg, SeedSpec(master, i))
        P = transition_profile(H, t, tol=tol)
        return i, y_observable(P, phi, w, kappa), None
    except TruncationError as exc:
        return i, math.nan, str(exc)


def _run_replicas(tasks, jobs: int) -> list:
    if jobs <= 1 or len(tasks) < 2:
        return [_replica(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_replica, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def mc_variance(
    cfg: LatticeConfig,
    sp: ScalingParams,
    phi: TestFunction,
    R: int,
    master_seed: int,
    jobs: int = 1,
    tol: float = 1e-10,
) -> VarianceReport:
    """Sample ``R`` matrices, evaluate ``Y`` for each and estimate ``Var(Y)``.

    Replica ``i`` uses stream ``(master_seed, i)`` only and results are
    reduced in replica order, so the report does not depend on ``jobs``.
    """
    if R < 2:
        raise ConfigError(f"need R >= 2 replicas, got {R}")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    notes = []
    need = cfg.w ** (1 + cfg.d / 6)
    if cfg.n < need:
        msg = f"N={cfg.n} below W^(1+d/6)={need:.1f}; variance bound hypothesis not met"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    t = sp.time(cfg.w, cfg.d)
    tasks = [(cfg, t, phi, cfg.w, sp.kappa, master_seed, i, tol) for i in range(R)]
    start = time.perf_counter()
    results = sorted(_run_replicas(tasks, jobs))
    wall = time.perf_counter() - start
    failed = tuple(i for i, _, err in results if err is not None)
    y = np.array([v for _, v, _ in results])
    ok = y[~np.isnan(y)]
    if ok.size >= 2:
        var, se = jackknife_variance(ok)
        mean = float(np.mean(ok))
    else:
        var = se = mean = math.nan
    return VarianceReport(
        W=cfg.w,
        N=cfg.n,
        d=cfg.d,
        kappa=sp.kappa,
        T=sp.T,
        phi=str(phi),
        R=R,
        mean=mean,
        variance=var,
        se=se,
        master_seed=master_seed,
        wall_time=wall,
        valid=not failed,
        failed_replicas=failed,
        warnings=tuple(notes),
    )


def sweep_lattice_size(w: int, d: int, n_floor: int = 0) -> int:
    """``max(2W + 2, ceil(W^{1 + d/6}), n_floor)``."""
    return max(2 * w + 2, math.ceil(w ** (1 + d / 6) - 1e-12), n_floor)


def fit_slope(w, var, se) -> tuple:
    """Weighted least squares of ``log var`` on ``log W``; returns ``(slope, slope_se)``.

    The standard error of ``log var`` is ``se / var``, so points are weighted
    by ``var / se``.
    """
    w = np.asarray(w, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    se = np.asarray(se, dtype=np.float64)
    coef, cov = np.polyfit(np.log(w), np.log(var), 1, w=var / se, cov="unscaled")
    return float(coef[0]), float(math.sqrt(cov[0, 0]))


@dataclass(frozen=True)
class SweepResult:
    reports: tuple
    slope: float | None
    slope_se: float | None
    beta_target: float
    tolerance: float
    status: str

    @property
    def passed(self) -> bool:
        if self.status != "ok":
            return False
        d = self.reports[0].d
        return self.slope <= -d * self.beta_target + self.tolerance

    @property
    def wall_time(self) -> float:
        return sum(r.wall_time for r in self.reports)

    def metrics(self) -> dict:
        """Deterministic summary; per-W reports without wall times."""
        out = self.to_dict()
        out["reports"] = [r.metrics() for r in self.reports]
        return out

    def to_dict(self) -> dict:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "slope": self.slope,
            "slope_se": self.slope_se,
            "beta_target": self.beta_target,
            "tolerance": self.tolerance,
            "status": self.status,
            "pass": self.passed,
        }


def scaling_sweep(
    w_list,
    d: int,
    sp: ScalingParams,
    phi: TestFunction,
    R: int,
    master_seed: int,
    beta_target: float = 0.3,
    tolerance: float = 0.2,
    n_floor: int = 0,
    jobs: int = 1,
    tol: float = 1e-10,
) -> SweepResult:
    """Variance at each ``W`` and the fitted exponent of ``Var ~ W^slope``.

    The check is one-sided: ``slope <= -d beta_target + tolerance``.
    """
    w_list = [int(w) for w in w_list]
    if len(w_list) < 2 or any(b <= a for a, b in zip(w_list, w_list[1:])):
        raise ConfigError(f"W list must be strictly increasing with >= 2 entries, got {w_list}")
    reports = []
    for w in w_list:
        cfg = LatticeConfig(d=d, n=sweep_lattice_size(w, d, n_floor), w=w)
        reports.append(mc_variance(cfg, sp, phi, R, master_seed, jobs=jobs, tol=tol))
    reports = tuple(reports)
    if not all(r.valid for r in reports):
        return SweepResult(reports, None, None, beta_target, tolerance, "invalid: failed replicas")
    var = np.array([r.variance for r in reports])
    if np.all(var <= 1e-18):
        return SweepResult(reports, None, None, beta_target, tolerance, "degenerate: zero variance")
    if np.any(var <= 0):
        return SweepResult(reports, None, None, beta_target, tolerance, "degenerate: some zero variance")
    slope, slope_se = fit_slope(w_list, var, [r.se for r in reports])
    return SweepResult(reports, slope, slope_se, beta_target, tolerance, "ok")
