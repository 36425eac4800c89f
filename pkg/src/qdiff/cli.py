"""Command-line driver.

Every run prints its records as JSON lines on stdout and appends them to the
results file.  Exit codes: 0 all checks passed, 1 a check failed, 2 usage or
configuration error, 3 resource-limit refusal.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from .errors import ConfigError, ResourceLimitError, TruncationError
from .lattice import LatticeConfig
from .results import RunConfig, append_records, emit_plot_data, make_record, results_path

__all__ = ["main", "run", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _lattice_args(p, n_flag="--n", n_default=None):
    p.add_argument("--d", type=int, default=1)
    p.add_argument(n_flag, dest="n", type=int, default=n_default, required=n_default is None)
    p.add_argument("--w", type=int, required=True)


def _common(p):
    p.add_argument("--out", default=None, help="results file (JSON lines)")
    p.add_argument("--csv", default=None, help="also write plot data here")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qdiff", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("coeffs", help="tabulate a_m(t)")
    p.add_argument("--t", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--M", type=int)
    g.add_argument("--w", type=int)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--m-max", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-14)
    _common(p)

    p = sub.add_parser("propagate", help="transition profile P(t, .) of one sample")
    _lattice_args(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--oracle", action="store_true", help="compare with dense diagonalisation")
    _common(p)

    p = sub.add_parser("mc-var", help="Monte Carlo variance of Y_T(phi)")
    _lattice_args(p)
    _scaling_args(p)
    _common(p)

    p = sub.add_parser("scaling", help="variance exponent over a list of band widths")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--w-list", type=_int_list, required=True)
    p.add_argument("--n-floor", type=int, default=512)
    p.add_argument("--beta-target", type=float, default=0.3)
    p.add_argument("--slope-tol", type=float, default=0.2)
    _scaling_args(p)
    _common(p)

    p = sub.add_parser("diagrams", help="exact diagram checks")
    dsub = p.add_subparsers(dest="dcmd", required=True, parser_class=_Parser)
    q = dsub.add_parser("verify-lumping")
    q.add_argument("--n", dest="chain", type=_int_list, required=True, help="n11,n12,n21,n22")
    _lattice_args(q, n_flag="--lattice-n", n_default=5)
    _common(q)
    q = dsub.add_parser("skeletons")
    q.add_argument("--max-bridges", type=int, required=True)
    q.add_argument("--check", default="two-thirds,count,adjacency")
    _common(q)
    q = dsub.add_parser("r-value")
    q.add_argument("--bridges", type=int, required=True, help="|Sigma|")
    q.add_argument("--skeleton-id", type=int, required=True)
    q.add_argument("--l", type=_int_list, required=True)
    q.add_argument("--naive", action="store_true", help="also evaluate by full enumeration")
    _lattice_args(q, n_flag="--lattice-n", n_default=10)
    _common(q)
    return ap


def _scaling_args(p):
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--phi", default="gaussian:1")
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--jobs", type=int, default=1)


def _params(args) -> dict:
    skip = {"cmd", "dcmd", "out", "csv"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _lattice(args) -> LatticeConfig:
    return LatticeConfig(d=args.d, n=args.n, w=args.w)


# ---------------------------------------------------------------- subcommands


def _cmd_coeffs(args, cfg_rec):
    from .lattice import band_count
    from .propagator import coefficient_table

    M = args.M if args.M is not None else band_count(args.d, args.w)
    tab = coefficient_table(args.t, M, args.m_max, tol=args.tol)
    slack = 10 / M + tab.tail_bound
    metrics = tab.to_dict()
    metrics["sum_sq_slack"] = slack
    ok = abs(tab.sum_sq - 1) <= slack
    return [make_record("coeffs", cfg_rec, metrics, ok)], tab.to_dict()


def _cmd_propagate(args, cfg_rec):
    from .observables import transition_profile
    from .propagator import dense_expm_oracle
    from .sampler import SeedSpec, sample_band_matrix

    cfg = _lattice(args)
    H = sample_band_matrix(cfg, SeedSpec(args.seed, args.replica))
    P = transition_profile(H, args.t, tol=args.tol)
    coords = cfg.coords
    x = coords[:, 0].tolist() if cfg.d == 1 else coords.tolist()
    metrics = {"t": args.t, "total": P.total, "x": x, "p": P.values.tolist()}
    ok = abs(P.total - 1) <= args.tol
    if args.oracle:
        # row 0 of e^{-itH/2} is the conjugate of column 0 of e^{+itH/2}
        ref = np.abs(dense_expm_oracle(H, -args.t)) ** 2
        metrics["oracle_max_dev"] = float(np.max(np.abs(ref - P.values)))
        ok = ok and metrics["oracle_max_dev"] <= 1e-8
    return [make_record("propagate", cfg_rec, metrics, ok)], None


def _cmd_mc_var(args, cfg_rec):
    from .observables import ScalingParams, TestFunction, mc_variance

    cfg = _lattice(args)
    sp = ScalingParams(args.T, args.kappa)
    phi = TestFunction.parse(args.phi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = mc_variance(cfg, sp, phi, args.replicas, args.seed, jobs=args.jobs, tol=args.tol)
    ok = rep.valid and rep.variance <= phi.sup_norm**2
    return [make_record("mc-var", cfg_rec, rep.metrics(), ok, wall_time=rep.wall_time)], None


def _cmd_scaling(args, cfg_rec):
    from .observables import ScalingParams, TestFunction, scaling_sweep

    sp = ScalingParams(args.T, args.kappa)
    phi = TestFunction.parse(args.phi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = scaling_sweep(
            args.w_list,
            args.d,
            sp,
            phi,
            args.replicas,
            args.seed,
            beta_target=args.beta_target,
            tolerance=args.slope_tol,
            n_floor=args.n_floor,
            jobs=args.jobs,
            tol=args.tol,
        )
    ok = res.passed if res.status == "ok" else (True if res.status.startswith("degenerate") else False)
    return [make_record("scaling", cfg_rec, res.metrics(), ok, wall_time=res.wall_time)], None


def _cmd_verify_lumping(args, cfg_rec):
    from .diagrams.chains import ChainGraph
    from .diagrams.covariance import covariance_table, lumping_decomposition

    if len(args.chain) != 4:
        raise ConfigError("--n needs four values n11,n12,n21,n22")
    cfg = _lattice(args)
    g = ChainGraph(*args.chain)
    tab = covariance_table(cfg, g)
    dec = lumping_decomposition(cfg, g)
    recs = []
    for y1 in range(cfg.volume):
        for y2 in range(cfg.volume):
            lhs = dec.connected_sum(y1, y2)
            rhs = tab.value(y1, y2)
            err = abs(float(lhs - rhs))
            comp = abs(float(dec.complement_sum(y1, y2)))
            metrics = {
                "instance": {"n": list(g.n), "y1": cfg.site(y1), "y2": cfg.site(y2)},
                "lhs": float(lhs),
                "rhs": float(rhs),
                "abs_error": err,
                "complement": comp,
            }
            recs.append(make_record("verify-lumping", cfg_rec, metrics, err <= 1e-10 and comp <= 1e-10))
    return recs, None


def _cmd_skeletons(args, cfg_rec):
    from .diagrams.orbits import orbit_partition, two_thirds_bound
    from .diagrams.pairings import adjacency_violations, enumerate_skeletons

    checks = {c.strip() for c in args.check.split(",") if c.strip()}
    unknown = checks - {"two-thirds", "count", "adjacency"}
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    if not 1 <= args.max_bridges <= 5:
        if args.max_bridges > 5:
            raise ResourceLimitError(f"skeleton enumeration limited to 5 bridges, got {args.max_bridges}")
        raise ConfigError("--max-bridges must be >= 1")
    recs = []
    saturated = False
    for m in range(1, args.max_bridges + 1):
        sk = enumerate_skeletons(m)
        bound = two_thirds_bound(m)
        max_l = 0
        for idx, s in enumerate(sk):
            L = orbit_partition(s).L
            max_l = max(max_l, L)
            saturated |= abs(L - bound) < 1e-12
            per = {"instance": {"m": m, "id": idx, **s.to_dict()}, "L": L}
            ok = True
            if "two-thirds" in checks:
                per["bound"] = bound
                ok &= L <= bound + 1e-12
            if "adjacency" in checks:
                per["adjacent_bridges"] = [list(b) for b in adjacency_violations(s)]
                ok &= not per["adjacent_bridges"]
            if checks & {"two-thirds", "adjacency"}:
                recs.append(make_record("skeleton", cfg_rec, per, ok))
        summary = {"m": m, "count": len(sk), "max_L": max_l, "two_thirds_bound": bound}
        ok = True
        if "count" in checks:
            summary["count_bound"] = 2**m * math.factorial(m)
            ok = len(sk) <= summary["count_bound"]
        recs.append(make_record("skeletons-summary", cfg_rec, summary, ok))
    if "two-thirds" in checks:
        recs.append(
            make_record("skeletons-summary", cfg_rec, {"saturation_witnessed": saturated}, None)
        )
    return recs, None


def _cmd_r_value(args, cfg_rec):
    from .diagrams.pairings import skeleton_by_id
    from .diagrams.values import r_value, r_value_naive

    cfg = _lattice(args)
    sigma = skeleton_by_id(args.bridges, args.skeleton_id)
    val = r_value(cfg, sigma, args.l)
    metrics = {"instance": {"m": args.bridges, "id": args.skeleton_id, "l": args.l, **sigma.to_dict()},
               "lhs": val}
    ok = None
    if args.naive:
        ref = r_value_naive(cfg, sigma, args.l)
        metrics.update(rhs=ref, abs_error=abs(val - ref))
        ok = abs(val - ref) <= 1e-10 * max(1.0, abs(ref))
    return [make_record("r-value", cfg_rec, metrics, ok)], None


_DISPATCH = {
    "coeffs": _cmd_coeffs,
    "propagate": _cmd_propagate,
    "mc-var": _cmd_mc_var,
    "scaling": _cmd_scaling,
    "verify-lumping": _cmd_verify_lumping,
    "skeletons": _cmd_skeletons,
    "r-value": _cmd_r_value,
}

_PLOT_KIND = {"propagate": "profile", "mc-var": "scaling", "scaling": "scaling"}


def _diagnostic(kind: str, exc: Exception) -> str:
    return json.dumps({"error": kind, "message": str(exc)})


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        name = args.dcmd if args.cmd == "diagrams" else args.cmd
        cfg_rec = RunConfig(name, _params(args))
        records, _ = _DISPATCH[name](args, cfg_rec)
    except ConfigError as exc:
        print(_diagnostic("config", exc), file=stdout)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(_diagnostic("resource-limit", exc), file=stdout)
        return EXIT_RESOURCE
    except TruncationError as exc:
        print(_diagnostic("truncation", exc), file=stdout)
        return EXIT_FAIL
    for rec in records:
        print(json.dumps(rec, sort_keys=True), file=stdout)
    append_records(results_path(args.out), records)
    if args.csv and name in _PLOT_KIND:
        emit_plot_data(records, _PLOT_KIND[name], args.csv)
    failed = any(rec["pass"] is False for rec in records)
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
