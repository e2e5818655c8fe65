"""Command-line interface.

Exit codes: 0 success, 1 a mathematical property was violated, 2 usage or
input error (including an uncertified SDP).
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import channels as chn
from . import circuits, diamond, io, metrics
from . import matkernel as mk
from .parallel import available_threads, ordered_map
from .validation import PreconditionError, SolverError

log = logging.getLogger("qcm")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
DEFAULT_TOL = 1e-8
TIGHT_TOL = 1e-6


class UsageError(Exception):
    pass


def _emit(obj, args):
    if args.json:
        print(metrics.dumps17(obj, indent=2, sort_keys=True))
    else:
        for key, val in obj.items():
            print(f"{key:28s} {val}")


def _flags(checks):
    return {c["name"]: c["ok"] for c in checks}


# --------------------------------------------------------------------------
# metrics / bounds / diamond / twirl / tavg


def cmd_metrics(args):
    ch = io.load_channel(args.channel)
    _emit(metrics.metrics_report(ch).to_dict(), args)
    return EXIT_OK


def bounds_report(ch, tol, rng):
    """Diamond distance plus every inequality and tightness flag for ``ch``."""
    d = ch.d
    res, chain = diamond.bound_chain(ch, tol=tol)
    rep = metrics.metrics_report(ch)
    eps, r = res.value, rep.r
    checks = [c.to_dict() for c in chain]
    checks.append({"name": "thm3_alpha", "lower": 0.0, "value": rep.alpha, "upper": rep.alpha_bound, "ok": rep.alpha_bound_ok})
    checks.append({"name": "thm1_basis_sum", "lower": 0.0, "value": rep.basis_sum, "upper": (d + 1) * r, "ok": rep.basis_bound_ok})
    checks.append({"name": "unitarity_range", "lower": rep.p**2, "value": rep.u, "upper": 1.0, "ok": rep.unitarity_ok})
    rmax, _ = metrics.max_infidelity_search(ch, restarts=10, rng=rng)
    checks.append({"name": "cor2_max_infidelity", "lower": r, "value": rmax, "upper": (d + 1) * r, "ok": bool(r - 1e-9 <= rmax <= (d + 1) * r + 1e-9)})
    stochastic = diamond.analytic_diamond_distance(ch)
    tight = {
        "stochastic_equality": bool(stochastic is not None and stochastic.method == "stochastic" and abs(eps - (d + 1) * r / d) <= TIGHT_TOL),
        "cor5_lower_tight": bool(abs(eps - rep.C / np.sqrt(2.0)) <= TIGHT_TOL),
    }
    return {"diamond": res.to_dict(), "r": r, "checks": checks, "tight": tight}


def cmd_bounds(args):
    ch = io.load_channel(args.channel)
    out = bounds_report(ch, args.tol, mk.make_rng(args.seed, 0))
    if args.json:
        print(metrics.dumps17(out, indent=2, sort_keys=True))
    else:
        print(f"diamond distance {out['diamond']['value']!r} (gap {out['diamond']['gap']:.2e})")
        for c in out["checks"]:
            mark = "ok" if c["ok"] else "VIOLATED"
            print(f"{c['name']:22s} {c['lower']!r:>24} <= {c['value']!r:>24} <= {c['upper']!r:>24}  {mark}")
        for name, flag in out["tight"].items():
            print(f"{name:22s} {flag}")
    return EXIT_OK if all(c["ok"] for c in out["checks"]) else EXIT_VIOLATION


def cmd_diamond(args):
    ch = io.load_channel(args.channel, allow_nonphysical=args.allow_nonphysical)
    if args.norm:
        res = diamond.diamond_norm(ch, gap_tol=args.tol)
    else:
        res = diamond.diamond_distance(ch, method=args.method, gap_tol=args.tol)
    _emit(res.to_dict(), args)
    return EXIT_OK


def cmd_twirl(args):
    ch = io.load_channel(args.channel)
    w = chn.weyl_twirl(ch)
    out = {
        "d": w.d,
        "probs": w.probs.tolist(),
        "offdiag": w.offdiag,
        "r": metrics.infidelity(ch),
        "r_twirled": metrics.infidelity(w.to_channel()),
    }
    _emit(out, args)
    return EXIT_OK


def cmd_tavg(args):
    ch = io.load_channel(args.channel)
    m = args.m
    est = circuits.tavg_mc(ch, m, args.samples, mk.make_rng(args.seed, 0))
    eps = diamond.diamond_distance(ch).value
    corrected, printed = circuits.thm7_constants(m, ch.d)
    out = dict(est.to_dict())
    out.update(
        {
            "second_moment_exact": circuits.tavg_second_moment(ch, m),
            "eps_diamond": eps,
            "upper": 2 * eps,
            "lower_corrected": corrected * eps,
            "lower_printed": printed * eps,
            "upper_ok": bool(est.mean <= 2 * eps + 3 * est.stderr),
            "lower_corrected_ok": bool(est.mean >= corrected * eps - 3 * est.stderr),
            "lower_printed_ok": bool(est.mean >= printed * eps - 3 * est.stderr),
        }
    )
    _emit(out, args)
    return EXIT_OK if out["upper_ok"] and out["lower_corrected_ok"] else EXIT_VIOLATION


# --------------------------------------------------------------------------
# figure2


def cmd_figure2(args):
    if args.circuits < 1:
        raise UsageError("--circuits must be >= 1")
    if args.kmax < 4:
        raise UsageError("--kmax must be >= 4")
    k_list = [4]
    while k_list[-1] * 2 <= args.kmax:
        k_list.append(k_list[-1] * 2)
    kinds = circuits.NOISE_KINDS if args.noise == "all" else (args.noise,)
    os.makedirs(args.out, exist_ok=True)
    summary = {}
    for kind in kinds:
        variant = circuits.DEFAULT_VARIANT[kind] if args.variant == "auto" else args.variant
        table = circuits.figure2_run(variant, kind, args.circuits, k_list, args.seed, args.threads)
        name = circuits.CSV_NAMES[kind]
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(table.csv())
        with open(os.path.join(args.out, name[: -len(".csv")] + ".full.csv"), "w") as fh:
            fh.write(table.full_csv())
        summary[kind] = table.summary()
        print(f"{kind:22s} variant {variant}  slope {table.slope:.4f} +- {table.slope_stderr:.4f}  -> {name}")
    with open(os.path.join(args.out, "figure2_summary.json"), "w") as fh:
        fh.write(metrics.dumps17({"seed": args.seed, "circuits": args.circuits, "k": k_list, "runs": summary}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# randcheck


@dataclass(frozen=True)
class _CheckTask:
    d: int
    index: int
    seed: int
    tol: float
    inject: str


def _random_channel(d, rng):
    # half far from the identity, half a small perturbation of it
    E = chn.random_cptp(d, rng=rng)
    if rng.random() < 0.5:
        lam = 10 ** rng.uniform(-6, 0)
        E = lam * E + (1 - lam) * chn.identity_channel(d)
    return E


def _slack(name, value, tol):
    return {"name": name, "slack": float(value), "ok": bool(value >= -tol)}


def run_checks(task):
    """Every property on one random channel; returns a list of slack records."""
    d, tol = task.d, task.tol
    rng = mk.make_rng(task.seed, d, task.index)
    E = _random_channel(d, rng)
    out = []
    try:
        res = diamond.diamond_distance(E)
    except SolverError as exc:
        return [{"name": "sdp_gap", "slack": -float(exc.result.gap), "ok": False}]
    eps = res.value
    out.append(_slack("sdp_gap", DEFAULT_TOL - res.gap, 0.0))
    r = metrics.infidelity(E)
    eq2 = diamond.eq2_bounds(r, d)
    out.append(_slack("eq2_lower", eps - eq2.lower, tol))
    out.append(_slack("eq2_upper", eq2.upper - eps, tol))
    sign = -1.0 if task.inject == "cor5-sign" else 1.0
    c5 = diamond.cor5_bounds(E, sign)
    out.append(_slack("cor5_lower", eps - c5.lower, tol))
    out.append(_slack("cor5_upper", c5.upper - eps, tol))
    sw = diamond.jnorm_sandwich_check(E.choi - chn.identity_channel(d).choi, norm=2 * eps)
    out.append(_slack("jnorm_lower", sw.norm - sw.lower, 2 * tol))
    out.append(_slack("jnorm_upper", sw.upper - sw.norm, 2 * tol))
    # sandwich for a difference of two channels
    F = chn.random_cptp(d, rng=rng)
    sw2 = diamond.jnorm_sandwich_check(E.choi - F.choi)
    out.append(_slack("thm4_lower", sw2.norm - sw2.lower, 2 * tol))
    out.append(_slack("thm4_upper", sw2.upper - sw2.norm, 2 * tol))
    rep = metrics.metrics_report(E)
    out.append(_slack("thm3_alpha", rep.alpha_bound - rep.alpha, 1e-9))
    basis = mk.haar_unitary(d, rng).T
    out.append(_slack("thm1_basis_sum", (d + 1) * r - metrics.basis_infidelity_sum(E, basis), 1e-9))
    out.append(_slack("unitarity_lower", rep.u - rep.p**2, 1e-9))
    out.append(_slack("unitarity_upper", 1.0 - rep.u, 1e-9))
    out.append(_slack("decay_trace", 1e-10 - abs(rep.p - float(np.real(np.trace(E.liouville[1:, 1:]))) / (d * d - 1)), 0.0))
    out.append(_slack("jnorm_identity", 1e-10 - abs(rep.j2**2 - metrics.jnorm_delta_decomposition(E)), 0.0))
    w = chn.weyl_twirl(E)
    out.append(_slack("twirl_infidelity", 1e-10 - abs(metrics.infidelity(w.to_channel()) - r), 0.0))
    out.append(_slack("twirl_offdiag", 1e-10 - w.offdiag, 0.0))
    rmax, _ = metrics.max_infidelity_search(E, restarts=3, rng=rng)
    out.append(_slack("cor2_lower", rmax - r, 1e-9))
    out.append(_slack("cor2_upper", (d + 1) * r - rmax, 1e-9))
    M = mk.random_hermitian(d, rng, traceless=True)
    ln = mk.traceless_norm_check(M)
    out.append(_slack("lemma6_lower", ln.lower_slack, 1e-10))
    out.append(_slack("lemma6_upper", ln.upper_slack, 1e-10))
    return out


def _parse_range(text):
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise UsageError(f"--d-range must look like 2..4, got {text!r}") from exc
    if lo < 2 or hi < lo or hi > 8:
        raise UsageError(f"--d-range must lie within 2..8, got {text!r}")
    return list(range(lo, hi + 1))


def cmd_randcheck(args):
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    dims = _parse_range(args.d_range)
    tasks = [_CheckTask(d, i, args.seed, args.tol, args.inject) for d in dims for i in range(args.count)]
    results = ordered_map(run_checks, tasks, args.threads)
    table = {}
    for task, recs in zip(tasks, results):
        for rec in recs:
            key = (rec["name"], task.d)
            row = table.setdefault(key, {"check": rec["name"], "d": task.d, "n": 0, "violations": 0, "worst_slack": np.inf})
            row["n"] += 1
            row["violations"] += 0 if rec["ok"] else 1
            row["worst_slack"] = min(row["worst_slack"], rec["slack"])
    rows = sorted(table.values(), key=lambda r: (r["check"], r["d"]))
    total = sum(r["violations"] for r in rows)
    if args.json:
        print(metrics.dumps17({"seed": args.seed, "count": args.count, "dims": dims, "violations": total, "rows": rows}, indent=2, sort_keys=True))
    else:
        print(f"{'check':22s} {'d':>2s} {'n':>5s} {'violations':>10s} {'worst slack':>24s}")
        for r in rows:
            print(f"{r['check']:22s} {r['d']:2d} {r['n']:5d} {r['violations']:10d} {r['worst_slack']!r:>24}")
        print(f"total violations: {total}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "randcheck.json"), "w") as fh:
            fh.write(metrics.dumps17({"seed": args.seed, "count": args.count, "dims": dims, "violations": total, "rows": rows}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if total == 0 else EXIT_VIOLATION


# --------------------------------------------------------------------------
# parser


def _default_seed():
    env = os.environ.get("QCM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"QCM_SEED must be an integer, got {env!r}") from exc


def _seed(text):
    val = int(text)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


GLOBAL_DEFAULTS = {"seed": None, "tol": DEFAULT_TOL, "out": None, "threads": None, "json": False}


def _global_flags(parser):
    # SUPPRESS lets the flags appear before or after the subcommand
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=_seed, default=argparse.SUPPRESS, help="master seed (default: $QCM_SEED or 0)")
    g.add_argument("--tol", type=float, default=argparse.SUPPRESS, help=f"bound / gap tolerance (default {DEFAULT_TOL})")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes (default: all cores)")
    g.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")


def build_parser():
    p = argparse.ArgumentParser(prog="qcm", description="Error metrics and certified diamond distances of quantum channels.")
    _global_flags(p)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, channel=True):
        sp = sub.add_parser(name, help=help_text)
        _global_flags(sp)
        if channel:
            sp.add_argument("channel", help="channel JSON file")
        sp.set_defaults(func=func)
        return sp

    add("metrics", cmd_metrics, "scalar metrics and bound intervals")
    add("bounds", cmd_bounds, "check every bound against the SDP diamond distance")
    sp = add("diamond", cmd_diamond, "certified diamond distance")
    sp.add_argument("--method", choices=("sdp", "auto"), default="sdp")
    sp.add_argument("--norm", action="store_true", help="diamond norm of the map itself rather than the distance to the identity")
    sp.add_argument("--allow-nonphysical", action="store_true", help="accept maps that are not CPTP (implies --norm)")
    add("twirl", cmd_twirl, "Weyl twirl probabilities")
    sp = add("tavg", cmd_tavg, "Monte-Carlo t_avg,m with its exact second moment")
    sp.add_argument("--m", type=int, default=1, help="rank of the measurement effect")
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp = add("figure2", cmd_figure2, "circuit-error scaling experiment", channel=False)
    sp.add_argument("--variant", choices=("a", "b", "auto"), default="auto")
    sp.add_argument("--noise", choices=circuits.NOISE_KINDS + ("all",), default="all")
    sp.add_argument("--circuits", type=int, default=25)
    sp.add_argument("--kmax", type=int, default=128)
    sp = add("randcheck", cmd_randcheck, "property suite on random channels", channel=False)
    sp.add_argument("--d-range", default="2..4")
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--inject", choices=("none", "cor5-sign"), default="none", help="deliberately break a bound (self-test)")
    return p


def resolve(args):
    for key, val in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    if args.seed is None:
        args.seed = _default_seed()
    if args.threads is None:
        args.threads = available_threads()
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.out is None:
        args.out = "figure2" if args.command == "figure2" else ""
    if getattr(args, "allow_nonphysical", False):
        args.norm = True
    return args


def main(argv=None):
    logging.basicConfig(level=os.environ.get("QCM_LOGLEVEL", "INFO"), format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        resolve(args)
        config = {k: v for k, v in vars(args).items() if k != "func"}
        log.info("config %s", json.dumps(config, sort_keys=True))
        return args.func(args)
    except (UsageError, PreconditionError, OSError) as exc:
        print(f"qcm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"qcm: solver failure: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
