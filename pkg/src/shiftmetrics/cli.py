"""Command line front end: ``shiftmetrics <command> [options]``.

Exit codes: 0 success, 2 bad input, 3 capacity exceeded, 4 inconclusive
certificate, 5 envelope inconsistency, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import __version__
from .certify import CONVERGES, certify_scheme, hulse_distance_probe, long_range_scheme, table_scheme
from .distances import (
    dbar_lower_blocks,
    dbar_upper_markov,
    projective_markov,
    projective_truncated,
    projective_upper_technical,
    vague_distance,
)
from .entropy import entropy_report
from .errors import CapacityError, DomainError, EnvelopeError, ShiftMetricsError
from .gfun import LocallyConstantG, canonical_approximation, g_to_markov, transfer_matrix, variation
from .io import SpecError, as_gfunction, as_measure, dumps_csv, dumps_json, load_spec, parse_spec
from .measures import (
    BINARY,
    InducedMeasure,
    MarkovMeasure,
    SeparabilityMeasure,
    SequenceRule,
    flip_sequence,
    tau_coupling_disagreement,
)
from .spectral import birkhoff_tau, check_column_stochastic, pf_stationary
from .symbolic import Alphabet

log = logging.getLogger("shiftmetrics")

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_CAPACITY, EXIT_INCONCLUSIVE, EXIT_ENVELOPE = 0, 1, 2, 3, 4, 5

DIST_KINDS = ("projective", "projective-truncated", "technical", "vague", "dbar-upper", "dbar-lower")


class Report:
    """A report renders to JSON or to a CSV table with fixed columns."""

    def __init__(self, data: dict, header: list[str], rows: list[list]):
        self.data = data
        self.header = header
        self.rows = rows

    def render(self, form: str) -> str:
        return dumps_json(self.data) if form == "json" else dumps_csv(self.header, self.rows)


def _runtime(args, t0):
    return (time.perf_counter() - t0) * 1e3 if args.timing else None


def _measure(path):
    return as_measure(parse_spec(load_spec(path)))


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise SpecError(f"--{name} is required for this command")


# ---------------------------------------------------------------------------
# commands


def cmd_dist(args) -> tuple[Report, int]:
    _require(args, "a", "b")
    t0 = time.perf_counter()
    a, b = _measure(args.a), _measure(args.b)
    kind = args.kind
    depth = args.depth
    if kind == "projective":
        if not (isinstance(a, MarkovMeasure) and isinstance(b, MarkovMeasure)):
            raise SpecError("the exact projective distance needs two Markov measures; use projective-truncated")
        enc = projective_markov(a, b, args.tol)
        depth = enc.meta["N"]
    elif kind == "projective-truncated":
        depth = depth or 20
        enc = projective_truncated(a, b, depth)
    elif kind == "technical":
        enc = projective_upper_technical(a, b)
    elif kind == "vague":
        depth = depth or 10
        enc = vague_distance(a, b, depth)
    elif kind == "dbar-upper":
        enc = dbar_upper_markov(a, b)
    else:
        depth = depth or 1
        enc = dbar_lower_blocks(a, b, depth)
    ms = _runtime(args, t0)
    data = {"distance": kind, "lo": enc.lo, "hi": enc.hi, "method": enc.method, "depth": depth}
    meta = {k: v for k, v in enc.meta.items() if k not in ("certificates",)}
    data.update({k: v for k, v in meta.items() if k not in data})
    data["runtime_ms"] = ms
    return Report(data, ["kind", "lo", "hi", "depth", "runtime_ms"], [[kind, enc.lo, enc.hi, depth, ms]]), EXIT_OK


def cmd_approx(args) -> tuple[Report, int]:
    """Canonical approximations and the bound ``rho(mu_l, mu) <= var_l(log g)``."""
    _require(args, "a")
    obj = parse_spec(load_spec(args.a))
    if isinstance(obj, MarkovMeasure):
        mu, g = obj, as_gfunction(obj)
    else:
        g = as_gfunction(obj)
        if not isinstance(g, LocallyConstantG):
            raise SpecError("approx needs a locally constant g-function or a Markov measure")
        mu = g_to_markov(g)
    lmax = args.lmax or max(g.range, 2)
    rows, out = [], []
    for ell in range(1, lmax + 1):
        mu_l = canonical_approximation(mu, ell)
        enc = projective_markov(mu_l, mu, args.tol)
        bound = variation(g, ell)
        rows.append([ell, enc.lo, enc.hi, bound])
        out.append({"ell": ell, "rho_lo": enc.lo, "rho_hi": enc.hi, "var_bound": bound})
    return Report({"command": "approx", "rows": out}, ["ell", "rho_lo", "rho_hi", "var_bound"], rows), EXIT_OK


def cmd_entropy(args) -> tuple[Report, int]:
    _require(args, "a")
    obj = parse_spec(load_spec(args.a))
    g = None
    if isinstance(obj, MarkovMeasure):
        m = obj
    else:
        g = as_gfunction(obj)
        if not isinstance(g, LocallyConstantG):
            raise SpecError("entropy needs a Markov measure or a locally constant g-function")
        m = g_to_markov(g)
    ref = _measure(args.b) if args.b else None
    rep = entropy_report(m, ref, g, args.depth)
    d = rep.as_dict()
    row = [
        rep.entropy,
        rep.relative_entropy,
        None if rep.integral_log_g is None else rep.integral_log_g.lo,
        None if rep.integral_log_g is None else rep.integral_log_g.hi,
        None if rep.defect is None else rep.defect.lo,
        None if rep.defect is None else rep.defect.hi,
    ]
    header = ["entropy", "relative_entropy", "integral_lo", "integral_hi", "defect_lo", "defect_hi"]
    return Report(d, header, [row]), EXIT_OK


def cmd_spectral(args) -> tuple[Report, int]:
    _require(args, "a")
    obj = parse_spec(load_spec(args.a))
    if isinstance(obj, np.ndarray):
        M = obj
    else:
        g = as_gfunction(obj)
        if not isinstance(g, LocallyConstantG):
            raise SpecError("spectral needs a matrix or a locally constant g-function")
        M = transfer_matrix(g)
    check_column_stochastic(M, tol=1e-10)
    tau, ell = birkhoff_tau(M)
    res = pf_stationary(M, args.tol, tau=tau, primitivity=ell)
    data = {
        "tau": tau,
        "primitivity": ell,
        "eigenvector": res.eigenvector,
        "residual": res.residual,
        "dp_error_bound": res.dp_error_bound,
        "iterations": res.iterations,
    }
    rows = [[i, v] for i, v in enumerate(res.eigenvector)]
    header = ["state", "stationary"]
    return Report(data, header, rows), EXIT_OK


def cmd_certify(args) -> tuple[Report, int]:
    if args.scheme == "long_range":
        if args.beta is None:
            raise SpecError("--beta is required for the long_range scheme")
        scheme = long_range_scheme(args.beta)
    else:
        _require(args, "a")
        tables = parse_spec(load_spec(args.a))
        if isinstance(tables, LocallyConstantG):
            tables = [tables]
        if not isinstance(tables, list):
            raise SpecError("the tables scheme needs a 'tables' or 'g_table' spec")
        scheme = table_scheme(tables)
    lmax = args.lmax or 12
    cert = certify_scheme(scheme, lmax)
    rows = [[r.ell, r.eps, r.svar, r.c, r.cauchy_bound, cert.verdict] for r in cert.rows]
    header = ["ell", "eps_ell", "svar_ell", "c_ell", "cauchy_bound", "verdict"]
    code = EXIT_OK if cert.verdict == CONVERGES else EXIT_INCONCLUSIVE
    return Report(cert.as_dict(), header, rows), code


def cmd_counterexample(args) -> tuple[Report, int]:
    which = args.which
    if which == "separability":
        n_max = args.depth or 200
        x = SequenceRule.constant(0)
        y = SequenceRule((1,), (0,))
        nx, ny = SeparabilityMeasure(x), SeparabilityMeasure(y)
        rows, out = [], []
        for n in range(1, n_max + 1):
            v = abs(nx._class_log_mass(n, n) - ny._class_log_mass(n, 0)) / n
            rows.append([n, v])
            out.append({"n": n, "log_ratio_per_symbol": v})
        data = {"counterexample": which, "alpha": nx.alpha, "rows": out}
        return Report(data, ["n", "log_ratio_per_symbol"], rows), EXIT_OK
    if which == "dbar-vs-rho":
        depth = args.depth or 200
        ps = args.p or [2, 4, 8, 16]
        alph = Alphabet(["0", "1", "2", "3"])
        proj = (0, 0, 1, 1)
        x = SequenceRule.constant(0)
        rows, out = [], []
        base = InducedMeasure(SeparabilityMeasure(x), alph, proj)
        for p in ps:
            other = InducedMeasure(SeparabilityMeasure(flip_sequence(x, p)), alph, proj)
            frac = tau_coupling_disagreement(p, depth * p)
            rho = projective_truncated(base, other, depth).lo
            rows.append([p, f"{frac.numerator}/{frac.denominator}", float(frac), rho])
            out.append({"p": p, "dbar_upper": float(frac), "dbar_upper_exact": f"{frac.numerator}/{frac.denominator}",
                        "rho_truncated": rho})
        data = {"counterexample": which, "depth": depth, "rows": out}
        return Report(data, ["p", "dbar_upper_exact", "dbar_upper", "rho_truncated"], rows), EXIT_OK
    # rho-vs-dbar: canonical approximations of a finite-range g-measure
    if args.a:
        g = as_gfunction(parse_spec(load_spec(args.a)))
    else:
        g = LocallyConstantG(BINARY, 3, [0.3, 0.6, 0.45, 0.8, 0.7, 0.4, 0.55, 0.2])
    if not isinstance(g, LocallyConstantG):
        raise SpecError("rho-vs-dbar needs a locally constant g-function")
    mu = g_to_markov(g)
    lmax = args.lmax or g.range + 1
    rows, out = [], []
    for ell in range(1, lmax + 1):
        enc = projective_markov(canonical_approximation(mu, ell), mu, args.tol)
        rows.append([ell, enc.lo, enc.hi, variation(g, ell)])
        out.append({"ell": ell, "rho_lo": enc.lo, "rho_hi": enc.hi, "var_bound": variation(g, ell)})
    data = {
        "counterexample": which,
        "range": g.range,
        "rows": out,
        "note": "d-bar non-convergence for the Hulse-type family follows from the mathematical argument; "
        "it is not computed here",
    }
    return Report(data, ["ell", "rho_lo", "rho_hi", "var_bound"], rows), EXIT_OK


def cmd_hulse(args) -> tuple[Report, int]:
    _require(args, "a")
    params = parse_spec(load_spec(args.a))
    enc = hulse_distance_probe(params, args.tol)
    data = {"distance": "projective", "lo": enc.lo, "hi": enc.hi, "method": enc.method,
            "level": enc.meta["level"], "range": enc.meta["range"]}
    return Report(data, ["kind", "lo", "hi", "depth", "runtime_ms"],
                  [["hulse-probe", enc.lo, enc.hi, enc.meta["N"], None]]), EXIT_OK


COMMANDS = {
    "dist": cmd_dist,
    "approx": cmd_approx,
    "entropy": cmd_entropy,
    "spectral": cmd_spectral,
    "certify": cmd_certify,
    "counterexample": cmd_counterexample,
    "hulse": cmd_hulse,
}


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", help="spec file of the first object")
    common.add_argument("--b", help="spec file of the second object")
    common.add_argument("--depth", type=_positive_int)
    common.add_argument("--tol", type=_positive_float, default=1e-9)
    common.add_argument("--lmax", type=_positive_int)
    common.add_argument("--beta", type=float)
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="accepted for compatibility; computations are single threaded and deterministic")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--timing", action="store_true", help="record runtime_ms (makes output non-reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="shiftmetrics", description="Distances and g-measure certificates on A^N.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dist", parents=[common], help="distance enclosure between two measures")
    p.add_argument("--kind", choices=DIST_KINDS, default="projective")
    sub.add_parser("approx", parents=[common], help="canonical Markov approximations and their bounds")
    sub.add_parser("entropy", parents=[common], help="entropy, relative entropy and variational defect")
    sub.add_parser("spectral", parents=[common], help="Birkhoff coefficient and certified Perron vector")
    p = sub.add_parser("certify", parents=[common], help="uniqueness certificate for a scheme")
    p.add_argument("--scheme", choices=("long_range", "tables"), default="long_range")
    p = sub.add_parser("counterexample", parents=[common], help="witness tables for the separation results")
    p.add_argument("which", choices=("separability", "dbar-vs-rho", "rho-vs-dbar"))
    p.add_argument("--p", type=_positive_int, nargs="+")
    sub.add_parser("hulse", parents=[common], help="projective probe between the two Hulse-type branches")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    code = EXIT_OK
    try:
        report, code = COMMANDS[args.command](args)
        text = report.render(args.format)
    except EnvelopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if getattr(exc, "diagnostics", None):
            print(dumps_json(exc.diagnostics), file=sys.stderr, end="")
        return EXIT_ENVELOPE
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ShiftMetricsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
