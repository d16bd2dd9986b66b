"""Command line interface: `k3hg <command> [options]`.

Reports are JSON by default (sorted keys, top-level "schema") or CSV.
Polynomials are ascending coefficient lists in T. Exit status is 0 exactly
when every requested check passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__
from .charsums import gauss_table, select_backend
from .finitefield import CACHE_ENV, build_field, reduce_rational
from .hypergeom import field_of_definition, hsum, hsum_denominator, hsum_value_bound, params
from .koblitz import MonomialSystem, brute_projective_count, brute_torus_count, torus_count
from .pencils import FAMILIES, PencilInstance, bad_primes, count_full
from .zeta import (
    Q_F4_closed_form,
    Q_from_shape,
    TwistSpec,
    AbelianFieldSpec,
    common_factor_R,
    cyclotomic_exponents,
    euler_factor_over_M,
    format_cyclotomic,
    verify_main_theorem,
)

SCHEMA = "k3hg/1"
PENCIL_MODES = ("formula", "koblitz", "brute")
MATRIX_MODES = ("koblitz", "brute-torus", "brute-projective")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    backend_bound: int | None = None
    cache_dir: str | None = None
    fmt: str = "json"
    threads: int = 1
    deep: bool = False


def _fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from exc


def _int_range(s: str) -> list[int]:
    out = []
    for part in s.split(","):
        if ".." in part:
            lo, hi = part.split("..")
            out += list(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _families(s: str) -> list[str]:
    if s == "all":
        return list(FAMILIES)
    fams = [f.strip() for f in s.split(",") if f.strip()]
    bad = [f for f in fams if f not in FAMILIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown families {bad}")
    return fams


def _field_spec(s: str) -> AbelianFieldSpec:
    if s in ("Q", "rationals"):
        return AbelianFieldSpec.rationals()
    if s in ("Q(i)", "gaussian"):
        return AbelianFieldSpec.gaussian()
    if s.startswith("zeta"):
        return AbelianFieldSpec.cyclotomic(int(s[4:]))
    raise argparse.ArgumentTypeError(f"unknown field {s!r}; use Q, gaussian or zetaN")


def _global_flags(ap: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    ap.add_argument("--cache-dir", default=d(None), help=f"directory for field tables (also ${CACHE_ENV})")
    ap.add_argument("--backend-bound", type=int, default=d(None), help="lower bound for the product of auxiliary primes")
    ap.add_argument("--threads", type=int, default=d(os.cpu_count() or 1))
    ap.add_argument("--format", choices=("json", "csv"), default=d("json"), dest="fmt")
    ap.add_argument("--deep", action="store_true", default=d(False), help="confirm Euler factor degrees with one extra level")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="k3hg", description="Hypergeometric point counts and Euler factors of K3 quartic pencils.")
    ap.add_argument("--version", action="version", version=f"k3hg {__version__}")
    _global_flags(ap, defaults=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, defaults=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser(parents=[common], name="field-info")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=1)

    p = sub.add_parser(parents=[common], name="gauss-table")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--m", type=_int_range, help="exponents to print, e.g. 0..5")

    p = sub.add_parser(parents=[common], name="hsum")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--t", type=_fraction, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=1)

    p = sub.add_parser(parents=[common], name="count")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--psi", type=_fraction)
    p.add_argument("--matrix", help="monomial system file: coefficients, then one exponent row per monomial")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--mode", choices=PENCIL_MODES + MATRIX_MODES)

    p = sub.add_parser(parents=[common], name="euler")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--t", type=_fraction, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--field", type=_field_spec, default=AbelianFieldSpec.rationals())
    p.add_argument("--twist", default="trivial", help="comma separated twist kinds")
    p.add_argument("--psi", type=_fraction, help="psi for the phi_psi twist")
    p.add_argument("--shift", type=int, default=0)
    p.add_argument("--degree", type=int)

    p = sub.add_parser(parents=[common], name="verify")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--psi", type=_fraction, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--depth", type=int, default=21)
    p.add_argument("--q-only", action="store_true", help="only determine the algebraic part Q")
    p.add_argument("--json", action="store_true", help="accepted for compatibility; JSON is the default")

    p = sub.add_parser(parents=[common], name="zeta")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--psi", type=_fraction, required=True)
    p.add_argument("--p", type=int, required=True)

    p = sub.add_parser(parents=[common], name="grid")
    p.add_argument("--families", type=_families, default=list(FAMILIES))
    p.add_argument("--primes", type=_int_range, required=True)
    p.add_argument("--psis", type=_int_range, required=True)
    p.add_argument("--r", type=int, default=1)
    return ap


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "cache_dir", "backend_bound", "threads", "fmt", "deep")}
    if ns.threads < 1:
        raise UsageError("--threads must be positive")
    if ns.backend_bound is not None and ns.backend_bound < 2:
        raise UsageError("--backend-bound must be at least 2")
    if ns.command == "verify" and ns.q_only and ns.depth != 21:
        raise UsageError("--q-only and --depth are mutually exclusive")
    if ns.command == "count":
        if ns.matrix is not None:
            if ns.family is not None or ns.psi is not None:
                raise UsageError("--matrix excludes --family and --psi")
            opts["mode"] = ns.mode or "koblitz"
            if opts["mode"] not in MATRIX_MODES:
                raise UsageError(f"--matrix needs --mode in {MATRIX_MODES}")
        else:
            if ns.family is None or ns.psi is None:
                raise UsageError("count needs --family and --psi, or --matrix")
            opts["mode"] = ns.mode or "formula"
            if opts["mode"] not in PENCIL_MODES:
                raise UsageError(f"pencil counts need --mode in {PENCIL_MODES}")
    return RunConfig(ns.command, opts, ns.backend_bound, ns.cache_dir, ns.fmt, ns.threads, ns.deep)


# commands


def _residues(backend, v) -> dict:
    return {"ells": list(backend.all_ells), "residues": [int(x) for x in v]}


def cmd_field_info(cfg, o):
    ctx = build_field(o["p"], o["r"])
    return [{"p": ctx.p, "r": ctx.r, "q": ctx.q, "modulus": list(ctx.modulus), "generator": ctx.g}], True


def cmd_gauss_table(cfg, o):
    ctx = build_field(o["p"], o["r"])
    be = select_backend(ctx, cfg.backend_bound or 4 * ctx.q)
    gt = gauss_table(ctx, be)
    ms = o["m"] if o["m"] is not None else list(range(min(ctx.qx, 8)))
    return [{"q": ctx.q, "m": m, "g": _residues(be, gt[m % ctx.qx])} for m in ms], True


def cmd_hsum(cfg, o):
    pr = params(o["alpha"], o["beta"])
    ctx = build_field(o["p"], o["r"])
    be = select_backend(ctx, cfg.backend_bound or hsum_value_bound(pr, ctx.q))
    gt = gauss_table(ctx, be)
    t = o["t"]
    v = hsum(ctx, be, gt, pr, reduce_rational(ctx, t.numerator, t.denominator))
    res = {"params": str(pr), "q": ctx.q, "t": str(t)}
    if field_of_definition(pr).is_rational:
        res["value"] = str(be.to_rational(v, hsum_denominator(pr, ctx.q)))
    else:
        res["value"] = _residues(be, v)
    return [res], True


def read_matrix(path: str, ctx) -> MonomialSystem:
    """First non-blank line: rational coefficients; then one row of n+1
    exponents per monomial."""
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    if len(rows) < 2:
        raise UsageError(f"{path}: need a coefficient row and at least one exponent row")
    coeffs = [_fraction(x) for x in rows[0]]
    nu = tuple(tuple(int(x) for x in row) for row in rows[1:])
    if len(coeffs) != len(nu):
        raise UsageError(f"{path}: {len(coeffs)} coefficients for {len(nu)} monomials")
    a = tuple(reduce_rational(ctx, c.numerator, c.denominator) for c in coeffs)
    return MonomialSystem(len(nu[0]) - 1, nu, a)


def _count_matrix(cfg, o):
    ctx = build_field(o["p"], o["r"])
    system = read_matrix(o["matrix"], ctx)
    mode = o["mode"]
    if mode == "brute-projective":
        n = brute_projective_count(ctx, system)
    elif mode == "brute-torus":
        n = brute_torus_count(ctx, system)
    else:
        bound = cfg.backend_bound or 2 * (ctx.q + 1) ** system.n + 2
        be = select_backend(ctx, bound)
        n = torus_count(ctx, be, gauss_table(ctx, be), system)
    return [{"matrix": o["matrix"], "p": o["p"], "r": o["r"], "mode": mode, "count": n}], True


def cmd_count(cfg, o):
    if o["matrix"] is not None:
        return _count_matrix(cfg, o)
    inst = PencilInstance(o["family"], o["psi"])
    n = count_full(inst, o["p"], o["r"], o["mode"])
    return [{"family": inst.family, "p": o["p"], "r": o["r"], "psi": str(inst.psi), "mode": o["mode"], "count": n}], True


def cmd_euler(cfg, o):
    pr = params(o["alpha"], o["beta"])
    kinds = tuple(k.strip() for k in o["twist"].split(",") if k.strip())
    tw = TwistSpec(kinds, o["psi"])
    poly = euler_factor_over_M(pr, o["t"], o["p"], o["field"], tw, o["shift"], o["degree"], cfg.deep)
    return [
        {
            "params": str(pr),
            "p": o["p"],
            "t": str(o["t"]),
            "M": str(o["field"]),
            "twist": str(tw),
            "shift": o["shift"],
            "poly": poly.as_list(),
            "note": poly.note,
        }
    ], True


def _q_report(inst, p):
    if inst.family == "F4":
        Q, how = Q_F4_closed_form(inst, p), "closed form"
    else:
        Q, _ = Q_from_shape(inst, p)
        how = "shape + counts: " + Q.note
    e = cyclotomic_exponents(Q, p)
    return {"Q": Q.as_list(), "Q_factored": format_cyclotomic(e), "Q_method": how}


def cmd_verify(cfg, o):
    inst = PencilInstance(o["family"], o["psi"])
    if o["q_only"]:
        res = {"family": inst.family, "psi": str(inst.psi), "p": o["p"]}
        res.update(_q_report(inst, o["p"]))
        return [res], True
    rep = verify_main_theorem(inst, o["p"], o["depth"])
    return [rep], bool(rep["match"])


def cmd_zeta(cfg, o):
    inst = PencilInstance(o["family"], o["psi"])
    res = {"family": inst.family, "psi": str(inst.psi), "p": o["p"], "R": common_factor_R(inst, o["p"]).as_list()}
    res.update(_q_report(inst, o["p"]))
    return [res], True


def _grid_task(args):
    fam, p, psi, r = args
    inst = PencilInstance(fam, Fraction(psi))
    a = count_full(inst, p, r, "formula")
    b = count_full(inst, p, r, "brute")
    return {"family": fam, "p": p, "r": r, "psi": str(psi), "formula": a, "brute": b, "ok": a == b}


def cmd_grid(cfg, o):
    from sympy import isprime

    tasks = []
    for fam in o["families"]:
        for p in o["primes"]:
            if not isprime(p):
                continue
            for psi in o["psis"]:
                if psi == 0 or psi**4 == 1 or p in bad_primes(fam, psi):
                    continue
                tasks.append((fam, p, psi, o["r"]))
    if cfg.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(cfg.threads) as ex:
            rows = list(ex.map(_grid_task, tasks))
    else:
        rows = [_grid_task(t) for t in tasks]
    return rows, all(r["ok"] for r in rows)


COMMANDS = {
    "field-info": cmd_field_info,
    "gauss-table": cmd_gauss_table,
    "hsum": cmd_hsum,
    "count": cmd_count,
    "euler": cmd_euler,
    "verify": cmd_verify,
    "zeta": cmd_zeta,
    "grid": cmd_grid,
}


def error_object(stage: str, exc: BaseException) -> dict:
    return {"stage": stage, "code": type(exc).__name__, "detail": str(exc)}


def emit_report(results: list[dict], fmt: str = "json", errors: list[dict] | None = None) -> str:
    if fmt == "json":
        doc = {"schema": SCHEMA, "results": results}
        if errors:
            doc["errors"] = errors
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    if fmt == "csv":
        rows = [{"error_" + k: v for k, v in e.items()} for e in errors or []] + results
        keys = sorted({k for r in rows for k in r})
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v, sort_keys=True) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.cache_dir:
        os.environ[CACHE_ENV] = cfg.cache_dir
    try:
        results, ok = COMMANDS[cfg.command](cfg, cfg.options)
    except Exception as exc:  # surfaced as a structured report
        out.write(emit_report([], cfg.fmt, [error_object(cfg.command, exc)]))
        return 1
    out.write(emit_report(results, cfg.fmt))
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except UsageError as exc:
        sys.stdout.write(emit_report([], "json", [error_object("config", exc)]))
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
