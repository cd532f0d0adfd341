"""Command-line entry point: ``emlab <command> [options]``.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 on configuration or usage errors.  Output is deterministic for a given
configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import emtensor as em
from . import inclusions as inc
from . import lagrangians as lg
from . import matcalc as mc
from . import weakform as wf
from .errors import (
    BadParam,
    BadShape,
    ConformalCase,
    EmlabError,
    InvalidConnection,
    NotInImage,
    OutsideHull,
    SingularMatrix,
    StageLimit,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

GRAD_TOL = 1e-6
INV_TOL = 1e-12
RESIDUAL_TOL = 1e-12
JUMP_TOL = 1e-8
ROUNDTRIP_TOL = 1e-10


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def parse_matrix(text: str) -> np.ndarray:
    """Row-major comma-separated entries of a 2x2 or 3x3 matrix."""
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"matrix entries must be numbers: {text!r}") from None
    n = int(round(math.sqrt(len(vals))))
    if n * n != len(vals) or n not in (2, 3):
        raise UsageError(f"expected 4 or 9 entries, got {len(vals)}")
    return np.array(vals).reshape(n, n)


def parse_well(token: str) -> np.ndarray:
    """Mnemonics: I, -I, reflect:e1, reflect:e2, reflect:<angle>, rot:<angle>, diag:<a>;<b>, m:<a>;<b>;<c>;<d>.

    Angles are in radians.
    """
    t = token.strip()
    try:
        if t == "I":
            return np.eye(2)
        if t == "-I":
            return -np.eye(2)
        kind, _, arg = t.partition(":")
        if kind == "reflect":
            if arg in ("e1", "e2"):
                xi = np.eye(2)[int(arg[1]) - 1]
            else:
                th = float(arg)
                xi = np.array([math.cos(th), math.sin(th)])
            return inc.rank_one_reflection(xi)
        if kind == "rot":
            th = float(arg)
            return np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        if kind == "diag":
            a, b = (float(v) for v in arg.split(";"))
            return np.diag([a, b])
        if kind == "m":
            return np.array([float(v) for v in arg.split(";")]).reshape(2, 2)
    except ValueError:
        pass
    raise UsageError(f"unknown well {token!r}")


def parse_wells(text: str) -> tuple[np.ndarray, np.ndarray]:
    toks = [t for t in text.split(",") if t.strip()]
    if len(toks) != 2:
        raise UsageError("--wells needs exactly two wells, e.g. I,reflect:e2")
    return parse_well(toks[0]), parse_well(toks[1])


def _lagrangian(args) -> lg.Lagrangian:
    if not args.lagrangian:
        raise UsageError("a lagrangian id is required, e.g. dirichlet:p=2,n=2")
    return lg.parse_lagrangian(args.lagrangian)


def _clean(x):
    """Convert numpy values to plain JSON-serializable Python values."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(args, report: dict, header=None, rows=None) -> None:
    if args.format == "csv" and header is not None:
        text = _csv(header, rows)
    else:
        text = _json(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _sample_matrices(rng, n: int, count: int, L: Optional[lg.Lagrangian] = None):
    out = []
    while len(out) < count:
        X = mc.random_matrix(rng, n)
        if L is None or L.in_domain(X):
            out.append(X)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gradcheck(args) -> int:
    L = _lagrangian(args)
    rng = np.random.default_rng(args.seed)
    rows = []
    for k, X in enumerate(_sample_matrices(rng, L.n, args.samples, L)):
        G = L.DW(X)
        F = mc.fd_gradient(L.W, X)
        rows.append([k, mc.frob(G - F) / (1.0 + mc.frob(G))])
    worst = max(r[1] for r in rows)
    ok = worst <= GRAD_TOL
    report = {
        "command": "gradcheck",
        "lagrangian": L.spec,
        "seed": args.seed,
        "samples": len(rows),
        "tolerance": GRAD_TOL,
        "max_defect": worst,
        "defects": [r[1] for r in rows],
        "pass": ok,
    }
    _emit(args, report, ["sample", "defect"], rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_invariance(args) -> int:
    L = _lagrangian(args)
    rng = np.random.default_rng(args.seed)
    rows = []
    for k, X in enumerate(_sample_matrices(rng, L.n, args.samples, L)):
        R = mc.random_orthogonal(rng, L.n, det_sign=1 if k % 2 == 0 else -1)
        d = em.check_invariance(L, X, R)
        scale = 1.0 + mc.frob(em.em_tensor(L, X))
        sym = em.check_symmetry(L, X) if L.right_invariant else 0.0
        rows.append([k, round(mc.det(R)), d.em / scale, d.equivariance / scale, sym / scale])
    worst = max(max(r[2], r[3], r[4]) for r in rows)
    ok = worst <= INV_TOL
    report = {
        "command": "invariance",
        "lagrangian": L.spec,
        "seed": args.seed,
        "samples": len(rows),
        "tolerance": INV_TOL,
        "max_em_defect": max(r[2] for r in rows),
        "max_equivariance_defect": max(r[3] for r in rows),
        "max_symmetry_defect": max(r[4] for r in rows),
        "pass": ok,
    }
    _emit(args, report, ["sample", "det_R", "em_defect", "equivariance_defect", "symmetry_defect"], rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_obstruction(args) -> int:
    L = _lagrangian(args)
    rep = em.el_obstruction(L)
    coercive = None
    D = rep.dw_identity
    if rep.Q_min > 0 and mc.frob(D - D.T) <= 1e-12 * max(1.0, mc.frob(D)):
        c = em.coercive_right_multiplier(D, seed=args.seed)
        coercive = {"lambda1": c.lambda1, "defect_sym": c.defect_sym, "min_ratio": c.min_ratio}
    report = {"command": "obstruction", "lagrangian": L.spec, **rep.to_dict(), "coercivity": coercive}
    ok = rep.Q_min <= rep.Q_max
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_invert(args) -> int:
    family = args.target
    if args.Z is None:
        raise UsageError("--Z is required")
    Z = parse_matrix(args.Z)
    report = {"command": "invert", "family": family, "Z": Z}
    if family == "dirichlet":
        if args.p is None:
            raise UsageError("--p is required for dirichlet")
        n = Z.shape[0]
        Y = em.invert_reduced_dirichlet(Z, args.p, n)
        L = lg.make_dirichlet(args.p, n)
        err = mc.frob(em.reduced_em(L, Y) - Z) / max(1.0, mc.frob(Z))
        report.update({"p": args.p, "n": n, "Y": Y, "roundtrip_error": err})
        ok = err <= ROUNDTRIP_TOL
    elif family == "qmean":
        if args.q != 1.0:
            raise BadParam("the qmean inverse is available in closed form for q=1 only")
        ts = [float(v) for v in args.t.split(",")] if args.t else inc._grid(0.5, 4.0, 0.5)
        L = lg.make_qmean(2, 1.0)
        members = []
        images = []
        for t in ts:
            Y = em.invert_reduced_qmean2d(Z, t)
            img = em.reduced_em(L, Y)
            images.append(img)
            members.append({"t": t, "Y": Y, "roundtrip_error": mc.frob(img - Z) / max(1.0, mc.frob(Z))})
        spread = max(mc.frob(I - images[0]) for I in images)
        report.update({"members": members, "image_spread": spread})
        ok = spread <= 1e-12 and all(m["roundtrip_error"] <= ROUNDTRIP_TOL for m in members)
    else:
        raise UsageError(f"unknown inversion target {family!r} (dirichlet or qmean)")
    report["pass"] = ok
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_families(args) -> int:
    fam = inc.FAMILY_ALIASES.get(args.target)
    if fam is None:
        raise UsageError(f"unknown family {args.target!r}")
    Z = parse_matrix(args.Z) if args.Z else None
    c = args.c if args.c is not None else 1.0
    grid = [float(v) for v in args.t.split(",")] if args.t else None
    hits = inc.scan_noninjectivity_families(fam, grid, c=c, Z=Z)
    ts = grid if grid is not None else inc._grid(*inc.DEFAULT_GRIDS[fam])
    report = {
        "command": "families",
        "family": fam,
        "c": c if fam == "dirichlet_conformal" else None,
        "grid": ts,
        "pairs_checked": len(ts) * (len(ts) - 1),
        "violations": [list(h) for h in hits],
        "pass": not hits,
    }
    _emit(args, report, ["t1", "t2"], hits)
    return EXIT_OK if not hits else EXIT_FAIL


def cmd_laminate(args) -> int:
    L = _lagrangian(args)
    A, B = parse_wells(args.wells)
    spec = inc.LaminateSpec.from_wells(A, B, args.fraction, args.layers)
    u = inc.laminate_build(spec)
    battery = wf.default_battery(u.domain)
    rep = wf.residual_report(u, L, battery)
    jumps = [wf.interface_jump(u, L, lam) for lam in battery]
    el = [f["el_residual"] for f in rep.fields]
    jump_err = max(abs(e - j) for e, j in zip(el, jumps)) / rep.energy
    em_max = rep.max_normalized("em_residual")
    el_max = rep.max_normalized("el_residual")
    ok = em_max <= RESIDUAL_TOL and jump_err <= JUMP_TOL
    bv, bu = u.boundary_values()
    report = rep.to_dict()
    report.update(
        {
            "command": "laminate",
            "wells": [A, B],
            "a": spec.conn.a,
            "xi": spec.conn.xi,
            "layers": args.layers,
            "fraction": args.fraction,
            "cells": u.n_cells,
            "em_max_normalized": em_max,
            "el_max_normalized": el_max,
            "interface_jump_max_error": jump_err,
            "em_tensor_spread": em.em_tensor_spread(L, [A, B]),
            "el_satisfied": el_max <= RESIDUAL_TOL,
            "pass": ok,
        }
    )
    mesh = _csv(wf.CSV_HEADER, u.csv_rows())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mesh.csv").write_text(mesh)
        (out / "report.json").write_text(_json(report))
    if args.format == "csv":
        sys.stdout.write(mesh)
    else:
        sys.stdout.write(_json(report))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_staircase(args) -> int:
    if args.M is None:
        raise UsageError("--M is required")
    M = parse_matrix(args.M)
    res = inc.staircase_refine(M, args.stages)
    bads = [t.bad_measure for t in res.trace]
    monotone = all(bads[i + 1] <= bads[i] for i in range(len(bads) - 1))
    berr = max(t.boundary_error for t in res.trace)
    ok = monotone and berr == 0.0 and res.max_hull_excess <= inc.TOL_HULL
    report = {
        "command": "staircase",
        "M": M,
        "stages": args.stages,
        "band_factor": res.band_factor,
        "rho": res.rho,
        "C": res.C,
        "max_hull_excess": res.max_hull_excess,
        "cells": res.map.n_cells,
        "trace": [dict(zip(inc.TRACE_HEADER, t.row())) for t in res.trace],
        "pass": ok,
    }
    trace_csv = _csv(inc.TRACE_HEADER, [t.row() for t in res.trace])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mesh.csv").write_text(_csv(wf.CSV_HEADER, res.map.csv_rows()))
        (out / "trace.csv").write_text(trace_csv)
        (out / "report.json").write_text(_json(report))
    sys.stdout.write(trace_csv if args.format == "csv" else _json(report))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "gradcheck": cmd_gradcheck,
    "invariance": cmd_invariance,
    "obstruction": cmd_obstruction,
    "invert": cmd_invert,
    "families": cmd_families,
    "laminate": cmd_laminate,
    "staircase": cmd_staircase,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emlab", description="Energy-momentum and differential inclusion experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--out", default=None, help="output file (or directory for laminate/staircase)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    for name in ("gradcheck", "invariance", "obstruction"):
        sp = sub.add_parser(name)
        sp.add_argument("lagrangian_pos", nargs="?", metavar="LAGRANGIAN")
        sp.add_argument("--lagrangian", default=None)
        sp.add_argument("--samples", type=int, default=100 if name == "gradcheck" else 20)
        common(sp)

    sp = sub.add_parser("invert")
    sp.add_argument("target", help="dirichlet or qmean")
    sp.add_argument("--Z", default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--q", type=float, default=1.0)
    sp.add_argument("--t", default=None, help="comma-separated parameter values")
    common(sp)

    sp = sub.add_parser("families")
    sp.add_argument("target", help="dirichlet-conformal, qmean or inv-power-scalar")
    sp.add_argument("--c", type=float, default=None)
    sp.add_argument("--Z", default=None)
    sp.add_argument("--t", default=None, help="comma-separated parameter grid")
    common(sp)

    sp = sub.add_parser("laminate")
    sp.add_argument("--lagrangian", default="dirichlet:p=2,n=2")
    sp.add_argument("--wells", default="I,reflect:e2")
    sp.add_argument("--layers", type=int, default=8)
    sp.add_argument("--fraction", type=float, default=0.5)
    common(sp)

    sp = sub.add_parser("staircase")
    sp.add_argument("--M", default=None)
    sp.add_argument("--stages", type=int, default=4)
    common(sp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "lagrangian_pos", None):
        if args.lagrangian and args.lagrangian != args.lagrangian_pos:
            sys.stderr.write("error: conflicting lagrangian ids\n")
            return EXIT_USAGE
        args.lagrangian = args.lagrangian_pos
    try:
        return COMMANDS[args.command](args)
    except (UsageError, BadParam, BadShape, StageLimit) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (OutsideHull, NotInImage, ConformalCase, InvalidConnection, SingularMatrix, EmlabError) as exc:
        sys.stderr.write(f"check failed: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
