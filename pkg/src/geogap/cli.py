"""Command-line front end.

Every command writes one report: JSON (floats printed with 17 significant
digits, fixed key order) and, where a table makes sense, CSV.  Exit codes:
0 success, 2 invalid configuration, 3 domain exit, 4 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, analysis, charts, exprparse, framebundle, groundtruth
from .errors import (ConfigError, DimensionError, DomainExitError, ExprDomainError,
                     ExprSyntaxError, FitError, SingularError)
from .odeflow import IntegratorConfig
from .quadgap import FrameTriple, quad_vertices

EXIT_CONFIG, EXIT_DOMAIN, EXIT_FIT = 2, 3, 4
TRUSTED_S = 0.5

DEFAULT_POINTS = {"sphere": [math.pi / 2, 0.0], "hyperboloid": [1.0, 0.0]}


# ---------------------------------------------------------------- serialization

def _fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x + 0.0, ".17g")


def to_json(obj, indent=2, _level=0):
    """Deterministic JSON with floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    return json.dumps(str(obj))


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- argument resolution

def _vector(text, what):
    if text is None:
        return None
    text = text.strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [exprparse.evaluate(exprparse.parse(tok, 0), []) for tok in text.split(",")]
        return [float(v) for v in vals]
    except (ValueError, TypeError, ExprSyntaxError, ExprDomainError) as exc:
        raise ConfigError(f"cannot read {what} {text!r}: {exc}") from None


def load_geometry(text):
    """Geometry from a JSON file, inline JSON, or a bare builtin name."""
    if text is None:
        raise ConfigError("--geometry is required")
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            spec = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"geometry is not valid JSON: {exc}") from None
    else:
        spec = {"kind": "builtin", "name": stripped}
    try:
        return spec, charts.from_spec(spec)
    except (TypeError, ValueError, SingularError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid geometry: {exc}") from None


def _ladder(args):
    if args.levels < 3:
        raise ConfigError("--levels must be at least 3")
    if not args.s_max > 0:
        raise ConfigError("--s-max must be positive")
    if args.s_max > TRUSTED_S and not args.allow_large_s:
        raise ConfigError(f"--s-max {args.s_max} exceeds the trusted range {TRUSTED_S}; "
                          "pass --allow-large-s to override")
    return analysis.default_ladder(args.s_max, args.levels)


class Run:
    """Resolved configuration shared by the chart-based commands."""

    def __init__(self, args, need_uv=True, skew=False):
        self.args = args
        self.spec, self.chart = load_geometry(args.geometry)
        d = self.chart.dim
        point = _vector(args.point, "--point")
        if point is None:
            name = self.spec.get("name") if self.spec.get("kind", "builtin") == "builtin" else None
            point = DEFAULT_POINTS.get(name, [0.0] * d if name else None)
            if point is None:
                raise ConfigError("--point is required for custom and metric geometries")
        if len(point) != d:
            raise ConfigError(f"--point has {len(point)} coordinates, chart dimension is {d}")
        self.point = np.array(point)
        self.cfg = IntegratorConfig(args.steps_per_unit)
        if need_uv:
            u, v = _vector(args.u, "--u"), _vector(args.v, "--v")
            if u is None or v is None:
                if d < 2:
                    raise ConfigError("gap commands need dimension >= 2")
                F = (charts.orthonormal_frame(self.chart, self.chart.require(self.point))
                     if self.chart.metric is not None else np.eye(d))
                if skew:
                    # a pair not aligned with the coordinate axes, so no term vanishes by accident
                    F = F @ np.array([[1.0, -0.25], [0.5, 1.0]] + [[0.0, 0.0]] * (d - 2))
                u = F[:, 0] if u is None else u
                v = F[:, 1] if v is None else v
            for name, vec in (("--u", u), ("--v", v)):
                if len(vec) != d:
                    raise ConfigError(f"{name} has {len(vec)} components, chart dimension is {d}")
            self.u, self.v = np.array(u, dtype=float), np.array(v, dtype=float)

    def config(self, **extra):
        out = {"geometry": self.spec, "point": self.point, "steps_per_unit": self.cfg.steps_per_unit}
        if hasattr(self, "u"):
            out["u"], out["v"] = self.u, self.v
        out.update(extra)
        return out


def _report(command, config, body):
    return {"command": command, "version": __version__, "config": config, **body}


def _fit_dict(rep: analysis.GapReport):
    return {"limit": rep.limit, "next_coeff": rep.next_coeff, "residual_rms": rep.residual_rms,
            "slope_estimate": rep.slope_estimate, "condition": rep.condition}


# ---------------------------------------------------------------- commands

def cmd_gap(args):
    run = Run(args)
    ladder = _ladder(args)
    chart = run.chart
    t = FrameTriple(chart.require(run.point), run.u, run.v)
    gi, gii = analysis.measure_gaps(chart, t, ladder, run.cfg)
    r2 = [analysis.GapReport.from_samples(ladder, g, 2) for g in (gi, gii)]
    T = charts.torsion_at(chart, t.P)
    expected2 = -np.einsum("imn,m,n->i", T, t.u, t.v)
    body = {"order2": {"GI": _fit_dict(r2[0]), "GII": _fit_dict(r2[1]),
                       "expected_limit": expected2,
                       "max_abs_error": float(max(np.max(np.abs(r.limit - expected2)) for r in r2))}}
    torsion_seen = max(np.max(np.abs(r.limit)) for r in r2)
    if torsion_seen > analysis.TORSION_GUARD:
        body["order3"] = "skipped: torsion present"
    else:
        r3 = [analysis.GapReport.from_samples(ladder, g, 3) for g in (gi, gii)]
        R = charts.curvature_at(chart, t.P)
        expected3 = 0.5 * np.einsum("ipqr,p,q,r->i", R, t.u + t.v, t.u, t.v)
        body["order3"] = {"GI": _fit_dict(r3[0]), "GII": _fit_dict(r3[1]),
                          "expected_GI_limit": expected3, "expected_GII_limit": -expected3,
                          "max_abs_error": float(max(np.max(np.abs(r3[0].limit - expected3)),
                                                     np.max(np.abs(r3[1].limit + expected3))))}
    body["samples"] = {"s": ladder, "GI": gi, "GII": gii}
    d = chart.dim
    header = ["s"] + [f"GI_{i + 1}" for i in range(d)] + [f"GII_{i + 1}" for i in range(d)]
    rows = [[s, *a, *b] for s, a, b in zip(ladder, gi, gii)]
    return _report("gap", run.config(s_values=ladder), body), (header, rows)


def _tensor_rows(name, value, resid, analytic):
    rows = []
    for idx in np.ndindex(value.shape):
        rows.append([name, ",".join(str(i + 1) for i in idx), float(value[idx]),
                     float(resid[idx]), float(analytic[idx])])
    return rows


def _compare(value, analytic):
    err = np.abs(value - analytic)
    nz = np.abs(analytic) > 1e-12
    rel = float(np.max(err[nz] / np.abs(analytic[nz]))) if nz.any() else None
    return {"max_abs_error": float(np.max(err)), "max_rel_error_nonzero": rel}


def cmd_reconstruct(args):
    run = Run(args, need_uv=False)
    ladder = _ladder(args)
    P = run.chart.require(run.point)
    header = ["tensor", "index", "value", "residual", "analytic"]
    if args.tensor == "torsion":
        rec = analysis.torsion_from_gaps(run.chart, P, run.cfg, ladder)
        analytic = charts.torsion_at(run.chart, P)
        body = {"torsion": {"entries": rec.torsion, "residuals": rec.torsion_residual,
                            "analytic": analytic, **_compare(rec.torsion, analytic)}}
        rows = _tensor_rows("torsion", rec.torsion, rec.torsion_residual, analytic)
    else:
        rec = analysis.curvature_from_gaps(run.chart, P, run.cfg, ladder)
        analytic = charts.curvature_at(run.chart, P)
        body = {"curvature": {"entries": rec.curvature, "residuals": rec.curvature_residual,
                              "analytic": analytic, **_compare(rec.curvature, analytic)},
                "torsion_max": float(np.max(np.abs(rec.torsion)))}
        rows = _tensor_rows("curvature", rec.curvature, rec.curvature_residual, analytic)
    return _report("reconstruct", run.config(tensor=args.tensor, s_values=ladder), body), (header, rows)


def cmd_oracle(args):
    if args.model not in groundtruth.MODELS:
        raise ConfigError(f"--model must be one of {', '.join(groundtruth.MODELS)}")
    if not args.radius > 0:
        raise ConfigError("--radius must be positive")
    ladder = _ladder(args)
    q = groundtruth.oracle_vertices(args.model, args.radius, args.s)
    u, v = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])
    gi = [groundtruth.oracle_vertices(args.model, args.radius, s).gap_I for s in ladder]
    gii = [groundtruth.oracle_vertices(args.model, args.radius, s).gap_II for s in ladder]
    fi = analysis.GapReport.from_samples(ladder, gi, 3)
    fii = analysis.GapReport.from_samples(ladder, gii, 3)
    expected = groundtruth.oracle_gap_limit_ambient(args.model, args.radius, u, v)
    body = {"vertices": q.as_dict(), "gap_I": q.gap_I, "gap_II": q.gap_II,
            "closed": bool(np.max(np.abs(q.gap_I)) <= 1e-12 and np.max(np.abs(q.gap_II)) <= 1e-12),
            "curvature": groundtruth.curvature(args.model, args.radius),
            "order3": {"GI": _fit_dict(fi), "GII": _fit_dict(fii),
                       "expected_GI_limit": expected, "expected_GII_limit": -expected}}
    rows = [[name, *vec] for name, vec in q.as_dict().items()]
    config = {"model": args.model, "radius": args.radius, "s": args.s, "s_values": ladder}
    return _report("oracle", config, body), (["vertex", "X1", "X2", "X3"], rows)


def cmd_bp(args):
    run = Run(args, need_uv=False)
    if args.r_levels < 3:
        raise ConfigError("--r-levels must be at least 3")
    if not args.r_max > 0 or (args.r_max > TRUSTED_S and not args.allow_large_s):
        raise ConfigError(f"--r-max must lie in (0, {TRUSTED_S}] unless --allow-large-s is given")
    rl = analysis.default_ladder(args.r_max, args.r_levels)
    res = analysis.bertrand_puiseux(run.chart, run.point, rl, args.directions, run.cfg)
    body = {"kappa_estimate": res.kappa, "deficit_limit": res.limit,
            "residual_rms": res.fit.residual_rms,
            "samples": {"r": rl, "circumference": res.circumferences, "deficit": res.deficits}}
    try:
        body["kappa_analytic"] = charts.gaussian_curvature(run.chart, run.point)
        body["abs_error"] = abs(res.kappa - body["kappa_analytic"])
    except (ConfigError, SingularError):
        pass
    rows = [[r, c, dfc] for r, c, dfc in zip(rl, res.circumferences, res.deficits)]
    config = run.config(r_values=rl, directions=args.directions)
    return _report("bertrand-puiseux", config, body), (["r", "circumference", "deficit"], rows)


def cmd_frame_bracket(args):
    run = Run(args, need_uv=False)
    d = run.chart.dim
    if args.frame is not None:
        try:
            F = np.array(json.loads(args.frame), dtype=float)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"--frame must be a JSON matrix: {exc}") from None
        if F.shape != (d, d):
            raise ConfigError(f"--frame must be {d}x{d}")
    elif run.chart.metric is not None:
        F = charts.orthonormal_frame(run.chart, run.chart.require(run.point))
    else:
        F = np.eye(d)
    y = framebundle.FramePoint(run.point, F)
    rep = framebundle.verify_frame_bracket(run.chart, y, args.h)
    body = {"symmetric": rep.symmetric, "pairs": [list(p) for p in rep.pairs],
            "base_deviation": rep.base_deviation, "vert_deviation": rep.vert_deviation,
            "max_base_deviation": rep.max_base_deviation,
            "max_vert_deviation": rep.max_vert_deviation}
    rows = [[f"{m + 1},{n + 1}", b, "" if vd is None else vd]
            for (m, n), b, vd in zip(rep.pairs, rep.base_deviation, rep.vert_deviation)]
    config = run.config(frame=F, h=args.h)
    return _report("frame-bracket", config, body), (["pair", "base_deviation", "vert_deviation"], rows)


def _slope_above_floor(ss, errs, floor=1e-14):
    keep = np.asarray(errs) > floor
    return analysis.slope_estimate(np.asarray(ss)[keep], np.asarray(errs)[keep]) if keep.sum() >= 3 else None


def cmd_taylor_check(args):
    run = Run(args, skew=True)
    if not 0 < args.s_min < args.s_max:
        raise ConfigError("need 0 < --s-min < --s-max")
    _ladder(args)
    ss = np.geomspace(args.s_max, args.s_min, args.levels)
    t = FrameTriple(run.chart.require(run.point), run.u, run.v)
    ep, eq = [], []
    for s in ss:
        q = quad_vertices(run.chart, t, s, run.cfg)
        p2, q2 = analysis.taylor_p2(run.chart, t, s)
        ep.append(float(np.linalg.norm(q.P2 - p2)))
        eq.append(float(np.linalg.norm(q.Q2 - q2)))
    body = {"slope_P2": _slope_above_floor(ss, ep), "slope_Q2": _slope_above_floor(ss, eq),
            "samples": {"s": ss, "err_P2": ep, "err_Q2": eq}}
    rows = [[s, a, b] for s, a, b in zip(ss, ep, eq)]
    return _report("taylor-check", run.config(s_values=ss), body), (["s", "err_P2", "err_Q2"], rows)


# ---------------------------------------------------------------- parser and driver

def build_parser():
    p = argparse.ArgumentParser(prog="geogap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"geogap {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--geometry", help="JSON file, inline JSON, or a builtin name")
    common.add_argument("--point", help="comma-separated coordinates (expressions such as pi/2 allowed)")
    common.add_argument("--u", help="first direction")
    common.add_argument("--v", help="second direction")
    common.add_argument("--s-max", type=float, default=0.1)
    common.add_argument("--levels", type=int, default=6)
    common.add_argument("--steps-per-unit", type=int, default=512)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv", "both"), default="json")
    common.add_argument("--allow-large-s", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gap", parents=[common], help="gap ladders and their order-2/3 limits")
    g.set_defaults(func=cmd_gap)
    r = sub.add_parser("reconstruct", parents=[common], help="torsion or curvature from gaps")
    r.add_argument("tensor", choices=("torsion", "curvature"))
    r.set_defaults(func=cmd_reconstruct)
    o = sub.add_parser("oracle", parents=[common], help="closed-form sphere/hyperboloid quadrilaterals")
    o.add_argument("--model", default="sphere")
    o.add_argument("--radius", type=float, default=1.0)
    o.add_argument("--s", type=float, default=0.1)
    o.set_defaults(func=cmd_oracle)
    b = sub.add_parser("bertrand-puiseux", parents=[common], help="curvature from geodesic circles")
    b.add_argument("--directions", type=int, default=4096)
    b.add_argument("--r-max", type=float, default=0.1)
    b.add_argument("--r-levels", type=int, default=5)
    b.set_defaults(func=cmd_bp)
    f = sub.add_parser("frame-bracket", parents=[common], help="brackets of basic frame-bundle fields")
    f.add_argument("--frame", help="JSON matrix whose columns are the frame vectors")
    f.add_argument("--h", type=float, default=None, help="finite-difference step")
    f.set_defaults(func=cmd_frame_bracket)
    t = sub.add_parser("taylor-check", parents=[common], help="ODE vertex P2 against its cubic Taylor polynomial")
    t.add_argument("--s-min", type=float, default=1e-3)
    t.set_defaults(func=cmd_taylor_check)
    return p


def _emit(args, report, table):
    text_json = to_json(report) + "\n"
    text_csv = to_csv(*table)
    if args.out is None:
        if args.format == "both":
            raise ConfigError("--format both needs --out")
        sys.stdout.write(text_json if args.format == "json" else text_csv)
        return
    base, ext = os.path.splitext(args.out)
    targets = {"json": [(args.out, text_json)], "csv": [(args.out, text_csv)],
               "both": [(base + ".json", text_json), (base + ".csv", text_csv)]}[args.format]
    for path, text in targets:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report, table = args.func(args)
        _emit(args, report, table)
    except (ConfigError, DimensionError, ExprSyntaxError, SingularError) as exc:
        print(f"geogap: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainExitError, ExprDomainError) as exc:
        print(f"geogap: domain exit: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FitError as exc:
        print(f"geogap: fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    return 0
