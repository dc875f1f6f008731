"""Command-line front end.

Subcommands
-----------
verify SUITE        run the invariant suite of one module (geom, decompose,
                    quadrature, fem) and print a pass/fail table
integrate           phase volumes and interface measures per refinement (CSV)
converge            convergence study of a manufactured case (CSV)
dump-rule DOMAIN N  nodes and weights of a quadrature rule (CSV)

Exit codes: 0 success, 1 failed check or solver failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "case": {"enum": ["moving_plane_planar", "moving_plane_curved", "moving_sphere"]},
        "n_s": {"$ref": "#/definitions/ints"},
        "n_t": {"$ref": "#/definitions/ints"},
        "m_s": {"$ref": "#/definitions/subdiv"},
        "m_t": {"$ref": "#/definitions/ints"},
        "lambda": {"type": ["number", "null"], "minimum": 0},
        "rules": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cut": {"enum": ["p3", "duffy2", "duffy3", "duffy5"]},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gmres_rtol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
    },
    "required": ["case"],
    "definitions": {
        "ints": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "integer", "minimum": 1}},
            ]
        },
        "subdiv": {
            "oneOf": [
                {"enum": [1, 2, 4, 8]},
                {"type": "array", "items": {"enum": [1, 2, 4, 8]}},
            ]
        },
    },
}

DEFAULTS = {"n_s": 4, "n_t": 4, "m_s": 1, "m_t": 1, "lambda": None, "tolerances": {}, "rules": {}, "seed": 0}

INTEGRATE_COLUMNS = ("case", "n_s", "n_t", "m_s", "m_t", "h", "dt", "volume_1", "volume_2", "exact_volume_1",
                     "volume_error", "interface_measure", "interface_nu_measure", "exact_interface_nu_measure")


class UsageError(Exception):
    pass


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _listify(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_config(path=None, overrides=None):
    """Read a JSON config, apply command-line overrides, validate, fill defaults."""
    import jsonschema

    cfg = {}
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid config: {exc.message}") from None
    out = dict(DEFAULTS)
    out.update(cfg)
    return out


def resolutions(cfg):
    """Expand ``n_s``, ``n_t``, ``m_s``, ``m_t`` (scalars broadcast) into rows."""
    cols = {k: _listify(cfg[k]) for k in ("n_s", "n_t", "m_s", "m_t")}
    n = max(len(v) for v in cols.values())
    for k, v in cols.items():
        if len(v) not in (1, n):
            raise UsageError(f"list lengths differ: {k} has {len(v)} entries, expected 1 or {n}")
        if len(v) == 1:
            cols[k] = v * n
    return [tuple(cols[k][i] for k in ("n_s", "n_t", "m_s", "m_t")) for i in range(n)]


def _volume_rules(cfg):
    from .fem import VolumeRules
    from .quadrature import pentatope_rule_duffy, pentatope_rule_p3

    name = cfg["rules"].get("cut", "duffy3")
    rule = pentatope_rule_p3() if name == "p3" else pentatope_rule_duffy(int(name[-1]))
    return VolumeRules(cut=rule)


# ----------------------------------------------------------------------------
# commands


def cmd_verify(args, out):
    from .verify import run_suite

    checks = run_suite(args.suite, args.seed)
    width = max(len(c.name) for c in checks)
    failed = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        failed += not c.passed
        out.write(f"{status}  {c.name:<{width}}  value={c.value:.3e}  tol={c.tolerance:.1e}\n")
    out.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return 1 if failed else 0


def integrate_rows(cfg):
    """Phase volumes and interface measures of a case's space-time geometry."""
    import numpy as np

    from .interface import SubdivisionParams, build_slab_geometries
    from .solver import BoxMesh
    from .testcases import get_case

    case = get_case(cfg["case"])
    rows = []
    for n_s, n_t, m_s, m_t in resolutions(cfg):
        mesh = BoxMesh(n_s, case.extent, case.periodic)
        tets = mesh.element_coords
        dt = case.T / n_t
        params = SubdivisionParams(m_s, m_t)
        vol = np.zeros(2)
        area = nu_area = 0.0
        for s in range(n_t):
            base = np.concatenate([tets, np.full(tets.shape[:2] + (1,), s * dt)], axis=-1)
            g = build_slab_geometries(base, np.array([0, 0, 0, dt]), case.level_set, params)
            vol += g.phase_volume.sum(axis=0)
            area += g.iface_measure.sum()
            nu_area += (g.iface_measure * g.nu).sum()
        exact, exact_area = exact_measures(case)
        rows.append({
            "case": case.name, "n_s": n_s, "n_t": n_t, "m_s": m_s, "m_t": m_t,
            "h": mesh.h, "dt": dt, "volume_1": float(vol[0]), "volume_2": float(vol[1]),
            "exact_volume_1": exact, "volume_error": abs(float(vol[0]) - exact),
            "interface_measure": float(area), "interface_nu_measure": float(nu_area),
            "exact_interface_nu_measure": exact_area,
        })
    return rows


def exact_measures(case):
    """Exact ``|Q_1|`` and ``int_0^T |Gamma(t)| dt`` of the manufactured cases."""
    T = case.T
    if case.name.startswith("moving_plane"):
        D = case.coefficients["D"]
        side = case.extent**2
        if case.name.endswith("planar"):
            return D * side * T, 2 * side * T
        return D * side * T, float("nan")
    R = case.coefficients["R"]
    return 4.0 / 3.0 * math.pi * R**3 * T, 4 * math.pi * R**2 * T


def cmd_integrate(args, out):
    cfg = load_config(args.config, {"case": args.case, "n_s": args.n_s, "n_t": args.n_t,
                                    "m_s": args.m_s, "m_t": args.m_t})
    rows = integrate_rows(cfg)
    w = csv.writer(out)
    w.writerow(INTEGRATE_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in INTEGRATE_COLUMNS])
    return 0


def cmd_converge(args, out):
    from .errors import NoConvergence
    from .interface import SubdivisionParams
    from .quadrature import tet_rule
    from .solver import ConvergenceReport, run_single
    from .testcases import get_case

    cfg = load_config(args.config, {"case": args.case, "n_s": args.n_s, "n_t": args.n_t,
                                    "m_s": args.m_s, "m_t": args.m_t, "lambda": args.lam})
    case = get_case(cfg["case"])
    report = ConvergenceReport(case.name)
    rtol = cfg["tolerances"].get("gmres_rtol", 1e-10)
    rules = _volume_rules(cfg)
    status = 0
    for n_s, n_t, m_s, m_t in resolutions(cfg):
        try:
            row = run_single(case, n_s, n_t, SubdivisionParams(m_s, m_t), cfg["lambda"], rules=rules, rtol=rtol)
        except NoConvergence as exc:
            logging.getLogger(__name__).error("n_s=%d n_t=%d: %s", n_s, n_t, exc)
            status = 1
            continue
        report.rows.append(row)
    report.to_csv(out)
    if len(report.rows) > 1:
        for key in ("l2_error", "jump_error"):
            orders = ", ".join(f"{o:.3f}" for o in report.orders(key))
            sys.stderr.write(f"observed orders ({key}): {orders}\n")
    return status


RULE_DOMAINS = ("pentatope", "pentatope-duffy", "tet", "triangle", "gauss-legendre", "gauss-jacobi")


def rule_for(domain, degree):
    from .errors import InvalidParameter, UnsupportedDegree
    from . import quadrature as qd

    try:
        if domain == "pentatope":
            if degree == 1:
                return qd.pentatope_rule_p1()
            if degree == 3:
                return qd.pentatope_rule_p3()
            raise UsageError("pentatope rules: degree 1 (vertex rule) or 3 (five-point rule)")
        if domain == "pentatope-duffy":
            return qd.pentatope_rule_duffy(degree)
        if domain == "tet":
            return qd.tet_rule(degree)
        if domain == "triangle":
            return qd.triangle_rule(degree)
        if domain == "gauss-legendre":
            return qd.gauss_legendre_1d(degree)
        if domain == "gauss-jacobi":
            return qd.gauss_jacobi_1d(degree)
    except (InvalidParameter, UnsupportedDegree) as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown domain {domain!r}")


def cmd_dump_rule(args, out):
    rule = rule_for(args.domain, args.degree)
    dim = rule.nodes.shape[1]
    w = csv.writer(out)
    w.writerow([f"x{i + 1}" for i in range(dim)] + ["weight"])
    for x, wt in zip(rule.nodes, rule.weights):
        w.writerow([_fmt(float(c)) for c in x] + [_fmt(float(wt))])
    return 0


# ----------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="stxfem", description="Space-time XFEM toolkit")
    p.add_argument("--seed", type=int, default=0, help="random seed for verification suites")
    p.add_argument("--threads", type=int, default=None, help="BLAS threads (default: all cores)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--config", default=None, help="JSON run configuration")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a module's invariant suite")
    v.add_argument("suite", choices=("geom", "decompose", "quadrature", "fem"))

    for name, helptext in (("integrate", "phase volumes per refinement"), ("converge", "convergence study")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--case", default=None)
        c.add_argument("--n-s", type=int, nargs="+", default=None)
        c.add_argument("--n-t", type=int, nargs="+", default=None)
        c.add_argument("--m-s", type=int, nargs="+", default=None)
        c.add_argument("--m-t", type=int, nargs="+", default=None)
        if name == "converge":
            c.add_argument("--lambda", dest="lam", type=float, default=None)

    d = sub.add_parser("dump-rule", help="print quadrature nodes and weights")
    d.add_argument("domain", choices=RULE_DOMAINS)
    d.add_argument("degree", type=int, help="degree (simplices) or number of nodes (1D rules)")
    return p


def _apply_threads(n):
    n = n or os.cpu_count() or 1
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    for attr in ("n_s", "n_t", "m_s", "m_t"):
        val = getattr(args, attr, None)
        if val is not None and len(val) == 1:
            setattr(args, attr, val[0])
    _apply_threads(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    commands = {"verify": cmd_verify, "integrate": cmd_integrate, "converge": cmd_converge,
                "dump-rule": cmd_dump_rule}
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        return commands[args.command](args, out)
    except UsageError as exc:
        sys.stderr.write(f"stxfem: error: {exc}\n")
        return 2
    finally:
        if args.out:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
