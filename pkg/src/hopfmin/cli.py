"""Command-line front end.

Exit codes: 0 all checks passed, 2 configuration error, 3 numerical
failure (non-convergence), 4 a property check exceeded its tolerance.
Every run with a fixed seed writes byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io, svg
from .energy import WeightFn
from .geometry import BoundaryMap, GeometryError, boundary_targets, triangulate
from .hopf import HopfField, holomorphy_residual, hopf_differential, integral_identity
from .mapping import DiscreteMap, derivatives
from .optimize import (Functional, OptimizeError, Problem, SolveOptions,
                       choquet_experiment, minimize, uniqueness_experiment)
from .quaddiff import QuadraticDifferential, fubini_check, trace, vertical_family

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VIOLATION = 4


class ConfigError(ValueError):
    pass


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _load_problem(path, overrides):
    cfg = io.read_json(path)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(v):
        if isinstance(v, str):
            return io.read_json(os.path.join(base, v))
        return v

    if "source_mesh" in cfg:
        mesh = io.mesh_from_dict(resolve(cfg["source_mesh"]))
    elif "source_domain" in cfg:
        dom = io.domain_from_dict(cfg["source_domain"])
        edge = overrides.get("mesh_edge") or cfg.get("mesh_edge")
        if edge is None:
            raise ConfigError("source_domain needs mesh_edge")
        mesh = triangulate(dom, float(edge))
    else:
        raise ConfigError("problem needs source_mesh or source_domain")

    target = io.domain_from_dict(cfg["target_domain"])

    bspec = cfg["boundary_map"]
    if isinstance(bspec, str):
        bmap = io.boundary_map_from_list(resolve(bspec))
    elif isinstance(bspec, list):
        bmap = io.boundary_map_from_list(bspec)
    elif bspec.get("kind") == "identity":
        from .geometry import Domain, _is_convex
        loop = mesh.vertices[mesh.boundary_loop]
        bmap = BoundaryMap.identity(Domain("polygon", loop, _is_convex(loop)))
    elif bspec.get("kind") == "circle-twist":
        amp = float(bspec.get("amplitude", 0.5))
        from .geometry import point_at_fraction
        tv = target.vertices

        def fn(s):
            return point_at_fraction(tv, (s + amp * np.sin(2 * np.pi * s)
                                          / (2 * np.pi)) % 1.0)

        bmap = BoundaryMap.from_function(None, target, fn,
                                         n_samples=int(bspec.get("samples", 256)))
    else:
        raise ConfigError(f"unknown boundary map spec {bspec!r}")

    fspec = cfg["functional"]
    kind = fspec["kind"]
    p = overrides.get("p") or fspec.get("p")
    phi = io.weight_from_dict(fspec.get("phi")) if kind == "weighted_dirichlet" else None
    functional = Functional(kind, p=float(p) if p is not None else None, phi=phi)

    ospec = dict(cfg.get("options", {}))
    for key in ("seed", "tol_grad", "mesh_edge"):
        if overrides.get(key) is not None:
            ospec[key] = overrides[key]
    opts = SolveOptions(**{k: v for k, v in ospec.items()
                           if k in SolveOptions.__dataclass_fields__})
    return Problem(mesh, target, bmap, functional, opts)


def _parse_qd(expr, domain):
    import sympy
    z = sympy.symbols("z")
    e = sympy.sympify(expr.replace("^", "**"), locals={"z": z})
    poly = e.as_poly(z)
    if poly is not None and poly.degree() >= 0:
        coeffs = [complex(c) for c in reversed(poly.all_coeffs())]
        return QuadraticDifferential.polynomial(np.array(coeffs, dtype=complex),
                                                domain)
    fn = sympy.lambdify(z, e, modules="numpy")
    return QuadraticDifferential.from_callable(
        lambda w: np.asarray(fn(w), dtype=complex), domain)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_mesh(args):
    out = _outdir(args)
    import json as _json
    try:
        spec = _json.loads(args.domain)
    except _json.JSONDecodeError:
        spec = io.read_json(args.domain)
    dom = io.domain_from_dict(spec)
    mesh = triangulate(dom, args.mesh_edge)
    io.save_mesh(os.path.join(out, "mesh.json"), mesh)
    with open(os.path.join(out, "mesh.svg"), "w") as f:
        f.write(svg.render_mesh(mesh))
    io.write_json(os.path.join(out, "mesh_report.json"), {
        "vertices": mesh.n_vertices,
        "triangles": mesh.n_triangles,
        "boundary_vertices": len(mesh.boundary_loop),
        "total_area": mesh.total_area,
        "polygon_area": dom.area,
        "area_tolerance": 1e-12,
        "max_edge": float(mesh.edge_lengths.max()),
        "max_edge_bound": 1.5 * args.mesh_edge,
    })
    return EXIT_OK


def cmd_minimize(args):
    out = _outdir(args)
    prob = _load_problem(args.problem, {
        "p": args.p, "seed": args.seed, "tol_grad": args.tol_grad,
        "mesh_edge": args.mesh_edge})
    rep = minimize(prob)
    io.save_map(os.path.join(out, "map.json"), rep.map)
    io.write_csv(os.path.join(out, "energy_trace.csv"),
                 ["iteration", "energy"],
                 [(int(i), float(e)) for i, e in rep.energy_trace])
    io.write_json(os.path.join(out, "solve_report.json"), {
        "energy": rep.energy,
        "grad_norm": rep.grad_norm,
        "tol_grad": prob.options.tol_grad,
        "hopf_residual": rep.hopf_residual,
        "min_J": rep.min_J,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "variable": rep.variable,
        "seed": prob.options.seed,
        "note": rep.note,
        "map_file": "map.json",
    })
    with open(os.path.join(out, "map.svg"), "w") as f:
        f.write(svg.render_map(rep.map, prob.target.vertices
                               if rep.variable == "direct"
                               else prob.source.vertices[prob.source.boundary_loop]))
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def cmd_verify_identity(args):
    out = _outdir(args)
    cfg = io.read_json(args.pair)
    base = os.path.dirname(os.path.abspath(args.pair))
    mesh_d = cfg["mesh"]
    if isinstance(mesh_d, str):
        mesh_d = io.read_json(os.path.join(base, mesh_d))
    mesh = io.mesh_from_dict(mesh_d)
    h = DiscreteMap(mesh, np.asarray(cfg["h_targets"], dtype=float))
    H = DiscreteMap(mesh, np.asarray(cfg["H_targets"], dtype=float))
    phi = io.weight_from_dict(cfg.get("phi"))
    tol_rel = float(cfg.get("tol_rel", 1e-9))
    rep = integral_identity(h, H, phi)
    passed = rep.rel_gap <= tol_rel
    io.write_json(os.path.join(out, "identity_report.json"), {
        "lhs": rep.lhs, "rhs_term1": rep.rhs_term1, "rhs_term2": rep.rhs_term2,
        "gap": rep.gap, "rel_gap": rep.rel_gap, "tol_rel": tol_rel,
        "f_min_J": rep.f_min_J, "passed": passed,
    })
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_verify_hopf(args):
    out = _outdir(args)
    dmap = io.load_map(args.map)
    if args.p is not None:
        d = derivatives(dmap)
        w = d.K ** (args.p - 1.0)
        field = HopfField(phi=w * d.fz * np.conj(d.fzb), weights=w,
                          deriv=d, mesh=dmap.reference)
    else:
        phi = io.weight_from_dict(
            __import__("json").loads(args.phi) if args.phi else None)
        field = hopf_differential(dmap, phi)
    res = holomorphy_residual(field)
    tol = args.tol
    passed = True if tol is None else bool(res.max_rel <= tol)
    io.write_json(os.path.join(out, "hopf_report.json"), {
        "max_rel": res.max_rel,
        "scale": res.scale,
        "tol": tol,
        "passed": passed,
        "loop_residuals": [
            {"vertex": int(v), "residual": float(r)}
            for v, r in zip(res.vertex_ids, res.loop_residuals)],
    })
    with open(os.path.join(out, "phi_heat.svg"), "w") as f:
        f.write(svg.render_hopf(field))
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_trace(args):
    out = _outdir(args)
    dom = io.domain_from_dict(__import__("json").loads(args.domain))
    qd = _parse_qd(args.qd, dom)
    start = tuple(float(v) for v in args.start.split(","))
    tr = trace(qd, start, kind=args.kind, step=args.step)
    io.write_json(os.path.join(out, "trajectory.json"), {
        "kind": tr.kind,
        "termination": tr.termination,
        "phi_length": tr.phi_length,
        "tangential_exit": tr.tangential_exit,
        "step": args.step,
        "points": tr.points,
    })
    with open(os.path.join(out, "trajectories.svg"), "w") as f:
        f.write(svg.render_trajectories(dom, [tr], marks=[start]))
    return EXIT_OK


def cmd_fubini(args):
    out = _outdir(args)
    if args.case == "square":
        from .geometry import make_domain
        dom = make_domain("rectangle", w=1.0, h=1.0)
        qd = QuadraticDifferential.polynomial([1.0], dom)
        fam, _, h = vertical_family(qd, (0.5, 0.5), spacing=args.spacing,
                                    step=args.spacing / 5.0)
        F = lambda z: z.real
        G = lambda z: np.ones_like(z.real)
        rep = fubini_check(qd, F, G, fam, h, region=dom,
                           mesh_edge=max(args.spacing, 0.05))
        tol = 1e-12
    elif args.case == "sector":
        from .geometry import make_domain

        def zinv(zeta):
            return (1.5 * zeta) ** (2.0 / 3.0)

        xs = np.linspace(0.4, 1.0, 60)
        ys = np.linspace(-0.25, 0.25, 30)
        bd = np.concatenate([xs + 1j * ys[0], (xs[-1] + 1j * ys)[1:],
                             (xs[::-1] + 1j * ys[-1])[1:],
                             (xs[0] + 1j * ys[::-1])[1:-1]])
        v = zinv(bd)
        dom = make_domain("polygon", vertices=np.stack([v.real, v.imag], axis=1))
        qd = QuadraticDifferential.polynomial([0.0, 1.0], dom)
        anchor = zinv(0.7 + 0j)
        fam, _, h = vertical_family(qd, (anchor.real, anchor.imag),
                                    spacing=args.spacing, step=args.spacing / 5.0)
        F = lambda z: 0.5 + 0.3 * np.sin(z.real + 2 * z.imag)
        G = lambda z: F(z) + 0.15 + 0.1 * np.cos(z.real - z.imag)
        rep = fubini_check(qd, F, G, fam, h, region=dom, mesh_edge=0.02)
        tol = 1e-3
    else:
        raise ConfigError(f"unknown fubini case {args.case!r}")
    err_F = abs(rep.recon_F - rep.domain_F) / max(abs(rep.domain_F), 1e-30)
    err_G = abs(rep.recon_G - rep.domain_G) / max(abs(rep.domain_G), 1e-30)
    passed = bool(rep.min_slack >= -1e-12 and rep.domain_F <= rep.domain_G
                  and err_F <= tol and err_G <= tol)
    io.write_json(os.path.join(out, "fubini_report.json"), {
        "case": args.case, "spacing": rep.spacing, "tol": tol,
        "line_F": rep.line_F, "line_G": rep.line_G,
        "domain_F": rep.domain_F, "domain_G": rep.domain_G,
        "recon_F": rep.recon_F, "recon_G": rep.recon_G,
        "recon_rel_err_F": err_F, "recon_rel_err_G": err_G,
        "coverage": rep.coverage, "min_slack": rep.min_slack,
        "passed": passed,
    })
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_uniqueness(args):
    out = _outdir(args)
    prob = _load_problem(args.problem, {
        "p": args.p, "seed": args.seed, "tol_grad": args.tol_grad,
        "mesh_edge": args.mesh_edge})
    rep = uniqueness_experiment(prob, args.starts, seed=args.seed or 0)
    tol = args.tol if args.tol is not None else 1e-4
    passed = rep.conclusive and rep.max_pairwise <= tol
    io.write_json(os.path.join(out, "uniqueness_report.json"), {
        "n_starts": args.starts,
        "max_pairwise_linf": rep.max_pairwise,
        "tol": tol,
        "conclusive": rep.conclusive,
        "converged": [r.converged for r in rep.reports],
        "energies": [r.energy for r in rep.reports],
        "note": rep.reports[0].note,
        "passed": bool(passed),
    })
    io.write_csv(os.path.join(out, "pairwise_linf.csv"),
                 [f"run{j}" for j in range(len(rep.reports))],
                 [[float(x) for x in row] for row in rep.pairwise_linf])
    if not rep.conclusive:
        return EXIT_NUMERIC
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_choquet(args):
    out = _outdir(args)
    rep = choquet_experiment(mesh_edge=args.mesh_edge or 0.12,
                             seed=args.seed or 0)
    margin_tol = 1e-3
    passed = (len(rep.outside_ids) >= 1
              and rep.max_outside_margin >= margin_tol
              and rep.minimizer.min_J > 0
              and rep.minimizer.converged)
    from .geometry import points_in_polygon
    from .optimize import lshape_domain
    target = lshape_domain()
    pts = rep.harmonic.targets
    inside = points_in_polygon(pts, target.vertices)
    inside[rep.harmonic.reference.boundary_loop] = True
    io.write_json(os.path.join(out, "choquet_report.json"), {
        "outside_vertices": int(len(rep.outside_ids)),
        "max_outside_margin": rep.max_outside_margin,
        "margin_tol": margin_tol,
        "minimizer_min_J": rep.minimizer.min_J,
        "minimizer_converged": rep.minimizer.converged,
        "passed": bool(passed),
    })
    with open(os.path.join(out, "choquet.svg"), "w") as f:
        f.write(svg.render_points_over_target(pts, inside, target.vertices))
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_report(args):
    out = _outdir(args)
    entries = []
    ok = True
    for name in sorted(os.listdir(args.dir)):
        if not name.endswith("_report.json"):
            continue
        data = io.read_json(os.path.join(args.dir, name))
        passed = data.get("passed")
        if passed is False:
            ok = False
        entries.append({"file": name, "passed": passed})
    io.write_json(os.path.join(out, "summary.json"),
                  {"reports": entries, "all_passed": ok})
    return EXIT_OK if ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="hopfmin")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("mesh", help="triangulate a domain")
    common(p)
    p.add_argument("--domain", required=True,
                   help="domain JSON (inline string or file path)")
    p.add_argument("--mesh-edge", type=float, required=True)
    p.set_defaults(fn=cmd_mesh)

    p = sub.add_parser("minimize", help="solve a minimization problem")
    common(p)
    p.add_argument("--problem", required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--tol-grad", type=float, default=None)
    p.add_argument("--mesh-edge", type=float, default=None)
    p.set_defaults(fn=cmd_minimize)

    p = sub.add_parser("verify-identity", help="two-sided energy difference check")
    common(p)
    p.add_argument("--pair", required=True)
    p.set_defaults(fn=cmd_verify_identity)

    p = sub.add_parser("verify-hopf", help="loop-integral holomorphy residual")
    common(p)
    p.add_argument("--map", required=True)
    p.add_argument("--p", type=float, default=None,
                   help="use the map's own distortion power as weight")
    p.add_argument("--phi", default=None, help="weight spec JSON")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(fn=cmd_verify_hopf)

    p = sub.add_parser("trace", help="trace a trajectory")
    common(p)
    p.add_argument("--qd", required=True, help="polynomial in z, e.g. 'z' or '1'")
    p.add_argument("--start", required=True, help="x,y")
    p.add_argument("--kind", choices=["vertical", "horizontal"],
                   default="vertical")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--domain",
                   default='{"kind":"polygon","vertices":[[-3,-3],[3,-3],[3,3],[-3,3]]}')
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("fubini", help="trajectory-family integration check")
    common(p)
    p.add_argument("--case", choices=["square", "sector"], default="square")
    p.add_argument("--spacing", type=float, default=0.05)
    p.set_defaults(fn=cmd_fubini)

    p = sub.add_parser("uniqueness", help="multi-start minimizer agreement")
    common(p)
    p.add_argument("--problem", required=True)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--tol-grad", type=float, default=None)
    p.add_argument("--mesh-edge", type=float, default=None)
    p.set_defaults(fn=cmd_uniqueness)

    p = sub.add_parser("choquet", help="nonconvex-target harmonic failure")
    common(p)
    p.add_argument("--mesh-edge", type=float, default=None)
    p.set_defaults(fn=cmd_choquet)

    p = sub.add_parser("report", help="collate check reports")
    common(p)
    p.add_argument("--dir", required=True)
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, GeometryError, FileNotFoundError, KeyError,
            ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OptimizeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
