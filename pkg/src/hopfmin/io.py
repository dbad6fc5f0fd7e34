"""File formats and deterministic JSON serialization.

All floats are written with 17 significant digits so that identical runs
produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .geometry import BoundaryMap, Domain, TriangleMesh, make_domain
from .mapping import DiscreteMap


def _fmt_float(x):
    if x != x:
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    return format(float(x), ".17g")


def _serialize(obj, out):
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _serialize(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, v in enumerate(seq):
            if i:
                out.append(",")
            _serialize(v, out)
        out.append("]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif obj is None:
        out.append("null")
    else:
        out.append(json.dumps(str(obj)))


def to_json(obj):
    out = []
    _serialize(obj, out)
    return "".join(out)


def write_json(path, obj):
    with open(path, "w") as f:
        f.write(to_json(obj))
        f.write("\n")


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt_float(x) if isinstance(x, float) else str(x)
                             for x in row) + "\n")


# -- mesh ---------------------------------------------------------------------

def mesh_to_dict(mesh: TriangleMesh):
    return {"vertices": mesh.vertices,
            "triangles": mesh.triangles,
            "boundary_loop": mesh.boundary_loop}


def mesh_from_dict(d) -> TriangleMesh:
    return TriangleMesh(np.asarray(d["vertices"], dtype=float),
                        np.asarray(d["triangles"], dtype=np.int64),
                        np.asarray(d["boundary_loop"], dtype=np.int64))


def load_mesh(path) -> TriangleMesh:
    return mesh_from_dict(read_json(path))


def save_mesh(path, mesh: TriangleMesh):
    write_json(path, mesh_to_dict(mesh))


# -- boundary maps ------------------------------------------------------------

def boundary_map_to_list(bmap: BoundaryMap):
    return [{"s": float(s), "w": [float(w[0]), float(w[1])]}
            for s, w in zip(bmap.samples_s, bmap.samples_w)]


def boundary_map_from_list(items) -> BoundaryMap:
    s = np.array([it["s"] for it in items], dtype=float)
    w = np.array([it["w"] for it in items], dtype=float)
    return BoundaryMap(s, w)


# -- maps ---------------------------------------------------------------------

def map_to_dict(dmap: DiscreteMap, mesh_ref=None):
    mesh = mesh_ref if mesh_ref is not None else mesh_to_dict(dmap.reference)
    return {"mesh": mesh, "targets": dmap.targets}


def map_from_dict(d, base_dir=".") -> DiscreteMap:
    mesh = d["mesh"]
    if isinstance(mesh, str):
        mesh = read_json(os.path.join(base_dir, mesh))
    return DiscreteMap(mesh_from_dict(mesh),
                       np.asarray(d["targets"], dtype=float))


def load_map(path) -> DiscreteMap:
    return map_from_dict(read_json(path), base_dir=os.path.dirname(path))


def save_map(path, dmap: DiscreteMap):
    write_json(path, map_to_dict(dmap))


# -- domains ------------------------------------------------------------------

def domain_from_dict(d) -> Domain:
    kind = d["kind"]
    if kind == "rectangle":
        return make_domain("rectangle", w=float(d["w"]), h=float(d["h"]))
    if kind == "disk-polygon":
        return make_domain("disk-polygon", n=int(d.get("n", 64)),
                           radius=float(d.get("radius", 1.0)))
    if kind == "polygon":
        return make_domain("polygon", vertices=np.asarray(d["vertices"], dtype=float))
    raise ValueError(f"unknown domain kind {kind!r}")


def domain_to_dict(domain: Domain):
    return {"kind": "polygon", "vertices": domain.vertices}


# -- weights ------------------------------------------------------------------

def weight_from_dict(d):
    from .energy import WeightFn
    if d is None:
        return WeightFn.constant(1.0)
    kind = d.get("kind", "const")
    if kind == "const":
        return WeightFn.constant(float(d.get("value", 1.0)))
    if kind == "expr":
        import sympy
        x, y = sympy.symbols("x y")
        expr = sympy.sympify(d["expr"])
        fn = sympy.lambdify((x, y), expr, modules="numpy")
        gx = sympy.lambdify((x, y), sympy.diff(expr, x), modules="numpy")
        gy = sympy.lambdify((x, y), sympy.diff(expr, y), modules="numpy")

        def val(px, py, _f=fn):
            return np.broadcast_to(np.asarray(_f(px, py), dtype=float), np.shape(px)).copy()

        def grad(px, py, _gx=gx, _gy=gy):
            shape = np.shape(px)
            return (np.broadcast_to(np.asarray(_gx(px, py), dtype=float), shape).copy(),
                    np.broadcast_to(np.asarray(_gy(px, py), dtype=float), shape).copy())

        return WeightFn.from_callable(val, grad=grad)
    raise ValueError(f"unknown weight kind {kind!r}")
