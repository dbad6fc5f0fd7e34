"""Energy minimization over discrete maps with fixed boundary values.

The descent works on interior vertex positions only, with backtracking
line search and a step cap that keeps every image triangle at a fixed
fraction of its current area, so iterates never leave the
orientation-preserving class.  Distortion problems are minimized in the
inverse variable (the map from the target region back to the source),
where the integrand K^(p-1) |Dh|^2 is smooth wherever J > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import kernels
from .energy import WeightFn, as_weight
from .geometry import (BoundaryMap, Domain, GeometryError, TriangleMesh,
                       as_complex, as_xy, boundary_targets, points_in_polygon,
                       distance_to_polygon, triangulate)
from .hopf import holomorphy_residual, hopf_differential
from .mapping import DiscreteMap, derivatives, invert


class OptimizeError(RuntimeError):
    pass


@dataclass
class Functional:
    """Objective selector: mean_distortion(p), inverse_energy(p), or
    weighted_dirichlet(phi)."""

    kind: str
    p: float = None
    phi: WeightFn = None

    def __post_init__(self):
        if self.kind == "mean_distortion":
            if self.p is None or self.p <= 1:
                raise OptimizeError("mean_distortion needs p > 1")
        elif self.kind == "inverse_energy":
            if self.p is None or self.p < 1:
                raise OptimizeError("inverse_energy needs p >= 1")
        elif self.kind == "weighted_dirichlet":
            self.phi = as_weight(self.phi if self.phi is not None else 1.0)
        else:
            raise OptimizeError(f"unknown functional kind {self.kind!r}")


@dataclass
class SolveOptions:
    tol_grad: float = None          # default rule: 1e-8 * energy / diameter
    max_iter: int = 50_000
    seed: int = 0
    mesh_edge: float = None         # target mesh edge for inverse problems
    init_resamples: int = 50
    area_keep: float = 0.1
    step_back: float = 0.9
    armijo: float = 1e-4
    record_every: int = 1


@dataclass
class Problem:
    source: TriangleMesh
    target: Domain
    boundary: BoundaryMap
    functional: Functional
    options: SolveOptions = field(default_factory=SolveOptions)


@dataclass
class SolveReport:
    map: DiscreteMap
    energy_trace: list
    grad_norm: float
    hopf_residual: float
    min_J: float
    iterations: int
    converged: bool
    variable: str = "direct"        # "inverse" when solved in the inverse map
    energy: float = np.nan
    # multi-start agreement is evidence about the discrete problem only,
    # not a proof about the continuum minimizer
    note: str = "multi-start agreement is numerical evidence, not proof"


# ---------------------------------------------------------------------------
# assembly helpers
# ---------------------------------------------------------------------------

class _Objective:
    """Discrete energy and gradient on a fixed mesh with fixed boundary."""

    def __init__(self, mesh, functional):
        self.mesh = mesh
        self.tris = mesh.triangles
        self.areas = mesh.areas
        self.A, self.B = kernels.deriv_coeffs(self.tris, mesh.vertices_z)
        self.functional = functional
        self.free = ~mesh.boundary_mask
        if functional.kind == "weighted_dirichlet":
            self.kind = kernels.KIND_DIRICHLET
            self.p = 0.0
            self.phi = functional.phi
            if not self.phi.is_smooth:
                raise OptimizeError(
                    "descent needs a constant or differentiable weight")
        else:
            self.kind = kernels.KIND_DISTORTION
            self.p = float(functional.p)
            self.phi = None

    def _phi_arrays(self, w):
        if self.kind == kernels.KIND_DISTORTION:
            dummy = np.empty(0)
            return dummy, np.empty(0, dtype=complex)
        cent = as_xy(np.mean(w[self.tris], axis=1))
        vals = self.phi(cent)
        if np.any(vals <= 0):
            raise OptimizeError("weight became nonpositive at an image centroid")
        g = self.phi.gradient(cent)
        return vals, g[:, 0] + 1j * g[:, 1]

    def __call__(self, w, compute_grad=True):
        phi, dphi = self._phi_arrays(w)
        E, grad, min_J = kernels.energy_grad(
            self.tris, self.A, self.B, self.areas, w, self.kind, self.p,
            phi, dphi, compute_grad)
        if compute_grad:
            grad[~self.free] = 0.0
        return E, grad, min_J


def energy_and_grad(mesh, targets, functional):
    """Objective value and interior gradient; used by the descent loop and
    by finite-difference checks."""
    obj = _Objective(mesh, functional)
    w = as_complex(np.asarray(targets, dtype=float))
    return obj(w)


# ---------------------------------------------------------------------------
# harmonic extension
# ---------------------------------------------------------------------------

def _cotangent_matrix(mesh):
    v = mesh.vertices
    t = mesh.triangles
    rows, cols, vals = [], [], []
    for k in range(3):
        i = t[:, k]
        j = t[:, (k + 1) % 3]
        o = t[:, (k + 2) % 3]
        u1 = v[i] - v[o]
        u2 = v[j] - v[o]
        cross = u1[:, 0] * u2[:, 1] - u1[:, 1] * u2[:, 0]
        dot = np.einsum("ij,ij->i", u1, u2)
        cot = dot / cross
        w = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = mesh.n_vertices
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def harmonic_extension(mesh, boundary, target) -> DiscreteMap:
    """Cotangent-weight harmonic extension of the boundary data.

    Solves the discrete Laplace equation per coordinate with Dirichlet
    values from the boundary map; no injectivity is guaranteed (and for
    nonconvex targets it genuinely fails).
    """
    if isinstance(boundary, BoundaryMap):
        bvals = boundary_targets(mesh, boundary, target)
    else:
        bvals = np.asarray(boundary, dtype=float)
    return harmonic_extension_values(mesh, bvals)


def harmonic_extension_values(mesh, bvals) -> DiscreteMap:
    loop = mesh.boundary_loop
    L = _cotangent_matrix(mesh)
    free = mesh.interior_vertices
    targets = np.zeros((mesh.n_vertices, 2))
    targets[loop] = bvals
    if len(free):
        Lff = L[free][:, free].tocsc()
        Lfb = L[free][:, loop]
        try:
            solve = scipy.sparse.linalg.factorized(Lff)
        except RuntimeError as exc:
            raise OptimizeError(f"singular harmonic system: {exc}") from exc
        for c in range(2):
            targets[free, c] = solve(-Lfb @ bvals[:, c])
    return DiscreteMap(mesh, targets)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _min_image_jacobian(mesh, targets):
    from .geometry import triangle_areas
    img = triangle_areas(targets, mesh.triangles)
    return float(np.min(img / mesh.areas))


def _bump_field(mesh, rng, scale):
    v = mesh.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    diam = float(np.linalg.norm(hi - lo))
    d = np.zeros(mesh.n_vertices, dtype=complex)
    for _ in range(3):
        q = lo + rng.uniform(0.15, 0.85, size=2) * (hi - lo)
        sig = rng.uniform(0.2, 0.45) * diam
        c = scale * diam * (rng.normal() + 1j * rng.normal())
        r2 = np.sum((v - q) ** 2, axis=1)
        d += c * np.exp(-r2 / sig ** 2)
    d[mesh.boundary_mask] = 0.0
    return d


def random_injective_init(mesh, bvals, seed, resamples=50, scale=0.1):
    """Convex-combination homotopy from the harmonic extension toward a
    random interior displacement, backtracked until injective."""
    harm = harmonic_extension_values(mesh, bvals)
    rng = np.random.default_rng(seed)
    base = harm.targets_z
    if _min_image_jacobian(mesh, harm.targets) > 0:
        fallback = harm.targets
    else:
        fallback = None
    for _ in range(resamples):
        d = _bump_field(mesh, rng, scale)
        t = 1.0
        for _ in range(40):
            w = base + t * d
            if _min_image_jacobian(mesh, as_xy(w)) > 0:
                return DiscreteMap(mesh, as_xy(w))
            t *= 0.6
    if fallback is not None:
        return DiscreteMap(mesh, fallback)
    raise OptimizeError(
        f"no injective initialization found after {resamples} resamples")


# ---------------------------------------------------------------------------
# descent
# ---------------------------------------------------------------------------

def _descend(mesh, bvals, functional, options, init_targets):
    obj = _Objective(mesh, functional)
    w = as_complex(np.asarray(init_targets, dtype=float)).copy()
    w[mesh.boundary_loop] = as_complex(bvals)

    diam = float(np.linalg.norm(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)))
    E, grad, min_J = obj(w)
    if not np.isfinite(E):
        raise OptimizeError("initial map is not orientation-preserving")
    trace = [(0, E)]
    alpha = 1.0
    w_prev = None
    g_prev = None
    converged = False
    it = 0
    gnorm = float(np.linalg.norm(grad))
    for it in range(1, options.max_iter + 1):
        tol = options.tol_grad
        if tol is None:
            tol = 1e-8 * max(abs(E), 1e-30) / diam
        if gnorm <= tol:
            converged = True
            break
        d = -grad
        cap = kernels.flip_cap(mesh.triangles, w, d, options.area_keep)
        # spectral (Barzilai-Borwein) trial step, safeguarded by the cap
        trial = alpha * 1.3
        if w_prev is not None:
            dx = w - w_prev
            dg = grad - g_prev
            num = float(np.vdot(dx, dx).real)
            den = float(np.vdot(dx, dg).real)
            if den > 0 and np.isfinite(den):
                trial = num / den
        alpha = min(trial, options.step_back * cap)
        g2 = gnorm * gnorm
        # decreases below the fp resolution of E cannot be verified; such
        # steps are accepted as-is (they are microscopic and flip-capped)
        floor = 64.0 * np.finfo(float).eps * max(abs(E), 1e-30)
        accepted = False
        for _ in range(80):
            w_try = w + alpha * d
            E_try, _, _ = obj(w_try, compute_grad=False)
            if np.isfinite(E_try) and E_try <= E - options.armijo * alpha * g2:
                accepted = True
                break
            if alpha * g2 <= floor and np.isfinite(E_try) and E_try <= E + floor:
                accepted = True
                break
            # quadratic interpolation of the 1d slice, clamped halving
            if np.isfinite(E_try):
                denom = 2.0 * (E_try - E + alpha * g2)
                if denom > 0:
                    alpha = max(0.1 * alpha,
                                min(0.5 * alpha, alpha * alpha * g2 / denom))
                else:
                    alpha *= 0.5
            else:
                alpha *= 0.5
        if not accepted:
            break
        w_prev, g_prev = w, grad
        w = w_try
        E_new, grad, min_J = obj(w)
        gnorm = float(np.linalg.norm(grad))
        if E_new < trace[-1][1] and it % options.record_every == 0:
            trace.append((it, E_new))
        E = E_new
    if trace[-1][0] != it and E < trace[-1][1]:
        trace.append((it, E))
    return w, E, gnorm, min_J, it, converged, trace


def _hopf_residual_of(dmap, functional):
    try:
        if functional.kind == "weighted_dirichlet":
            fld = hopf_differential(dmap, functional.phi)
        else:
            d = derivatives(dmap)
            phi = d.K ** (functional.p - 1.0) * d.fz * np.conj(d.fzb)
            from .hopf import HopfField
            fld = HopfField(phi=phi, weights=d.K ** (functional.p - 1.0),
                            deriv=d, mesh=dmap.reference)
        # area-weighted aggregate: stable under refinement, unlike the max
        return holomorphy_residual(fld).mean_rel
    except Exception:
        return np.nan


def minimize(problem: Problem, init=None) -> SolveReport:
    """Minimize the problem's functional over maps with its boundary data.

    ``init`` can be a DiscreteMap on the working mesh; otherwise a seeded
    random injective start is generated.  Distortion problems
    (``mean_distortion``) are solved in the inverse variable: the working
    mesh triangulates the target domain, the boundary table is inverted,
    and the reported map sends the target region onto the source; its
    energy equals the mean distortion of the forward map exactly.
    """
    func = problem.functional
    opts = problem.options
    if func.kind == "mean_distortion":
        edge = opts.mesh_edge
        if edge is None:
            edge = float(np.median(problem.source.edge_lengths))
        mesh = triangulate(problem.target, edge)
        from .geometry import _is_convex
        src_verts = problem.source.vertices[problem.source.boundary_loop]
        src_poly = Domain("polygon", src_verts, convex=_is_convex(src_verts))
        bmap = problem.boundary.inverted(src_poly, problem.target)
        bvals = boundary_targets(mesh, bmap, src_poly)
        work = Functional("inverse_energy", p=func.p)
        variable = "inverse"
    else:
        mesh = problem.source
        bvals = boundary_targets(mesh, problem.boundary, problem.target)
        work = func
        variable = "direct"

    if init is None:
        start = random_injective_init(mesh, bvals, opts.seed,
                                      resamples=opts.init_resamples)
        init_targets = start.targets
    else:
        if init.reference is not mesh and init.reference.n_vertices != mesh.n_vertices:
            raise OptimizeError("init map does not live on the working mesh")
        init_targets = init.targets

    w, E, gnorm, min_J, it, converged, trace = _descend(
        mesh, bvals, work, opts, init_targets)
    dmap = DiscreteMap(mesh, as_xy(w))
    return SolveReport(map=dmap, energy_trace=trace, grad_norm=gnorm,
                       hopf_residual=_hopf_residual_of(dmap, work),
                       min_J=min_J, iterations=it, converged=converged,
                       variable=variable, energy=E)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class UniquenessReport:
    reports: list
    pairwise_linf: np.ndarray
    max_pairwise: float
    conclusive: bool


def uniqueness_experiment(problem: Problem, n_starts, seed=0) -> UniquenessReport:
    """Run the solver from independent injective starts and compare maps."""
    if n_starts < 2:
        raise OptimizeError("need at least two starts")
    reports = []
    for k in range(n_starts):
        opts = SolveOptions(**{**problem.options.__dict__,
                               "seed": seed + 1000 * k})
        prob = Problem(problem.source, problem.target, problem.boundary,
                       problem.functional, opts)
        reports.append(minimize(prob))
    n = len(reports)
    pair = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = np.linalg.norm(reports[i].map.targets - reports[j].map.targets,
                               axis=1).max()
            pair[i, j] = pair[j, i] = d
    return UniquenessReport(reports=reports, pairwise_linf=pair,
                            max_pairwise=float(pair.max()),
                            conclusive=all(r.converged for r in reports))


@dataclass
class EquivalenceReport:
    is_min_cert: bool
    hopf_residual: float
    competitor_gaps: np.ndarray
    energy: float


def equivalence_check(h: DiscreteMap, phi, competitors=20, seed=0,
                      include_descent_competitor=True) -> EquivalenceReport:
    """Certificate linking small Hopf residual and minimality.

    Compares the weighted Dirichlet energy of ``h`` against random
    same-boundary injective perturbations (plus one explicit descent-step
    competitor); records the loop residual of the Hopf field.
    """
    from .energy import weighted_dirichlet
    phi = as_weight(phi)
    mesh = h.reference
    base_E = weighted_dirichlet(h, phi).total
    res = holomorphy_residual(hopf_differential(h, phi)).max_rel
    rng = np.random.default_rng(seed)
    gaps = []
    tries = 0
    while len(gaps) < competitors and tries < 50 * competitors:
        tries += 1
        d = _bump_field(mesh, rng, scale=0.05)
        t = 1.0
        ok = False
        for _ in range(30):
            w = h.targets_z + t * d
            if _min_image_jacobian(mesh, as_xy(w)) > 0:
                ok = True
                break
            t *= 0.5
        if not ok:
            continue
        cand = DiscreteMap(mesh, as_xy(w))
        gaps.append(weighted_dirichlet(cand, phi).total - base_E)
    if include_descent_competitor:
        func = Functional("weighted_dirichlet", phi=phi)
        _, grad, _ = energy_and_grad(mesh, h.targets, func)
        d = -grad
        cap = kernels.flip_cap(mesh.triangles, h.targets_z, d, 0.1)
        alpha = min(0.9 * cap, 0.1)
        for _ in range(50):
            w = h.targets_z + alpha * d
            if _min_image_jacobian(mesh, as_xy(w)) > 0:
                E1 = weighted_dirichlet(DiscreteMap(mesh, as_xy(w)), phi).total
                if E1 < base_E or alpha < 1e-12:
                    gaps.append(E1 - base_E)
                    break
            alpha *= 0.5
    gaps = np.array(gaps)
    cert = bool(np.all(gaps >= -1e-9 * max(abs(base_E), 1.0)))
    return EquivalenceReport(is_min_cert=cert, hopf_residual=res,
                             competitor_gaps=gaps, energy=base_E)


# ---------------------------------------------------------------------------
# the nonconvex-target experiment
# ---------------------------------------------------------------------------

def lshape_domain():
    return Domain("polygon",
                  np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0],
                            [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]),
                  convex=False)


def choquet_boundary_map(source: Domain, target: Domain = None, squeeze=0.02):
    """Boundary map that defeats harmonic extension on the L-shaped target.

    The two target edges meeting at the reentrant corner receive only a
    tiny source arc (fraction ``squeeze`` of the circle), so the harmonic
    average of nearby boundary values crosses the notch.
    """
    if target is None:
        target = lshape_domain()
    tv = target.vertices
    from .geometry import _cumulative_fractions
    t_corners = _cumulative_fractions(tv)[:-1]
    arcs = np.diff(np.concatenate([t_corners, [1.0]]))
    # edges 2 and 3 meet at the reentrant corner; give them a tiny source
    # arc and spread the rest proportionally
    s_arcs = arcs.copy()
    s_arcs[2] = s_arcs[3] = squeeze / 2.0
    rest = np.ones(len(arcs), dtype=bool)
    rest[2] = rest[3] = False
    s_arcs[rest] = arcs[rest] / arcs[rest].sum() * (1.0 - squeeze)
    s_corners = np.concatenate([[0.0], np.cumsum(s_arcs)[:-1]])
    return BoundaryMap(s_corners, tv.copy())


@dataclass
class ChoquetReport:
    harmonic: DiscreteMap
    outside_ids: np.ndarray
    max_outside_margin: float
    minimizer: SolveReport


def choquet_experiment(mesh_edge=0.12, p=2.0, seed=0,
                       squeeze=0.02) -> ChoquetReport:
    """Harmonic extension escapes the L-shaped target; the distortion
    minimizer at the same data stays injective."""
    disk = Domain("disk-polygon",
                  np.stack([np.cos(2 * np.pi * np.arange(64) / 64),
                            np.sin(2 * np.pi * np.arange(64) / 64)], axis=1),
                  convex=True)
    target = lshape_domain()
    bmap = choquet_boundary_map(disk, target, squeeze=squeeze)
    mesh = triangulate(disk, mesh_edge)
    harm = harmonic_extension(mesh, bmap, target)

    interior = mesh.interior_vertices
    pts = harm.targets[interior]
    inside = points_in_polygon(pts, target.vertices)
    margins = distance_to_polygon(pts[~inside], target.vertices)
    outside_ids = interior[~inside]

    prob = Problem(mesh, target, bmap,
                   Functional("mean_distortion", p=p),
                   SolveOptions(seed=seed, mesh_edge=mesh_edge))
    rep = minimize(prob)
    return ChoquetReport(harmonic=harm, outside_ids=outside_ids,
                         max_outside_margin=float(margins.max()) if len(margins) else 0.0,
                         minimizer=rep)
