"""Newton continuation of near-round solutions written as radial graphs.

A candidate surface is represented as a graph over the radius-2 round
sphere: each base vertex moves by a scalar field u along its outward
radial direction.  The nonlinear residual is the shape-equation residual
of the deformed mesh, evaluated through the same discrete-curvature
pipeline the rest of the package uses, so a converged graph is exactly a
mesh that the verifiers accept.

The Jacobian is assembled by forward finite differences of the residual,
one column per base vertex.  Because the residual at a vertex only sees
positions in its two-ring, columns at graph distance five or more are
independent; a greedy distance-five coloring groups them so the whole
matrix costs ~40 residual evaluations instead of one per vertex.  The
grouped differences are exactly the plain column-by-column ones (each
row is attributed to its unique in-range column), so the coloring is a
speedup, not an approximation.

Newton iteration is damped only by divergence guards (iteration cap and
a residual-growth cutoff); near the round family it converges
quadratically and the observed quadratic constants are reported from the
pre-roundoff pairs of the residual history.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .mesh import TriMesh, icosphere, sphere_radius
from .curvature import curvature, lambda_residual, two_ring
from .gaussian import stability_operator, spectral_gap

__all__ = [
    "ContinuationError", "GraphOverSphere", "NewtonResult", "BranchSample",
    "Branch", "base_sphere", "graph_mesh", "graph_residual", "jacobian",
    "newton_solve", "quadratic_constant", "continue_branch",
    "linearization_check", "rigidity_experiment",
]

BASE_RADIUS = 2.0
#: largest base-vertex count for which the dense Jacobian path is allowed
DENSE_LIMIT = 700
#: minimal spectral gap of the base stability operator accepted by Newton
GAP_FLOOR = 0.2
#: sup-norm distance to the constant round field that still counts as round
ROUND_TOL = 1e-5
#: forward-difference step factor (scaled by 1 + |u| per column)
FD_SCALE = 1e-6
#: residual sup-norms below this are treated as roundoff when estimating
#: the quadratic convergence constant (the residual evaluation itself
#: floors near 1e-12; pairs landing within a few decades of that measure
#: noise amplified by the squared denominator)
ROUNDOFF_FLOOR = 1e-9
_QUADRATIC_ENTRY = 1e-2
_GROWTH_FACTOR = 10.0


class ContinuationError(RuntimeError):
    """Newton or branch continuation failed; carries partial history."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


# -- base-mesh context -----------------------------------------------------

class _BaseContext:
    """Connectivity-derived data shared by every graph over one base mesh."""

    def __init__(self, mesh):
        v = mesh.vertices
        self.mesh = mesh
        self.unit = v / np.linalg.norm(v, axis=1, keepdims=True)
        self.rings = two_ring(mesh)
        self.groups = None
        self.gap = None

    def coloring(self):
        if self.groups is None:
            self.groups = _distance5_groups(self.mesh)
        return self.groups

    def spectral_gap(self):
        if self.gap is None:
            self.gap, _ = spectral_gap(stability_operator(self.mesh))
        return self.gap


_CONTEXTS = {}
_BASES = {}


def base_sphere(level=3):
    """The canonical radius-2 icosphere base at a refinement level."""
    mesh = _BASES.get(level)
    if mesh is None:
        mesh = _BASES[level] = icosphere(BASE_RADIUS, level)
    return mesh


def _context(mesh):
    key = mesh.content_hash()
    ctx = _CONTEXTS.get(key)
    if ctx is None:
        ctx = _CONTEXTS[key] = _BaseContext(mesh)
    return ctx


def _distance5_groups(mesh):
    """Vertex groups whose pairwise graph distance is at least five.

    Conflict graph = fourth power of (adjacency + identity); greedy
    coloring in vertex order.  Deterministic for a fixed mesh.
    """
    f = mesh.faces
    nv = mesh.n_vertices
    rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2], f[:, 1], f[:, 2], f[:, 0]])
    cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0], f[:, 0], f[:, 1], f[:, 2]])
    a1 = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nv, nv))
    a1 = (a1 + sparse.eye(nv)).astype(bool)
    a2 = a1 @ a1
    conflict = (a2 @ a2).tocsr()
    colors = np.full(nv, -1, dtype=np.int64)
    for i in range(nv):
        used = set(colors[conflict.indices[conflict.indptr[i]:conflict.indptr[i + 1]]])
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    return [np.flatnonzero(colors == c) for c in range(int(colors.max()) + 1)]


# -- graphs ----------------------------------------------------------------

@dataclass(frozen=True)
class GraphOverSphere:
    """A radial graph u over the radius-2 sphere at parameter lam.

    The admissible band is |u| < 2 pointwise (the graph must not reach
    the origin or double the radius); construction enforces it along
    with the base actually being a closed radius-2 sphere mesh.
    """
    base: TriMesh
    u: np.ndarray
    lam: float

    def __post_init__(self):
        u = np.ascontiguousarray(np.asarray(self.u, dtype=np.float64))
        if u.shape != (self.base.n_vertices,):
            raise ContinuationError(
                f"field shape {u.shape} does not match base "
                f"({self.base.n_vertices} vertices)")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "lam", float(self.lam))
        if not self.base.is_closed:
            raise ContinuationError("graph base must be a closed mesh")
        radii = np.linalg.norm(self.base.vertices, axis=1)
        if np.abs(radii - BASE_RADIUS).max() > 1e-8:
            raise ContinuationError("graph base must be a radius-2 sphere")
        if not np.all(np.isfinite(u)):
            raise ContinuationError("graph field contains non-finite values")
        if np.abs(u).max() >= BASE_RADIUS:
            raise ContinuationError(
                "graph field leaves the admissible band |u| < 2")

    @property
    def n_vertices(self):
        return self.base.n_vertices


def graph_mesh(g):
    """The deformed mesh of a radial graph (base connectivity kept)."""
    ctx = _context(g.base)
    pos = g.base.vertices + g.u[:, None] * ctx.unit
    return TriMesh(pos, g.base.faces, validate=False)


def _residual_field(ctx, u, lam):
    pos = ctx.mesh.vertices + u[:, None] * ctx.unit
    m = TriMesh(pos, ctx.mesh.faces, validate=False)
    return lambda_residual(m, lam, curv=curvature(m, rings=ctx.rings))


def graph_residual(g):
    """Shape-equation residual of the deformed mesh, per base vertex.

    Identical (to the float) with evaluating the pointwise residual on
    graph_mesh(g); the shared connectivity is just not re-derived.
    """
    return _residual_field(_context(g.base), g.u, g.lam)


def jacobian(g, r0=None):
    """Dense forward-difference Jacobian of graph_residual in u.

    Column step 1e-6 * (1 + |u_j|); columns are evaluated in
    distance-five groups, which reproduces the one-column-at-a-time
    differences exactly.  Restricted to bases small enough for dense
    linear algebra.
    """
    ctx = _context(g.base)
    nv = g.n_vertices
    if nv > DENSE_LIMIT:
        raise ContinuationError(
            f"dense Jacobian restricted to bases with <= {DENSE_LIMIT} "
            f"vertices (got {nv}); use a coarser base")
    if r0 is None:
        r0 = _residual_field(ctx, g.u, g.lam)
    eps = FD_SCALE * (1.0 + np.abs(g.u))
    rings = ctx.rings
    J = np.zeros((nv, nv))
    for grp in ctx.coloring():
        up = g.u.copy()
        up[grp] += eps[grp]
        dr = _residual_field(ctx, up, g.lam) - r0
        owner = np.full(nv, -1, dtype=np.int64)
        for j in grp:
            owner[j] = j
            owner[rings[j]] = j
        touched = np.flatnonzero(owner >= 0)
        J[touched, owner[touched]] = dr[touched] / eps[owner[touched]]
    return J


# -- Newton ----------------------------------------------------------------

@dataclass(frozen=True)
class NewtonResult:
    """A converged Newton solve with its residual-sup history."""
    graph: GraphOverSphere
    residuals: list
    converged: bool

    @property
    def iterations(self):
        return len(self.residuals) - 1

    @property
    def final_residual(self):
        return self.residuals[-1]


def quadratic_constant(residuals, floor=ROUNDOFF_FLOOR):
    """Largest r_{k+1} / r_k^2 over the quadratic-regime pairs.

    Pairs are counted once the residual is below the quadratic-entry
    scale and ignored once the next residual sits at the roundoff floor
    (there the ratio measures noise, not convergence).  None when no
    pair qualifies.
    """
    ratios = [b / a ** 2 for a, b in zip(residuals, residuals[1:])
              if 0.0 < a < _QUADRATIC_ENTRY and b > floor]
    return max(ratios) if ratios else None


def newton_solve(g0, tol=1e-10, max_iterations=25):
    """Newton's method on graph_residual from the starting graph g0.

    Preconditions checked: the base stability operator has a spectral
    gap (the linearization about the round solution is invertible) and
    the base is small enough for the dense Jacobian.  Divergence -- the
    iteration cap, residual growth past 10x the best seen, a singular
    Jacobian, or the iterate leaving the graph band -- raises
    ContinuationError with the residual history attached.
    """
    ctx = _context(g0.base)
    if g0.n_vertices > DENSE_LIMIT:
        raise ContinuationError(
            f"dense Jacobian restricted to bases with <= {DENSE_LIMIT} "
            f"vertices (got {g0.n_vertices}); use a coarser base")
    gap = ctx.spectral_gap()
    if gap < GAP_FLOOR:
        raise ContinuationError(
            f"base stability operator gap {gap:.3g} below {GAP_FLOOR}; "
            "linearization not safely invertible")
    u = g0.u.copy()
    lam = g0.lam
    history = []
    best = math.inf
    for _ in range(max_iterations + 1):
        r = _residual_field(ctx, u, lam)
        rn = float(np.abs(r).max())
        history.append(rn)
        if rn <= tol:
            return NewtonResult(GraphOverSphere(g0.base, u, lam), history, True)
        if rn > _GROWTH_FACTOR * best:
            raise ContinuationError(
                f"Newton diverged: residual grew to {rn:.3g} "
                f"(best {best:.3g})", history)
        best = min(best, rn)
        if len(history) > max_iterations:
            break
        g_it = GraphOverSphere(g0.base, u, lam)
        try:
            step = np.linalg.solve(jacobian(g_it, r), -r)
        except np.linalg.LinAlgError as exc:
            raise ContinuationError(f"singular Jacobian: {exc}", history) from exc
        u = u + step
        if not np.all(np.isfinite(u)) or np.abs(u).max() >= BASE_RADIUS:
            raise ContinuationError(
                "Newton iterate left the admissible band |u| < 2", history)
    raise ContinuationError(
        f"no convergence to {tol:g} in {max_iterations} iterations "
        f"(last residual {history[-1]:.3g})", history)


# -- branch continuation ---------------------------------------------------

@dataclass(frozen=True)
class BranchSample:
    lam: float
    u: np.ndarray
    iterations: int
    residual: float

    def stats(self):
        return {"min": float(self.u.min()), "max": float(self.u.max()),
                "mean": float(self.u.mean())}

    def record(self):
        return {"lambda": self.lam, "u_stats": self.stats(),
                "iterations": self.iterations, "residual": self.residual}


@dataclass
class Branch:
    """Solutions along a parameter interval, ascending in the parameter."""
    samples: list
    step: float
    base: TriMesh
    diagnostic: dict = None
    quadratic: float = None

    @property
    def lambdas(self):
        return np.array([s.lam for s in self.samples])

    def sample_at(self, lam):
        for s in self.samples:
            if abs(s.lam - lam) <= 1e-12:
                return s
        raise KeyError(f"no branch sample at {lam}")

    def json_lines(self):
        """One JSON object per sample: lambda, u_stats, iterations, residual."""
        return [json.dumps(s.record()) for s in self.samples]

    def write_fields_csv(self, path):
        """Long-format per-vertex fields: lambda, vertex, u."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("lambda,vertex,u\n")
            for s in self.samples:
                lam = repr(s.lam)
                fh.writelines(f"{lam},{i},{x!r}\n"
                              for i, x in enumerate(s.u.tolist()))


def _march(base, lam_values, u_seed, tol):
    """Solve along lam_values seeding each solve from the previous u.

    Returns (samples, diagnostic, quadratic); stops at the first failure
    and reports it instead of raising.
    """
    samples = []
    diag = None
    quad = None
    u = u_seed
    for lam in lam_values:
        try:
            res = newton_solve(GraphOverSphere(base, u, lam), tol=tol)
        except ContinuationError as exc:
            diag = {"lambda": float(lam), "reason": str(exc),
                    "residuals": exc.residuals}
            break
        u = res.graph.u
        samples.append(BranchSample(float(lam), u, res.iterations,
                                    res.final_residual))
        qc = quadratic_constant(res.residuals)
        if qc is not None:
            quad = max(quad, qc) if quad is not None else qc
    return samples, diag, quad


def continue_branch(lam_range=(-0.3, 0.5), step=0.05, tol=1e-10, level=3,
                    base=None):
    """Continue the round branch across lam_range, marching out from 0.

    The range must contain 0; the first solve starts from the undeformed
    base and each later one is seeded with its neighbor's field
    (zeroth-order predictor).  On a failure the branch is truncated at
    the last converged sample and the failure recorded in .diagnostic.
    """
    lo, hi = float(lam_range[0]), float(lam_range[1])
    if not lo <= 0.0 <= hi:
        raise ContinuationError("continuation range must contain 0")
    if step <= 0.0:
        raise ContinuationError("continuation step must be positive")
    if base is None:
        base = base_sphere(level)
    n_up = int(math.floor(hi / step + 1e-9))
    n_down = int(math.floor(-lo / step + 1e-9))

    first, diag, quad = _march(base, [0.0], np.zeros(base.n_vertices), tol)
    if not first:
        return Branch([], step, base, diagnostic=diag, quadratic=quad)
    origin = first[0]

    up_lams = [k * step for k in range(1, n_up + 1)]
    up, diag_up, quad_up = _march(base, up_lams, origin.u, tol)
    down_lams = [-k * step for k in range(1, n_down + 1)]
    down, diag_down, quad_down = _march(base, down_lams, origin.u, tol)

    samples = list(reversed(down)) + [origin] + up
    diagnostic = diag_up or diag_down
    for q in (quad_up, quad_down):
        if q is not None:
            quad = max(quad, q) if quad is not None else q
    return Branch(samples, step, base, diagnostic=diagnostic, quadratic=quad)


# -- linearized family motion ----------------------------------------------

def linearization_check(lam1, lam2, level=4):
    """Defect of the constant field (r2 - r1) against the linearized flow.

    On the radius-r1 sphere the stability operator applied to the
    constant radial displacement between neighboring round solutions
    should balance the parameter change: L(r2 - r1) + (lam2 - lam1) -> 0
    quadratically in |lam2 - lam1|.  Returns the measured defect norms
    together with the inputs; callers compare runs at halved gaps.
    """
    r1 = sphere_radius(lam1)
    r2 = sphere_radius(lam2)
    phi_value = r2 - r1
    if abs(phi_value) * math.sqrt(2.0) / r1 >= 1.0:
        raise ContinuationError(
            "parameter gap too large for the graph linearization "
            f"(|r2-r1| = {abs(phi_value):.3g} on radius {r1:.3g})")
    mesh = icosphere(r1, level)
    op = stability_operator(mesh)
    phi = np.full(mesh.n_vertices, phi_value)
    defect = op.apply(phi) + (lam2 - lam1)
    total_mass = float(op.mass.sum())
    rms = math.sqrt(max(float(np.sum(op.mass * defect * defect)), 0.0)
                    / total_mass)
    sup = float(np.abs(defect).max())
    delta = lam2 - lam1
    return {
        "lambda_1": float(lam1), "lambda_2": float(lam2),
        "radius_1": r1, "radius_2": r2, "phi": float(phi_value),
        "delta_lambda": float(delta), "level": int(level),
        "defect_rms": rms, "defect_sup": sup,
        "relative_defect": rms / abs(delta) if delta != 0.0 else 0.0,
    }


# -- rigidity probes -------------------------------------------------------

def _round_field(base, lam):
    return np.full(base.n_vertices, sphere_radius(lam) - BASE_RADIUS)


def rigidity_experiment(lam_values=None, amplitudes=(0.05,), level=3,
                        seed=2024, tol=1e-10, jobs=1, base=None):
    """Perturb the round solution and classify where Newton lands.

    For every (lam, amplitude) cell a seeded random field of the given
    sup-norm amplitude is added to the solved round graph and Newton is
    restarted.  Outcomes: "round" (back within ROUND_TOL of the round
    field), "elsewhere" (converged to something else), "diverged".  Cell
    seeds are spawned from `seed` by cell index, so results do not
    depend on `jobs`.
    """
    if lam_values is None:
        lam_values = [round(-0.3 + 0.05 * k, 10) for k in range(17)]
    lam_values = [float(l) for l in lam_values]
    amplitudes = [float(a) for a in amplitudes]
    if base is None:
        base = base_sphere(level)
    cells = [(lam, amp) for lam in lam_values for amp in amplitudes]
    children = np.random.SeedSequence(seed).spawn(len(cells))

    def run_lambda(lam):
        out = []
        try:
            round_res = newton_solve(GraphOverSphere(
                base, _round_field(base, lam), lam), tol=tol)
        except ContinuationError as exc:
            for idx, (clam, amp) in enumerate(cells):
                if clam == lam:
                    out.append((idx, {"lambda": lam, "amplitude": amp,
                                      "outcome": "diverged",
                                      "sup_deviation": math.inf,
                                      "iterations": len(exc.residuals) - 1}))
            return out
        u_round = round_res.graph.u
        for idx, (clam, amp) in enumerate(cells):
            if clam != lam:
                continue
            rng = np.random.default_rng(children[idx])
            noise = rng.standard_normal(base.n_vertices)
            pert = amp * noise / np.abs(noise).max()
            try:
                res = newton_solve(GraphOverSphere(
                    base, u_round + pert, lam), tol=tol)
            except ContinuationError as exc:
                out.append((idx, {"lambda": lam, "amplitude": amp,
                                  "outcome": "diverged",
                                  "sup_deviation": math.inf,
                                  "iterations": len(exc.residuals) - 1}))
                continue
            dev = float(np.abs(res.graph.u - u_round).max())
            outcome = "round" if dev <= ROUND_TOL else "elsewhere"
            out.append((idx, {"lambda": lam, "amplitude": amp,
                              "outcome": outcome, "sup_deviation": dev,
                              "iterations": res.iterations}))
        return out

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(run_lambda, lam_values))
    else:
        chunks = [run_lambda(lam) for lam in lam_values]
    indexed = [item for chunk in chunks for item in chunk]
    indexed.sort(key=lambda t: t[0])
    records = [rec for _, rec in indexed]
    return {
        "level": int(level), "seed": int(seed), "round_tolerance": ROUND_TOL,
        "cells": records,
        "all_round": all(r["outcome"] == "round" for r in records),
    }
