"""Triangle meshes and the primitive shapes the rest of the suite consumes.

Meshes are immutable after construction (vertex and face arrays are set
read-only) so that operators downstream can cache against the content hash.
Closed meshes are validated for consistent orientation, non-degenerate
faces and an even Euler characteristic; bordered primitives (disk,
cylinder band, ball patches) carry a per-vertex boundary flag instead.
"""

import hashlib
from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    """Raised for invalid mesh construction or mesh-topology queries."""


class TriMesh:
    """An oriented triangle mesh: float vertices (n, 3), int faces (m, 3)."""

    def __init__(self, vertices, faces, validate=True):
        v = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(faces, dtype=np.int64))
        if v.size == 0:
            v = v.reshape(0, 3)
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("faces must be an (m, 3) array")
        self.vertices = v
        self.faces = f
        self._edge_cache = None
        self._hash = None
        if validate and len(f):
            self._validate()
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)

    # -- basic queries ----------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def _directed_edges(self):
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def _edge_data(self):
        """Undirected edge array plus per-edge incidence count (1=boundary)."""
        if self._edge_cache is None:
            de = self._directed_edges()
            und = np.sort(de, axis=1)
            edges, counts = np.unique(und, axis=0, return_counts=True)
            self._edge_cache = (edges, counts)
        return self._edge_cache

    @property
    def edges(self):
        return self._edge_data()[0]

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def boundary_edges(self):
        edges, counts = self._edge_data()
        return edges[counts == 1]

    @property
    def boundary_vertex_mask(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        be = self.boundary_edges
        if len(be):
            mask[be.ravel()] = True
        return mask

    @property
    def is_closed(self):
        return len(self.boundary_edges) == 0

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def face_areas(self):
        fv = self.vertices[self.faces]
        n = np.cross(fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0])
        return 0.5 * np.linalg.norm(n, axis=1)

    def content_hash(self):
        """Stable hex digest of the vertex/face arrays."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(self.vertices.tobytes())
            h.update(self.faces.tobytes())
            self._hash = h.hexdigest()[:16]
        return self._hash

    # -- validation -------------------------------------------------------

    def _validate(self):
        f, v = self.faces, self.vertices
        if f.min(initial=0) < 0 or (len(f) and f.max() >= len(v)):
            raise MeshError("face index out of range")
        if np.any(f[:, 0] == f[:, 1]) or np.any(f[:, 1] == f[:, 2]) \
                or np.any(f[:, 0] == f[:, 2]):
            raise MeshError("face with repeated vertex")
        de = self._directed_edges()
        uniq = np.unique(de, axis=0)
        if len(uniq) != len(de):
            raise MeshError("inconsistent orientation: repeated directed edge")
        edges, counts = self._edge_data()
        if counts.max(initial=0) > 2:
            raise MeshError("non-manifold edge")
        areas = self.face_areas()
        if len(areas) and areas.min() <= 1e-12 * areas.mean():
            raise MeshError("degenerate face (area below threshold)")
        if self.is_closed and self.euler_characteristic % 2 != 0:
            raise MeshError("closed mesh with odd Euler characteristic")

    def __repr__(self):
        kind = "closed" if self.is_closed else "bordered"
        return (f"TriMesh({self.n_vertices} vertices, {self.n_faces} faces, "
                f"{kind})")


@dataclass
class ShapeSpec:
    """Recipe for a primitive mesh (see build_primitive)."""
    kind: str
    level: int = 3
    radius: float = None
    radii: tuple = None
    center: tuple = (0.0, 0.0, 0.0)
    path: str = None

    KINDS = ("icosphere", "cylinder-band", "torus", "disk", "file")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise MeshError(f"unknown shape kind {self.kind!r}")
        if self.level < 0:
            raise MeshError("refinement level must be >= 0")
        if self.radius is not None and self.radius <= 0:
            raise MeshError("radius must be positive")
        if self.radii is not None and any(r <= 0 for r in self.radii):
            raise MeshError("radii must be positive")


def build_primitive(spec):
    """Construct the mesh described by a ShapeSpec."""
    if spec.kind == "icosphere":
        r = 2.0 if spec.radius is None else spec.radius
        return icosphere(r, spec.level, center=spec.center)
    if spec.kind == "torus":
        R, rho = spec.radii if spec.radii else (2.0, 0.5)
        return torus(R, rho, spec.level)
    if spec.kind == "cylinder-band":
        r = np.sqrt(2.0) if spec.radius is None else spec.radius
        half = 1.0 if not spec.radii else spec.radii[0]
        return cylinder_band(r, half, spec.level)
    if spec.kind == "disk":
        r = 1.0 if spec.radius is None else spec.radius
        return disk(r, spec.level)
    if spec.kind == "file":
        return read_mesh(spec.path)
    raise MeshError(f"unknown shape kind {spec.kind!r}")


# -- sphere family --------------------------------------------------------

def sphere_radius(lam):
    """Radius of the round sphere solving H = <x,n>/2 + lam.

    On a centered sphere of radius r the outward normal gives H = 2/r and
    <x,n> = r, so r solves r**2 + 2*lam*r - 4 = 0; the positive root is
    sqrt(lam**2 + 4) - lam.
    """
    return float(np.sqrt(lam * lam + 4.0) - lam)


def circle_radius(lam):
    """Radius of the closed round solution of the planar analogue.

    For curves the equation reads kappa = <x,n>/2 + lam; on a centered
    circle kappa = 1/r and <x,n> = r, so r**2 + 2*lam*r - 2 = 0 with
    positive root sqrt(lam**2 + 2) - lam.
    """
    return float(np.sqrt(lam * lam + 2.0) - lam)


def icosahedron(radius=1.0):
    """The 12-vertex icosahedron scaled to the given circumradius."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    v *= radius / np.sqrt(1.0 + phi * phi)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v, f


def _subdivide(v, f):
    """One 4:1 loop split with shared-midpoint dedup."""
    cache = {}
    verts = list(v)
    faces = []

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        idx = cache.get(key)
        if idx is None:
            idx = len(verts)
            verts.append(0.5 * (verts[a] + verts[b]))
            cache[key] = idx
        return idx

    for a, b, c in f:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        faces += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    return np.array(verts), np.array(faces, dtype=np.int64)


def icosphere(radius, level, center=None):
    """Subdivided icosahedron projected onto the sphere of given radius.

    Vertex count is 10 * 4**level + 2 and every vertex lies exactly on
    the sphere (projection is applied after each split).
    """
    v, f = icosahedron(1.0)
    for _ in range(level):
        v, f = _subdivide(v, f)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v = v * radius
    if center is not None:
        v = v + np.asarray(center, dtype=np.float64)
    return TriMesh(v, f)


def ellipsoid(semi_axes, level):
    """Icosphere stretched to the given (a, b, c) semi-axes."""
    m = icosphere(1.0, level)
    v = m.vertices * np.asarray(semi_axes, dtype=np.float64)
    return TriMesh(v, m.faces)


# -- revolution-style grids -----------------------------------------------

def _grid_band(ring_points, n_phi, close_phi=True):
    """Triangulate consecutive rings of n_phi samples each.

    ring_points: (n_rings, n_phi, 3).  Faces are wound so that, for rings
    stacked along +z with counterclockwise phi, the triangle normals point
    away from the axis (outward).
    """
    n_rings = len(ring_points)
    idx = np.arange(n_rings * n_phi).reshape(n_rings, n_phi)
    jp = (np.arange(n_phi) + 1) % n_phi if close_phi \
        else np.arange(1, n_phi + 1)
    faces = []
    for i in range(n_rings - 1):
        a, b = idx[i], idx[i + 1]
        an, bn = a[jp], b[jp]
        faces.append(np.stack([a, bn, b], axis=1))
        faces.append(np.stack([a, an, bn], axis=1))
    return np.concatenate(faces)


def torus(major_radius, minor_radius, level):
    """Torus of revolution about the z-axis; closed, genus 1.

    The azimuthal resolution is 12 * 2**level; the tube resolution keeps
    triangle aspect near one.
    """
    if minor_radius >= major_radius:
        raise MeshError("torus needs minor radius < major radius")
    n_major = 12 * 2 ** level
    n_minor = max(6, int(round(n_major * minor_radius / major_radius)))
    u = 2 * np.pi * np.arange(n_major) / n_major
    w = 2 * np.pi * np.arange(n_minor) / n_minor
    ring = np.stack([
        (major_radius + minor_radius * np.cos(w)),
        np.zeros_like(w),
        minor_radius * np.sin(w)], axis=1)
    rings = []
    for phi in u:
        c, s = np.cos(phi), np.sin(phi)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        rings.append(ring @ rot.T)
    pts = np.stack(rings)                       # (n_major, n_minor, 3)
    n = len(pts)
    idx = np.arange(n * n_minor).reshape(n, n_minor)
    jp = (np.arange(n_minor) + 1) % n_minor
    faces = []
    for i in range(n):
        a, b = idx[i], idx[(i + 1) % n]
        an, bn = a[jp], b[jp]
        faces.append(np.stack([a, bn, b], axis=1))
        faces.append(np.stack([a, an, bn], axis=1))
    return TriMesh(pts.reshape(-1, 3), np.concatenate(faces))


def cylinder_band(radius, half_height, level):
    """Open cylinder band around the z-axis (boundary at both rims).

    The default shrinker cylinder has radius sqrt(2).
    """
    n_phi = 16 * 2 ** level
    dz = 2 * np.pi * radius / n_phi          # aspect ~ 1 triangles
    n_z = max(2, int(round(2 * half_height / dz)) + 1)
    z = np.linspace(-half_height, half_height, n_z)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    rings = np.stack([
        np.stack([radius * np.cos(phi), radius * np.sin(phi),
                  np.full_like(phi, zi)], axis=1)
        for zi in z])
    faces = _grid_band(rings, n_phi, close_phi=True)
    return TriMesh(rings.reshape(-1, 3), faces)


def disk(radius, level):
    """Flat triangulated disk in the z = 0 plane (boundary at the rim)."""
    n_rings = 4 * 2 ** level
    verts = [np.zeros(3)]
    rows = [[0]]
    for j in range(1, n_rings + 1):
        r = radius * j / n_rings
        m = 6 * j
        ang = 2 * np.pi * np.arange(m) / m
        row = list(range(len(verts), len(verts) + m))
        verts.extend(np.stack([r * np.cos(ang), r * np.sin(ang),
                               np.zeros(m)], axis=1))
        rows.append(row)
    faces = []
    for j in range(1, n_rings + 1):
        inner, outer = rows[j - 1], rows[j]
        ni, no = len(inner), len(outer)
        if ni == 1:                      # innermost ring: fan on the center
            for b in range(no):
                faces.append([inner[0], outer[b], outer[(b + 1) % no]])
            continue
        # walk both rings in angle order, stitching with the shorter gap
        ai = bi = 0
        while ai < ni or bi < no:
            a_ang = (ai + 0.5) / ni if ai < ni else np.inf
            b_ang = (bi + 0.5) / no if bi < no else np.inf
            if b_ang <= a_ang:
                faces.append([outer[bi % no], outer[(bi + 1) % no],
                              inner[ai % ni]])
                bi += 1
            else:
                faces.append([inner[ai % ni], outer[bi % no],
                              inner[(ai + 1) % ni]])
                ai += 1
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))


def catenoid_band(waist, half_height, level):
    """Catenoid-shaped band rho = waist * cosh(z / waist); open at the rims.

    Not a lambda-surface; used as the thin-neck comparison shape in the
    curvature-concentration checks.
    """
    n_phi = 16 * 2 ** level
    n_z = max(4, n_phi // 2)
    z = np.linspace(-half_height, half_height, n_z)
    rho = waist * np.cosh(z / waist)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    rings = np.stack([
        np.stack([r * np.cos(phi), r * np.sin(phi), np.full_like(phi, zi)],
                 axis=1)
        for zi, r in zip(z, rho)])
    faces = _grid_band(rings, n_phi, close_phi=True)
    return TriMesh(rings.reshape(-1, 3), faces)


def genus2_weld(level=2):
    """Closed genus-2 surface: two tori bridged through removed vertex stars.

    Topology is the point (Euler characteristic -2); the bridge geometry is
    a short triangle band and makes no smoothness claim.
    """
    base = torus(2.0, 0.5, level)
    nv = base.n_vertices
    sep = 6.0          # centers at +-sep/2 along x, tubes facing each other
    va = base.vertices + np.array([-sep / 2, 0.0, 0.0])
    vb = base.vertices + np.array([+sep / 2, 0.0, 0.0])

    ia = int(np.argmax(va[:, 0]))            # facing extremes of the two tubes
    ib = int(np.argmin(vb[:, 0]))

    def star(faces, vid):
        keep = ~np.any(faces == vid, axis=1)
        ring_faces = faces[~keep]
        # boundary loop of the removed star, ordered and oriented as the
        # remaining surface sees it
        succ = {}
        for a, b, c in ring_faces:
            tri = [a, b, c]
            k = tri.index(vid)
            succ[tri[(k + 1) % 3]] = tri[(k + 2) % 3]
        loop = [next(iter(succ))]
        while len(loop) < len(succ):
            loop.append(succ[loop[-1]])
        return faces[keep], loop

    fa, loop_a = star(base.faces, ia)
    fb, loop_b = star(base.faces, ib)
    fb = fb + nv
    loop_b = [i + nv for i in loop_b]

    if len(loop_a) != len(loop_b):
        raise MeshError("weld loops of unequal length")
    k = len(loop_a)
    # Each remaining surface is missing the forward direction of its own
    # link edges, so the band must traverse loop A forward and loop B
    # forward as well; running B's list in reverse order achieves both
    # on an untwisted cylinder.  Align the starting points first.
    verts = np.concatenate([va, vb])
    loop_b = loop_b[::-1]
    d0 = [np.linalg.norm(verts[loop_a[0]] - verts[j]) for j in loop_b]
    roll = int(np.argmin(d0))
    loop_b = loop_b[roll:] + loop_b[:roll]
    bridge = []
    for i in range(k):
        a0, a1 = loop_a[i], loop_a[(i + 1) % k]
        b0, b1 = loop_b[i], loop_b[(i + 1) % k]
        bridge.append([a0, a1, b1])
        bridge.append([a0, b1, b0])
    faces = np.concatenate([fa, fb, np.array(bridge, dtype=np.int64)])
    # drop the two removed hub vertices, compacting indices
    used = np.zeros(2 * nv, dtype=bool)
    used[faces.ravel()] = True
    remap = -np.ones(2 * nv, dtype=np.int64)
    remap[used] = np.arange(used.sum())
    return TriMesh(verts[used], remap[faces])


# -- sub-mesh extraction and topology -------------------------------------

def ball_patch(mesh, center, r):
    """Faces whose three vertices lie in the closed ball B_r(center).

    Returns a bordered TriMesh (possibly empty); the original vertex ids
    survive as the `parent_vertices` attribute.
    """
    if r <= 0:
        raise MeshError("ball radius must be positive")
    c = np.asarray(center, dtype=np.float64)
    inside = np.linalg.norm(mesh.vertices - c, axis=1) <= r
    keep = inside[mesh.faces].all(axis=1)
    faces = mesh.faces[keep]
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[faces.ravel()] = True
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    ids = np.where(used)[0]
    remap[ids] = np.arange(len(ids))
    patch = TriMesh(mesh.vertices[used], remap[faces], validate=False)
    patch.parent_vertices = ids
    return patch


def boundary_loop_count(mesh):
    """Number of boundary components (each a closed edge loop)."""
    be = mesh.boundary_edges
    if not len(be):
        return 0
    parent = {}

    def find(a):
        while parent.get(a, a) != a:
            parent[a] = parent.get(parent[a], parent[a])
            a = parent[a]
        return a

    for a, b in be:
        parent.setdefault(int(a), int(a))
        parent.setdefault(int(b), int(b))
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[ra] = rb
    return len({find(v) for v in parent})


def genus(mesh):
    """Genus of a closed connected oriented mesh, (2 - chi) / 2."""
    if not mesh.is_closed:
        raise MeshError("genus is defined here for closed meshes only")
    if not _is_connected(mesh):
        raise MeshError("genus of a disconnected mesh is ambiguous")
    return (2 - mesh.euler_characteristic) // 2


def capped_genus(mesh):
    """Genus of a bordered patch after capping each boundary loop."""
    chi_capped = mesh.euler_characteristic + boundary_loop_count(mesh)
    return (2 - chi_capped) // 2


def _is_connected(mesh):
    if mesh.n_vertices == 0:
        return True
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components
    e = mesh.edges
    n = mesh.n_vertices
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


# -- file IO --------------------------------------------------------------

def write_mesh(mesh, path):
    """Write OBJ or OFF (by extension), ASCII, LF line endings."""
    path = str(path)
    lines = []
    verts = mesh.vertices.tolist()   # python floats: repr is shortest form
    faces = mesh.faces.tolist()
    if path.lower().endswith(".obj"):
        for x, y, z in verts:
            lines.append(f"v {x!r} {y!r} {z!r}")
        for a, b, c in faces:
            lines.append(f"f {a + 1} {b + 1} {c + 1}")
    elif path.lower().endswith(".off"):
        lines.append("OFF")
        lines.append(f"{mesh.n_vertices} {mesh.n_faces} 0")
        for x, y, z in verts:
            lines.append(f"{x!r} {y!r} {z!r}")
        for a, b, c in faces:
            lines.append(f"3 {a} {b} {c}")
    else:
        raise MeshError(f"unsupported mesh format: {path}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Read an ASCII OBJ or OFF file."""
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise MeshError(f"cannot read mesh file {path}: {exc}") from exc
    tokens = [ln.split() for ln in text.splitlines()
              if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        if path.lower().endswith(".obj") or (tokens and tokens[0][0] == "v"):
            verts = [list(map(float, t[1:4])) for t in tokens if t[0] == "v"]
            faces = []
            for t in tokens:
                if t[0] == "f":
                    ids = [int(w.split("/")[0]) - 1 for w in t[1:]]
                    if len(ids) != 3:
                        raise MeshError("only triangle faces are supported")
                    faces.append(ids)
            return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))
        if tokens and tokens[0][0].upper() == "OFF":
            rest = tokens[1:] if len(tokens[0]) == 1 else \
                [tokens[0][1:]] + tokens[1:]
            nv, nf = int(rest[0][0]), int(rest[0][1])
            verts = [list(map(float, t[:3])) for t in rest[1:1 + nv]]
            faces = [list(map(int, t[1:4])) for t in rest[1 + nv:1 + nv + nf]]
            return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from exc
    raise MeshError(f"unrecognised mesh format in {path}")
