import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from lambdalab.mesh import (MeshError, TriMesh, icosphere, icosahedron,
                            ellipsoid, torus, cylinder_band, disk,
                            catenoid_band, genus2_weld, sphere_radius,
                            circle_radius, ball_patch, boundary_loop_count,
                            genus, capped_genus, write_mesh, read_mesh)


def test_icosahedron_counts():
    m = TriMesh(*icosahedron())
    assert (m.n_vertices, m.n_edges, m.n_faces) == (12, 30, 20)
    assert m.euler_characteristic == 2
    assert m.is_closed


@pytest.mark.parametrize("level,nv", [(0, 12), (1, 42), (2, 162), (3, 642),
                                      (4, 2562), (5, 10242)])
def test_icosphere_vertex_counts(level, nv):
    m = icosphere(1.0, level)
    assert m.n_vertices == nv
    assert m.euler_characteristic == 2
    assert_allclose(np.linalg.norm(m.vertices, axis=1), 1.0, atol=1e-12)


def test_icosphere_area_deficit_quarters_per_level():
    # inscribed polyhedral area approaches 4 pi r^2 at second order
    deficits = []
    for level in (2, 3, 4):
        m = icosphere(2.0, level)
        deficits.append(1.0 - m.face_areas().sum() / (16.0 * np.pi))
    assert deficits[0] > deficits[1] > deficits[2] > 0
    assert 3.0 < deficits[0] / deficits[1] < 5.0
    assert 3.0 < deficits[1] / deficits[2] < 5.0
    assert deficits[2] < 2e-3


def test_radius_formulas():
    # the round solutions: r^2 + 2 lam r = 4 for surfaces, = 2 for curves
    for lam in (-1.0, -0.25, 0.0, 0.7, 2.0):
        r = sphere_radius(lam)
        assert r > 0
        assert_allclose(r * r + 2 * lam * r, 4.0, atol=1e-12)
        c = circle_radius(lam)
        assert_allclose(c * c + 2 * lam * c, 2.0, atol=1e-12)
    assert sphere_radius(0.0) == pytest.approx(2.0)
    assert circle_radius(0.0) == pytest.approx(np.sqrt(2.0))


def test_torus_topology():
    m = torus(2.0, 0.5, 3)
    assert m.is_closed
    assert m.euler_characteristic == 0
    assert genus(m) == 1


def test_genus2_weld():
    m = genus2_weld(2)
    assert m.is_closed
    assert m.euler_characteristic == -2
    assert genus(m) == 2


def test_open_bands():
    cyl = cylinder_band(np.sqrt(2.0), 1.0, 2)
    assert not cyl.is_closed
    assert boundary_loop_count(cyl) == 2
    d = disk(2.0, 2)
    assert not d.is_closed
    assert boundary_loop_count(d) == 1
    assert d.euler_characteristic == 1
    cat = catenoid_band(1.0, 1.0, 2)
    assert boundary_loop_count(cat) == 2


def test_validation_rejects_bad_input():
    with pytest.raises(MeshError):
        TriMesh(np.zeros((3, 3)), np.array([[0, 1, 2]]))          # degenerate
    with pytest.raises(MeshError):
        TriMesh(np.eye(3), np.array([[0, 1, 5]]))                 # out of range
    with pytest.raises(MeshError):
        TriMesh(np.eye(3), np.array([[0, 1, 1]]))                 # repeated
    gv, gf = icosahedron()
    # duplicated face breaks the two-faces-per-edge manifold property
    with pytest.raises(MeshError):
        TriMesh(gv, np.vstack([gf, gf[:1]]))


def test_validate_flag_skips_checks():
    v = np.zeros((3, 3))
    m = TriMesh(v, np.array([[0, 1, 2]]), validate=False)
    assert m.n_faces == 1


def test_content_hash_stable_and_sensitive(shrinker):
    h = shrinker.content_hash()
    assert len(h) == 16 and set(h) <= set("0123456789abcdef")
    assert h == shrinker.content_hash()
    moved = TriMesh(shrinker.vertices + 1e-12, shrinker.faces)
    assert moved.content_hash() != h


def test_ball_patch_of_torus_is_annulus():
    m = torus(2.0, 0.5, 3)
    x0 = m.vertices[int(np.argmax(m.vertices[:, 0]))]
    patch = ball_patch(m, x0, 1.0)
    assert patch.n_faces > 0
    assert not patch.is_closed
    assert capped_genus(patch) == 0
    # parent indexing maps patch vertices back onto the torus
    assert np.allclose(m.vertices[patch.parent_vertices], patch.vertices)


def test_ball_patch_strict_inclusion(shrinker):
    patch = ball_patch(shrinker, np.zeros(3), 1.0)   # ball misses the sphere
    assert patch.n_faces == 0


@pytest.mark.parametrize("fmt", ["obj", "off"])
def test_write_read_round_trip(tmp_path, fmt):
    m = icosphere(sphere_radius(0.4), 2)
    path = tmp_path / f"m.{fmt}"
    write_mesh(m, path)
    back = read_mesh(path)
    assert back.n_vertices == m.n_vertices
    assert np.array_equal(back.faces, m.faces)
    # repr round-trip keeps coordinates exact, so the hash survives
    assert back.content_hash() == m.content_hash()


def test_write_is_byte_deterministic(tmp_path):
    m = torus(2.0, 0.5, 1)
    write_mesh(m, tmp_path / "a.obj")
    write_mesh(m, tmp_path / "b.obj")
    a = (tmp_path / "a.obj").read_bytes()
    assert a == (tmp_path / "b.obj").read_bytes()
    assert b"\r" not in a
    assert b"np.float64" not in a


def test_read_rejects_garbage(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0\nf 1 2 3\n")
    with pytest.raises(MeshError):
        read_mesh(p)
    with pytest.raises(MeshError):
        read_mesh(tmp_path / "other.xyz")


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_rigid_motion_preserves_area_and_topology(ax, ay, az):
    base = icosphere(1.3, 1)
    ca, sa = np.cos(ax), np.sin(ax)
    cb, sb = np.cos(ay), np.sin(ay)
    cc, sc = np.cos(az), np.sin(az)
    R = (np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
         @ np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
         @ np.array([[cc, -sc, 0], [sc, cc, 0], [0, 0, 1]]))
    moved = TriMesh(base.vertices @ R.T, base.faces)
    assert moved.euler_characteristic == 2
    assert_allclose(moved.face_areas().sum(), base.face_areas().sum(),
                    rtol=1e-10)


def test_ellipsoid_extents():
    m = ellipsoid((1.0, 2.0, 3.0), 2)
    assert_allclose(np.abs(m.vertices[:, 0]).max(), 1.0, atol=1e-9)
    assert_allclose(np.abs(m.vertices[:, 2]).max(), 3.0, atol=1e-9)
    assert m.is_closed
