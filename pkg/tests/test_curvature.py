"""Discrete curvature operators checked against round and flat oracles."""

import numpy as np
import pytest

from lambdalab.mesh import (
    TriMesh,
    cylinder_band,
    disk,
    icosphere,
    sphere_radius,
)
from lambdalab.curvature import (
    CurvatureError,
    cotan_stiffness,
    curvature,
    lambda_residual,
    lumped_areas,
    residual_threshold,
    two_ring,
    vertex_normals,
)


# -- stiffness matrix ------------------------------------------------------

def test_stiffness_symmetric_and_annihilates_constants(shrinker):
    W = cotan_stiffness(shrinker)
    asym = abs(W - W.T).max()
    assert asym < 1e-12
    row_sums = np.asarray(W.sum(axis=1)).ravel()
    assert np.max(np.abs(row_sums)) < 1e-12


def test_stiffness_offdiagonals_nonnegative_when_clamped(shrinker):
    W = cotan_stiffness(shrinker, clamp=True).tocoo()
    off = W.data[W.row != W.col]
    assert off.min() >= 0.0


def test_stiffness_negative_semidefinite(shrinker, rng):
    W = cotan_stiffness(shrinker)
    for _ in range(5):
        u = rng.standard_normal(shrinker.n_vertices)
        assert u @ (W @ u) <= 1e-10


def test_edge_weight_preserves_symmetry(shrinker):
    W = cotan_stiffness(shrinker, edge_weight=lambda p: np.exp(-np.sum(p ** 2, axis=1) / 4.0))
    assert abs(W - W.T).max() < 1e-12
    row_sums = np.asarray(W.sum(axis=1)).ravel()
    assert np.max(np.abs(row_sums)) < 1e-12


# -- lumped areas ----------------------------------------------------------

def test_lumped_areas_partition_total_area(shrinker):
    areas = lumped_areas(shrinker)
    assert areas.min() > 0.0
    assert np.isclose(areas.sum(), shrinker.face_areas().sum(), rtol=1e-12)


def test_lumped_areas_partition_on_open_mesh():
    band = cylinder_band(1.0, 1.5, 2)
    areas = lumped_areas(band)
    assert np.isclose(areas.sum(), band.face_areas().sum(), rtol=1e-12)


# -- curvature on known shapes ---------------------------------------------

@pytest.mark.parametrize("r", [1.0, 2.0, 3.5])
def test_sphere_mean_curvature_oracle(r):
    mesh = icosphere(r, 3)
    curv = curvature(mesh)
    # convention: H is the sum of principal curvatures, 2/r on a sphere
    assert np.max(np.abs(curv.H - 2.0 / r)) < 2e-3 / r
    assert np.max(np.abs(curv.principal - 1.0 / r)) < 3e-2 / r
    assert np.max(np.abs(curv.A_norm2 - 2.0 / r ** 2)) < 1e-1 / r ** 2
    assert np.max(np.abs(curv.A3 - 2.0 / r ** 3)) < 1.5e-1 / r ** 3


def test_sphere_normals_point_outward(shrinker, shrinker_curv):
    radial = shrinker.vertices / np.linalg.norm(shrinker.vertices, axis=1,
                                               keepdims=True)
    dots = np.einsum('ij,ij->i', shrinker_curv.normal, radial)
    assert dots.min() > 0.999


def test_cylinder_principal_curvatures():
    band = cylinder_band(1.5, 2.0, 3)
    curv = curvature(band)
    inner = curv.interior_mask
    assert inner.any() and (~inner).any()
    k_sorted = np.sort(np.abs(curv.principal[inner]), axis=1)
    assert np.max(k_sorted[:, 0]) < 2e-3          # flat direction
    assert np.max(np.abs(k_sorted[:, 1] - 1.0 / 1.5)) < 2e-3
    assert np.max(np.abs(curv.H[inner] - 1.0 / 1.5)) < 2e-3


def test_disk_is_flat():
    flat = disk(2.0, 2)
    curv = curvature(flat)
    inner = curv.interior_mask
    assert np.max(np.abs(curv.H[inner])) < 1e-10
    assert np.max(np.abs(curv.A_norm2[inner])) < 1e-10


def test_boundary_vertices_carry_nan():
    band = cylinder_band(1.0, 1.0, 2)
    curv = curvature(band)
    boundary = band.boundary_vertex_mask
    assert np.isnan(curv.H[boundary]).all()
    assert np.isnan(curv.principal[boundary]).all()
    # normals remain defined everywhere
    assert np.isfinite(curv.normal).all()


def test_vertex_normals_match_curvature_normals(shrinker, shrinker_curv):
    n = vertex_normals(shrinker)
    assert np.max(np.linalg.norm(n - shrinker_curv.normal, axis=1)) < 1e-12


def test_precomputed_rings_identical(shrinker, shrinker_curv):
    rings = two_ring(shrinker)
    again = curvature(shrinker, rings=rings)
    assert np.array_equal(again.H, shrinker_curv.H)
    assert np.array_equal(again.principal, shrinker_curv.principal)


def test_no_faces_rejected():
    verts = np.eye(3)
    mesh = TriMesh(verts, np.zeros((0, 3), dtype=int), validate=False)
    with pytest.raises(CurvatureError):
        curvature(mesh)


# -- the shape equation residual -------------------------------------------

@pytest.mark.parametrize("lam", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_lambda_residual_small_on_matching_sphere(bank, lam):
    mesh = bank.mesh(lam, 3)
    res = lambda_residual(mesh, lam, curv=bank.curv(lam, 3))
    assert np.max(np.abs(res)) < 5e-6


def test_lambda_residual_detects_wrong_lambda(bank):
    res = lambda_residual(bank.mesh(0.0, 2), 0.3)
    assert np.min(np.abs(res)) > 0.29


def test_lambda_residual_nan_on_boundary():
    band = cylinder_band(1.0, 1.0, 2)
    res = lambda_residual(band, 0.0)
    assert np.isnan(res[band.boundary_vertex_mask]).all()
    assert np.isfinite(res[~band.boundary_vertex_mask]).all()


# -- refinement-ladder threshold -------------------------------------------

def test_residual_threshold_dict_and_list_agree(bank):
    meshes = [bank.mesh(0.0, lv) for lv in (2, 3, 4)]
    t_list, info_list = residual_threshold(meshes, 0.0)
    t_dict, info_dict = residual_threshold(
        {lv: bank.mesh(0.0, lv) for lv in (2, 3, 4)}, 0.0)
    assert t_list == t_dict
    assert info_list["residual_maxima"] == info_dict["residual_maxima"]


def test_residual_threshold_converging_family(bank):
    meshes = [bank.mesh(0.5, lv) for lv in (2, 3, 4)]
    threshold, info = residual_threshold(meshes, 0.5)
    assert info["rate"] > 3.0          # second-order family: about 16x
    assert info["error_estimate"] <= 4.0 * info["residual_maxima"][-1]
    assert threshold == 10.0 * info["error_estimate"]
    # the threshold certifies the finest member itself
    assert info["residual_maxima"][-1] <= threshold


def test_residual_threshold_worsening_ladder_floors_at_finest():
    # a symmetry-exact coarse level makes the measured rate < 1; the
    # estimate must not collapse below the finest measurement
    fine = icosphere(2.0, 2)
    coarse = icosphere(2.0, 1)
    threshold, info = residual_threshold([coarse, fine], 0.0)
    assert info["rate"] < 1.0
    assert info["error_estimate"] >= info["residual_maxima"][-1]


def test_residual_threshold_needs_two_levels(shrinker):
    with pytest.raises(ValueError):
        residual_threshold([shrinker], 0.0)


def test_residual_threshold_custom_factor(bank):
    meshes = [bank.mesh(0.0, lv) for lv in (2, 3)]
    t10, _ = residual_threshold(meshes, 0.0)
    t3, _ = residual_threshold(meshes, 0.0, factor=3.0)
    assert np.isclose(t3, 0.3 * t10)
