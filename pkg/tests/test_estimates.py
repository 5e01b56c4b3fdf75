"""Integral-geometry checks: local bounds, densities, batch manifests."""

import json
import math

import numpy as np
import pytest

from lambdalab.mesh import (
    catenoid_band,
    cylinder_band,
    disk,
    ellipsoid,
    icosphere,
    write_mesh,
)
from lambdalab.curvature import curvature, lambda_residual
from lambdalab.estimates import (
    EstimateError,
    EstimateReport,
    choi_schoen_quantity,
    convex_area_growth,
    gauss_bonnet_check,
    monotonicity_profile,
    rescaled_residual,
    run_manifest,
    singularity_diagnostic,
    sphere_intersection_check,
)

ORIGIN = np.zeros(3)
SURFACE_POINT = np.array([2.0, 0.0, 0.0])


# -- report plumbing -------------------------------------------------------

def test_report_verdicts():
    rep = EstimateReport("demo", 1.0, 2.0, 1.0, {}, "pass")
    assert rep.passed
    assert not EstimateReport("demo", 3.0, 2.0, -1.0, {}, "fail").passed
    assert EstimateReport("demo", 3.0, 3.0, 0.0, {}, "informational").passed
    d = rep.as_dict()
    assert set(d) == {"name", "lhs", "rhs", "margin", "parameters", "verdict"}


# -- local total-curvature bound -------------------------------------------

def test_gauss_bonnet_on_sphere_patch(shrinker, shrinker_curv):
    rep = gauss_bonnet_check(shrinker, SURFACE_POINT, 0.8, 1.6, 0.5,
                             curv=shrinker_curv)
    assert rep.verdict == "pass"
    assert rep.parameters["genus"] == 0
    assert rep.parameters["curvature_integral"] > 0.0
    assert rep.margin > 0.0


def test_gauss_bonnet_torus_genus(shrinker_torus):
    _, tor = shrinker_torus
    curv = curvature(tor)
    containing = gauss_bonnet_check(tor, ORIGIN, 2.0, 3.5, 0.5, curv=curv)
    assert containing.verdict == "pass"
    assert containing.parameters["genus"] == 1
    band = gauss_bonnet_check(tor, ORIGIN, 1.0, 2.5, 0.5, curv=curv)
    assert band.verdict == "pass"
    assert band.parameters["genus"] == 0


def test_gauss_bonnet_parameter_validation(shrinker, shrinker_curv):
    with pytest.raises(EstimateError):
        gauss_bonnet_check(shrinker, ORIGIN, 1.6, 0.8, 0.5,
                           curv=shrinker_curv)
    with pytest.raises(EstimateError):
        gauss_bonnet_check(shrinker, ORIGIN, 0.8, 1.6, 1.5,
                           curv=shrinker_curv)
    far = np.array([50.0, 0.0, 0.0])
    with pytest.raises(EstimateError):
        gauss_bonnet_check(shrinker, far, 0.8, 1.6, 0.5,
                           curv=shrinker_curv)


# -- density monotonicity --------------------------------------------------

def test_monotonicity_profile_matches_direct_quadrature(shrinker,
                                                        shrinker_curv):
    from lambdalab.curvature import lumped_areas
    from lambdalab.gaussian import gaussian_weight

    f = np.ones(shrinker.n_vertices)
    rep = monotonicity_profile(shrinker, 0.0, SURFACE_POINT, f, 1.0,
                               curv=shrinker_curv)
    assert rep.verdict == "pass"
    s_grid = np.array(rep.parameters["s_grid"])
    profile = np.array(rep.parameters["profile"])

    # independent windowed quadrature: same weights, same ball windows
    weights = f * gaussian_weight(shrinker.vertices) * lumped_areas(shrinker)
    center = np.array(rep.parameters["x0"])
    dist = np.linalg.norm(shrinker.vertices - center, axis=1)
    order = np.argsort(dist)
    w_sorted, d_sorted = weights[order], dist[order]
    for s, g in zip(s_grid, profile):
        direct = float(np.cumsum(w_sorted)[np.searchsorted(
            d_sorted, s, side="right") - 1]) / s ** 2
        assert g == direct
    # the compensated profile is nondecreasing at the reported K
    K = rep.parameters["K"]
    grown = np.exp(K * (s_grid - s_grid[-1])) * profile
    assert np.max(grown[:-1] - grown[1:]) <= 1e-8 * profile[-1]


@pytest.mark.parametrize("build", [
    lambda: icosphere(2.0, 3),
    lambda: disk(2.0, 3),
], ids=["sphere", "disk"])
def test_monotonicity_constant_is_grid_driven(build):
    # below the first neighbor distance every dyadic ball holds exactly
    # one vertex, so g drops as 1/s^2 and the smallest grid gap pins K
    mesh = build()
    x0 = mesh.vertices[np.argmin(np.linalg.norm(mesh.vertices
                                                - SURFACE_POINT, axis=1))]
    if mesh.boundary_vertex_mask.any():
        x0 = ORIGIN                       # disk: use the center vertex
    rep = monotonicity_profile(mesh, 0.0, x0, np.ones(mesh.n_vertices), 1.0)
    s = np.array(rep.parameters["s_grid"])
    predicted = (math.log(2.0) / 2.0) / (s[1] - s[0])
    assert rep.parameters["K"] == pytest.approx(predicted, rel=1e-9)
    assert rep.verdict == "pass"


def test_monotonicity_zero_field(shrinker, shrinker_curv):
    rep = monotonicity_profile(shrinker, 0.0, SURFACE_POINT,
                               np.zeros(shrinker.n_vertices), 1.0,
                               curv=shrinker_curv)
    assert rep.verdict == "pass"
    assert rep.parameters["K"] == 0.0
    assert max(rep.parameters["profile"]) == 0.0


def test_monotonicity_validation(shrinker, shrinker_curv):
    nv = shrinker.n_vertices
    with pytest.raises(EstimateError):
        monotonicity_profile(shrinker, 0.0, SURFACE_POINT,
                             -np.ones(nv), 1.0, curv=shrinker_curv)
    with pytest.raises(EstimateError):
        monotonicity_profile(shrinker, 0.0, SURFACE_POINT,
                             np.ones(nv - 1), 1.0, curv=shrinker_curv)
    with pytest.raises(EstimateError):
        monotonicity_profile(shrinker, 0.0, SURFACE_POINT,
                             np.ones(nv), -1.0, curv=shrinker_curv)
    with pytest.raises(EstimateError):
        monotonicity_profile(shrinker, 0.0, np.array([9.0, 9.0, 9.0]),
                             np.ones(nv), 1.0, curv=shrinker_curv)
    # wrong family parameter: the surface precondition must refuse
    with pytest.raises(EstimateError):
        monotonicity_profile(shrinker, 1.5, SURFACE_POINT,
                             np.ones(nv), 1.0, curv=shrinker_curv)


# -- curvature concentration -----------------------------------------------

def test_choi_schoen_separates_neck_from_sphere(shrinker, shrinker_curv):
    round_rep = choi_schoen_quantity(shrinker, SURFACE_POINT, 1.0,
                                     curv=shrinker_curv)
    neck = catenoid_band(0.3, 0.5, 3)
    neck_rep = choi_schoen_quantity(neck, np.array([0.3, 0.0, 0.0]), 1.0)
    assert round_rep.verdict == "informational"
    assert neck_rep.lhs > 10.0 * round_rep.lhs
    assert neck_rep.parameters["curvature_integral"] \
        > round_rep.parameters["curvature_integral"]


def test_choi_schoen_validation(shrinker, shrinker_curv):
    with pytest.raises(EstimateError):
        choi_schoen_quantity(shrinker, SURFACE_POINT, -1.0,
                             curv=shrinker_curv)
    with pytest.raises(EstimateError):
        choi_schoen_quantity(shrinker, np.array([40.0, 0.0, 0.0]), 1.0,
                             curv=shrinker_curv)


# -- blow-up diagnostics ---------------------------------------------------

def test_singularity_diagnostic_sphere_oracle(shrinker, shrinker_curv):
    # |A| = 1/sqrt(2) everywhere at distance 2: the product is sqrt(2)
    rep = singularity_diagnostic(shrinker, ORIGIN, curv=shrinker_curv)
    assert rep.verdict == "informational"
    assert rep.lhs == pytest.approx(math.sqrt(2.0), rel=0.05)
    assert 0 <= rep.parameters["argmax_vertex"] < shrinker.n_vertices


def test_rescaled_residual_is_exact_covariance(bank):
    lam = 0.3
    mesh = bank.mesh(lam, 2)
    curv = bank.curv(lam, 2)
    base = lambda_residual(mesh, lam, curv=curv)
    for alpha in (2.0, 100.0):
        for z in (np.array([0.3, -0.2, 0.1]), np.array([1.0, 0.0, 0.0])):
            tilde = rescaled_residual(mesh, z, alpha, lam)
            recovered = alpha * tilde - 0.5 * np.einsum(
                'ij,ij->i', np.broadcast_to(z, mesh.vertices.shape),
                curv.normal)
            assert np.max(np.abs(recovered - base)) < 1e-10


def test_rescaled_residual_identity_at_unit_scale(shrinker):
    plain = lambda_residual(shrinker, 0.0)
    tilde = rescaled_residual(shrinker, ORIGIN, 1.0, 0.0)
    assert np.array_equal(plain, tilde)


def test_rescaled_residual_validation(shrinker):
    with pytest.raises(EstimateError):
        rescaled_residual(shrinker, ORIGIN, 0.0, 0.0)


# -- convex area growth ----------------------------------------------------

def test_convex_growth_sphere_ratios(shrinker, shrinker_curv):
    rep = convex_area_growth(shrinker, ORIGIN, [2.0, 4.0],
                             curv=shrinker_curv)
    assert rep.verdict == "pass"
    ratios = rep.parameters["ratios"]
    # R equal to the radius captures the whole sphere: the equality case
    assert 0.99 < ratios[0] <= 1.0
    assert ratios[1] == pytest.approx(0.25, rel=0.01)


def test_convex_growth_accepts_ellipsoid():
    egg = ellipsoid((1.0, 1.3, 1.7), 2)
    rep = convex_area_growth(egg, ORIGIN, [2.0])
    assert rep.verdict == "pass"


def test_convex_growth_rejections(shrinker, shrinker_torus):
    _, tor = shrinker_torus
    with pytest.raises(EstimateError):
        convex_area_growth(tor, ORIGIN, [3.0])          # not convex
    with pytest.raises(EstimateError):
        convex_area_growth(shrinker, ORIGIN, [])        # no radii
    with pytest.raises(EstimateError):
        convex_area_growth(shrinker, ORIGIN, [-1.0])
    band = cylinder_band(1.0, 1.0, 2)
    with pytest.raises(EstimateError):
        convex_area_growth(band, ORIGIN, [1.0])         # open mesh


# -- family-sphere intersection --------------------------------------------

def test_sphere_intersection_on_round_family(bank):
    for lam in (-0.5, 0.0, 1.0):
        rep = sphere_intersection_check(bank.mesh(lam, 3), lam)
        assert rep.verdict == "pass"
        assert abs(rep.lhs) < 1e-6


def test_sphere_intersection_on_torus(shrinker_torus):
    _, tor = shrinker_torus
    rep = sphere_intersection_check(tor, 0.0)
    assert rep.verdict == "pass"
    assert rep.parameters["min_norm"] < 2.0 < rep.parameters["max_norm"]
    assert rep.lhs < -1.0                  # strict straddle, wide margin


def test_sphere_intersection_rejections(shrinker):
    band = cylinder_band(math.sqrt(2.0), 1.0, 2)
    with pytest.raises(EstimateError):
        sphere_intersection_check(band, 0.0)            # open mesh
    with pytest.raises(EstimateError):
        sphere_intersection_check(shrinker, 1.5)        # wrong family


# -- batch manifests -------------------------------------------------------

@pytest.fixture(scope="module")
def manifest_setup(tmp_path_factory):
    root = tmp_path_factory.mktemp("manifest")
    mesh_path = root / "sphere.obj"
    write_mesh(icosphere(2.0, 2), mesh_path)
    jobs = [
        {"check": "sphere_intersection", "mesh_path": str(mesh_path),
         "params": {"lam": 0.0}},
        {"check": "singularity", "mesh_path": str(mesh_path),
         "params": {"x0": [0.0, 0.0, 0.0]}},
        {"check": "monotonicity", "mesh_path": str(mesh_path),
         "params": {"lam": 0.0, "x0": [2.0, 0.0, 0.0], "f": "one",
                    "t": 1.0}},
    ]
    return root, jobs


def test_manifest_list_and_file_modes(manifest_setup):
    root, jobs = manifest_setup
    from_list = run_manifest(jobs)
    assert [r.name for r in from_list] == ["sphere_intersection",
                                           "singularity", "monotonicity"]
    assert all(r.passed for r in from_list)

    path = root / "jobs.json"
    path.write_text(json.dumps(jobs), encoding="utf-8")
    from_file = run_manifest(path)
    assert [r.as_dict() for r in from_file] == \
        [r.as_dict() for r in from_list]


def test_manifest_thread_pool_equivalence(manifest_setup):
    _, jobs = manifest_setup
    serial = run_manifest(jobs, jobs=1)
    pooled = run_manifest(jobs, jobs=3)
    assert [r.as_dict() for r in serial] == [r.as_dict() for r in pooled]


def test_manifest_error_paths(manifest_setup):
    root, jobs = manifest_setup
    with pytest.raises(EstimateError):
        run_manifest({"check": "singularity"})           # not a list
    with pytest.raises(EstimateError):
        run_manifest([{"check": "nope",
                       "mesh_path": jobs[0]["mesh_path"]}])
    with pytest.raises(EstimateError):
        run_manifest([{"check": "singularity"}])         # no mesh_path
    bad_field = [{"check": "monotonicity",
                  "mesh_path": jobs[0]["mesh_path"],
                  "params": {"lam": 0.0, "x0": [2.0, 0.0, 0.0],
                             "f": "mystery", "t": 1.0}}]
    with pytest.raises(EstimateError):
        run_manifest(bad_field)
