"""Radial graphs over the round sphere: Newton, branches, rigidity."""

import json
import math

import numpy as np
import pytest

from lambdalab.mesh import icosphere, sphere_radius
from lambdalab.gaussian import gaussian_area
from lambdalab.continuation import (
    Branch,
    ContinuationError,
    GraphOverSphere,
    base_sphere,
    continue_branch,
    graph_mesh,
    graph_residual,
    jacobian,
    linearization_check,
    newton_solve,
    quadratic_constant,
    rigidity_experiment,
)


@pytest.fixture(scope="module")
def base2():
    return base_sphere(2)


# -- graphs and residuals --------------------------------------------------

def test_zero_graph_residual_is_minus_lambda(base2):
    for lam in (-0.4, 0.0, 0.8):
        g = GraphOverSphere(base2, np.zeros(base2.n_vertices), lam)
        r = graph_residual(g)
        assert np.max(np.abs(r - (-lam))) < 1e-4


def test_constant_graph_residual_matches_round_formula(base2):
    # radius 2 + c: residual 2/(2+c) - (2+c)/2 at lam = 0
    c = 0.1
    g = GraphOverSphere(base2, np.full(base2.n_vertices, c), 0.0)
    r = graph_residual(g)
    exact = 2.0 / (2.0 + c) - (2.0 + c) / 2.0
    assert np.max(np.abs(r - exact)) < 1e-4


def test_graph_mesh_moves_vertices_radially(base2):
    c = 0.25
    g = GraphOverSphere(base2, np.full(base2.n_vertices, c), 0.0)
    m = graph_mesh(g)
    radii = np.linalg.norm(m.vertices, axis=1)
    assert np.allclose(radii, 2.0 + c, atol=1e-12)
    assert np.array_equal(m.faces, base2.faces)


def test_graph_validation(base2):
    nv = base2.n_vertices
    with pytest.raises(ContinuationError):
        GraphOverSphere(base2, np.zeros(nv - 1), 0.0)       # wrong shape
    with pytest.raises(ContinuationError):
        GraphOverSphere(base2, np.full(nv, 2.0), 0.0)       # band exit
    bad = np.zeros(nv)
    bad[0] = np.nan
    with pytest.raises(ContinuationError):
        GraphOverSphere(base2, bad, 0.0)                    # non-finite
    with pytest.raises(ContinuationError):
        GraphOverSphere(icosphere(1.5, 2), np.zeros(162), 0.0)  # wrong radius


def test_round_solution_outside_band_is_rejected(base2):
    # at lam = -2 the round radius exceeds 4, outside the graph band
    u = np.full(base2.n_vertices, sphere_radius(-2.0) - 2.0)
    with pytest.raises(ContinuationError):
        GraphOverSphere(base2, u, -2.0)


def test_base_sphere_is_cached():
    assert base_sphere(2) is base_sphere(2)


# -- Jacobian --------------------------------------------------------------

def test_grouped_jacobian_matches_single_columns():
    base = base_sphere(1)
    rng = np.random.default_rng(7)
    u = 0.01 * rng.standard_normal(base.n_vertices)
    g = GraphOverSphere(base, u, 0.2)
    J = jacobian(g)

    # one-column-at-a-time reference with the same stencil masking
    from lambdalab.curvature import two_ring
    rings = two_ring(base)
    r0 = graph_residual(g)
    nv = base.n_vertices
    ref = np.zeros((nv, nv))
    for j in range(nv):
        eps = 1e-6 * (1.0 + abs(u[j]))
        up = u.copy()
        up[j] += eps
        dr = graph_residual(GraphOverSphere(base, up, 0.2)) - r0
        rows = np.concatenate([[j], rings[j]])
        ref[rows, j] = dr[rows] / eps
    assert np.array_equal(J, ref)


def test_jacobian_dense_limit():
    big = base_sphere(4)                       # 2562 vertices
    g = GraphOverSphere(big, np.zeros(big.n_vertices), 0.0)
    with pytest.raises(ContinuationError):
        jacobian(g)
    with pytest.raises(ContinuationError):
        newton_solve(g)


# -- Newton ----------------------------------------------------------------

def test_newton_finds_round_solution(base2):
    lam = 0.3
    res = newton_solve(GraphOverSphere(base2, np.zeros(base2.n_vertices), lam))
    assert res.converged
    assert res.final_residual <= 1e-10
    assert res.iterations <= 6
    # the solved graph is the round lam-sphere, flat in u
    expected = sphere_radius(lam) - 2.0
    assert np.max(np.abs(res.graph.u - expected)) < 1e-4
    # flat up to the coarse mesh's per-vertex-class bias
    assert np.std(res.graph.u) < 1e-5


def test_newton_residual_history_decreases(base2):
    res = newton_solve(GraphOverSphere(base2, np.zeros(base2.n_vertices), 0.4))
    hist = res.residuals
    assert hist[0] == pytest.approx(0.4, abs=1e-3)
    assert all(b < a for a, b in zip(hist, hist[1:]))


def test_newton_iteration_cap(base2):
    with pytest.raises(ContinuationError) as err:
        newton_solve(GraphOverSphere(base2, np.zeros(base2.n_vertices), 0.4),
                     max_iterations=1)
    assert err.value.residuals                 # history attached


def test_quadratic_constant_selection():
    # only pairs entering below 1e-2 and landing above the roundoff floor
    assert quadratic_constant([0.5, 1e-3, 5e-7, 2e-10]) == 5e-7 / 1e-6
    assert quadratic_constant([1.0, 0.5]) is None
    assert quadratic_constant([]) is None


# -- branches --------------------------------------------------------------

@pytest.fixture(scope="module")
def small_branch(base2):
    return continue_branch(lam_range=(-0.1, 0.1), step=0.05, base=base2)


def test_branch_samples_ascend_and_match_round(small_branch):
    assert small_branch.diagnostic is None
    lams = small_branch.lambdas
    assert np.allclose(lams, [-0.1, -0.05, 0.0, 0.05, 0.1])
    for s in small_branch.samples:
        assert s.residual <= 1e-10
        expected = sphere_radius(s.lam) - 2.0
        assert abs(s.stats()["mean"] - expected) < 1e-4


def test_branch_sample_lookup(small_branch):
    s = small_branch.sample_at(0.05)
    assert s.lam == 0.05
    with pytest.raises(KeyError):
        small_branch.sample_at(0.033)


def test_branch_json_lines(small_branch):
    lines = small_branch.json_lines()
    assert len(lines) == 5
    rec = json.loads(lines[0])
    assert set(rec) == {"lambda", "u_stats", "iterations", "residual"}
    assert set(rec["u_stats"]) == {"min", "max", "mean"}


def test_branch_fields_csv(tmp_path, small_branch, base2):
    path = tmp_path / "fields.csv"
    small_branch.write_fields_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,vertex,u"
    assert len(lines) == 1 + 5 * base2.n_vertices
    lam, vertex, u = lines[1].split(",")
    assert float(lam) == -0.1
    assert vertex == "0"
    assert float(u) == small_branch.samples[0].u[0]


def test_branch_weighted_area_matches_round_family(small_branch):
    # the weighted area of the round family, 4 pi r^2 exp(-r^2/4), is
    # maximal at lam = 0; the coarse quadrature tracks the closed form
    # but cannot resolve the tiny differences between neighbors
    areas = {s.lam: gaussian_area(graph_mesh(
        GraphOverSphere(small_branch.base, s.u, s.lam)))
        for s in small_branch.samples}
    exact = {lam: 4.0 * math.pi * sphere_radius(lam) ** 2
             * math.exp(-sphere_radius(lam) ** 2 / 4.0)
             for lam in areas}
    for lam in areas:
        assert areas[lam] == pytest.approx(exact[lam], rel=2e-2)
        if lam != 0.0:
            assert exact[lam] < exact[0.0]


def test_branch_range_validation(base2):
    with pytest.raises(ContinuationError):
        continue_branch(lam_range=(0.2, 0.5), base=base2)
    with pytest.raises(ContinuationError):
        continue_branch(lam_range=(-0.1, 0.1), step=-0.05, base=base2)


def test_branch_records_failure_diagnostic(base2):
    # an absurdly tight tolerance cannot be met; the branch must truncate
    # and report instead of raising
    branch = continue_branch(lam_range=(0.0, 0.05), step=0.05,
                             tol=1e-18, base=base2)
    assert branch.diagnostic is not None
    assert "reason" in branch.diagnostic


# -- linearized family motion ----------------------------------------------

def test_linearization_defect_fields():
    out = linearization_check(0.0, 0.1, level=2)
    assert out["radius_1"] == pytest.approx(2.0)
    assert out["phi"] == pytest.approx(sphere_radius(0.1) - 2.0)
    assert out["defect_rms"] <= out["defect_sup"]
    assert out["relative_defect"] < 0.1


def test_linearization_rejects_huge_gap():
    with pytest.raises(ContinuationError):
        linearization_check(0.0, -8.0, level=2)


# -- rigidity --------------------------------------------------------------

def test_rigidity_returns_round(base2):
    out = rigidity_experiment(lam_values=[0.0, 0.2], amplitudes=(0.05,),
                              base=base2)
    assert out["all_round"]
    assert len(out["cells"]) == 2
    for cell in out["cells"]:
        assert cell["outcome"] == "round"
        assert cell["sup_deviation"] <= 1e-5


def test_rigidity_independent_of_jobs(base2):
    a = rigidity_experiment(lam_values=[0.0, 0.1], amplitudes=(0.02,),
                            base=base2, jobs=1)
    b = rigidity_experiment(lam_values=[0.0, 0.1], amplitudes=(0.02,),
                            base=base2, jobs=2)
    assert a == b
