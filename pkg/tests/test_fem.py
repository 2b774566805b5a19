import numpy as np
import pytest

import pqelliptic as pq
from pqelliptic import (DiscreteField, MeshError, QuadratureFailure,
                        assemble_jacobian, assemble_residual, build_mesh,
                        interpolate, make_family, unit_box, zero_field)
from conftest import constant_rhs


def test_mesh_counts_1d():
    m = build_mesh(1, unit_box(1), 3)
    assert m.n_elements == 2
    assert set(np.flatnonzero(m.boundary_mask)) == {0, 2}


def test_mesh_counts_2d():
    m = build_mesh(2, unit_box(2), 3)
    assert m.n_elements == 8
    assert int(m.boundary_mask.sum()) == 8


def test_mesh_area_partition():
    box = pq.Box((0.0, -1.0), (2.0, 3.0))
    m = build_mesh(2, box, (7, 5))
    assert abs(m.areas.sum() - box.measure) < 1e-12


def test_mesh_errors():
    with pytest.raises(MeshError):
        build_mesh(2, unit_box(2), 2)
    with pytest.raises(pq.ConfigError):
        pq.Box((0.0, 0.0), (0.0, 1.0))


def test_quadrature_exact_for_quadratics():
    # monomial integrals over the box, against closed forms
    m = build_mesh(2, unit_box(2), 5)

    def integrate(f):
        vals = f(m.quad_points)
        return float(np.einsum("e,q,eq->", m.areas, m.quad_frac, vals))

    assert integrate(lambda x: np.ones(x.shape[:-1])) == pytest.approx(1.0)
    assert integrate(lambda x: x[..., 0]) == pytest.approx(0.5)
    assert integrate(lambda x: x[..., 0] ** 2) == pytest.approx(1.0 / 3.0)
    assert integrate(lambda x: x[..., 0] * x[..., 1]) == pytest.approx(0.25)

    m1 = build_mesh(1, unit_box(1), 4)

    def integrate1(f):
        vals = f(m1.quad_points)
        return float(np.einsum("e,q,eq->", m1.areas, m1.quad_frac, vals))

    assert integrate1(lambda x: x[..., 0] ** 2) == pytest.approx(1.0 / 3.0)
    assert integrate1(lambda x: x[..., 0] ** 3) == pytest.approx(0.25)


# ---------------------------------------------------------------------------
# assembly

def test_residual_zero_field_constant_rhs_1d():
    # R_j = int b phi_j = -2h for interior hats
    op = make_family("p-laplacian", {"p": 2, "domain": unit_box(1)})
    m = build_mesh(1, unit_box(1), 17)
    R = assemble_residual(m, op, constant_rhs(-2.0), zero_field(m))
    h = 1.0 / 16.0
    np.testing.assert_allclose(R, -2.0 * h, rtol=1e-13)


def test_residual_vanishes_at_discrete_solution():
    op = make_family("p-laplacian", {"p": 2, "domain": unit_box(1)})
    m = build_mesh(1, unit_box(1), 17)
    U, _ = pq.newton_solve(m, op, constant_rhs(-2.0), zero_field(m))
    R = assemble_residual(m, op, constant_rhs(-2.0), U)
    assert np.abs(R).max() < 1e-12


def test_residual_translation_equivariance():
    # x-independent operator, constant rhs: shifting the box leaves the
    # residual of identical nodal data unchanged
    op = make_family("p-laplacian", {"p": 3})
    vals = np.zeros(11 * 11)
    rng = np.random.default_rng(1)
    m0 = build_mesh(2, unit_box(2), 11)
    vals[m0.interior] = rng.standard_normal(m0.interior.size)
    shifted = pq.Box((5.0, -3.0), (6.0, -2.0))
    m1 = build_mesh(2, shifted, 11)
    R0 = assemble_residual(m0, op, constant_rhs(1.0), DiscreteField(m0, vals))
    R1 = assemble_residual(m1, op, constant_rhs(1.0), DiscreteField(m1, vals))
    np.testing.assert_allclose(R0, R1, atol=1e-13)


def test_stiffness_matrix_1d_tridiagonal_oracle():
    op = make_family("p-laplacian", {"p": 2, "domain": unit_box(1)})
    n = 9
    m = build_mesh(1, unit_box(1), n)
    h = 1.0 / (n - 1)
    J = assemble_jacobian(m, op, zero_field(m)).toarray()
    k = n - 2
    oracle = (np.diag(2.0 * np.ones(k)) - np.diag(np.ones(k - 1), 1)
              - np.diag(np.ones(k - 1), -1)) / h
    np.testing.assert_allclose(J, oracle, atol=1e-13)


@pytest.mark.parametrize("tag,params", [
    ("p-laplacian", {"p": 4}),
    ("double-phase", {"p": 2, "q": 2.2, "weight": lambda x: np.asarray(x)[..., 0]}),
])
def test_jacobian_matches_directional_fd(tag, params):
    op = make_family(tag, params)
    m = build_mesh(2, unit_box(2), 9)
    rng = np.random.default_rng(0)
    vals = np.zeros(m.n_nodes)
    vals[m.interior] = 0.1 * rng.standard_normal(m.interior.size)
    U = DiscreteField(m, vals)
    J = assemble_jacobian(m, op, U)
    V = rng.standard_normal(m.interior.size)
    h = 1e-6

    def res(v):
        w = np.zeros(m.n_nodes)
        w[m.interior] = v
        return assemble_residual(m, op, constant_rhs(0.0), DiscreteField(m, w))

    fd = (res(vals[m.interior] + h * V) - res(vals[m.interior] - h * V)) / (2 * h)
    rel = np.abs(J @ V - fd).max() / max(np.abs(J @ V).max(), 1e-30)
    assert rel < 1e-6


def test_jacobian_symmetric_for_u_independent_gradient_flux():
    op = make_family("p-laplacian", {"p": 4})
    m = build_mesh(2, unit_box(2), 9)
    rng = np.random.default_rng(2)
    vals = np.zeros(m.n_nodes)
    vals[m.interior] = rng.standard_normal(m.interior.size)
    J = assemble_jacobian(m, op, DiscreteField(m, vals))
    assert abs(J - J.T).max() < 1e-13


def test_quadrature_failure_on_nonfinite_flux():
    op = pq.make_custom(lambda x, u, xi: np.full_like(xi, np.nan),
                        dim=2, p=2, q=2, m=1, M=1)
    m = build_mesh(2, unit_box(2), 5)
    with pytest.raises(QuadratureFailure):
        assemble_residual(m, op, constant_rhs(0.0), zero_field(m))


def test_solver_rejects_nonzero_boundary():
    op = make_family("p-laplacian", {"p": 2})
    m = build_mesh(2, unit_box(2), 5)
    U = DiscreteField(m, np.ones(m.n_nodes))
    with pytest.raises(MeshError):
        pq.newton_solve(m, op, constant_rhs(0.0), U)


# ---------------------------------------------------------------------------
# norms

def test_lp_gradient_norm_of_linear_interpolant():
    m = build_mesh(1, unit_box(1), 17)
    U = interpolate(m, lambda x: x[..., 0])
    for p in (2.0, 3.0, 4.5):
        assert pq.lp_gradient_norm(U, p) == pytest.approx(1.0)


def test_lp_gradient_norm_homogeneous_and_monotone_in_domain():
    m = build_mesh(2, unit_box(2), 9)
    rng = np.random.default_rng(3)
    U = DiscreteField(m, rng.standard_normal(m.n_nodes))
    n1 = pq.lp_gradient_norm(U, 2.0)
    n3 = pq.lp_gradient_norm(DiscreteField(m, 3.0 * U.values), 2.0)
    assert n3 == pytest.approx(3.0 * n1)
    inner = pq.lp_gradient_norm(U, 2.0, element_mask=(
        m.boundary_distance_centroids() >= 0.25))
    assert inner <= n1 + 1e-15


def test_h2_seminorm_linear_field_is_zero():
    m = build_mesh(2, unit_box(2), 9)
    U = interpolate(m, lambda x: 1.0 + 2 * x[..., 0] - x[..., 1])
    assert pq.h2_seminorm_interior(U, 0.2) == pytest.approx(0.0, abs=1e-12)


def test_h2_seminorm_quadratic_exact_quotients():
    # interpolant of x^2: pure quotient exactly 2 at interior nodes
    n = 9
    m = build_mesh(1, unit_box(1), n)
    U = interpolate(m, lambda x: x[..., 0] ** 2)
    h = 1.0 / (n - 1)
    sem = pq.h2_seminorm(U)
    # (n-2) interior nodes each contribute h * 2^2
    assert sem == pytest.approx(np.sqrt((n - 2) * h * 4.0))


def test_interior_norms_and_delta_errors():
    m = build_mesh(2, unit_box(2), 9)
    U = interpolate(m, lambda x: x[..., 0])
    assert pq.linf_gradient_interior(U, 0.2) == pytest.approx(1.0)
    with pytest.raises(MeshError):
        pq.linf_gradient_interior(U, 0.49999)
    with pytest.raises(MeshError):
        pq.h2_seminorm_interior(U, 10.0)


def test_mesh_serialization_roundtrip():
    m = build_mesh(2, pq.Box((0.0, 1.0), (2.0, 4.0)), (5, 7))
    d = m.to_dict(include_arrays=True)
    m2 = pq.Mesh.from_dict(d)
    assert np.array_equal(m.nodes, m2.nodes)
    assert np.array_equal(m.elements, m2.elements)
    assert d["nodes"] == m.nodes.tolist()
