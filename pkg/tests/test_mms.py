import numpy as np
import pytest

import pqelliptic as pq
from pqelliptic import (InconsistentExactData, build_mesh, builtin_case,
                        convergence_study, make_family, make_manufactured,
                        unit_box)


def test_quad1d_rhs_is_minus_two():
    # u* = x(1-x), a = Du: b = div Du* = u*'' = -2
    op = make_family("p-laplacian", {"p": 2, "domain": unit_box(1)})
    case = builtin_case("quad1d", op)
    x = np.linspace(0.1, 0.9, 7)[:, None]
    np.testing.assert_allclose(case.b_field(x), -2.0, rtol=1e-12)
    assert case.provenance == "analytic"


def test_sine2d_rhs_hand_value():
    # p = 2: b = laplace(u*) = -2 pi^2 sin(pi x) sin(pi y)
    op = make_family("p-laplacian", {"p": 2})
    case = builtin_case("sine2d", op)
    rng = np.random.default_rng(0)
    x = rng.uniform(0.1, 0.9, (40, 2))
    expected = -2.0 * np.pi ** 2 * np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
    np.testing.assert_allclose(case.b_field(x), expected, rtol=1e-10)


def test_zero_exact_solution_gives_zero_rhs():
    op = make_family("p-laplacian", {"p": 3})

    def u(x):
        return np.zeros(np.shape(x)[:-1])

    def du(x):
        return np.zeros(np.shape(x))

    case = make_manufactured(op, u, du)
    x = np.random.default_rng(1).uniform(0.2, 0.8, (20, 2))
    np.testing.assert_allclose(case.b_field(x), 0.0, atol=1e-9)


def test_numeric_divergence_agrees_with_analytic():
    op = make_family("p-laplacian", {"p": 4})
    analytic = builtin_case("sine2d", op)

    numeric = make_manufactured(op, analytic.u_exact, analytic.du_exact)
    assert numeric.provenance == "numeric-divergence"
    x = np.random.default_rng(2).uniform(0.15, 0.85, (50, 2))
    a = analytic.b_field(x)
    b = numeric.b_field(x)
    assert np.abs(a - b).max() / max(1.0, np.abs(a).max()) < 1e-6


def test_inconsistent_exact_data_rejected():
    op = make_family("p-laplacian", {"p": 2})

    def u(x):
        return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    def bad_du(x):
        return np.zeros(np.shape(x))

    with pytest.raises(InconsistentExactData):
        make_manufactured(op, u, bad_du)


# ---------------------------------------------------------------------------
# convergence studies

def test_convergence_orders_p2_sine2d():
    op = make_family("p-laplacian", {"p": 2})
    res = convergence_study(op, "sine2d", [9, 17, 33, 65])
    assert min(res.l2_orders) >= 1.9
    assert min(res.w12_orders) >= 0.95


def test_nodal_exactness_quadratic_1d():
    op = make_family("p-laplacian", {"p": 2, "domain": unit_box(1)})
    case = builtin_case("quad1d", op)
    for n in (9, 17, 33):
        mesh = build_mesh(1, unit_box(1), n)
        U, _ = pq.newton_solve(mesh, op, case.b_field, pq.zero_field(mesh))
        x = mesh.nodes[:, 0]
        assert np.abs(U.values - x * (1 - x)).max() < 1e-12


def test_convergence_orders_p4_regression_band():
    # nonlinear rate is not claimed by the theory; accepted band from a
    # converged regression run
    op = make_family("p-laplacian", {"p": 4})
    res = convergence_study(op, "sine2d", [9, 17, 33])
    assert min(res.l2_orders) >= 1.7


def test_interpolant_residual_consistency():
    # residual of the interpolant of u* with the manufactured b vanishes
    # under refinement at second order (max-norm over interior entries)
    op = make_family("p-laplacian", {"p": 2})
    case = builtin_case("sine2d", op)
    norms = []
    for n in (9, 17, 33, 65):
        mesh = build_mesh(2, unit_box(2), n)
        U = pq.interpolate(mesh, case.u_exact, zero_boundary=True)
        R = pq.assemble_residual(mesh, op, case.b_field, U)
        norms.append(np.abs(R).max())
    orders = [np.log2(a / b) for a, b in zip(norms, norms[1:])]
    assert min(orders) >= 1.5


def test_study_input_validation():
    op = make_family("p-laplacian", {"p": 2})
    with pytest.raises(ValueError):
        convergence_study(op, "sine2d", [9, 17])
    with pytest.raises(ValueError):
        convergence_study(op, "sine2d", [17, 9, 33])


def test_builtin_case_dimension_guard():
    op = make_family("p-laplacian", {"p": 2})
    with pytest.raises(InconsistentExactData):
        builtin_case("quad1d", op)
    with pytest.raises(InconsistentExactData):
        builtin_case("nope", op)
