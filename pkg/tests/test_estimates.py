import numpy as np
import pytest

import pqelliptic as pq
from pqelliptic import (DiscreteField, InvalidExponents, build_mesh,
                        compute_alpha, compute_pstar, interpolate,
                        make_family, unit_box)
from pqelliptic.verify import theta_exponent
from conftest import constant_rhs


def test_pstar_values():
    assert compute_pstar(3, 2.0, 2.2) == pytest.approx(6.0)   # np/(n-p)
    # p >= n: free choice q+1, lifted above 2p/(p-q+2) when needed
    assert compute_pstar(2, 2.0, 2.0) == pytest.approx(3.0)
    big_theta = 2.0 * 3.0 / (3.0 - 3.9 + 2.0)
    assert compute_pstar(2, 3.0, 3.9) == pytest.approx(big_theta + 1.0)
    with pytest.raises(InvalidExponents):
        compute_pstar(2, 2.0, 3.0)  # q/p at the 1+1/n bound


def test_alpha_values():
    assert compute_alpha(3, 2.0, 2.0) == pytest.approx(1.0)
    assert compute_alpha(3, 2.0, 2.2) == pytest.approx(4.0 / 3.4)
    assert pq.alpha_is_extrapolated(2, 2.0, 2.2)
    assert not pq.alpha_is_extrapolated(3, 2.0, 2.2)
    assert compute_alpha(4, 2.0, 2.4) > 0  # q/p = 1.2 < 1.25, admissible
    with pytest.raises(InvalidExponents):
        compute_alpha(4, 2.0, 2.5)  # q/p sits exactly on 1 + 1/n


def test_alpha_sweep_identity_and_lower_bound():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        p = float(rng.uniform(2.0, 5.0))
        qmax = min(p + 1.0, p * (1.0 + 1.0 / n)) - 1e-9
        q = float(rng.uniform(p, qmax))
        a = compute_alpha(n, p, q)
        assert a >= 1.0 - 1e-12
        if n > 2:
            assert abs(a / p - 2.0 / ((n + 2) * p - n * q)) < 1e-12


def test_theta_below_pstar_for_admissible_parameters():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        p = float(rng.uniform(2.0, 5.0))
        qmax = min(p + 1.0, p * (1.0 + 1.0 / n)) - 1e-9
        q = float(rng.uniform(p, qmax))
        beta = float(rng.uniform(0.0, p - 1.0 - 1e-9))
        assert theta_exponent(p, q, beta) < compute_pstar(n, p, q)


# ---------------------------------------------------------------------------
# data bracket

def test_bracket_trivial_and_hand_value():
    op = make_family("p-laplacian", {"p": 2})
    m = build_mesh(2, unit_box(2), 9)
    # a(x,0,0) = 0 and b = 0: bracket = 1
    assert pq.global_lp_rhs(m, op, constant_rhs(0.0), 2.0, 3.0) \
        == pytest.approx(1.0)
    # b = -2 on the unit square: any (p*)'-norm of the constant is 2,
    # bracket = (1 + 0 + 2)^(p/(p-1)) = 9
    assert pq.global_lp_rhs(m, op, constant_rhs(-2.0), 2.0, 3.2) \
        == pytest.approx(9.0)


def test_bracket_monotone_in_rhs():
    op = make_family("p-laplacian", {"p": 2})
    m = build_mesh(2, unit_box(2), 9)
    vals = [pq.global_lp_rhs(m, op, constant_rhs(-v), 2.0, 3.0)
            for v in (0.5, 1.0, 2.0, 4.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# uniformity

def _mini_trace(double_phase_op, n=17, steps=3):
    m = build_mesh(2, unit_box(2), n)
    sched = pq.EpsilonSchedule(eps0=0.2, ratio=0.5, steps=steps)
    return pq.continuation_solve(m, double_phase_op, constant_rhs(-2.0),
                                 sched)


def test_check_uniform_lp(double_phase_op):
    tr = _mini_trace(double_phase_op)
    res = pq.check_uniform_lp(tr, bound=1.5)
    assert res.verdict and 1.0 <= res.ratio <= 1.5
    # constant trace has ratio exactly 1
    for s in tr.steps:
        s.lp_gradient = 0.25
    res2 = pq.check_uniform_lp(tr)
    assert res2.ratio == pytest.approx(1.0)


def test_uniform_lp_reports_lhs_over_bracket(double_phase_op):
    tr = _mini_trace(double_phase_op)
    m = tr.mesh
    bracket = pq.global_lp_rhs(m, double_phase_op, constant_rhs(-2.0), tr.p,
                               compute_pstar(2, tr.p, tr.q))
    res = pq.check_uniform_lp(tr, bracket=bracket)
    assert len(res.lhs_over_bracket) == len(tr.steps)
    assert res.lhs_over_bracket[0] == pytest.approx(
        tr.steps[0].lp_gradient ** tr.p / bracket)


# ---------------------------------------------------------------------------
# interior constants

def test_interior_gradient_constant_zero_field():
    m = build_mesh(2, unit_box(2), 9)
    U = DiscreteField(m, np.zeros(m.n_nodes))
    assert pq.interior_gradient_constant(U, 2.0, 2.0, 2, 0.25, 0.4) == 0.0


def test_interior_gradient_constant_linear_field_closed_form():
    # |Du| = g constant: c = (R-rho)^n g^(p/alpha) / ((1+g^2)^(p/2) |B_R|),
    # with |B_R| realized as the union of elements with centroid inside
    m = build_mesh(2, unit_box(2), 33)
    g = 2.0
    U = interpolate(m, lambda x: g * x[..., 0])
    p, q, n, rho, R = 2.0, 2.2, 2, 0.25, 0.4
    c = pq.interior_gradient_constant(U, p, q, n, rho, R)
    center = m.box.center
    inside = np.linalg.norm(m.centroids - center, axis=1) <= R
    area_R = m.areas[inside].sum()
    alpha = compute_alpha(n, p, q)
    expected = (R - rho) ** n * g ** (p / alpha) / ((1 + g * g) ** (p / 2)
                                                    * area_R)
    assert c == pytest.approx(expected, rel=1e-12)


def test_interior_gradient_constant_empty_ball_errors():
    m = build_mesh(2, unit_box(2), 5)
    U = DiscreteField(m, np.zeros(m.n_nodes))
    with pytest.raises(pq.MeshError):
        pq.interior_gradient_constant(U, 2.0, 2.0, 2, 1e-6, 0.4)


def test_second_derivative_constant_linear_is_zero():
    m = build_mesh(2, unit_box(2), 9)
    U = interpolate(m, lambda x: 3.0 * x[..., 0] - x[..., 1])
    assert pq.second_derivative_constant(U, 2.0, 0.25, 0.4) == \
        pytest.approx(0.0, abs=1e-20)


def test_second_derivative_constant_x2_hand_oracle():
    # interpolant of x1^2 on a fixed 9x9 grid, q = 2: compute numerator and
    # denominator by explicit loops
    n = 9
    m = build_mesh(2, unit_box(2), n)
    U = interpolate(m, lambda x: x[..., 0] ** 2)
    rho, R = 0.25, 0.4
    c = pq.second_derivative_constant(U, 2.0, rho, R)

    h = 1.0 / (n - 1)
    G = U.values.reshape(n, n)
    center = np.array([0.5, 0.5])
    num = 0.0
    for i in range(1, n - 1):
        for j in range(1, n - 1):
            xn = np.array([i * h, j * h])
            if np.linalg.norm(xn - center) <= rho:
                dxx = (G[i + 1, j] - 2 * G[i, j] + G[i - 1, j]) / h ** 2
                dyy = (G[i, j + 1] - 2 * G[i, j] + G[i, j - 1]) / h ** 2
                dxy = (G[i + 1, j + 1] - G[i + 1, j - 1]
                       - G[i - 1, j + 1] + G[i - 1, j - 1]) / (4 * h * h)
                num += h * h * (dxx ** 2 + dyy ** 2 + 2 * dxy ** 2)
    den = 0.0
    grads = pq.element_gradients(U)
    for e in range(m.n_elements):
        if np.linalg.norm(m.centroids[e] - center) <= R:
            den += m.areas[e] * (1.0 + grads[e] @ grads[e])
    expected = (R - rho) ** 2 * num / den
    assert c == pytest.approx(expected, rel=1e-12)


def test_constants_are_functions_of_the_field_only(double_phase_op):
    tr = _mini_trace(double_phase_op)
    U = tr.steps[-1].field
    a = pq.interior_gradient_constant(U, 2.0, 2.2, 2, 0.25, 0.4)
    b = pq.interior_gradient_constant(U.copy(), 2.0, 2.2, 2, 0.25, 0.4)
    assert a == b


def test_estimate_report(double_phase_op):
    tr = _mini_trace(double_phase_op)
    rep = pq.build_estimate_report(tr, double_phase_op, constant_rhs(-2.0))
    assert rep.uniformity.verdict
    assert len(rep.rows) == len(tr.steps)
    for row in rep.rows:
        assert np.isfinite(row["c_gradient"]) and np.isfinite(row["c_hessian"])
    assert rep.gradient_constant_ratio <= 2.0
    assert rep.hessian_constant_ratio <= 2.0
    assert rep.params["alpha_extrapolated"]  # n = 2, q > p
