import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mfgfb.errors import DomainError, InputError
from mfgfb.exact_oracle import planning_problem
from mfgfb.lagrangian_solver import FlowField, Mesh, newton_solve, oracle_field
from mfgfb.problem import barenblatt, capped, derive_constants, tabulated
from mfgfb.transforms import (
    RegularSingularODE,
    TestFunction,
    axis_test,
    build_radial_chart,
    compute_V,
    compute_Z,
    effective_dimension_fit,
    interior_test,
    mu_integrating_factor,
    radial_Z,
    shooting_diagnostic,
    volterra_solve,
    weighted_weak_residual,
)


def const(c):
    return lambda w: np.full_like(np.asarray(w, dtype=float), c)


def linear_edge(h0=1.0, h1=0.0, delta=0.25):
    return capped(1.0, delta, lambda w: h0 + h1 * np.asarray(w, dtype=float), const(h1))


# ---------------------------------------------------------------------------
# Z and V


def test_identity_z_and_v():
    m = Mesh.build(1.0, 1.0, 17, 17)
    f = FlowField(m, np.tile(m.y_nodes, (17, 1)), 1.0)
    np.testing.assert_allclose(compute_Z(f), 1.0, atol=1e-12)
    np.testing.assert_allclose(compute_V(f), 0.0, atol=1e-10)


def test_oracle_z_is_y_independent():
    prob = planning_problem(1.0)
    m = Mesh.build(prob.initial.b, prob.horizon, 33, 33)
    f = oracle_field(prob, m)
    Z = compute_Z(f)
    expected = (1.0 + m.t_nodes) ** (-4.0 / 3.0)  # gamma_y = t^(2/3), t0 = 1
    np.testing.assert_allclose(Z, np.repeat(expected[:, None], m.ny, axis=1), rtol=1e-12)
    np.testing.assert_allclose(compute_V(f), 0.0, atol=1e-9)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_perturbed_field_first_order(theta):
    m = Mesh.build(1.0, 1.0, 65, 17)
    y = m.y_nodes
    errs = []
    for eps in (1e-3, 5e-4):
        f = FlowField(m, np.tile(y + eps * y**2, (17, 1)), theta)
        errs.append(np.max(np.abs(compute_Z(f) - (1 - 2 * (theta + 1) * eps * y))))
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)  # remainder is O(eps^2)


# ---------------------------------------------------------------------------
# radial chart


def test_chart_linear_profile_theta_one():
    ch = build_radial_chart(linear_edge(), derive_constants(1.0), 0.9)
    r = ch.r_nodes
    np.testing.assert_allclose(ch.W, r**5 / 32, atol=1e-16)
    np.testing.assert_allclose(ch.omega0, 1 / 32, rtol=1e-14)
    np.testing.assert_allclose(ch.A, 0.5, rtol=1e-14)
    np.testing.assert_allclose(ch.D, 0.0, atol=0)
    assert ch.N == 6.0 and ch.checks["A_positive"] and ch.checks["omega0_positive"]


def test_chart_homogeneity_in_h():
    c = derive_constants(1.0)
    a = build_radial_chart(linear_edge(1.0), c, 0.9)
    b = build_radial_chart(linear_edge(2.0), c, 0.9)
    np.testing.assert_allclose(b.W, a.W * 2 ** (1 / c.c_theta), rtol=1e-13)
    np.testing.assert_allclose(b.A, 2 * a.A, rtol=1e-13)


def test_effective_dimension_slope():
    fit = effective_dimension_fit(build_radial_chart(linear_edge(), derive_constants(1.0), 0.99))
    assert fit.exponent == pytest.approx(5.0, rel=0.01)
    assert fit.passed


def test_chart_domain_error():
    with pytest.raises(DomainError):
        build_radial_chart(linear_edge(delta=0.2), derive_constants(1.0), 0.9)


def test_tabulated_profile_flags_smoothed_second_derivative():
    y = np.linspace(0, 1, 201)
    ch = build_radial_chart(tabulated(y, y * (1 - y)), derive_constants(1.0), 0.9)
    assert ch.D_smoothed and ch.checks["D_smoothed"]


@settings(max_examples=20)
@given(st.floats(0.5, 2.0), st.floats(-1.0, 1.0), st.sampled_from([0.5, 1.0, 2.0]))
def test_omega0_has_positive_limit(h0, h1, theta):
    c = derive_constants(theta)
    p = linear_edge(h0, h1 * h0)  # h between h0/2... on [0, 1/4] stays within [h0 (1 - 1/4), h0 (1 + 1/4)]
    ch = build_radial_chart(p, c, 0.99)
    r0 = ch.r0
    ratio = ch.omega(r0 / 100) / ch.omega(r0 / 10)
    C = (1.25 / 0.75) ** (1 / c.c_theta)
    assert 1 / C**2 <= ratio <= C**2
    assert ch.omega(0.0) == pytest.approx(h0 ** (1 / c.c_theta) / (2 * 4 ** (1 / c.c_theta)))


# ---------------------------------------------------------------------------
# weak form


def test_weak_residual_constant_z_vanishes():
    ch = build_radial_chart(linear_edge(), derive_constants(1.0), 0.9)
    t = np.linspace(0, 1, 17)
    Z = np.full((17, ch.r_nodes.size), 0.7)
    assert weighted_weak_residual(ch, Z, t, axis_test(0.9, 0, 1)) == 0.0


def test_weak_residual_rejects_bad_tests():
    ch = build_radial_chart(linear_edge(), derive_constants(1.0), 0.9)
    t = np.linspace(0, 1, 9)
    Z = np.ones((9, ch.r_nodes.size))
    good = axis_test(0.9, 0, 1)
    no_edge = TestFunction(lambda r: np.ones_like(np.asarray(r, float)), lambda r: 0 * np.asarray(r, float), good.psi, good.dpsi, 0.9, 0, 1)
    with pytest.raises(InputError):
        weighted_weak_residual(ch, Z, t, no_edge)
    with pytest.raises(InputError):
        weighted_weak_residual(ch, Z, t, axis_test(0.9, 0.1, 1))  # psi(0) != 0
    with pytest.raises(InputError):
        weighted_weak_residual(ch, Z[:, :-1], t, good)


def _oracle_setup(n):
    prob = planning_problem(1.0)
    r0 = 0.95 * np.sqrt(prob.initial.b)
    ch = build_radial_chart(prob.initial, prob.coupling, r0)
    m = Mesh.build(prob.initial.b, prob.horizon, n, n)
    return prob, r0, ch, m


def test_weak_residual_separable_oracle():
    # exact Z(t) = s^(-nu (theta+1)), s = 1 + t; the weak form vanishes in the continuum
    prob, r0, ch, _ = _oracle_setup(17)
    th, nu = 1.0, 2 / 3
    k = nu * (th + 1)
    test = axis_test(r0, 0.0, 1.0)
    Wphi = integrate.quad(lambda r: ch.coefficients(r)[0] * test.phi(r), 0, r0, epsabs=1e-15, epsrel=1e-13)[0]
    WDphi = integrate.quad(lambda r: ch.coefficients(r)[0] * ch.coefficients(r)[2] * test.phi(r), 0, r0, epsabs=1e-15, epsrel=1e-13)[0]
    beta_zt = integrate.quad(lambda t: (1 + t) ** (k * (1 + 1 / (th + 1))) / (th + 1) * (-k) * (1 + t) ** (-k - 1) * test.dpsi(t), 0, 1, epsabs=1e-15)[0]
    z_psi = integrate.quad(lambda t: (1 + t) ** (-k) * test.psi(t), 0, 1, epsabs=1e-15)[0]
    assert abs(Wphi * beta_zt - WDphi * z_psi) <= 1e-8
    # discrete value converges to it at second order
    vals = []
    for n in (33, 65):
        prob, r0, ch, m = _oracle_setup(n)
        r, t, Zt = radial_Z(oracle_field(prob, m), r0)
        vals.append(weighted_weak_residual(ch, Zt, t, test, r))
    assert abs(vals[0] / vals[1]) > 3.5


def test_weak_residual_solver_refinement():
    res = []
    for n in (65, 129):
        prob, r0, ch, m = _oracle_setup(n)
        f, _ = newton_solve(prob, mesh=m)
        r, t, Zt = radial_Z(f, r0)
        res.append(abs(weighted_weak_residual(ch, Zt, t, axis_test(r0, 0, prob.horizon), r)))
    assert res[0] / res[1] >= 1.9


def test_weak_residual_linearity():
    prob, r0, ch, m = _oracle_setup(33)
    r, t, Zt = radial_Z(oracle_field(prob, m), r0)
    a, b = axis_test(r0, 0, 1), interior_test(r0, 0, 1)
    ab = TestFunction(lambda x: a.phi(x) + 2 * b.phi(x), lambda x: a.dphi(x) + 2 * b.dphi(x), a.psi, a.dpsi, r0, 0, 1)
    lhs = weighted_weak_residual(ch, Zt, t, ab, r)
    rhs = weighted_weak_residual(ch, Zt, t, a, r) + 2 * weighted_weak_residual(ch, Zt, t, b, r)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-18)
    # linear in Z when D = 0 and beta is frozen: check the Z_r term with a constant-beta field shift
    lin = build_radial_chart(linear_edge(), derive_constants(1.0), 0.9)
    tt = np.linspace(0, 1, 9)
    rr = lin.r_nodes
    Z1 = np.ones((9, rr.size)) + 0.1 * rr[None, :] ** 2
    Z2 = np.ones((9, rr.size)) + 0.3 * rr[None, :] ** 2
    test = axis_test(0.9, 0, 1)
    v1 = weighted_weak_residual(lin, Z1, tt, test)
    v2 = weighted_weak_residual(lin, Z2, tt, test)
    assert v2 == pytest.approx(3 * v1, rel=1e-12)


def test_radial_z_sides():
    prob, r0, ch, m = _oracle_setup(33)
    f = oracle_field(prob, m)
    rl, _, Zl = radial_Z(f, r0, "left")
    rr, _, Zr = radial_Z(f, r0, "right")
    assert rl[0] == 0.0 and rl[-2] <= r0 <= rl[-1]
    np.testing.assert_allclose(rl, rr, atol=1e-7)
    np.testing.assert_allclose(Zl, Zr, rtol=1e-10)
    with pytest.raises(InputError):
        radial_Z(f, r0, "middle")


# ---------------------------------------------------------------------------
# regular-singular ODE


Y = np.linspace(0, 1, 41)


def test_volterra_constant_solution():
    ode = RegularSingularODE(const(3.0), const(2.0), 1.0)
    np.testing.assert_allclose(volterra_solve(ode, Y), 2 / 3, rtol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3.5])
def test_volterra_monomial(k):
    ode = RegularSingularODE(const(2.5), lambda y: y**k, 1.0)
    np.testing.assert_allclose(volterra_solve(ode, Y), Y**k / (2.5 + k), atol=1e-14)


@pytest.mark.parametrize("b0", [1.5, 3.0, 5.0])
def test_volterra_exponential_mu(b0):
    ode = RegularSingularODE(lambda y: b0 + y, const(1.0), 1.0)
    V = volterra_solve(ode, Y)
    ref = [integrate.quad(lambda l: l ** (b0 - 1) * np.exp((l - 1) * y), 0, 1, epsabs=1e-14, epsrel=1e-14)[0] for y in Y]
    assert np.max(np.abs(V - ref)) <= 1e-9
    assert V[0] == pytest.approx(1 / b0, abs=1e-15)


def test_volterra_solves_ode():
    ode = RegularSingularODE(lambda y: 3 + np.sin(y), lambda y: np.cos(3 * y), 1.0)
    y = np.linspace(0, 1, 401)
    V = volterra_solve(ode, y)
    res = y * np.gradient(V, y, edge_order=2) + ode.b_coeff(y) * V - ode.F(y)
    assert np.max(np.abs(res[1:-1])) < 1e-4
    assert np.all(np.isfinite(V)) and np.max(np.abs(V)) < 1


def test_volterra_rejects_nonpositive_b0():
    with pytest.raises(DomainError):
        RegularSingularODE(const(0.0), const(1.0), 1.0)
    with pytest.raises(DomainError):
        RegularSingularODE(const(-1.0), const(1.0), 1.0)


def test_mu_examples():
    np.testing.assert_allclose(mu_integrating_factor(const(3.0), Y), 1.0)
    np.testing.assert_allclose(mu_integrating_factor(lambda s: 3.0 + s, Y), np.exp(Y), rtol=1e-14)
    np.testing.assert_allclose(mu_integrating_factor(lambda s: 3.0 + np.sqrt(s), Y), np.exp(2 * np.sqrt(Y)), rtol=1e-13)
    assert mu_integrating_factor(lambda s: 3.0 + s, 0.0) == 1.0


def test_mu_divergent_probe():
    def jump(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > 0, 4.0, 3.0)

    with pytest.raises(DomainError):
        mu_integrating_factor(jump, Y, b0=3.0)


def test_ode_from_problem():
    p = barenblatt(1.0)
    ode = RegularSingularODE.from_problem(p, derive_constants(1.0))
    assert ode.b0 == 3.0
    assert ode.b_coeff(np.array(0.0)) == pytest.approx(3.0)
    y = np.array([1e-3, 1e-4, 1e-5])
    assert np.all(np.abs(ode.b_coeff(y) - 3.0) <= y)  # b - b0 = O(y)


@pytest.mark.parametrize("b0", [2.0, 3.0])
def test_shooting_diagnostic(b0):
    ode = RegularSingularODE(lambda y: b0 + y, const(1.0), 1.0)
    rep = shooting_diagnostic(ode)
    assert np.all(rep.ratios >= 2 ** (b0 - 0.1))
    assert rep.volterra_change <= 1e-6
    assert rep.volterra_endpoint[-1] == pytest.approx(rep.reference_endpoint, abs=1e-9)
    assert rep.passed()
