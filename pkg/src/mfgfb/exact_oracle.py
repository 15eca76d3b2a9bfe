"""Closed-form self-similar (Barenblatt-type) solution of the MFG system.

For ``nu = 2/(2+theta)`` and ``k = nu(1-nu)/2`` the density is

    m(x, t) = t**-nu * (R - k x**2 / t**(2 nu))_+ ** (1/theta),

the flow map (base time 1) is ``gamma(y, t) = y t**nu``, and inside the
support ``u = -nu x**2 / (2t) + c(t)`` with ``c'(t) = -R t**(-nu theta)``
and ``c(1) = 0``. Outside the support the value function is continued along
straight characteristics tangent to the free boundary, which gives the
``C^{1,1/2}`` (and no better) behaviour across the edge.

The residual helpers differentiate the closed forms by complex-step, so the
checks do not reuse any hand-derived derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError

_CSTEP = 1e-30


@dataclass(frozen=True)
class SelfSimilarSolution:
    theta: float
    R: float = 1.0

    def __post_init__(self):
        if not self.theta > 0 or not self.R > 0:
            raise DomainError("theta and R must be positive")

    @property
    def nu(self) -> float:
        return 2.0 / (2.0 + self.theta)

    @property
    def k(self) -> float:
        return 0.5 * self.nu * (1.0 - self.nu)

    @property
    def edge_coeff(self) -> float:
        """Half-width of the support at ``t = 1``."""
        return math.sqrt(2.0 * self.R / (self.nu * (1.0 - self.nu)))

    def half_width(self, t):
        return self.edge_coeff * np.asarray(t, dtype=float) ** self.nu

    @property
    def mass(self) -> float:
        # int (R - k x^2)^(1/theta) dx = R^(1/theta) sqrt(R/k) B(1/2, 1/theta + 1)
        a = 1.0 / self.theta
        return self.R ** (a + 0.5) / math.sqrt(self.k) * special.beta(0.5, a + 1.0)

    @classmethod
    def unit_mass(cls, theta: float) -> "SelfSimilarSolution":
        probe = cls(theta, 1.0)
        return cls(theta, probe.mass ** (-1.0 / (1.0 / theta + 0.5)))


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("time must be positive")
    return t


def _bracket(s, x, t):
    return s.R - s.k * x**2 / t ** (2.0 * s.nu)


def density(s: SelfSimilarSolution, x, t):
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    return t ** (-s.nu) * np.maximum(_bracket(s, x, t), 0.0) ** (1.0 / s.theta)


def pressure(s: SelfSimilarSolution, x, t):
    """``m**theta``, zero-extended outside the support."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    return t ** (-s.nu * s.theta) * np.maximum(_bracket(s, x, t), 0.0)


def pressure_gradient(s: SelfSimilarSolution, x, t):
    """One-sided ``p_x`` inside the support, 0 outside."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < s.half_width(t)
    return np.where(inside, -2.0 * s.k * x * t ** (-s.nu * s.theta - 2.0 * s.nu), 0.0)


def flow_map(s: SelfSimilarSolution, y, t):
    """``gamma(y, t) = y t**nu`` with base time 1."""
    t = _check_time(t)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > s.edge_coeff * (1.0 + 1e-14)):
        raise DomainError("y lies outside the base support")
    return y * t**s.nu


def flow_map_y(s: SelfSimilarSolution, t):
    return _check_time(t) ** s.nu


def velocity(s: SelfSimilarSolution, x, t):
    """Agent velocity ``-u_x = nu x / t`` inside the support."""
    t = _check_time(t)
    return s.nu * np.asarray(x, dtype=float) / t


def _c(s: SelfSimilarSolution, t):
    e = 1.0 - s.nu * s.theta
    if abs(e) < 1e-14:
        return -s.R * np.log(t)
    return -s.R * (t**e - 1.0) / e


def _u_expr(s, x, t):
    return -s.nu * x**2 / (2.0 * t) + _c(s, t)


def value_inside(s: SelfSimilarSolution, x, t):
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > s.half_width(t) * (1.0 + 1e-12)):
        raise DomainError("value_inside called outside the support")
    return _u_expr(s, x, t)


def free_boundary(s: SelfSimilarSolution, t):
    w = s.half_width(_check_time(t))
    return -w, w


def free_boundary_derivatives(s: SelfSimilarSolution, t):
    """``(gamma_R, gamma_R', gamma_R'')``; the left curve is the mirror image."""
    t = _check_time(t)
    X, nu = s.edge_coeff, s.nu
    return X * t**nu, X * nu * t ** (nu - 1.0), X * nu * (nu - 1.0) * t ** (nu - 2.0)


def boundary_acceleration_identity(s: SelfSimilarSolution, t):
    """``|gamma_R'' - p0'(edge) gamma_y(edge, t)**-(theta+1)|`` from analytic derivatives."""
    t = _check_time(t)
    _, _, acc = free_boundary_derivatives(s, t)
    slope = -2.0 * s.k * s.edge_coeff  # p0'(b-) at t = 1
    return np.abs(acc - slope * flow_map_y(s, t) ** (-(s.theta + 1.0)))


def _tangent_time(s: SelfSimilarSolution, xi: float) -> float:
    """Solve ``(1-nu) q**nu + nu q**(nu-1) = xi`` for ``q = s/t >= 1``."""
    nu = s.nu

    def g(q):
        return (1.0 - nu) * q**nu + nu * q ** (nu - 1.0) - xi

    if xi <= 1.0:
        return 1.0
    hi = 2.0
    while g(hi) < 0:
        hi *= 2.0
    return optimize.brentq(g, 1.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def _exterior(s: SelfSimilarSolution, x: float, t: float):
    X, nu = s.edge_coeff, s.nu
    q = _tangent_time(s, abs(x) / (X * t**nu))
    tau = q * t
    v = X * nu * tau ** (nu - 1.0)
    ub = _u_expr(s, X * tau**nu, tau)
    return ub + 0.5 * v * v * (tau - t), -math.copysign(v, x), tau


def value_exterior(s: SelfSimilarSolution, x, t):
    """Value function outside the support.

    The point ``(x, t)`` lies on the line tangent to the free boundary at a
    later time ``tau``; along it ``u_x`` is constant and ``u`` changes by
    ``-v**2/2`` per unit time, so ``u(x,t) = u(edge(tau), tau) + v**2 (tau-t)/2``.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    xb, tb = np.broadcast_arrays(x, t)
    if np.any(np.abs(xb) < s.half_width(tb)):
        raise DomainError("value_exterior called inside the support")
    out = np.array([_exterior(s, xv, tv)[0] for xv, tv in zip(xb.ravel(), tb.ravel())])
    return out.reshape(xb.shape) if xb.ndim else float(out[0])


def value_gradient(s: SelfSimilarSolution, x, t):
    """``u_x`` on the whole line (interior closed form, exterior tangent slope)."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    xb, tb = np.broadcast_arrays(x, t)
    out = np.empty(xb.shape)
    flat_x, flat_t, flat_o = xb.ravel(), tb.ravel(), out.reshape(-1)
    for n, (xv, tv) in enumerate(zip(flat_x, flat_t)):
        if abs(xv) <= s.half_width(tv):
            flat_o[n] = -s.nu * xv / tv
        else:
            flat_o[n] = _exterior(s, xv, tv)[1]
    return out if out.ndim else float(out)


def value(s: SelfSimilarSolution, x, t):
    """``u`` on the whole line, with ``u(0, 1) = 0``."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    xb, tb = np.broadcast_arrays(x, t)
    inside = np.abs(xb) <= s.half_width(tb)
    out = np.where(inside, _u_expr(s, xb, tb), 0.0)
    if np.any(~inside):
        out[~inside] = value_exterior(s, xb[~inside], tb[~inside])
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# residual checks by complex-step differentiation


def _m_expr(s, x, t):
    return t ** (-s.nu) * _bracket(s, x, t) ** (1.0 / s.theta)


def _cstep(fn, x, t, wrt):
    x = np.asarray(x, dtype=complex)
    t = np.asarray(t, dtype=complex)
    if wrt == "x":
        return np.imag(fn(x + 1j * _CSTEP, t)) / _CSTEP
    return np.imag(fn(x, t + 1j * _CSTEP)) / _CSTEP


def hj_residual(s: SelfSimilarSolution, x, t):
    """``-u_t + u_x**2/2 - m**theta`` inside the support; NaN outside."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    inside = np.abs(x) < s.half_width(t)
    fn = lambda xx, tt: _u_expr(s, xx, tt)
    ut = _cstep(fn, x, t, "t")
    ux = _cstep(fn, x, t, "x")
    res = -ut + 0.5 * ux**2 - pressure(s, x, t)
    return np.where(inside, res, np.nan)


def continuity_residual(s: SelfSimilarSolution, x, t):
    """``m_t - (m u_x)_x`` with ``u_x`` the closed-form gradient; 0 outside."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    inside = np.abs(x) < s.half_width(t)
    m = lambda xx, tt: _m_expr(s, xx, tt)
    flux = lambda xx, tt: _m_expr(s, xx, tt) * (-s.nu * xx / tt)
    with np.errstate(invalid="ignore"):
        res = _cstep(m, x, t, "t") - _cstep(flux, x, t, "x")
    return np.where(inside, res, 0.0)


def gradient_consistency(s: SelfSimilarSolution, x, t):
    """``|u_x(closed form) - d/dx value_inside|`` inside the support."""
    t = _check_time(t)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), t)
    ux = _cstep(lambda xx, tt: _u_expr(s, xx, tt), x, t, "x")
    return np.abs(ux + velocity(s, x, t))


def mass_relation_residual(s: SelfSimilarSolution, y, t):
    """``|p(gamma(y,t), t) gamma_y**theta - p0(y)|`` with ``p0 = p(., 1)``."""
    y, t = np.broadcast_arrays(np.asarray(y, dtype=float), _check_time(t))
    lhs = pressure(s, flow_map(s, y, t), t) * flow_map_y(s, t) ** s.theta
    return np.abs(lhs - pressure(s, y, 1.0))


# ---------------------------------------------------------------------------
# bridge to the Lagrangian solver


@dataclass(frozen=True)
class OracleReference:
    """Links a solver problem to the closed form.

    Solver coordinates are ``(y', tau)`` with ``y' = y + center`` (left
    edge at 0) and ``tau = t - t0``.
    """

    solution: SelfSimilarSolution
    t0: float
    t1: float
    center: float

    def flow(self, y_solver, tau):
        y = np.asarray(y_solver, dtype=float) - self.center
        return self.center + y * self.flow_y(tau)

    def flow_y(self, tau):
        s = self.solution
        return ((self.t0 + np.asarray(tau, dtype=float)) / self.t0) ** s.nu

    def flow_t(self, y_solver, tau):
        s = self.solution
        y = np.asarray(y_solver, dtype=float) - self.center
        t = self.t0 + np.asarray(tau, dtype=float)
        return y * s.nu * t ** (s.nu - 1.0) / self.t0**s.nu

    def pressure(self, x_solver, tau):
        return pressure(self.solution, np.asarray(x_solver) - self.center, self.t0 + np.asarray(tau))

    def velocity(self, x_solver, tau):
        return velocity(self.solution, np.asarray(x_solver) - self.center, self.t0 + np.asarray(tau))

    def value_gradient(self, x_solver, tau):
        return value_gradient(self.solution, np.asarray(x_solver) - self.center, self.t0 + np.asarray(tau))


def planning_problem(
    theta: float,
    t0: float = 1.0,
    t1: float = 2.0,
    R: float | None = None,
    window: tuple[float, float] | None = None,
):
    """Planning instance whose exact solution is the self-similar flow.

    ``m0`` and ``m_T`` are the densities at ``t0`` and ``t1`` (unit mass by
    default), shifted so the initial support is ``[0, b]``.
    """
    from .problem import ProblemSpec, TerminalSpec, barenblatt, default_window, derive_constants

    sol = SelfSimilarSolution.unit_mass(theta) if R is None else SelfSimilarSolution(theta, R)
    center = float(sol.half_width(t0))
    p0 = barenblatt(theta, sol.R, time=t0, center=center)
    pT = barenblatt(theta, sol.R, time=t1, center=center)
    T = t1 - t0
    return ProblemSpec(
        coupling=derive_constants(theta),
        initial=p0,
        terminal=TerminalSpec.planning(pT),
        horizon=T,
        measurement_window=window or default_window(T),
        reference=OracleReference(sol, t0, t1, center),
    )
