"""Coordinate machinery near the free boundary.

* ``Z = gamma_y ** -(theta + 1)`` and ``V = Z_y`` on a solver field.
* The square-root chart ``y = r**2 / 4`` at the left edge, with weight
  ``W(r) = (r/2) p0(r**2/4) ** (1/c)``, coefficients
  ``A(r) = 4 c p0(r**2/4) / r**2`` and ``D(r) = p0''(r**2/4)``. Since
  ``p0(y) = y h(y)`` with ``h`` bounded away from zero, ``W`` behaves like
  ``r ** (N - 1)`` with ``N = 4 + 2/theta``.
* The weak form ``int W [beta(Z) Z_t Phi_t + A Z_r Phi_r - D Z Phi] dr dt``.
* The bounded solution of ``y V' + b(y) V = F`` as a Volterra integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError, InputError
from .lagrangian_solver import FlowField
from .problem import CouplingParams, PressureProfile
from .rates import RateFit, holder_exponent

QUAD_NODES = 64


def compute_Z(field: FlowField) -> np.ndarray:
    field.check_monotone()
    return field.Z


def compute_V(field: FlowField) -> np.ndarray:
    """``Z_y`` by centred differences, one-sided second order at the ends."""
    return np.gradient(compute_Z(field), field.mesh.y_nodes, axis=1, edge_order=2)


# ---------------------------------------------------------------------------
# radial chart


@dataclass(frozen=True, eq=False)
class RadialChart:
    profile: PressureProfile
    coupling: CouplingParams
    r0: float
    r_nodes: np.ndarray
    W: np.ndarray
    A: np.ndarray
    D: np.ndarray
    omega0: np.ndarray
    checks: dict = field(default_factory=dict)

    @property
    def N(self) -> float:
        return self.coupling.effective_dim

    @property
    def D_smoothed(self) -> bool:
        """True when ``D`` comes from a smoothed second difference."""
        return self.profile.tabulated

    def coefficients(self, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(W, A, D)`` at arbitrary radii in ``[0, r0]``."""
        return _coefficients(self.profile, self.coupling, np.asarray(r, dtype=float))

    def omega(self, r) -> np.ndarray:
        return _omega0(self.profile, self.coupling, np.asarray(r, dtype=float))


def _h(profile: PressureProfile, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    safe = np.where(y > 0, y, 1.0)
    return np.where(y > 0, profile.p(safe) / safe, profile.slope_left)


def _coefficients(profile: PressureProfile, coupling: CouplingParams, r: np.ndarray):
    c = coupling.c_theta
    y = 0.25 * r**2
    h = _h(profile, y)
    W = 0.5 * r * (y * h) ** (1.0 / c)
    A = c * h  # 4 c y h / r**2
    D = profile.d2p(y)
    return W, A, D


def _omega0(profile: PressureProfile, coupling: CouplingParams, r: np.ndarray) -> np.ndarray:
    # W / r**(N-1) = h**(1/c) / (2 * 4**(1/c)) exactly, since N - 1 = 1 + 2/c
    c = coupling.c_theta
    return _h(profile, 0.25 * r**2) ** (1.0 / c) / (2.0 * 4.0 ** (1.0 / c))


def build_radial_chart(
    p: PressureProfile,
    coupling: CouplingParams,
    r0: float,
    n: int = 257,
    r_nodes: np.ndarray | None = None,
    delta: float | None = None,
) -> RadialChart:
    """Tabulate the chart on ``[0, r0]``.

    Raises
    ------
    DomainError
        If ``r0**2 / 4`` leaves the one-sided neighbourhood of the left edge.
    """
    delta = p.neighborhood if delta is None else delta
    if not r0 > 0 or 0.25 * r0**2 >= delta:
        raise DomainError(f"r0={r0} leaves the edge neighbourhood (r0^2/4 must be < {delta})")
    r = np.linspace(0.0, r0, n) if r_nodes is None else np.asarray(r_nodes, dtype=float)
    if r.min() < 0 or r.max() > r0 * (1 + 1e-12):
        raise InputError("r_nodes must lie in [0, r0]")
    W, A, D = _coefficients(p, coupling, r)
    om = _omega0(p, coupling, r)
    checks = {
        "A_min": float(A.min()),
        "A_max": float(A.max()),
        "omega0_min": float(om.min()),
        "omega0_max": float(om.max()),
        "A_positive": bool(A.min() > 0),
        "omega0_positive": bool(om.min() > 0),
        "N_gt_2": bool(coupling.effective_dim > 2),
        "D_smoothed": bool(p.tabulated),
    }
    return RadialChart(p, coupling, float(r0), r, W, A, D, om, checks)


def effective_dimension_fit(chart: RadialChart, n: int = 64) -> RateFit:
    """Slope of ``log W`` against ``log r`` over ``[r0/100, r0/10]``."""
    r = np.geomspace(chart.r0 / 100.0, chart.r0 / 10.0, n)
    W, _, _ = chart.coefficients(r)
    return holder_exponent(r, W, target=chart.N - 1.0, tol=0.01 * (chart.N - 1.0))


# ---------------------------------------------------------------------------
# weak form


@dataclass(frozen=True)
class TestFunction:
    """Separable test ``Phi(r, t) = phi(r) psi(t)``."""

    __test__ = False  # not a pytest class

    phi: Callable
    dphi: Callable
    psi: Callable
    dpsi: Callable
    r0: float
    t0: float
    t1: float
    name: str = "test"

    def __call__(self, r, t):
        return self.phi(r) * self.psi(t)

    @property
    def touches_axis(self) -> bool:
        return bool(abs(self.phi(0.0)) > 0)


def _sin2(t0: float, t1: float):
    L = t1 - t0

    def psi(t):
        return np.sin(np.pi * (np.asarray(t) - t0) / L) ** 2

    def dpsi(t):
        return (np.pi / L) * np.sin(2.0 * np.pi * (np.asarray(t) - t0) / L)

    return psi, dpsi


def axis_test(r0: float, t0: float, t1: float) -> TestFunction:
    """``(1 - (r/r0)^2)^2 sin^2``: nonzero on the axis, flat there in ``r``."""

    def phi(r):
        s = np.clip(1.0 - (np.asarray(r) / r0) ** 2, 0.0, None)
        return s**2

    def dphi(r):
        r = np.asarray(r)
        s = np.clip(1.0 - (r / r0) ** 2, 0.0, None)
        return -4.0 * r * s / r0**2

    psi, dpsi = _sin2(t0, t1)
    return TestFunction(phi, dphi, psi, dpsi, r0, t0, t1, "axis")


def interior_test(r0: float, t0: float, t1: float) -> TestFunction:
    """``sin^2`` bump in ``r`` on ``[r0/4, 3 r0/4]``; vanishes near the axis."""
    a, b = 0.25 * r0, 0.75 * r0

    def phi(r):
        r = np.asarray(r)
        return np.where((r > a) & (r < b), np.sin(np.pi * (r - a) / (b - a)) ** 2, 0.0)

    def dphi(r):
        r = np.asarray(r)
        return np.where((r > a) & (r < b), (np.pi / (b - a)) * np.sin(2 * np.pi * (r - a) / (b - a)), 0.0)

    psi, dpsi = _sin2(t0, t1)
    return TestFunction(phi, dphi, psi, dpsi, r0, t0, t1, "interior")


def beta(Z, theta: float):
    return Z ** (-1.0 - 1.0 / (theta + 1.0)) / (theta + 1.0)


def weighted_weak_residual(
    chart: RadialChart,
    Ztilde: np.ndarray,
    t_nodes: np.ndarray,
    test: TestFunction,
    r_nodes: np.ndarray | None = None,
) -> float:
    """Midpoint-rule value of the weak form on the cells of an ``(r, t)`` grid.

    ``Ztilde[j, k]`` lives at ``(t_nodes[j], r_nodes[k])``. Cell values of
    ``Z`` (and hence ``beta``) are four-corner averages; derivatives are cell
    differences. Cells beyond ``test.r0`` contribute nothing.

    Raises
    ------
    InputError
        If the test does not vanish at ``r0`` and at both time ends, or the
        grid is malformed.
    """
    r = chart.r_nodes if r_nodes is None else np.asarray(r_nodes, dtype=float)
    t = np.asarray(t_nodes, dtype=float)
    Zt = np.asarray(Ztilde, dtype=float)
    if Zt.shape != (len(t), len(r)):
        raise InputError(f"Ztilde has shape {Zt.shape}, expected {(len(t), len(r))}")
    scale = max(1.0, float(np.max(np.abs(test.phi(np.linspace(0, test.r0, 33))))))
    if abs(float(test.phi(test.r0))) > 1e-12 * scale:
        raise InputError("test function does not vanish at r0")
    if abs(float(test.psi(t[0]))) > 1e-12 or abs(float(test.psi(t[-1]))) > 1e-12:
        raise InputError("test function does not vanish at the time endpoints")
    if test.r0 > chart.r0 * (1 + 1e-12):
        raise InputError("test support exceeds the chart")
    keep = r[:-1] < test.r0
    dr = np.diff(r)
    dt = np.diff(t)
    rc = 0.5 * (r[1:] + r[:-1])[keep]
    tc = 0.5 * (t[1:] + t[:-1])
    Zc = 0.25 * (Zt[1:, 1:] + Zt[1:, :-1] + Zt[:-1, 1:] + Zt[:-1, :-1])[:, keep]
    Z_t = (0.5 * (Zt[1:, 1:] + Zt[1:, :-1] - Zt[:-1, 1:] - Zt[:-1, :-1]) / dt[:, None])[:, keep]
    Z_r = (0.5 * (Zt[1:, 1:] - Zt[1:, :-1] + Zt[:-1, 1:] - Zt[:-1, :-1]) / dr[None, :])[:, keep]
    W, A, D = chart.coefficients(np.minimum(rc, chart.r0))
    phi, dphi = test.phi(rc), test.dphi(rc)
    psi, dpsi = test.psi(tc)[:, None], test.dpsi(tc)[:, None]
    th = chart.coupling.theta
    integrand = W * (beta(Zc, th) * Z_t * phi * dpsi + A * Z_r * dphi * psi - D * Zc * phi * psi)
    return float(np.sum(integrand * dt[:, None] * dr[keep][None, :]))


def radial_Z(field: FlowField, r0: float, side: str = "left") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``Z`` near one edge in chart coordinates: ``(r_nodes, t_nodes, Ztilde)``.

    Includes every node with ``r <= r0`` and the first node beyond, so the
    grid covers the test support.
    """
    y = field.mesh.y_nodes
    Z = compute_Z(field)
    if side == "left":
        d, Zs = y - y[0], Z
    elif side == "right":
        d, Zs = (y[-1] - y)[::-1], Z[:, ::-1]
    else:
        raise InputError("side must be 'left' or 'right'")
    r = 2.0 * np.sqrt(d)
    k = int(np.searchsorted(r, r0)) + 1
    k = min(max(k, 2), len(r))
    return r[:k], field.mesh.t_nodes, Zs[:, :k]


# ---------------------------------------------------------------------------
# regular-singular ODE  y V' + b(y) V = F


@dataclass(frozen=True)
class RegularSingularODE:
    b_coeff: Callable
    forcing: Callable
    rho: float
    b0: float | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise InputError("rho must be positive")
        if self.b0 is None:
            object.__setattr__(self, "b0", float(self.b_coeff(np.array(0.0))))
        if not np.isfinite(self.b0) or self.b0 <= 0:
            raise DomainError(f"b(0)={self.b0} must be positive for an integrable kernel")

    @classmethod
    def from_problem(
        cls,
        p: PressureProfile,
        coupling: CouplingParams,
        forcing: Callable | None = None,
        rho: float | None = None,
    ) -> "RegularSingularODE":
        """``b(y) = (1 + c) p0'(y) / (c h(y))`` with ``h = p0 / y``; ``b(0) = (1 + c)/c``."""
        c = coupling.c_theta

        def b(y):
            y = np.asarray(y, dtype=float)
            return (1.0 + c) * np.where(y > 0, p.dp(y), p.slope_left) / (c * _h(p, y))

        forcing = forcing or (lambda y: np.ones_like(np.asarray(y, dtype=float)))
        return cls(b, forcing, p.neighborhood if rho is None else rho, coupling.b0)

    def F(self, y, t=None):
        return self.forcing(y) if t is None else self.forcing(y, t)


def _holder_probe(b_coeff: Callable, b0: float, y: float) -> None:
    s = y * 4.0 ** -np.arange(4, 13)
    q = np.abs(np.asarray(b_coeff(s), dtype=float) - b0)
    if not np.all(np.isfinite(q)):
        raise DomainError("b is not finite near 0")
    tiny = 1e-12 * (1.0 + abs(b0))
    if q[-1] > tiny and q[-3:].max() > 0.5 * q[:3].max():
        raise DomainError("(b(s) - b(0))/s is not integrable at 0: b is not Hölder continuous there")


def mu_integrating_factor(b_coeff: Callable, y, b0: float | None = None) -> np.ndarray:
    """``exp int_0^y (b(s) - b0)/s ds`` via ``s = y w^2`` and Gauss-Legendre in ``w``."""
    y = np.asarray(y, dtype=float)
    b0 = float(b_coeff(np.array(0.0))) if b0 is None else b0
    ymax = float(np.max(y)) if y.size else 0.0
    if ymax > 0:
        _holder_probe(b_coeff, b0, ymax)
    x, wts = roots_legendre(QUAD_NODES)
    w = 0.5 * (x + 1.0)
    wts = 0.5 * wts
    s = y[..., None] * w**2
    integral = np.sum(wts * 2.0 * (np.asarray(b_coeff(s), dtype=float) - b0) / w, axis=-1)
    return np.exp(integral)


def volterra_solve(ode: RegularSingularODE, grid, t=None) -> np.ndarray:
    """Bounded solution ``V(y) = int_0^1 lam^(b0-1) mu(lam y)/mu(y) F(lam y) dlam``.

    The ``lam^(b0-1)`` factor is absorbed into Gauss-Jacobi weights.
    """
    y = np.asarray(grid, dtype=float)
    if np.any(y < 0) or np.any(y > ode.rho * (1 + 1e-12)):
        raise InputError("grid must lie in [0, rho]")
    b0 = ode.b0
    x, wts = roots_jacobi(QUAD_NODES, 0.0, b0 - 1.0)
    lam = 0.5 * (x + 1.0)
    wts = wts * 0.5**b0
    ly = y[..., None] * lam
    mu_y = mu_integrating_factor(ode.b_coeff, y, b0)
    mu_ly = mu_integrating_factor(ode.b_coeff, ly, b0)
    F = np.asarray(ode.F(ly, t), dtype=float)
    return np.sum(wts * mu_ly * F, axis=-1) / mu_y


@dataclass(frozen=True)
class ShootingReport:
    eps: np.ndarray
    y_end: float
    b0: float
    deviation_plus: np.ndarray  # |V_+(y_end) - V(y_end)| per start
    deviation_minus: np.ndarray
    volterra_endpoint: np.ndarray  # shot from Volterra(eps)
    reference_endpoint: float

    @property
    def ratios(self) -> np.ndarray:
        """Deviation ratio per halving of ``eps`` (both branches, worst case)."""
        rp = self.deviation_plus[:-1] / self.deviation_plus[1:]
        rm = self.deviation_minus[:-1] / self.deviation_minus[1:]
        return np.minimum(rp, rm)

    @property
    def volterra_change(self) -> float:
        return float(np.max(np.abs(np.diff(self.volterra_endpoint))))

    def passed(self, slack: float = 0.1, tol: float = 1e-6) -> bool:
        return bool(np.all(self.ratios >= 2.0 ** (self.b0 - slack)) and self.volterra_change <= tol)


def shooting_diagnostic(
    ode: RegularSingularODE,
    eps0: float = 1e-2,
    halvings: int = 3,
    y_end: float | None = None,
    kick: float = 1.0,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> ShootingReport:
    """Shoot ``V' = (F - b V)/y`` forward from ``eps`` and compare branches.

    A start value off the Volterra branch carries a multiple of the singular
    mode, whose size at ``eps`` relative to its size at ``y_end`` is about
    ``(y_end/eps)^b0``; a unit kick at ``eps`` therefore leaves an endpoint
    deviation proportional to ``eps^b0``, and halving ``eps`` divides it by
    ``2^b0``. The branch started on the Volterra value is insensitive to
    ``eps``.
    """
    y_end = ode.rho if y_end is None else y_end
    eps = eps0 * 0.5 ** np.arange(halvings + 1)

    def rhs(y, V):
        return (ode.F(np.array(y)) - ode.b_coeff(np.array(y)) * V) / y

    def shoot(e, v):
        sol = solve_ivp(rhs, (e, y_end), [v], method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise DomainError(f"shooting from eps={e} failed: {sol.message}")
        return float(sol.y[0, -1])

    v_eps = volterra_solve(ode, eps)
    vol = np.array([shoot(e, v) for e, v in zip(eps, v_eps)])
    plus = np.array([shoot(e, v + kick) for e, v in zip(eps, v_eps)])
    minus = np.array([shoot(e, v - kick) for e, v in zip(eps, v_eps)])
    ref = float(volterra_solve(ode, np.array([y_end]))[0])
    return ShootingReport(eps, y_end, ode.b0, np.abs(plus - vol), np.abs(minus - vol), vol, ref)


__all__ = [
    "compute_Z",
    "compute_V",
    "RadialChart",
    "build_radial_chart",
    "effective_dimension_fit",
    "TestFunction",
    "axis_test",
    "interior_test",
    "beta",
    "weighted_weak_residual",
    "radial_Z",
    "RegularSingularODE",
    "mu_integrating_factor",
    "volterra_solve",
    "ShootingReport",
    "shooting_diagnostic",
]
