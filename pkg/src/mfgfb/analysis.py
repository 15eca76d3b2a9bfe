"""Diagnostics on solved flows.

Free-boundary curves and their accelerations, Eulerian reconstruction of
``(m, p, u_x, u)``, residuals of the Eulerian system and of the mass
relation, and log-log rate fits near the free boundary.

All norms are restricted to the measurement window ``J`` of the problem.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import PchipInterpolator

from . import exact_oracle as ex
from .errors import InputError, StateError
from .lagrangian_solver import FlowField, Mesh, SolverConfig, continuation_solve, newton_solve, oracle_field
from .problem import ProblemSpec
from .rates import RateFit, holder_exponent
from .transforms import build_radial_chart, effective_dimension_fit

logger = logging.getLogger(__name__)

COLLAR = 2
MIN_OFFSETS = 6


def _window_mask(t: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    eps = 1e-12 * max(1.0, abs(window[1]))
    return (t >= window[0] - eps) & (t <= window[1] + eps)


# ---------------------------------------------------------------------------
# free boundary


@dataclass(frozen=True, eq=False)
class FreeBoundaryCurves:
    t: np.ndarray
    left: np.ndarray
    right: np.ndarray
    left_dd: np.ndarray  # centred second differences, NaN at the time ends
    right_dd: np.ndarray
    window: tuple[float, float]

    @property
    def in_window(self) -> np.ndarray:
        return _window_mask(self.t, self.window)

    def table(self) -> np.ndarray:
        return np.column_stack([self.t, self.left, self.right, self.left_dd, self.right_dd])


def _dd3(g: np.ndarray, dt: float) -> np.ndarray:
    out = np.full_like(g, np.nan)
    out[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / dt**2
    return out


def _dd5(g: np.ndarray, dt: float) -> np.ndarray:
    out = np.full_like(g, np.nan)
    out[2:-2] = (-g[4:] + 16.0 * g[3:-1] - 30.0 * g[2:-2] + 16.0 * g[1:-3] - g[:-4]) / (12.0 * dt**2)
    return out


def free_boundary_curves(field: FlowField, window: tuple[float, float] | None = None) -> FreeBoundaryCurves:
    t = field.mesh.t_nodes
    window = window or (t[0], t[-1])
    dt = field.mesh.dt
    L, R = field.left.copy(), field.right.copy()
    return FreeBoundaryCurves(t, L, R, _dd3(L, dt), _dd3(R, dt), window)


@dataclass(frozen=True)
class AccelerationResidual:
    left: float
    right: float

    @property
    def value(self) -> float:
        return max(self.left, self.right)


def acceleration_residual(field: FlowField, prob: ProblemSpec) -> AccelerationResidual:
    """``sup_J |gamma_L'' - p0'(0+) Z(0, .)|`` and the right analogue.

    ``gamma''`` uses the fourth-order five-point difference, so the value
    measures how far the discrete solution is from the continuum identity
    rather than re-evaluating the solver's own boundary row.
    """
    t = field.mesh.t_nodes
    dt = field.mesh.dt
    if field.mesh.nt < 5:
        raise InputError("acceleration residual needs at least five time levels")
    mask = _window_mask(t, prob.measurement_window) & np.isfinite(_dd5(t, dt))
    Z = field.Z
    res = []
    for g, slope, z in ((field.left, prob.initial.slope_left, Z[:, 0]), (field.right, prob.initial.slope_right, Z[:, -1])):
        r = np.abs(_dd5(g, dt) - slope * z)[mask]
        res.append(float(r.max()) if r.size else float("nan"))
    return AccelerationResidual(*res)


# ---------------------------------------------------------------------------
# Eulerian reconstruction


@dataclass(frozen=True, eq=False)
class EulerianField:
    x_nodes: np.ndarray
    t_nodes: np.ndarray
    m: np.ndarray
    p: np.ndarray
    u_x: np.ndarray
    u: np.ndarray  # NaN outside the support: exterior values are not determined
    support_mask: np.ndarray
    left: np.ndarray
    right: np.ndarray
    chart_s: np.ndarray
    chart_Y: np.ndarray
    chart_P: np.ndarray
    anchor: tuple[float, float]
    theta: float
    edge_spacing: np.ndarray  # x-width of the first Lagrangian cell at each edge, per time
    pressure_at: Callable = field(repr=False, default=None)  # (x, j) -> zero-extended p at time index j
    velocity_at: Callable = field(repr=False, default=None)

    @property
    def dx(self) -> float:
        return float(self.x_nodes[1] - self.x_nodes[0])

    @property
    def dt(self) -> float:
        return float(self.t_nodes[1] - self.t_nodes[0])


def _slice_interpolants(field: FlowField, prob: ProblemSpec):
    y = field.mesh.y_nodes
    theta = prob.theta
    p0 = prob.initial.p(y)
    p0[0] = p0[-1] = 0.0
    P = p0 * field.gamma_y ** (-theta)
    UX = -field.gamma_t
    G = field.gamma
    try:
        inv = [PchipInterpolator(G[j], y) for j in range(field.mesh.nt)]
        pres = [PchipInterpolator(G[j], P[j]) for j in range(field.mesh.nt)]
        vel = [PchipInterpolator(G[j], UX[j]) for j in range(field.mesh.nt)]
    except ValueError as exc:
        raise StateError(f"cannot invert x = gamma(y, t): {exc}") from exc
    return inv, pres, vel, P, UX


def eulerian_reconstruct(field: FlowField, prob: ProblemSpec, nx: int | None = None) -> EulerianField:
    """Eulerian fields on a uniform ``x`` grid covering every support slice.

    ``p`` and ``u_x`` are monotone cubic interpolants of the Lagrangian
    values ``p0 gamma_y^-theta`` and ``-gamma_t`` in ``x = gamma``, and are
    zero outside the support. ``u`` integrates ``u_x`` in ``x`` from an
    anchor inside the support and follows ``u_t = u_x^2/2 - p`` in ``t``
    along the anchor, with ``u = 0`` at the anchor at the window midpoint.

    Raises
    ------
    StateError
        If a slice of the flow is not invertible or the anchor leaves the
        support.
    """
    field.check_monotone()
    mesh = field.mesh
    t = mesh.t_nodes
    nt = mesh.nt
    nx = nx or 2 * mesh.ny - 1
    L, R = field.left, field.right
    lo, hi = float(L.min()), float(R.max())
    pad = 0.05 * (hi - lo)
    x = np.linspace(lo - pad, hi + pad, nx)
    inv, pres, vel, Pn, UXn = _slice_interpolants(field, prob)

    mask = (x[None, :] >= L[:, None]) & (x[None, :] <= R[:, None])
    p = np.zeros((nt, nx))
    ux = np.zeros((nt, nx))
    for j in range(nt):
        k = mask[j]
        p[j, k] = np.maximum(pres[j](x[k]), 0.0)
        ux[j, k] = vel[j](x[k])
    m = p ** (1.0 / prob.theta)

    # anchor and value function
    J0, J1 = prob.measurement_window
    tbar = 0.5 * (J0 + J1)
    jbar = int(np.argmin(np.abs(t - tbar)))
    xa = 0.5 * (L[jbar] + R[jbar])
    if np.any(xa <= L) or np.any(xa >= R):
        raise StateError("anchor point leaves the support")
    ux_a = np.array([vel[j](xa) for j in range(nt)])
    p_a = np.array([pres[j](xa) for j in range(nt)])
    A = cumulative_trapezoid(0.5 * ux_a**2 - p_a, t, initial=0.0)
    A -= np.interp(tbar, t, A)
    y = mesh.y_nodes
    u = np.full((nt, nx), np.nan)
    for j in range(nt):
        U = cumulative_trapezoid(UXn[j] * field.gamma_y[j], y, initial=0.0)
        Uint = PchipInterpolator(y, U)
        k = mask[j]
        u[j, k] = A[j] + Uint(inv[j](x[k])) - Uint(inv[j](xa))

    # boundary-fitted chart at the left edge
    width = R - L
    smax = float(min(width.min() / 8.0, prob.initial.neighborhood))
    s = np.linspace(0.0, smax, 129)
    Y = np.array([np.clip(inv[j](L[j] + s), 0.0, prob.initial.b) for j in range(nt)])
    P = np.array([np.maximum(pres[j](L[j] + s), 0.0) for j in range(nt)])
    edge = np.column_stack([field.gamma[:, 1] - L, R - field.gamma[:, -2]])

    def pressure_at(xq, j):
        xq = np.asarray(xq, dtype=float)
        inside = (xq >= L[j]) & (xq <= R[j])
        return np.where(inside, np.maximum(pres[j](np.clip(xq, L[j], R[j])), 0.0), 0.0)

    def velocity_at(xq, j):
        xq = np.asarray(xq, dtype=float)
        inside = (xq >= L[j]) & (xq <= R[j])
        return np.where(inside, vel[j](np.clip(xq, L[j], R[j])), 0.0)

    return EulerianField(
        x, t, m, p, ux, u, mask, L.copy(), R.copy(), s, Y, P, (float(xa), float(tbar)), prob.theta, edge,
        pressure_at, velocity_at,
    )


def mixed_path_discrepancy(ef: EulerianField, frac: float = 0.25) -> float:
    """Difference between the two path orders for ``u`` at a second point.

    ``ef.u`` goes anchor -> (t along the anchor) -> (x at fixed t). Here the
    order is swapped: x at the anchor time, then t along the target column.
    """
    xa, tbar = ef.anchor
    t = ef.t_nodes
    jbar = int(np.argmin(np.abs(t - tbar)))
    xb = xa + frac * float(np.min(ef.right - ef.left))
    if np.any(xb >= ef.right) or np.any(xb <= ef.left):
        raise StateError("second point leaves the support")
    jb = len(t) - 1 - jbar // 2
    # x then t
    xs = np.linspace(xa, xb, 257)
    ux_row = ef.velocity_at(xs, jbar)
    ux_bar = trapezoid(ux_row, xs)
    col = np.array([0.5 * ef.velocity_at(xb, j) ** 2 - ef.pressure_at(xb, j) for j in range(len(t))])
    ct = cumulative_trapezoid(col, t, initial=0.0)
    u_swapped = ux_bar + ct[jb] - np.interp(tbar, t, ct)
    u_direct = float(np.interp(xb, ef.x_nodes, ef.u[jb]))
    return float(abs(u_swapped - u_direct))


def mass_relation_residual(
    field: FlowField,
    prob: ProblemSpec,
    pressure: Callable | None = None,
    gamma_y: np.ndarray | None = None,
) -> float:
    """``sup_J |p0(y) - p(gamma(y,t), t) gamma_y^theta|`` over mesh nodes.

    ``pressure(x, j)`` defaults to the Eulerian reconstruction at time index
    ``j``; ``gamma_y`` defaults to the solver's node slopes.
    """
    if pressure is None:
        pressure = eulerian_reconstruct(field, prob).pressure_at
    gy = field.gamma_y if gamma_y is None else np.asarray(gamma_y)
    y = field.mesh.y_nodes
    p0 = prob.initial.p(y)
    p0[0] = p0[-1] = 0.0
    js = np.nonzero(_window_mask(field.mesh.t_nodes, prob.measurement_window))[0]
    worst = 0.0
    for j in js:
        pj = np.asarray(pressure(field.gamma[j], j), dtype=float)
        worst = max(worst, float(np.max(np.abs(p0 - pj * gy[j] ** prob.theta))))
    return worst


@dataclass(frozen=True)
class PDEResiduals:
    hj: float
    continuity: float
    collar: int
    points: int


def pde_residuals(ef: EulerianField, window: tuple[float, float], collar: int = COLLAR) -> PDEResiduals:
    """Centred-difference residuals of ``-u_t + u_x^2/2 - p`` and ``m_t - (m u_x)_x``.

    Only points whose stencil stays at least ``collar`` cells inside the
    support at the three time levels involved are used. With ``collar=0``
    every stencil touching the support counts, which exposes the slope jump
    of the zero-extended fields at the free boundary.
    """
    x, t = ef.x_nodes, ef.t_nodes
    dx, dt = ef.dx, ef.dt
    u, ux, p, m = ef.u, ef.u_x, ef.p, ef.m
    u_t = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * dt)
    hj = -u_t + 0.5 * ux[1:-1, 1:-1] ** 2 - p[1:-1, 1:-1]
    flux = m * ux
    cont = (m[2:, 1:-1] - m[:-2, 1:-1]) / (2 * dt) - (flux[1:-1, 2:] - flux[1:-1, :-2]) / (2 * dx)
    xi = x[1:-1][None, :]
    margin = (collar + 1) * dx
    ok = np.ones_like(hj, dtype=bool)
    for dj in (0, 1, 2):
        L = ef.left[dj : len(t) - 2 + dj][:, None]
        R = ef.right[dj : len(t) - 2 + dj][:, None]
        if collar > 0:
            ok &= (xi - L >= margin) & (R - xi >= margin)
        else:
            ok &= (xi + dx >= L) & (xi - dx <= R)
    ok &= _window_mask(t[1:-1], window)[:, None]
    hj_ok = ok & np.isfinite(hj)
    return PDEResiduals(
        float(np.max(np.abs(hj[hj_ok]))) if hj_ok.any() else float("nan"),
        float(np.max(np.abs(cont[ok]))) if ok.any() else float("nan"),
        collar,
        int(ok.sum()),
    )


# ---------------------------------------------------------------------------
# rates and regularity metrics


def dyadic_offsets(h: float, smax: float, min_count: int = MIN_OFFSETS) -> np.ndarray:
    """Offsets ``smax 2^-k`` down to ``4h``; at least ``min_count`` of them."""
    k = int(np.floor(np.log2(smax / (4.0 * h)))) + 1 if smax > 4.0 * h else 0
    k = max(k, min_count)
    return smax * 0.5 ** np.arange(k)


def pressure_rate_fit(ef: EulerianField, j: int, side: str = "left", rho: float | None = None) -> RateFit:
    """Exponent of ``p`` vanishing at one free boundary at time index ``j``."""
    width = float(ef.right[j] - ef.left[j])
    smax = width / 8.0 if rho is None else min(width / 8.0, rho)
    h = float(ef.edge_spacing[j, 0 if side == "left" else 1])
    s = dyadic_offsets(h, smax)
    xq = ef.left[j] + s if side == "left" else ef.right[j] - s
    return holder_exponent(s, ef.pressure_at(xq, j), target=1.0, tol=0.1)


def pressure_rate_fits(ef: EulerianField, prob: ProblemSpec, n_times: int = 5) -> list[tuple[float, str, RateFit]]:
    t = ef.t_nodes
    J0, J1 = prob.measurement_window
    out = []
    for tq in np.linspace(J0, J1, n_times):
        j = int(np.argmin(np.abs(t - tq)))
        for side in ("left", "right"):
            out.append((float(t[j]), side, pressure_rate_fit(ef, j, side, prob.initial.neighborhood)))
    return out


def lipschitz_constant(ef: EulerianField, window: tuple[float, float]) -> float:
    """Largest difference quotient of the zero-extended ``p`` in ``x`` and ``t`` on ``J``."""
    mask = _window_mask(ef.t_nodes, window)
    p = ef.p[mask]
    qx = np.abs(np.diff(p, axis=1)) / ef.dx
    qt = np.abs(np.diff(p, axis=0)) / ef.dt
    return float(max(qx.max(), qt.max() if qt.size else 0.0))


def kink_second_difference(ef: EulerianField, window: tuple[float, float], h: float | None = None) -> float:
    """``|p(x*-h) - 2 p(x*) + p(x*+h)| / h^2`` centred on each free boundary.

    The stencil sits on the boundary itself so the value is ``slope jump / h``
    up to curvature, independent of where grid lines fall.
    """
    h = ef.dx if h is None else h
    worst = 0.0
    for j in np.nonzero(_window_mask(ef.t_nodes, window))[0]:
        for xb in (ef.left[j], ef.right[j]):
            pts = ef.pressure_at(np.array([xb - h, xb, xb + h]), j)
            worst = max(worst, abs(pts[0] - 2 * pts[1] + pts[2]) / h**2)
    return float(worst)


def velocity_jump(ef: EulerianField, field: FlowField, window: tuple[float, float]) -> float:
    """``sup_J |u_x(x_b, t) + gamma_b'(t)|`` at both edges, with ``u_x`` from inside."""
    mask = _window_mask(ef.t_nodes, window)
    dL = np.gradient(field.left, field.mesh.t_nodes, edge_order=2)
    dR = np.gradient(field.right, field.mesh.t_nodes, edge_order=2)
    worst = 0.0
    for j in np.nonzero(mask)[0]:
        worst = max(worst, abs(ef.velocity_at(ef.left[j], j) + dL[j]), abs(ef.velocity_at(ef.right[j], j) + dR[j]))
    return float(worst)


def oracle_gradient_rate(theta: float, t: float = 1.5, R: float = 1.0, n: int = 12) -> RateFit:
    """Exponent of ``|u_x(x) - u_x(x*)|`` for ``x > x*`` using the exterior extension."""
    sol = ex.SelfSimilarSolution(theta, R)
    xs = float(sol.half_width(t))
    d = xs / 8.0 * 0.5 ** np.arange(n)
    ux_star = float(ex.value_gradient(sol, xs, t))
    inc = np.asarray(ex.value_gradient(sol, xs + d, t), dtype=float) - ux_star
    return holder_exponent(d, inc, target=0.5, tol=0.1)


# ---------------------------------------------------------------------------
# convergence against the closed form


@dataclass
class ConvergenceTable:
    levels: list[int]
    errors: dict[str, list[float]]  # quantity -> error per level
    iterations: list[int] = field(default_factory=list)

    def orders(self, quantity: str) -> list[float]:
        e = self.errors[quantity]
        return [float(np.log2(e[k] / e[k + 1])) for k in range(len(e) - 1)]

    def rows(self) -> list[dict]:
        out = []
        for k, n in enumerate(self.levels):
            row = {"level": n, "iterations": self.iterations[k] if self.iterations else None}
            for q, e in self.errors.items():
                row[q] = e[k]
                row[q + "_order"] = self.orders(q)[k - 1] if k > 0 else None
            out.append(row)
        return out


def _weighted_l2(err: np.ndarray, mesh: Mesh) -> float:
    wy = np.gradient(mesh.y_nodes)
    wt = np.gradient(mesh.t_nodes)
    return float(np.sqrt(np.sum(err**2 * wt[:, None] * wy[None, :]) / (mesh.b * mesh.horizon)))


def level_errors(field: FlowField, prob: ProblemSpec) -> dict[str, float]:
    """Errors of ``gamma``, Lagrangian ``p`` and ``u_x`` against the oracle on the mesh."""
    mesh = field.mesh
    exact = oracle_field(prob, mesh)
    y = mesh.y_nodes
    p0 = prob.initial.p(y)
    p0[0] = p0[-1] = 0.0
    ref = prob.reference
    gy_ex = ref.flow_y(mesh.t_nodes)[:, None]
    T, Y = np.meshgrid(mesh.t_nodes, y, indexing="ij")
    e_g = field.gamma - exact.gamma
    e_p = p0 * field.gamma_y ** (-prob.theta) - p0 * gy_ex ** (-prob.theta)
    e_u = -field.gamma_t + ref.flow_t(Y, T)
    scale = float(np.max(np.abs(exact.gamma)))
    return {
        "gamma_linf": float(np.max(np.abs(e_g))),
        "gamma_rel_linf": float(np.max(np.abs(e_g))) / scale,
        "gamma_l2": _weighted_l2(e_g, mesh),
        "p_linf": float(np.max(np.abs(e_p))),
        "p_l2": _weighted_l2(e_p, mesh),
        "ux_linf": float(np.max(np.abs(e_u))),
        "ux_l2": _weighted_l2(e_u, mesh),
    }


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MFGFB_THREADS", "1")))
    except ValueError:
        return 1


def solve_level(prob: ProblemSpec, n: int, cfg: SolverConfig | None = None) -> tuple[FlowField, int]:
    cfg = cfg or SolverConfig()
    mesh = Mesh.build(prob.initial.b, prob.horizon, n, n)
    if cfg.continuation_levels > 1:
        f, traces = continuation_solve(prob, cfg, mesh)
        return f, sum(tr.iterations for tr in traces)
    f, tr = newton_solve(prob, cfg, mesh=mesh)
    return f, tr.iterations


def convergence_study(
    prob: ProblemSpec,
    levels=(33, 65, 129),
    cfg: SolverConfig | None = None,
    workers: int | None = None,
) -> tuple[ConvergenceTable, list[FlowField]]:
    """Solve on each level and tabulate errors against the closed form.

    Raises
    ------
    InputError
        If the problem carries no closed-form reference.
    """
    if prob.reference is None:
        raise InputError("convergence_study needs an oracle-backed problem")
    levels = list(levels)
    workers = workers or default_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda n: solve_level(prob, n, cfg), levels))
    else:
        results = [solve_level(prob, n, cfg) for n in levels]
    fields = [r[0] for r in results]
    errs = [level_errors(f, prob) for f in fields]
    table = ConvergenceTable(levels, {k: [e[k] for e in errs] for k in errs[0]}, [r[1] for r in results])
    return table, fields


# ---------------------------------------------------------------------------
# report


@dataclass
class RegularityReport:
    curves: FreeBoundaryCurves
    acceleration: AccelerationResidual
    mass_relation: float
    residuals: PDEResiduals
    pressure_fits: list[tuple[float, str, RateFit]]
    gradient_fit: RateFit | None
    dimension_fit: RateFit
    lipschitz: float
    kink: float
    velocity_jump: float

    def rates_rows(self) -> list[tuple]:
        rows = [(f"p_{side}@t={t:.6g}", f.exponent, f.r2, f"[{f.target - f.tol:g},{f.target + f.tol:g}]") for t, side, f in self.pressure_fits]
        if self.gradient_fit is not None:
            g = self.gradient_fit
            rows.append(("u_x_exterior", g.exponent, g.r2, f"[{g.target - g.tol:g},{g.target + g.tol:g}]"))
        d = self.dimension_fit
        rows.append(("log_W_slope", d.exponent, d.r2, f"[{d.target - d.tol:g},{d.target + d.tol:g}]"))
        return rows

    def as_dict(self) -> dict:
        def fit(f):
            return None if f is None else {**asdict(f), "passed": f.passed, "flags": f.flags}

        return {
            "acceleration_residual": asdict(self.acceleration),
            "mass_relation_residual": self.mass_relation,
            "hj_residual": self.residuals.hj,
            "continuity_residual": self.residuals.continuity,
            "collar": self.residuals.collar,
            "pressure_fits": [{"t": t, "side": s, **fit(f)} for t, s, f in self.pressure_fits],
            "gradient_fit": fit(self.gradient_fit),
            "dimension_fit": fit(self.dimension_fit),
            "lipschitz": self.lipschitz,
            "kink_second_difference": self.kink,
            "velocity_jump": self.velocity_jump,
            "window": list(self.curves.window),
        }


def regularity_report(field: FlowField, prob: ProblemSpec, ef: EulerianField | None = None) -> RegularityReport:
    ef = ef or eulerian_reconstruct(field, prob)
    J = prob.measurement_window
    chart = build_radial_chart(prob.initial, prob.coupling, 0.95 * 2.0 * np.sqrt(prob.initial.neighborhood))
    grad = None
    if prob.reference is not None:
        ref = prob.reference
        grad = oracle_gradient_rate(prob.theta, ref.t0 + 0.5 * (J[0] + J[1]), ref.solution.R)
    return RegularityReport(
        curves=free_boundary_curves(field, J),
        acceleration=acceleration_residual(field, prob),
        mass_relation=mass_relation_residual(field, prob, ef.pressure_at),
        residuals=pde_residuals(ef, J),
        pressure_fits=pressure_rate_fits(ef, prob),
        gradient_fit=grad,
        dimension_fit=effective_dimension_fit(chart),
        lipschitz=lipschitz_constant(ef, J),
        kink=kink_second_difference(ef, J),
        velocity_jump=velocity_jump(ef, field, J),
    )


__all__ = [
    "FreeBoundaryCurves",
    "free_boundary_curves",
    "AccelerationResidual",
    "acceleration_residual",
    "EulerianField",
    "eulerian_reconstruct",
    "mixed_path_discrepancy",
    "mass_relation_residual",
    "PDEResiduals",
    "pde_residuals",
    "dyadic_offsets",
    "pressure_rate_fit",
    "pressure_rate_fits",
    "lipschitz_constant",
    "kink_second_difference",
    "velocity_jump",
    "oracle_gradient_rate",
    "ConvergenceTable",
    "level_errors",
    "convergence_study",
    "solve_level",
    "RegularityReport",
    "regularity_report",
    "RateFit",
]
