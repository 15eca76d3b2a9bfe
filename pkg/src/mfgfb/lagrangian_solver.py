"""Space-time Newton solver for the Lagrangian flow equation.

Unknown: the flow map ``gamma(y, t)`` on a tensor mesh of ``[0, b] x [0, T]``.
Interior rows discretize

    gamma_tt = p0' Z + c_theta p0 Z_y,        Z = gamma_y ** -(theta + 1),

with ``Z`` evaluated on cell faces from one-sided slopes and interpolated to
nodes. At ``y = 0`` and ``y = b`` the ``p0 Z_y`` term is dropped (``p0``
vanishes there and ``Z_y`` stays bounded), so the endpoint rows read
``gamma_tt = p0'(edge) Z(edge)``. The initial row is ``gamma = y``; the
terminal row is either the planning Dirichlet condition ``gamma = gamma_T``
or the terminal-cost condition ``gamma_t + c1 (p0' Z + c_theta p0 Z_y) = 0``.

Unknowns are stored time-major, ``k = j * ny + i``, so the Jacobian is banded
with half-bandwidth ``ny`` (``2 ny`` below the diagonal for the one-sided
terminal-cost stencil).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_banded

from .errors import DomainError, InputError, MonotonicityError, NonConvergenceError, StateError, StepError
from .problem import ProblemSpec, TerminalKind

logger = logging.getLogger(__name__)

MIN_NODES = 17


class Grading(enum.Enum):
    UNIFORM = "uniform"
    SQRT = "sqrt"


def graded_nodes(a: float, b: float, n: int, grading: Grading) -> np.ndarray:
    """Nodes on ``[a, b]``.

    ``SQRT`` places the outer thirds of a uniform parameter on the outer
    quarters of the support through ``y = (L/4) (3 xi)**2``, i.e. uniformly
    in ``r = 2 sqrt(y)``; the middle half is uniform and the map is C^1.
    """
    xi = np.linspace(0.0, 1.0, n)
    L = b - a
    if grading is Grading.UNIFORM:
        y = L * xi
    else:
        y = np.where(
            xi <= 1.0 / 3.0,
            0.25 * L * (3.0 * xi) ** 2,
            np.where(xi >= 2.0 / 3.0, L - 0.25 * L * (3.0 * (1.0 - xi)) ** 2, 0.25 * L + 1.5 * L * (xi - 1.0 / 3.0)),
        )
    y[0], y[-1] = 0.0, L
    return a + y


@dataclass(frozen=True, eq=False)
class Mesh:
    y_nodes: np.ndarray
    t_nodes: np.ndarray
    grading: Grading = Grading.UNIFORM

    def __post_init__(self):
        for name, nodes in (("y", self.y_nodes), ("t", self.t_nodes)):
            if nodes.ndim != 1 or len(nodes) < 3 or not np.all(np.diff(nodes) > 0):
                raise InputError(f"{name}-nodes must be strictly increasing with at least 3 entries")
        dt = np.diff(self.t_nodes)
        if not np.allclose(dt, dt[0], rtol=1e-10, atol=0.0):
            raise InputError("time nodes must be uniform")

    @classmethod
    def build(
        cls,
        b: float,
        horizon: float,
        ny: int,
        nt: int,
        grading: Grading | str = Grading.SQRT,
        min_nodes: int = MIN_NODES,
    ) -> "Mesh":
        grading = Grading(grading)
        if ny < min_nodes or nt < min_nodes:
            raise InputError(f"mesh needs at least {min_nodes} nodes per axis, got {ny}x{nt}")
        return cls(graded_nodes(0.0, b, ny, grading), np.linspace(0.0, horizon, nt), grading)

    @property
    def ny(self) -> int:
        return len(self.y_nodes)

    @property
    def nt(self) -> int:
        return len(self.t_nodes)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt, self.ny)

    @property
    def dt(self) -> float:
        return float(self.t_nodes[1] - self.t_nodes[0])

    @property
    def b(self) -> float:
        return float(self.y_nodes[-1])

    @property
    def horizon(self) -> float:
        return float(self.t_nodes[-1])

    def with_size(self, ny: int, nt: int, min_nodes: int = MIN_NODES) -> "Mesh":
        return Mesh.build(self.b, self.horizon, ny, nt, self.grading, min_nodes=min_nodes)

    @cached_property
    def stencil(self) -> "Stencil":
        return Stencil.from_nodes(self.y_nodes)


@dataclass(frozen=True, eq=False)
class Stencil:
    """Geometric weights of the y-discretization on a (possibly graded) grid."""

    h: np.ndarray  # face widths, length ny-1
    w_prev: np.ndarray  # weight of face i-1 at interior node i
    w_next: np.ndarray  # weight of face i
    H: np.ndarray  # distance between the two faces around node i
    left: np.ndarray  # one-sided 3-point derivative at y_0
    right: np.ndarray  # one-sided 3-point derivative at y_{n-1}

    @classmethod
    def from_nodes(cls, y: np.ndarray) -> "Stencil":
        h = np.diff(y)
        hp, hn = h[:-1], h[1:]
        h0, h1 = h[0], h[1]
        hA, hB = h[-2], h[-1]
        left = np.array([-(2 * h0 + h1) / (h0 * (h0 + h1)), (h0 + h1) / (h0 * h1), -h0 / (h1 * (h0 + h1))])
        right = np.array([hB / (hA * (hA + hB)), -(hA + hB) / (hA * hB), (2 * hB + hA) / (hB * (hA + hB))])
        return cls(h=h, w_prev=hn / (hp + hn), w_next=hp / (hp + hn), H=0.5 * (hp + hn), left=left, right=right)

    def face_slopes(self, G: np.ndarray) -> np.ndarray:
        return np.diff(G, axis=-1) / self.h

    def end_slopes(self, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return G[..., :3] @ self.left, G[..., -3:] @ self.right

    def node_slopes(self, G: np.ndarray) -> np.ndarray:
        g = self.face_slopes(G)
        out = np.empty_like(G)
        out[..., 1:-1] = self.w_prev * g[..., :-1] + self.w_next * g[..., 1:]
        out[..., 0], out[..., -1] = self.end_slopes(G)
        return out


@dataclass(frozen=True, eq=False)
class FlowField:
    """Discrete Lagrangian map on a mesh; ``gamma[j, i] = gamma(y_i, t_j)``."""

    mesh: Mesh
    gamma: np.ndarray
    theta: float

    def __post_init__(self):
        if self.gamma.shape != self.mesh.shape:
            raise InputError(f"gamma has shape {self.gamma.shape}, mesh expects {self.mesh.shape}")

    @cached_property
    def face_slopes(self) -> np.ndarray:
        return self.mesh.stencil.face_slopes(self.gamma)

    @cached_property
    def gamma_y(self) -> np.ndarray:
        return self.mesh.stencil.node_slopes(self.gamma)

    @cached_property
    def gamma_t(self) -> np.ndarray:
        return np.gradient(self.gamma, self.mesh.t_nodes, axis=0, edge_order=2)

    @cached_property
    def Z_faces(self) -> np.ndarray:
        return self.face_slopes ** (-(self.theta + 1.0))

    @cached_property
    def Z(self) -> np.ndarray:
        """Node values: faces interpolated inside, one-sided slopes at the ends."""
        st = self.mesh.stencil
        Zf = self.Z_faces
        out = np.empty_like(self.gamma)
        out[:, 1:-1] = st.w_prev * Zf[:, :-1] + st.w_next * Zf[:, 1:]
        gl, gr = st.end_slopes(self.gamma)
        out[:, 0] = gl ** (-(self.theta + 1.0))
        out[:, -1] = gr ** (-(self.theta + 1.0))
        return out

    @property
    def left(self) -> np.ndarray:
        return self.gamma[:, 0]

    @property
    def right(self) -> np.ndarray:
        return self.gamma[:, -1]

    def slope_bounds(self) -> tuple[float, float]:
        g = np.concatenate([self.face_slopes.ravel(), self.gamma_y[:, [0, -1]].ravel()])
        return float(g.min()), float(g.max())

    def check_monotone(self) -> None:
        g = self.face_slopes
        if np.all(g > 0):
            return
        j, i = np.unravel_index(int(np.argmin(g)), g.shape)
        raise MonotonicityError(
            f"flow map not increasing in cell (t_index={j}, y_cell={i}): slope {g[j, i]:.3e}",
            (int(j), int(i)),
            float(g[j, i]),
        )


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_iters: int = 30
    step_initial: float = 1.0
    backtrack_ratio: float = 0.5
    max_backtracks: int = 40
    barrier_floor: float = 1e-8
    continuation_levels: int = 1

    def __post_init__(self):
        if not self.newton_tol > 0 or not self.barrier_floor > 0:
            raise InputError("newton_tol and barrier_floor must be positive")
        if not 0 < self.backtrack_ratio < 1 or not 0 < self.step_initial <= 1:
            raise InputError("damping parameters must lie in (0, 1)")
        if self.max_iters < 1 or self.continuation_levels < 1:
            raise InputError("max_iters and continuation_levels must be >= 1")


@dataclass
class TraceRecord:
    iteration: int
    residual_inf: float
    residual_l2: float
    step: float
    backtracks: int
    min_slope: float


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    level: int | None = None

    @property
    def iterations(self) -> int:
        """Number of Newton updates performed."""
        return max(len(self.records) - 1, 0)

    @property
    def final_residual(self) -> float:
        return self.records[-1].residual_inf if self.records else float("nan")


# ---------------------------------------------------------------------------
# discretization of a problem on a mesh


@dataclass(frozen=True, eq=False)
class Discretization:
    prob: ProblemSpec
    mesh: Mesh
    p0: np.ndarray
    dp0: np.ndarray
    terminal_target: np.ndarray | None

    @property
    def theta(self) -> float:
        return self.prob.theta

    @property
    def c_theta(self) -> float:
        return self.prob.coupling.c_theta

    @cached_property
    def face_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """``F_i = alpha_i Zf_{i-1} + beta_i Zf_i`` at interior nodes."""
        st = self.mesh.stencil
        p, dp = self.p0[1:-1], self.dp0[1:-1]
        diffusion = self.c_theta * p / st.H
        return dp * st.w_prev - diffusion, dp * st.w_next + diffusion


def discretize(prob: ProblemSpec, mesh: Mesh) -> Discretization:
    """Sample the profile on the mesh and resolve the terminal data.

    Raises
    ------
    DomainError
        If the endpoint slopes of ``p0`` cannot be evaluated; they enter the
        boundary rows and are never replaced by difference quotients.
    """
    p = prob.initial
    if abs(mesh.b - p.b) > 1e-12 * max(1.0, p.b) or abs(mesh.horizon - prob.horizon) > 1e-12:
        raise InputError("mesh does not match the problem support/horizon")
    sl, sr = p.slope_left, p.slope_right
    if not (np.isfinite(sl) and np.isfinite(sr)):
        raise DomainError("endpoint slopes of p0 are not available")
    y = mesh.y_nodes
    p0 = p.p(y)
    p0[0] = p0[-1] = 0.0
    dp0 = p.dp(y)
    dp0[0], dp0[-1] = sl, sr
    target = None
    if prob.terminal.kind is TerminalKind.PLANNING:
        target = np.asarray(prob.terminal_map()(y), dtype=float)
        if not np.all(np.diff(target) > 0):
            raise InputError("planning terminal map is not strictly increasing")
    return Discretization(prob, mesh, p0, dp0, target)


def _disc(field: FlowField, prob, disc):
    if disc is not None:
        return disc
    if isinstance(prob, Discretization):
        return prob
    return discretize(prob, field.mesh)


def pressure_gradient(G: np.ndarray, disc: Discretization) -> np.ndarray:
    """``p0' Z + c_theta p0 Z_y`` on each slice of ``G`` (shape ``(..., ny)``)."""
    st = disc.mesh.stencil
    th1 = disc.theta + 1.0
    Zf = st.face_slopes(G) ** (-th1)
    alpha, beta = disc.face_coeffs
    F = np.empty_like(G)
    F[..., 1:-1] = alpha * Zf[..., :-1] + beta * Zf[..., 1:]
    gl, gr = st.end_slopes(G)
    F[..., 0] = disc.dp0[0] * gl ** (-th1)
    F[..., -1] = disc.dp0[-1] * gr ** (-th1)
    return F


def _check_slopes(G: np.ndarray, st: Stencil) -> None:
    g = st.face_slopes(G)
    gl, gr = st.end_slopes(G)
    if np.all(g > 0) and np.all(gl > 0) and np.all(gr > 0):
        return
    if not np.all(g > 0):
        j, i = np.unravel_index(int(np.argmin(g)), g.shape)
        raise MonotonicityError(
            f"flow map not increasing in cell (t_index={j}, y_cell={i}): slope {g[j, i]:.3e}",
            (int(j), int(i)),
            float(g[j, i]),
        )
    side = 0 if np.min(gl) <= np.min(gr) else g.shape[-1]
    vals = gl if side == 0 else gr
    j = int(np.argmin(vals))
    raise MonotonicityError(
        f"one-sided endpoint slope nonpositive at (t_index={j}, y_node={side})", (j, side), float(vals[j])
    )


def apply_terminal_condition(field: FlowField, prob, disc: Discretization | None = None) -> np.ndarray:
    """Residual row at ``t = T``.

    Planning: ``gamma(y, T) - gamma_T(y)``. Terminal cost:
    ``gamma_t(y, T) + c1 (p0' Z + c_theta p0 Z_y)(y, T)`` with a one-sided
    second-order time difference.
    """
    disc = _disc(field, prob, disc)
    G = field.gamma
    if disc.prob.terminal.kind is TerminalKind.PLANNING:
        return G[-1] - disc.terminal_target
    if field.mesh.nt < 3:
        raise InputError("terminal-cost rows need at least three time levels")
    dt = field.mesh.dt
    gt = (3.0 * G[-1] - 4.0 * G[-2] + G[-3]) / (2.0 * dt)
    return gt + disc.prob.terminal.c1 * pressure_gradient(G[-1], disc)


def assemble_residual(field: FlowField, prob, disc: Discretization | None = None) -> np.ndarray:
    """Residual of the full discrete system, flattened time-major.

    Raises
    ------
    MonotonicityError
        If some discrete slope is nonpositive; the worst cell is named.
    """
    disc = _disc(field, prob, disc)
    G = field.gamma
    _check_slopes(G, field.mesh.stencil)
    dt2 = field.mesh.dt ** 2
    R = np.empty_like(G)
    R[0] = G[0] - field.mesh.y_nodes
    R[1:-1] = (G[2:] - 2.0 * G[1:-1] + G[:-2]) / dt2 - pressure_gradient(G[1:-1], disc)
    R[-1] = apply_terminal_condition(field, prob, disc)
    return R.ravel()


def _dF_entries(G: np.ndarray, disc: Discretization):
    """Local Jacobian of ``pressure_gradient`` for each slice of ``G`` (m, ny).

    Returns ``(rows, cols, vals)`` with ``rows``/``cols`` of shape ``(3 ny,)``
    (slice-local indices) and ``vals`` of shape ``(m, 3 ny)``.
    """
    st = disc.mesh.stencil
    ny = G.shape[-1]
    th1 = disc.theta + 1.0
    g = st.face_slopes(G)
    dZ = -th1 * g ** (-(th1 + 1.0)) / st.h  # dZf_k / d gamma_{k+1}; minus that for gamma_k
    alpha, beta = disc.face_coeffs
    m = G.shape[0]
    vals = np.empty((m, ny, 3))
    cols = np.empty((ny, 3), dtype=np.int64)
    # interior
    vals[:, 1:-1, 0] = -alpha * dZ[:, :-1]
    vals[:, 1:-1, 1] = alpha * dZ[:, :-1] - beta * dZ[:, 1:]
    vals[:, 1:-1, 2] = beta * dZ[:, 1:]
    idx = np.arange(1, ny - 1)
    cols[1:-1] = np.stack([idx - 1, idx, idx + 1], axis=1)
    # endpoints
    gl, gr = st.end_slopes(G)
    vals[:, 0, :] = (disc.dp0[0] * -th1 * gl ** (-(th1 + 1.0)))[:, None] * st.left
    vals[:, -1, :] = (disc.dp0[-1] * -th1 * gr ** (-(th1 + 1.0)))[:, None] * st.right
    cols[0] = [0, 1, 2]
    cols[-1] = [ny - 3, ny - 2, ny - 1]
    rows = np.repeat(np.arange(ny), 3)
    return rows, cols.ravel(), vals.reshape(m, 3 * ny)


def assemble_jacobian(field: FlowField, prob, disc: Discretization | None = None) -> sparse.csr_matrix:
    """Analytic Jacobian of :func:`assemble_residual` (CSR, banded)."""
    disc = _disc(field, prob, disc)
    G = field.gamma
    _check_slopes(G, field.mesh.stencil)
    nt, ny = G.shape
    n = nt * ny
    dt = field.mesh.dt
    inv_dt2 = 1.0 / dt**2
    R, C, V = [], [], []

    def add(rows, cols, vals):
        R.append(np.asarray(rows).ravel())
        C.append(np.asarray(cols).ravel())
        V.append(np.asarray(vals, dtype=float).ravel())

    i = np.arange(ny)
    add(i, i, np.ones(ny))  # initial slice

    jj = np.arange(1, nt - 1)
    base = (jj[:, None] * ny + i[None, :]).ravel()
    add(base, base - ny, np.full(base.size, inv_dt2))
    add(base, base, np.full(base.size, -2.0 * inv_dt2))
    add(base, base + ny, np.full(base.size, inv_dt2))
    lr, lc, lv = _dF_entries(G[1:-1], disc)
    off = (jj * ny)[:, None]
    add(off + lr[None, :], off + lc[None, :], -lv)

    last = (nt - 1) * ny
    if disc.prob.terminal.kind is TerminalKind.PLANNING:
        add(last + i, last + i, np.ones(ny))
    else:
        add(last + i, last + i, np.full(ny, 1.5 / dt))
        add(last + i, last - ny + i, np.full(ny, -2.0 / dt))
        add(last + i, last - 2 * ny + i, np.full(ny, 0.5 / dt))
        c1 = disc.prob.terminal.c1
        if c1 != 0.0:
            lr, lc, lv = _dF_entries(G[-1:], disc)
            add(last + lr, last + lc, c1 * lv[0])

    J = sparse.coo_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))), shape=(n, n))
    return J.tocsr()


def _solve_banded(J: sparse.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    coo = J.tocoo()
    offs = coo.row - coo.col
    lower, upper = int(max(offs.max(), 0)), int(max(-offs.min(), 0))
    ab = np.zeros((lower + upper + 1, J.shape[0]))
    np.add.at(ab, (upper + offs, coo.col), coo.data)
    return solve_banded((lower, upper), ab, rhs, check_finite=False)


# ---------------------------------------------------------------------------
# Newton iteration


def default_initial_guess(prob: ProblemSpec, mesh: Mesh, disc: Discretization | None = None) -> FlowField:
    """Identity in y; for planning, linear in t between identity and the terminal map."""
    y = mesh.y_nodes
    G = np.tile(y, (mesh.nt, 1))
    if prob.terminal.kind is TerminalKind.PLANNING:
        disc = disc if disc is not None else discretize(prob, mesh)
        s = (mesh.t_nodes / mesh.horizon)[:, None]
        G = (1.0 - s) * y[None, :] + s * disc.terminal_target[None, :]
    return FlowField(mesh, G, prob.theta)


def _barrier_ok(G: np.ndarray, st: Stencil, floor: float) -> tuple[bool, float]:
    g = st.face_slopes(G)
    gl, gr = st.end_slopes(G)
    lo = float(min(g.min(), gl.min(), gr.min()))
    return bool(np.isfinite(lo) and lo >= floor), lo


def newton_solve(
    prob: ProblemSpec,
    cfg: SolverConfig | None = None,
    initial_guess: FlowField | None = None,
    disc: Discretization | None = None,
    mesh: Mesh | None = None,
) -> tuple[FlowField, ConvergenceTrace]:
    """Damped Newton iteration with a monotonicity barrier.

    Each step halves its length until the residual 2-norm decreases and every
    discrete slope stays above ``cfg.barrier_floor``.

    Raises
    ------
    NonConvergenceError
        After ``cfg.max_iters`` updates; carries the trace and last iterate.
    StepError
        When no admissible step is found within ``cfg.max_backtracks`` halvings.
    """
    cfg = cfg or SolverConfig()
    if initial_guess is None:
        if mesh is None:
            raise InputError("pass a mesh or an initial guess")
        disc = disc if disc is not None else discretize(prob, mesh)
        initial_guess = default_initial_guess(prob, mesh, disc)
    mesh = initial_guess.mesh
    disc = disc if disc is not None else discretize(prob, mesh)
    st = mesh.stencil
    initial_guess.check_monotone()

    G = initial_guess.gamma.copy()
    theta = prob.theta
    trace = ConvergenceTrace()
    R = assemble_residual(FlowField(mesh, G, theta), prob, disc)
    step, backtracks = 0.0, 0
    for it in range(cfg.max_iters + 1):
        rinf = float(np.max(np.abs(R)))
        trace.records.append(
            TraceRecord(it, rinf, float(np.linalg.norm(R)), step, backtracks, _barrier_ok(G, st, 0.0)[1])
        )
        logger.debug("newton it=%d |R|inf=%.3e step=%.3g", it, rinf, step)
        if rinf <= cfg.newton_tol:
            trace.converged = True
            return FlowField(mesh, G, theta), trace
        if it == cfg.max_iters:
            break
        J = assemble_jacobian(FlowField(mesh, G, theta), prob, disc)
        dG = _solve_banded(J, -R).reshape(G.shape)
        r2 = np.linalg.norm(R)
        step = cfg.step_initial
        for backtracks in range(cfg.max_backtracks + 1):
            Gn = G + step * dG
            ok, _ = _barrier_ok(Gn, st, cfg.barrier_floor)
            if ok:
                Rn = assemble_residual(FlowField(mesh, Gn, theta), prob, disc)
                if np.linalg.norm(Rn) < r2:
                    break
            step *= cfg.backtrack_ratio
        else:
            raise StepError(
                f"no admissible step at iteration {it} (|R|inf={rinf:.3e})",
                trace=trace,
                last_field=FlowField(mesh, G, theta),
            )
        G, R = Gn, Rn
    raise NonConvergenceError(
        f"Newton did not reach {cfg.newton_tol:.1e} in {cfg.max_iters} iterations "
        f"(|R|inf={trace.final_residual:.3e})",
        trace=trace,
        last_field=FlowField(mesh, G, theta),
    )


def prolong(field: FlowField, mesh: Mesh) -> FlowField:
    """Piecewise-bilinear interpolation of a field onto a finer mesh."""
    interp = RegularGridInterpolator((field.mesh.t_nodes, field.mesh.y_nodes), field.gamma, method="linear")
    T, Y = np.meshgrid(mesh.t_nodes, mesh.y_nodes, indexing="ij")
    G = interp(np.stack([T.ravel(), Y.ravel()], axis=1)).reshape(mesh.shape)
    G[0] = mesh.y_nodes
    return FlowField(mesh, G, field.theta)


def continuation_solve(
    prob: ProblemSpec, cfg: SolverConfig | None = None, mesh: Mesh | None = None
) -> tuple[FlowField, list[ConvergenceTrace]]:
    """Solve on ``cfg.continuation_levels`` nested meshes ending at ``mesh``.

    Each level halves the mesh size of the previous one; the coarsest level
    starts from :func:`default_initial_guess`. Errors are re-raised with the
    failing level attached.
    """
    cfg = cfg or SolverConfig()
    if mesh is None:
        raise InputError("continuation_solve needs the finest mesh")
    L = cfg.continuation_levels
    factor = 2 ** (L - 1)
    if (mesh.ny - 1) % factor or (mesh.nt - 1) % factor:
        raise InputError(f"mesh {mesh.ny}x{mesh.nt} cannot be coarsened {L - 1} times")
    meshes = [mesh.with_size((mesh.ny - 1) // 2**k + 1, (mesh.nt - 1) // 2**k + 1) for k in range(L - 1, 0, -1)]
    meshes.append(mesh)
    traces: list[ConvergenceTrace] = []
    field = None
    for level, m in enumerate(meshes, start=1):
        disc = discretize(prob, m)
        guess = default_initial_guess(prob, m, disc) if field is None else prolong(field, m)
        try:
            field, trace = newton_solve(prob, cfg, guess, disc)
        except NonConvergenceError as exc:
            exc.level = level
            if exc.trace is not None:
                exc.trace.level = level
            exc.args = (f"level {level} ({m.ny}x{m.nt}): {exc.args[0]}",)
            raise
        trace.level = level
        traces.append(trace)
    return field, traces


def oracle_field(prob: ProblemSpec, mesh: Mesh) -> FlowField:
    """Sample the exact flow of an oracle-backed problem on a mesh."""
    ref = prob.reference
    if ref is None:
        raise InputError("problem carries no closed-form reference")
    T, Y = np.meshgrid(mesh.t_nodes, mesh.y_nodes, indexing="ij")
    return FlowField(mesh, ref.flow(Y, T), prob.theta)


__all__ = [
    "Grading",
    "Mesh",
    "Stencil",
    "FlowField",
    "SolverConfig",
    "ConvergenceTrace",
    "TraceRecord",
    "Discretization",
    "discretize",
    "pressure_gradient",
    "assemble_residual",
    "apply_terminal_condition",
    "assemble_jacobian",
    "default_initial_guess",
    "newton_solve",
    "prolong",
    "continuation_solve",
    "oracle_field",
    "StateError",
]
