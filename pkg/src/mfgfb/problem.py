"""Problem instances: coupling constants, pressure profiles, terminal data.

A pressure profile ``p0 = m0**theta`` is carried as a :class:`PressureProfile`,
a frozen bundle of callables (value, first and optionally second derivative)
on a compact support ``[a, b]``. Profiles are built from closed forms
(:func:`parabola`, :func:`barenblatt`, :func:`bump`, :func:`capped`) or from
tabulated samples (:func:`tabulated`, :func:`from_csv`), in which case a
monotone-safe cubic (PCHIP) interpolant is used.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, InputError

ArrayFn = Callable[[np.ndarray], np.ndarray]

VALIDATION_POINTS = 1024
MIN_INTERIOR_POINTS = 64
_QUAD = dict(epsabs=1e-15, epsrel=1e-13, limit=200)


# ---------------------------------------------------------------------------
# coupling constants


@dataclass(frozen=True)
class CouplingParams:
    """Constants derived from the coupling exponent ``theta``.

    Attributes
    ----------
    theta : float
        Coupling exponent, ``p = m**theta``.
    c_theta : float
        ``theta / (theta + 1)``, the coefficient of ``p0 * Z_y``.
    nu : float
        Self-similar exponent ``2 / (2 + theta)``.
    effective_dim : float
        Effective radial dimension ``4 + 2 / theta`` of the boundary chart.
    b0 : float
        Value at the origin of the regular-singular coefficient,
        ``(1 + c_theta) / c_theta``.
    """

    theta: float
    c_theta: float
    nu: float
    effective_dim: float
    b0: float

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta!r}")
        if not 0.0 < self.c_theta < 1.0:
            raise DomainError("c_theta must lie in (0, 1)")
        if abs(self.nu * (2.0 + self.theta) - 2.0) > 1e-12:
            raise DomainError("nu * (2 + theta) must equal 2")
        if not self.effective_dim > 2.0 or not self.b0 > 1.0:
            raise DomainError("effective_dim > 2 and b0 > 1 are required")


def derive_constants(theta: float) -> CouplingParams:
    theta = float(theta)
    if not (math.isfinite(theta) and theta > 0):
        raise DomainError(f"theta must be positive and finite, got {theta!r}")
    c = theta / (theta + 1.0)
    return CouplingParams(
        theta=theta,
        c_theta=c,
        nu=2.0 / (2.0 + theta),
        effective_dim=4.0 + 2.0 / theta,
        b0=(1.0 + c) / c,
    )


# ---------------------------------------------------------------------------
# densities and the monotone rearrangement


@dataclass(frozen=True)
class Density:
    """A nonnegative density supported on ``[a, b]``.

    Cumulative masses are computed by adaptive quadrature over a
    Chebyshev-spaced panel table, so that the algebraic vanishing at the
    edges (``m ~ dist**(1/theta)``) stays confined to the first panel.
    """

    func: ArrayFn
    a: float
    b: float
    name: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.a) & (x < self.b)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out

    def _scalar(self, x: float) -> float:
        return float(self.func(np.array([x]))[0]) if self.a < x < self.b else 0.0

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray]:
        n = 257
        s = np.linspace(0.0, 1.0, n)
        nodes = self.a + (self.b - self.a) * 0.5 * (1.0 - np.cos(np.pi * s))
        inc = np.array(
            [integrate.quad(self._scalar, lo, hi, **_QUAD)[0] for lo, hi in zip(nodes[:-1], nodes[1:])]
        )
        return nodes, np.concatenate([[0.0], np.cumsum(inc)])

    @property
    def mass(self) -> float:
        return float(self._table[1][-1])

    def cdf(self, x):
        """Mass of the density to the left of ``x``."""
        nodes, cum = self._table
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for k, xv in enumerate(x):
            if xv <= self.a:
                out[k] = 0.0
            elif xv >= self.b:
                out[k] = cum[-1]
            else:
                j = int(np.searchsorted(nodes, xv, side="right") - 1)
                out[k] = cum[j] + integrate.quad(self._scalar, nodes[j], xv, **_QUAD)[0]
        return out

    def quantile(self, q):
        """Inverse of :meth:`cdf`; ``q`` is an absolute (unnormalized) mass."""
        nodes, cum = self._table
        q = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.empty_like(q)
        for k, qv in enumerate(q):
            if qv <= 0.0:
                out[k] = self.a
            elif qv >= cum[-1]:
                out[k] = self.b
            else:
                j = int(np.clip(np.searchsorted(cum, qv, side="right") - 1, 0, len(nodes) - 2))
                lo, hi = nodes[j], nodes[j + 1]
                base = cum[j]

                def g(x, lo=lo, base=base, qv=qv):
                    return base + integrate.quad(self._scalar, lo, x, **_QUAD)[0] - qv

                glo, ghi = g(lo), g(hi)
                if glo >= 0.0:
                    out[k] = lo
                elif ghi <= 0.0:
                    out[k] = hi
                else:
                    out[k] = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        return out


@dataclass(frozen=True)
class TransportMap:
    """Monotone map ``gamma_T`` pushing ``source`` onto ``target``."""

    source: Density
    target: Density

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y)
        out = self.target.quantile(self.source.cdf(flat))
        out[flat <= self.source.a] = self.target.a
        out[flat >= self.source.b] = self.target.b
        return out.reshape(y.shape) if y.ndim else float(out[0])

    def derivative(self, y):
        """``m0(y) / mT(gamma_T(y))``; undefined where the target vanishes."""
        y = np.asarray(y, dtype=float)
        return self.source(y) / self.target(self(y))

    def inverse(self) -> "TransportMap":
        return TransportMap(self.target, self.source)


def monotone_transport_map(
    m0: Density, mT: Density, tol: float = 1e-6, require_unit_mass: bool = True
) -> TransportMap:
    """Monotone rearrangement defined by equality of cumulative masses.

    ``gamma_T(y)`` solves ``int_a^y m0 = int_{a1}^{gamma_T(y)} mT``.

    Raises
    ------
    InputError
        If the two masses differ by more than ``tol`` or, with
        ``require_unit_mass``, either mass is not 1 within ``tol``.
    """
    M0, MT = m0.mass, mT.mass
    if abs(M0 - MT) > tol:
        raise InputError(f"mass mismatch: {M0:.12g} vs {MT:.12g}")
    if require_unit_mass and (abs(M0 - 1.0) > tol or abs(MT - 1.0) > tol):
        raise InputError(f"densities must have unit mass, got {M0:.12g} and {MT:.12g}")
    return TransportMap(m0, mT)


# ---------------------------------------------------------------------------
# pressure profiles


def _zeros(z):
    return np.zeros_like(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class PressureProfile:
    """Pressure profile ``p0`` on ``[a, a + length]``.

    The callables take the local coordinate ``z = y - a`` in
    ``[0, length]``. Evaluation outside the support returns 0 (zero
    extension) for the value and derivatives.
    """

    length: float
    value: ArrayFn
    first: ArrayFn
    second: ArrayFn | None = None
    a: float = 0.0
    delta: float | None = None
    smoothness: tuple[int, float] = (1, 1.0)
    name: str = "custom"
    tabulated: bool = False
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.length > 0:
            raise InputError("profile support must have positive length")

    @property
    def b(self) -> float:
        return self.a + self.length

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    @property
    def neighborhood(self) -> float:
        """Declared width of the one-sided neighborhoods (default: a quarter of the support)."""
        return self.delta if self.delta is not None else 0.25 * self.length

    def _apply(self, fn: ArrayFn, y, closed: bool):
        y = np.asarray(y, dtype=float)
        z = y - self.a
        inside = (z >= 0.0) & (z <= self.length) if closed else (z > 0.0) & (z < self.length)
        out = np.zeros(np.shape(y))
        if np.any(inside):
            out[inside] = fn(z[inside])
        return out if out.ndim else float(out)

    def p(self, y):
        return self._apply(self.value, y, closed=False)

    def dp(self, y):
        return self._apply(self.first, y, closed=True)

    def d2p(self, y):
        if self.second is None:
            raise InputError(f"profile {self.name!r} does not declare a second derivative")
        return self._apply(self.second, y, closed=True)

    @property
    def slope_left(self) -> float:
        return float(self.first(np.array([0.0]))[0])

    @property
    def slope_right(self) -> float:
        return float(self.first(np.array([self.length]))[0])

    def h_left(self, y):
        """``h(y) = p0(y) / (y - a)`` with ``h(a) = p0'(a+)``."""
        y = np.asarray(y, dtype=float)
        z = y - self.a
        safe = np.where(z > 0, z, 1.0)
        return np.where(z > 0, self.p(y) / safe, self.slope_left)

    def samples(self, n: int = VALIDATION_POINTS) -> tuple[np.ndarray, np.ndarray]:
        y = np.linspace(self.a, self.b, n)
        return y, self.p(y)

    def density(self, theta: float) -> Density:
        inv = 1.0 / float(theta)

        def m(x):
            return np.maximum(self.p(x), 0.0) ** inv

        return Density(m, self.a, self.b, name=self.name)

    def mass(self, theta: float) -> float:
        return self.density(theta).mass

    def shifted(self, d: float) -> "PressureProfile":
        return replace(self, a=self.a + d)

    def scaled(self, c: float) -> "PressureProfile":
        v, f, s = self.value, self.first, self.second
        return replace(
            self,
            value=lambda z: c * v(z),
            first=lambda z: c * f(z),
            second=None if s is None else (lambda z: c * s(z)),
        )

    def normalized(self, theta: float) -> "PressureProfile":
        """Rescale so that ``m0 = p0**(1/theta)`` has unit mass."""
        return self.scaled(self.mass(theta) ** (-theta))


def from_function(
    b: float,
    p: ArrayFn,
    dp: ArrayFn,
    d2p: ArrayFn | None = None,
    *,
    delta: float | None = None,
    smoothness: tuple[int, float] = (2, 1.0),
    name: str = "custom",
) -> PressureProfile:
    return PressureProfile(
        length=float(b), value=p, first=dp, second=d2p, delta=delta, smoothness=smoothness, name=name
    )


def parabola(b: float = 1.0, height: float | None = None) -> PressureProfile:
    """``p0(y) = A y (b - y)`` with ``A = 1/b`` unless ``height`` (the max) is given."""
    A = 1.0 / b if height is None else 4.0 * height / b**2
    return PressureProfile(
        length=b,
        value=lambda z: A * z * (b - z),
        first=lambda z: A * (b - 2.0 * z),
        second=lambda z: np.full_like(np.asarray(z, dtype=float), -2.0 * A),
        smoothness=(100, 1.0),
        name="parabola",
        params={"b": b, "A": A},
    )


def barenblatt(
    theta: float, R: float | None = None, time: float = 1.0, center: float | None = None
) -> PressureProfile:
    """Pressure of the self-similar solution at ``time``, as a profile.

    With the default ``center`` (the half-width at time 1) the profile at
    ``time=1`` has its left edge at 0.
    """
    from .exact_oracle import SelfSimilarSolution

    sol = SelfSimilarSolution.unit_mass(theta) if R is None else SelfSimilarSolution(theta, R)
    if time <= 0:
        raise DomainError("time must be positive")
    w = sol.half_width(time)
    c = sol.half_width(1.0) if center is None else float(center)
    amp = time ** (-sol.nu * theta)
    kk = sol.k / time ** (2.0 * sol.nu)
    return PressureProfile(
        length=2.0 * w,
        value=lambda z: amp * (sol.R - kk * (z - w) ** 2),
        first=lambda z: -2.0 * amp * kk * (z - w),
        second=lambda z: np.full_like(np.asarray(z, dtype=float), -2.0 * amp * kk),
        a=c - w,
        smoothness=(100, 1.0),
        name="barenblatt",
        params={"theta": theta, "R": sol.R, "time": time, "center": c},
    )


def capped(
    b: float,
    delta: float,
    h: ArrayFn,
    dh: ArrayFn,
    d2h: ArrayFn | None = None,
    name: str = "capped",
) -> PressureProfile:
    """Profile equal to ``y h(y)`` on ``[0, delta]``, mirrored on ``[b - delta, b]``.

    The middle is a symmetric concave parabola matched in value and slope,
    so the profile is C^1 with a piecewise-continuous second derivative.
    """
    if not 0 < delta < b / 2:
        raise InputError("need 0 < delta < b/2")
    d2h = d2h if d2h is not None else _zeros

    def edge(w):
        return w * h(w), h(w) + w * dh(w), 2.0 * dh(w) + w * d2h(w)

    e_val, e_slope, _ = (float(np.asarray(v)) for v in edge(np.asarray(delta, dtype=float)))
    if not e_slope > 0:
        raise InputError("edge profile must be increasing at delta")
    half = 0.5 * b - delta
    c2 = e_slope / (2.0 * half)
    c0 = e_val + c2 * half**2

    def pieces(z, k):
        z = np.asarray(z, dtype=float)
        left, right = z <= delta, z >= b - delta
        mid = ~(left | right)
        out = np.empty_like(z)
        el = edge(z[left])
        er = edge(b - z[right])
        out[left] = el[k]
        out[right] = er[k] * (-1.0 if k == 1 else 1.0)
        zm = z[mid] - 0.5 * b
        out[mid] = (c0 - c2 * zm**2, -2.0 * c2 * zm, np.full_like(zm, -2.0 * c2))[k]
        return out

    return PressureProfile(
        length=b,
        value=lambda z: pieces(z, 0),
        first=lambda z: pieces(z, 1),
        second=lambda z: pieces(z, 2),
        delta=delta,
        smoothness=(1, 1.0),
        name=name,
        params={"b": b, "delta": delta},
    )


def bump(b: float = 1.0, slope: float = 1.0, delta: float | None = None) -> PressureProfile:
    """Linear edges of the given slope joined by a concave parabolic cap."""
    delta = 0.25 * b if delta is None else delta
    prof = capped(
        b, delta, h=lambda w: np.full_like(np.asarray(w, dtype=float), slope), dh=_zeros, name="bump"
    )
    return replace(prof, params={"b": b, "slope": slope, "delta": delta})


def tabulated(y, p0, delta: float | None = None, name: str = "tabulated") -> PressureProfile:
    """Profile interpolated from samples with a monotone-safe cubic.

    The second derivative is a smoothed second difference of the samples
    (three-point moving average), flagged through ``tabulated=True``.
    """
    y = np.asarray(y, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if y.ndim != 1 or y.shape != p0.shape or len(y) < MIN_INTERIOR_POINTS + 2:
        raise InputError(f"need matching 1-D samples with at least {MIN_INTERIOR_POINTS} interior points")
    if not np.all(np.diff(y) > 0):
        raise InputError("sample abscissae must be strictly increasing")
    a = y[0]
    z = y - a
    interp = PchipInterpolator(z, p0, extrapolate=True)
    deriv = interp.derivative()
    dd = np.gradient(np.gradient(p0, z), z)
    smooth = np.convolve(np.pad(dd, 1, mode="edge"), np.ones(3) / 3.0, mode="valid")
    return PressureProfile(
        length=float(z[-1]),
        value=lambda s: interp(s),
        first=lambda s: deriv(s),
        second=lambda s: np.interp(s, z, smooth),
        a=float(a),
        delta=delta,
        smoothness=(1, 0.0),
        name=name,
        tabulated=True,
    )


def from_csv(path: str | Path, delta: float | None = None) -> PressureProfile:
    """Read a two-column table with header ``y, p0``."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh, skipinitialspace=True))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        y = [float(r["y"]) for r in rows]
        p = [float(r["p0"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: expected numeric columns 'y' and 'p0'") from exc
    return tabulated(y, p, delta=delta, name=path.stem)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    worst_point: float | None
    worst_value: float | None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[HypothesisCheck, ...]
    C0: float
    K0: float
    delta: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "C0": self.C0,
            "K0": self.K0,
            "delta": self.delta,
            "checks": [c.__dict__ for c in self.checks],
        }


def _worst(name, ok_mask, badness, grid, detail=""):
    """Build a check; ``badness`` is larger for worse points."""
    if badness.size == 0:
        return HypothesisCheck(name, True, None, None, detail)
    k = int(np.argmax(badness))
    return HypothesisCheck(name, bool(np.all(ok_mask)), float(grid[k]), float(badness[k]), detail)


def validate_initial_pressure(
    p: PressureProfile,
    C0: float,
    K0: float,
    delta: float,
    theta: float | None = None,
    grid=None,
    mass_tol: float = 1e-6,
) -> ValidationReport:
    """Check the standing hypotheses on a grid and report every outcome.

    Failures are reported, never raised. The second-difference checks use
    the tolerance ``1e-8 * K0``. The unit-mass check runs only when
    ``theta`` is given.
    """
    if grid is None:
        grid = np.linspace(p.a, p.b, VALIDATION_POINTS)
    grid = np.asarray(grid, dtype=float)
    if (
        grid.ndim != 1
        or len(grid) < MIN_INTERIOR_POINTS + 2
        or not np.all(np.diff(grid) > 0)
        or grid[0] < p.a - 1e-12
        or grid[-1] > p.b + 1e-12
    ):
        raise InputError("validation grid must be increasing, inside the support, with >= 64 interior points")

    vals = p.p(grid)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    tol = 1e-12 * scale
    interior = (grid > p.a) & (grid < p.b)
    gi, vi = grid[interior], vals[interior]
    dist = np.minimum(gi - p.a, p.b - gi)
    checks = []

    ends = np.abs(np.array([float(p.value(np.array([0.0]))[0]), float(p.value(np.array([p.length]))[0])]))
    checks.append(_worst("endpoints_vanish", ends <= tol, ends, np.array([p.a, p.b])))
    checks.append(_worst("positive_inside", vi > 0, -vi, gi))
    lower = dist / C0 - vi
    checks.append(_worst("nondegenerate_lower", lower <= tol, lower, gi, f"C0={C0}"))
    upper = vi - C0 * dist
    checks.append(_worst("nondegenerate_upper", upper <= tol, upper, gi, f"C0={C0}"))
    sl, sr = p.slope_left, p.slope_right
    checks.append(HypothesisCheck("slope_left_positive", bool(np.isfinite(sl) and sl > 0), p.a, sl))
    checks.append(HypothesisCheck("slope_right_negative", bool(np.isfinite(sr) and sr < 0), p.b, sr))

    hgrid = np.diff(grid)
    d2 = 2.0 * (
        vals[2:] * hgrid[:-1] - vals[1:-1] * (hgrid[:-1] + hgrid[1:]) + vals[:-2] * hgrid[1:]
    ) / (hgrid[:-1] * hgrid[1:] * (hgrid[:-1] + hgrid[1:]))
    mid = grid[1:-1]
    dtol = 1e-8 * K0
    near = (mid - p.a <= delta) | (p.b - mid <= delta)
    checks.append(
        _worst("concave_near_edges", d2[near] <= dtol, d2[near], mid[near], f"delta={delta}")
    )
    checks.append(_worst("semiconvex", d2 >= -K0 - dtol, -K0 - d2, mid, f"K0={K0}"))

    if theta is not None:
        mass = p.mass(theta)
        checks.append(
            HypothesisCheck("unit_mass", abs(mass - 1.0) <= mass_tol, None, mass, f"theta={theta}")
        )
    return ValidationReport(tuple(checks), float(C0), float(K0), float(delta))


# ---------------------------------------------------------------------------
# terminal data and problem definition


class TerminalKind(enum.Enum):
    COST = "cost"
    PLANNING = "planning"


@dataclass(frozen=True)
class TerminalSpec:
    kind: TerminalKind
    c1: float | None = None
    terminal_pressure: PressureProfile | None = None

    def __post_init__(self):
        if self.kind is TerminalKind.COST:
            if self.c1 is None or not self.c1 >= 0 or self.terminal_pressure is not None:
                raise InputError("terminal cost needs c1 >= 0 and no terminal profile")
        elif self.kind is TerminalKind.PLANNING:
            if self.terminal_pressure is None or self.c1 is not None:
                raise InputError("planning needs a terminal profile and no c1")
        else:  # pragma: no cover
            raise InputError(f"unknown terminal kind {self.kind!r}")

    @classmethod
    def cost(cls, c1: float = 0.0) -> "TerminalSpec":
        return cls(TerminalKind.COST, c1=float(c1))

    @classmethod
    def planning(cls, pT: PressureProfile) -> "TerminalSpec":
        return cls(TerminalKind.PLANNING, terminal_pressure=pT)


@dataclass(frozen=True)
class ProblemSpec:
    """Full input of a solve.

    ``reference`` optionally carries the closed-form solution the instance
    was built from (see :func:`mfgfb.exact_oracle.planning_problem`).
    """

    coupling: CouplingParams
    initial: PressureProfile
    terminal: TerminalSpec
    horizon: float
    measurement_window: tuple[float, float]
    reference: object | None = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise InputError("horizon must be positive")
        lo, hi = self.measurement_window
        if not 0.0 < lo < hi < self.horizon:
            raise InputError("measurement window must satisfy 0 < inf J < sup J < T")
        if abs(self.initial.a) > 1e-12:
            raise InputError("initial support must start at 0 (shift the profile)")

    @property
    def theta(self) -> float:
        return self.coupling.theta

    def terminal_map(self, tol: float = 1e-6) -> TransportMap:
        if self.terminal.kind is not TerminalKind.PLANNING:
            raise InputError("terminal map exists only for planning problems")
        th = self.theta
        return monotone_transport_map(
            self.initial.density(th), self.terminal.terminal_pressure.density(th), tol=tol
        )


def default_window(horizon: float) -> tuple[float, float]:
    return (0.25 * horizon, 0.75 * horizon)
