"""Batch front-end.

Subcommands: ``oracle``, ``solve``, ``transforms``, ``report``,
``convergence`` and ``validate``. Problems are read from an INI file::

    [coupling]
    theta = 1

    [initial]
    profile = barenblatt        ; barenblatt | parabola | bump | csv
    time = 1

    [terminal]
    kind = planning             ; planning | cost
    profile = barenblatt
    time = 2

    [grid]
    ny = 65
    nt = 65

Exit codes: 0 success, 2 invalid input or failed validation, 3 solver
nonconvergence (the trace is still written), 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis as an
from . import exact_oracle as ex
from . import problem as pb
from . import transforms as tf
from .errors import DomainError, InputError, MfgfbError, NonConvergenceError
from .lagrangian_solver import ConvergenceTrace, Grading, Mesh, SolverConfig, continuation_solve, newton_solve

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_IO = 0, 2, 3, 4


class OutputExists(OSError):
    pass


# ---------------------------------------------------------------------------
# artifacts


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    return "%.17g" % v


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not math.isfinite(v) else float("%.17g" % v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _json_clean(obj.tolist())
    return obj


def json_text(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2, sort_keys=True) + "\n"


class ArtifactWriter:
    """Atomic writes into one directory plus a hash manifest."""

    def __init__(self, out: Path, force: bool = False):
        self.out = Path(out)
        self.force = force
        self.entries: dict[str, str] = {}
        self.notes: list[str] = []  # human-readable summary lines
        self.out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> Path:
        target = self.out / name
        if target.exists() and not self.force and name not in self.entries:
            raise OutputExists(f"{target} exists (use --force to overwrite)")
        data = text.encode()
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.entries[name] = hashlib.sha256(data).hexdigest()
        return target

    def manifest(self) -> Path:
        # merge with an existing manifest so several subcommands can share a directory
        target = self.out / "manifest.json"
        entries = {}
        if target.exists():
            try:
                entries = {a["file"]: a["sha256"] for a in json.loads(target.read_text())["artifacts"]}
            except (ValueError, KeyError, TypeError):
                entries = {}
        entries.update(self.entries)
        items = [{"file": k, "sha256": v} for k, v in sorted(entries.items())]
        text = json_text({"artifacts": items})
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=".manifest.", suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
        return target


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    subcommand: str
    problem: Path | None
    out: Path
    mesh: tuple[int, int] | None = None
    levels: int | None = None
    force: bool = False
    seed: int = 0
    theta: float = 1.0
    R: float = 1.0


@dataclass
class LoadedProblem:
    prob: pb.ProblemSpec
    ny: int
    nt: int
    grading: Grading
    solver: SolverConfig
    C0: float
    K0: float
    perturbation: float


def _profile(sec: configparser.SectionProxy, theta: float, base: Path, default_time: float) -> pb.PressureProfile:
    kind = sec.get("profile", "barenblatt").strip().lower()
    delta = sec.getfloat("delta", fallback=None)
    if kind == "barenblatt":
        R = sec.getfloat("R", fallback=None)
        return pb.barenblatt(theta, R, time=sec.getfloat("time", fallback=default_time), center=sec.getfloat("center", fallback=None))
    if kind == "parabola":
        return pb.parabola(sec.getfloat("b", fallback=1.0), sec.getfloat("height", fallback=None))
    if kind == "bump":
        return pb.bump(sec.getfloat("b", fallback=1.0), sec.getfloat("slope", fallback=1.0), delta)
    if kind == "csv":
        path = Path(sec.get("path", ""))
        path = path if path.is_absolute() else base / path
        if not path.is_file():
            raise FileNotFoundError(f"profile table {path} not found")
        return pb.from_csv(path, delta)
    raise InputError(f"unknown profile '{kind}'")


def load_problem(path: Path, mesh: tuple[int, int] | None = None) -> LoadedProblem:
    if not Path(path).is_file():
        raise FileNotFoundError(f"config {path} not found")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep 'R' distinct from 'r'
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    for s in ("coupling", "initial", "terminal", "grid"):
        if not cp.has_section(s):
            raise InputError(f"{path}: missing [{s}] section")
    base = Path(path).parent
    try:
        theta = cp["coupling"].getfloat("theta")
        if theta is None:
            raise InputError("[coupling] needs theta")
        coupling = pb.derive_constants(theta)
        ini, ter, grid = cp["initial"], cp["terminal"], cp["grid"]
        p0 = _profile(ini, theta, base, 1.0)
        kind = ter.get("kind", "planning").strip().lower()
        window = None
        if grid.get("window"):
            a, b = (float(v) for v in grid.get("window").split(","))
            window = (a, b)
        if kind == "planning" and ini.get("profile", "barenblatt") == "barenblatt" and ter.get("profile", "barenblatt") == "barenblatt" and "center" not in ini and "center" not in ter:
            # closed-form pair: keep the oracle attached
            prob = ex.planning_problem(
                theta,
                ini.getfloat("time", fallback=1.0),
                ter.getfloat("time", fallback=2.0),
                ini.getfloat("R", fallback=None),
                window,
            )
        else:
            if kind == "planning":
                terminal = pb.TerminalSpec.planning(_profile(ter, theta, base, 2.0))
                horizon = grid.getfloat("horizon", fallback=1.0)
            elif kind == "cost":
                terminal = pb.TerminalSpec.cost(ter.getfloat("c1", fallback=0.0))
                horizon = grid.getfloat("horizon", fallback=1.0)
            else:
                raise InputError(f"unknown terminal kind '{kind}'")
            prob = pb.ProblemSpec(coupling, p0, terminal, horizon, window or pb.default_window(horizon))
        ny = grid.getint("ny", fallback=65)
        nt = grid.getint("nt", fallback=ny)
        if mesh is not None:
            ny, nt = mesh
        grading = Grading(grid.get("grading", "sqrt"))
        solver = SolverConfig()
        perturbation = 0.0
        if cp.has_section("solver"):
            s = cp["solver"]
            solver = SolverConfig(
                newton_tol=s.getfloat("newton_tol", fallback=solver.newton_tol),
                max_iters=s.getint("max_iters", fallback=solver.max_iters),
                step_initial=s.getfloat("step_initial", fallback=solver.step_initial),
                backtrack_ratio=s.getfloat("backtrack_ratio", fallback=solver.backtrack_ratio),
                max_backtracks=s.getint("max_backtracks", fallback=solver.max_backtracks),
                barrier_floor=s.getfloat("barrier_floor", fallback=solver.barrier_floor),
                continuation_levels=s.getint("continuation_levels", fallback=solver.continuation_levels),
            )
            perturbation = s.getfloat("perturbation", fallback=0.0)
        C0 = ini.getfloat("C0", fallback=10.0)
        K0 = ini.getfloat("K0", fallback=10.0)
    except ValueError as exc:
        if isinstance(exc, MfgfbError):
            raise
        raise InputError(f"{path}: {exc}") from exc
    return LoadedProblem(prob, ny, nt, grading, solver, C0, K0, perturbation)


def _mesh(lp: LoadedProblem, ny: int | None = None, nt: int | None = None) -> Mesh:
    return Mesh.build(lp.prob.initial.b, lp.prob.horizon, ny or lp.ny, nt or lp.nt, lp.grading)


def _trace_rows(traces: list[ConvergenceTrace]):
    for k, tr in enumerate(traces):
        lvl = tr.level if tr.level is not None else k + 1
        for r in tr.records:
            yield (lvl, r.iteration, r.residual_inf, r.residual_l2, r.step, r.backtracks, r.min_slope)


TRACE_HEADER = ["level", "iteration", "residual_inf", "residual_l2", "step", "backtracks", "min_slope"]


def _solve(lp: LoadedProblem, seed: int, ny=None, nt=None):
    mesh = _mesh(lp, ny, nt)
    cfg = lp.solver
    if lp.perturbation > 0:
        from .lagrangian_solver import FlowField, default_initial_guess

        guess = default_initial_guess(lp.prob, mesh)
        rng = np.random.default_rng(seed)
        G = guess.gamma.copy()
        G[1:-1, 1:-1] += lp.perturbation * np.min(np.diff(mesh.y_nodes)) * rng.uniform(-0.5, 0.5, G[1:-1, 1:-1].shape)
        field, trace = newton_solve(lp.prob, cfg, FlowField(mesh, G, lp.prob.theta))
        return field, [trace]
    if cfg.continuation_levels > 1:
        return continuation_solve(lp.prob, cfg, mesh)
    field, trace = newton_solve(lp.prob, cfg, mesh=mesh)
    return field, [trace]


# ---------------------------------------------------------------------------
# subcommands


def cmd_oracle(rc: RunConfig, w: ArtifactWriter) -> int:
    sol = ex.SelfSimilarSolution(rc.theta, rc.R)
    nx, nt = rc.mesh or (161, 101)
    xmax = 1.5 * float(sol.half_width(2.0))
    x = np.linspace(-xmax, xmax, nx if nx % 2 else nx + 1)
    x[len(x) // 2] = 0.0
    t = np.linspace(1.0, 2.0, nt)
    rows = []
    for tj in t:
        m = ex.density(sol, x, tj)
        p = ex.pressure(sol, x, tj)
        u = ex.value(sol, x, tj)
        ux = ex.value_gradient(sol, x, tj)
        rows.extend(zip(x, np.full_like(x, tj), m, p, u, ux))
    w.write("oracle.csv", csv_text(["x", "t", "m", "p", "u", "ux"], rows))
    left, right = ex.free_boundary(sol, t)
    w.write("free_boundary.csv", csv_text(["t", "left", "right"], zip(t, left, right)))
    return EXIT_OK


def cmd_validate(rc: RunConfig, w: ArtifactWriter) -> int:
    lp = load_problem(rc.problem, rc.mesh)
    p = lp.prob.initial
    rep = pb.validate_initial_pressure(p, lp.C0, lp.K0, p.neighborhood, theta=lp.prob.theta)
    w.write("validation.json", json_text({**rep.as_dict(), "passed": rep.passed}))
    w.notes.append(f"hypotheses: {'all passed' if rep.passed else 'failed ' + ', '.join(rep.failed())}")
    if not rep.passed:
        print("mfgfb: validation failed: " + ", ".join(rep.failed()), file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_solve(rc: RunConfig, w: ArtifactWriter) -> int:
    lp = load_problem(rc.problem, rc.mesh)
    try:
        field, traces = _solve(lp, rc.seed)
    except NonConvergenceError as exc:
        traces = [exc.trace] if exc.trace is not None else []
        w.write("trace.csv", csv_text(TRACE_HEADER, _trace_rows(traces)))
        raise
    mesh = field.mesh
    T, Y = np.meshgrid(mesh.t_nodes, mesh.y_nodes, indexing="ij")
    cols = [Y.ravel(), T.ravel(), field.gamma.ravel(), field.gamma_y.ravel(), field.Z.ravel()]
    w.write("field.csv", csv_text(["y", "t", "gamma", "gamma_y", "Z"], zip(*cols)))
    w.write("trace.csv", csv_text(TRACE_HEADER, _trace_rows(traces)))
    lo, hi = field.slope_bounds()
    summary = {
        "iterations": sum(tr.iterations for tr in traces),
        "final_residual": traces[-1].final_residual,
        "gamma_y_min": lo,
        "gamma_y_max": hi,
        "mesh": [mesh.ny, mesh.nt],
        "theta": lp.prob.theta,
        "terminal": lp.prob.terminal.kind.value,
    }
    w.write("summary.json", json_text(summary))
    w.notes.append(f"converged in {summary['iterations']} Newton steps, residual {summary['final_residual']:.3e}")
    w.notes.append(f"gamma_y in [{lo:.6g}, {hi:.6g}] on a {mesh.ny}x{mesh.nt} mesh")
    return EXIT_OK


def _level_sizes(ny: int, nt: int, levels: int) -> list[tuple[int, int]]:
    out = []
    for k in range(levels - 1, -1, -1):
        out.append(((ny - 1) // 2**k + 1, (nt - 1) // 2**k + 1))
    return out


def cmd_transforms(rc: RunConfig, w: ArtifactWriter) -> int:
    lp = load_problem(rc.problem, rc.mesh)
    p, coupling = lp.prob.initial, lp.prob.coupling
    r0 = 0.95 * 2.0 * math.sqrt(p.neighborhood)
    chart = tf.build_radial_chart(p, coupling, r0)
    w.write("radial_chart.csv", csv_text(["r", "W", "A", "D", "omega0"], zip(chart.r_nodes, chart.W, chart.A, chart.D, chart.omega0)))
    rows = []
    for ny, nt in _level_sizes(lp.ny, lp.nt, rc.levels or 1):
        field, _ = _solve(lp, rc.seed, ny, nt)
        r, t, Zt = tf.radial_Z(field, r0)
        for test in (tf.axis_test(r0, t[0], t[-1]), tf.interior_test(r0, t[0], t[-1])):
            rows.append((test.name, ny, tf.weighted_weak_residual(chart, Zt, t, test, r)))
    w.write("weak_residuals.csv", csv_text(["test", "level", "residual"], rows))
    return EXIT_OK


def cmd_report(rc: RunConfig, w: ArtifactWriter) -> int:
    lp = load_problem(rc.problem, rc.mesh)
    field, _ = _solve(lp, rc.seed)
    rep = an.regularity_report(field, lp.prob)
    w.write("fb_curves.csv", csv_text(["t", "left", "right", "left_dd", "right_dd"], rep.curves.table()))
    w.write("rates.csv", csv_text(["quantity", "exponent", "r2", "band"], rep.rates_rows()))
    res = [
        ("acceleration_left", rep.acceleration.left),
        ("acceleration_right", rep.acceleration.right),
        ("mass_relation", rep.mass_relation),
        ("hj", rep.residuals.hj),
        ("continuity", rep.residuals.continuity),
        ("lipschitz", rep.lipschitz),
        ("kink_second_difference", rep.kink),
        ("velocity_jump", rep.velocity_jump),
    ]
    w.write("residuals.csv", csv_text(["quantity", "value"], res))
    w.write("report.json", json_text(rep.as_dict()))
    for name, value in res:
        w.notes.append(f"{name}: {value:.6g}")
    return EXIT_OK


def cmd_convergence(rc: RunConfig, w: ArtifactWriter) -> int:
    lp = load_problem(rc.problem, rc.mesh)
    sizes = _level_sizes(lp.ny, lp.nt, rc.levels or 3)
    if any(a != b for a, b in sizes):
        raise InputError("convergence study uses square meshes (ny == nt)")
    table, _ = an.convergence_study(lp.prob, [a for a, _ in sizes], lp.solver, an.default_workers())
    rows = table.rows()
    header = list(rows[0].keys())
    w.write("convergence.csv", csv_text(header, ([r[h] for h in header] for r in rows)))
    for r in rows:
        order = "" if r["gamma_linf_order"] is None else f", order {r['gamma_linf_order']:.2f}"
        w.notes.append(f"level {r['level']}: gamma L-inf error {r['gamma_linf']:.3e}{order}")
    return EXIT_OK


COMMANDS = {
    "oracle": cmd_oracle,
    "solve": cmd_solve,
    "transforms": cmd_transforms,
    "report": cmd_report,
    "convergence": cmd_convergence,
    "validate": cmd_validate,
}


def _mesh_arg(s: str) -> tuple[int, int]:
    try:
        a, b = s.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mesh must look like 65x65, got '{s}'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mfgfb", description="Free-boundary mean-field-game solver and diagnostics")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "oracle")
        sp.add_argument("--out", type=Path, default=Path("mfgfb_out"))
        sp.add_argument("--mesh", type=_mesh_arg)
        sp.add_argument("--levels", type=int)
        sp.add_argument("--force", action="store_true")
        sp.add_argument("--seed", type=int, default=0)
        if name == "oracle":
            sp.add_argument("--theta", type=float, default=1.0)
            sp.add_argument("--R", type=float, default=1.0)
    return ap


def run(rc: RunConfig) -> int:
    try:
        w = ArtifactWriter(rc.out, rc.force)
    except OSError as exc:
        print(f"mfgfb: error: {exc}", file=sys.stderr)
        return EXIT_IO
    code = EXIT_OK
    try:
        code = COMMANDS[rc.subcommand](rc, w)
    except NonConvergenceError as exc:
        print(f"mfgfb: nonconvergence: {exc}", file=sys.stderr)
        code = EXIT_NONCONVERGED
    except (InputError, DomainError) as exc:
        print(f"mfgfb: invalid input: {exc}", file=sys.stderr)
        code = EXIT_INVALID
    except MfgfbError as exc:
        print(f"mfgfb: error: {exc}", file=sys.stderr)
        code = EXIT_INVALID
    except OSError as exc:
        print(f"mfgfb: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if w.entries:
            w.manifest()
    except OSError as exc:
        print(f"mfgfb: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"mfgfb {rc.subcommand}: exit {code}, {len(w.entries)} artifact(s) in {w.out}")
    for line in w.notes:
        print(f"  {line}")
    for name in sorted(w.entries):
        print(f"  wrote {name}")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    rc = RunConfig(
        subcommand=args.subcommand,
        problem=args.config,
        out=args.out,
        mesh=args.mesh,
        levels=args.levels,
        force=args.force,
        seed=args.seed,
        theta=getattr(args, "theta", 1.0),
        R=getattr(args, "R", 1.0),
    )
    threads = os.environ.get("MFGFB_THREADS")
    if threads:
        os.environ.setdefault("OMP_NUM_THREADS", threads)
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
