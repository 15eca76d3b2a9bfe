"""Free-boundary mean-field games with pressure coupling: closed-form oracle,
Lagrangian Newton solver, boundary coordinate transforms and diagnostics."""

from . import analysis, exact_oracle, lagrangian_solver, problem, rates, transforms
from .errors import DomainError, InputError, MfgfbError, MonotonicityError, NonConvergenceError, StateError, StepError
from .exact_oracle import OracleReference, SelfSimilarSolution, planning_problem
from .lagrangian_solver import FlowField, Grading, Mesh, SolverConfig, continuation_solve, newton_solve
from .problem import (
    CouplingParams,
    PressureProfile,
    ProblemSpec,
    TerminalSpec,
    derive_constants,
    monotone_transport_map,
    validate_initial_pressure,
)
from .rates import RateFit, holder_exponent

__version__ = "0.1.0"
