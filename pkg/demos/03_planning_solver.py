# %% [markdown]
# # Lagrangian solver on the planning problem
#
# In Lagrangian coordinates the support is fixed at ``[0, b]`` and the
# flow ``gamma(y, t)`` solves one quasilinear equation. We solve the
# planning problem between two self-similar densities and compare with
# the closed form.

# %%
import time

import numpy as np

from mfgfb import analysis as an
from mfgfb.exact_oracle import planning_problem
from mfgfb.lagrangian_solver import Mesh, SolverConfig, continuation_solve, newton_solve

prob = planning_problem(1.0)
print("support:", prob.initial.support, "horizon:", prob.horizon)

# %%
for n in (33, 65, 129):
    mesh = Mesh.build(prob.initial.b, prob.horizon, n, n)
    t0 = time.perf_counter()
    field, trace = newton_solve(prob, mesh=mesh)
    err = an.level_errors(field, prob)
    print(f"{n:4d}^2: {trace.iterations} Newton steps, residual {trace.final_residual:.1e}, "
          f"rel. gamma error {err['gamma_rel_linf']:.2e}, {time.perf_counter() - t0:.2f}s")

# %% [markdown]
# The Newton trace records the merit, the step and the smallest slope.

# %%
for r in trace.records:
    print(r)

# %% [markdown]
# Mesh continuation solves a coarse mesh first and prolongs the result.

# %%
mesh = Mesh.build(prob.initial.b, prob.horizon, 129, 129)
field, traces = continuation_solve(prob, SolverConfig(continuation_levels=3), mesh)
print("steps per level:", [tr.iterations for tr in traces])
