# %% [markdown]
# # Regularity of the reconstructed fields
#
# The solved flow is mapped back to Eulerian ``(x, t)``. The pressure
# vanishes linearly at each edge, and the zero extension is Lipschitz
# but has a kink there.

# %%
import json

from mfgfb import analysis as an
from mfgfb.exact_oracle import planning_problem
from mfgfb.lagrangian_solver import Mesh, newton_solve

prob = planning_problem(1.0)
J = prob.measurement_window
recs = {}
for n in (33, 65, 129):
    field, _ = newton_solve(prob, mesh=Mesh.build(prob.initial.b, prob.horizon, n, n))
    recs[n] = (field, an.eulerian_reconstruct(field, prob))

# %%
for t, side, fit in an.pressure_rate_fits(recs[129][1], prob):
    print(f"t={t:.3f} {side:5s} exponent {fit.exponent:.3f}  r2 {fit.r2:.5f}")

# %% [markdown]
# Lipschitz constant stays put while the second difference across the
# edge doubles with each refinement.

# %%
for n, (_, ef) in recs.items():
    print(n, f"lipschitz {an.lipschitz_constant(ef, J):.4f}", f"kink {an.kink_second_difference(ef, J):.3f}")

# %%
field, ef = recs[65]
rep = an.regularity_report(field, prob, ef)
print(json.dumps({k: v for k, v in rep.as_dict().items() if not isinstance(v, (list, dict))}, indent=1, default=float))
