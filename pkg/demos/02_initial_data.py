# %% [markdown]
# # Initial data and admissibility
#
# The solver needs an initial pressure that vanishes linearly at both ends
# of its support and is concave near them. ``validate_initial_pressure``
# reports each hypothesis separately.

# %%
import numpy as np

from mfgfb import problem as pb

p0 = pb.barenblatt(1.0)
rep = pb.validate_initial_pressure(p0, C0=5.0, K0=5.0, delta=p0.neighborhood, theta=1.0)
for c in rep.checks:
    print(f"{c.name:28s} {'ok' if c.passed else 'FAIL':4s} {c.detail}")

# %% [markdown]
# A profile that vanishes quadratically at the left end is rejected,
# and the failing check names the point where it is worst.

# %%
y = np.linspace(0, 1, 401)
bad = pb.tabulated(y, y**2 * (1 - y), delta=0.1)
rep = pb.validate_initial_pressure(bad, C0=5.0, K0=5.0, delta=0.1)
print("failed:", rep.failed())

# %% [markdown]
# Between two densities of equal mass the monotone rearrangement
# ``T = F_T^-1 o F_0`` gives the terminal positions used by the planning problem.

# %%
m0 = pb.barenblatt(1.0, time=1.0).density(1.0)
mT = pb.barenblatt(1.0, time=2.0).density(1.0)
T = pb.monotone_transport_map(m0, mT)
print("T at quartiles:", np.round(T(np.array([0.25, 0.5, 0.75]) * m0.b), 6))
