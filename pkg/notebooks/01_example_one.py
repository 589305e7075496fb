# coding: utf-8

# # Two shocks, one collision
#
# Three states 1 < 2 < 3 with flux values 2, 3, 8. The data steps down from 3
# to 2 at x = 1 and from 2 to 1 at x = 2. The left shock is faster, so it
# catches the right one and the two merge into a single (3, 1) shock.

# In[1]:

import numpy as np

from polyflux import HopfLax, build_flux, make_profile, solve, verify_transport

flux = build_flux([1, 2, 3], [2, 3, 8])
prof = make_profile([1, 2], [2, 1, 0], flux)  # pieces are state indices
flux.slopes


# Front speeds come from the chords of the flux: (3,2) moves at 5 and (2,1) at 1.

# In[2]:

sol = solve(flux, prof, T=1.0)
for e in sol.events:
    print(e.t, e.x, e.left_species, "+", e.right_species, "->", e.created_species)


# Each front is a straight segment in the x-t plane. These polylines are what
# the `report` command writes to polylines.csv.

# In[3]:

for f in sol.fronts:
    t1 = f.t_death if f.t_death is not None else 1.0
    print(f.id, [flux.states[k] for k in f.species], (f.x_birth, f.t_birth), (f.position(t1), t1))


# The variational formula knows nothing about fronts, yet gives the same field
# away from the shocks.

# In[4]:

hl = HopfLax(flux, prof)
xs = np.linspace(0.0, 6.0, 61)
for t in (0.125, 0.5, 1.0):
    a = sol.query_many(xs, t)
    b = hl.query_many(xs, t)
    print(t, int((a != b).sum()), "disagreements")


# Before the collision each tail set {u >= u_k} is simply carried along at the
# neighbour speed c_{k-1}. Afterwards the carried sets overlap, which is the
# region where the first hierarchy stops describing the solution.

# In[5]:

chk = verify_transport(sol, [0.1, 0.2, 0.5])
for t in chk.times:
    print(t, chk.residual[t], chk.overlap[t])
