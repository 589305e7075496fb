# coding: utf-8

# # The three-state shock hierarchy
#
# With three states there are six ordered pairs, of which five can appear in
# an entropy solution: up-jumps may only climb one state. For each species
# (u, v) the interaction sets list the middle states w that create it and the
# partners that destroy it.

# In[1]:

import numpy as np

from polyflux import build_flux, compare_interaction_sets, interaction_sets, ledger_verify, make_profile, seeded_bumps, solve

flux = build_flux([1, 2, 3], [2, 3, 8])
for u in range(3):
    for v in range(3):
        if u != v and v <= u + 1:
            s = interaction_sets(3, u, v)
            lab = lambda ws: [w + 1 for w in sorted(ws)]
            print((u + 1, v + 1), "growth", lab(s.w1), "right decay", lab(s.w2), "left decay", lab(s.w3))


# Enumerating every pair of fronts that can actually meet gives the same sets.
# The summary also lists formula terms that pair with a species which cannot
# exist, so their densities vanish.

# In[2]:

print(compare_interaction_sets(flux).summary())


# The ledger checks the weak one-point equation on every species: the
# integral along each trajectory against a bump must match what the events
# and the boundaries put in and take out.

# In[3]:

rng = np.random.default_rng(0)
sols = []
for _ in range(50):
    x1 = rng.uniform(-1.0, 1.0)
    x2 = x1 + rng.uniform(0.2, 2.0)
    sols.append(solve(flux, make_profile([x1, x2], [2, 1, 0], flux), T=1.0))
rep = ledger_verify(sols, seeded_bumps(1, 10, (-2.0, 10.0), (0.0, 1.0)))
print(rep.events, "events, balanced:", rep.balanced, "max residual:", rep.max_residual)
