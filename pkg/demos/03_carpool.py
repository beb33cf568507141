"""
Carpool scores
==============

The executed agent earns U(n-1)/n points and every other enabled agent pays
U/n, where n is the number of enabled agents and U = lcm(1..m).  The lowest
score goes next.
"""

# %%
import numpy as np

from fairccp.scheduler import (
    compute_U, greedy_adversary, random_enablement, run_carpool,
)

# %% [markdown]
# With everyone always enabled the loop is plain round robin and the scores
# return to zero after each round.

# %%
run = run_carpool(3, 9)
print("U =", compute_U(3))
print("chosen:", run.chosen)
print(np.array([[h[a] for a in range(3)] for h in run.history]))

# %% [markdown]
# Random enablement: agents drop in and out but nobody drifts far from
# their fair share.  ``E`` counts executions, ``I`` sums 1/n over the steps
# an agent was enabled.

# %%
run = run_carpool(4, 10_000, random_enablement(4, seed=7))
rep = run.report()
for a, r in sorted(rep.agents.items()):
    print(f"agent {a}: E={r.executed:5d}  I={float(r.ideal):9.2f}  enabled {r.enabled_steps}")
print("largest |E - I| seen:", rep.n_bound, "  largest |score|:", run.max_abs_score)

# %% [markdown]
# An adversary that picks, at every step, the enabled set that pushes some
# score furthest from zero does not do much better.

# %%
for m in (2, 3, 4):
    run = run_carpool(m, 2000, greedy_adversary(m, seed=1))
    print(f"m={m}: max|E-I|={run.report().n_bound}  max|score|={run.max_abs_score}  U*m={compute_U(m) * m}")

# %% [markdown]
# Each score is exactly U times (E - I), so the two measures move together.

# %%
k, led = run.scores, run.ledger
print(all(k.entries[a] == k.U * (r.executed - r.ideal) for a, r in led.records.items()))
