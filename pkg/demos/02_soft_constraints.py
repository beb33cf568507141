"""
Soft constraints, stores and entailment
=======================================
"""

# %%
from fractions import Fraction as F

from fairccp.constraints import (
    SCSP, ConstraintSystem, SoftConstraint, Store, blevel, combine, entails,
    project, solution, store_blevel, store_tell,
)
from fairccp.semiring import FUZZY

system = ConstraintSystem(FUZZY, domain=("a", "b"), variables=("x", "y"))
c1 = SoftConstraint.from_rows(system, ["x"], {("a",): F("0.8"), ("b",): F("0.5")})
c2 = SoftConstraint.from_rows(
    system, ["x", "y"],
    {("a", "a"): 1, ("a", "b"): F("0.4"), ("b", "a"): F("0.6"), ("b", "b"): 1},
)

# %% [markdown]
# Tables are dense numpy object arrays, one axis per variable.

# %%
print(c2.table)

# %% [markdown]
# Combination takes the pointwise min over the union of the scopes;
# projection keeps the best value over the variables it drops.

# %%
both = combine(c1, c2)
for t, v in both.rows():
    print(t, v)
print("on x:", dict(project(both, {"x"}).rows()))

# %% [markdown]
# A problem's best level of consistency is its solution projected onto
# nothing at all.

# %%
p = SCSP([c1, c2], con=["x"])
print("solution over x:", dict(solution(p).rows()))
print("blevel:", blevel(p).value)

# %% [markdown]
# A store remembers who told what.  It entails a constraint when what it
# already knows about that constraint's variables is no better than it.

# %%
store = store_tell(Store.empty(system), "client", c1)
weaker = SoftConstraint.from_rows(system, ["x"], {("a",): F("0.9"), ("b",): F("0.6")})
print("store level:", store_blevel(store).value)
print("entails c1:", entails(store, c1), " entails weaker:", entails(store, weaker))
print("entails c2:", entails(store, c2))
