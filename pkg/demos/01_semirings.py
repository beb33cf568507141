"""
Preference levels as c-semirings
================================

Three instances ship with the package: boolean (crisp), fuzzy and weighted.
"""

# %%
from fractions import Fraction as F

from fairccp.semiring import BOOLEAN, FUZZY, WEIGHTED, SemiringMismatchError, plus

# %% [markdown]
# ``plus`` picks the better of two levels, ``times`` combines them.
# In the fuzzy instance those are max and min over [0, 1].

# %%
a, b = F("0.3"), F("0.7")
print("fuzzy   plus:", FUZZY.plus(a, b), " times:", FUZZY.times(a, b))
print("boolean plus:", BOOLEAN.plus(False, True), " times:", BOOLEAN.times(False, True))

# %% [markdown]
# The weighted instance counts costs: combining adds them, and the cheaper
# of two levels is the better one, so the order runs the other way.

# %%
print("weighted times 2, 3:", WEIGHTED.times(F(2), F(3)))
print("is 7 <= 2 ?", WEIGHTED.leq(F(7), F(2)))
print("zero, one:", WEIGHTED.zero, WEIGHTED.one)

# %% [markdown]
# The partial order is derived from ``plus``: a <= b exactly when a + b == b.

# %%
for s, (x, y) in [(FUZZY, (F(1, 4), F(3, 4))), (BOOLEAN, (False, True))]:
    print(f"{s.name:8} {x} <= {y}: {s.leq(x, y)}   {y} <= {x}: {s.leq(y, x)}")

# %% [markdown]
# Tagged values refuse to mix instances.

# %%
try:
    plus(FUZZY.value(F(1, 2)), BOOLEAN.value(True))
except SemiringMismatchError as exc:
    print("rejected:", exc)
