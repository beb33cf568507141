"""
Negotiating a service level
===========================

Three clients tell fuzzy QoS constraints to a shared store under the fair
parallel operator.  Each tell carries a valued threshold of 1/5.
"""

# %%
from fairccp.audit import check_soft_trace
from fairccp.cli import bundled_programs
from fairccp.engine import RunOptions, run
from fairccp.lang import format_agent, parse_file

program = parse_file(bundled_programs()["sla3.fcc"])
print(format_agent(program.main))

# %% [markdown]
# Crisp carpool scheduling.  The first three steps serve clients 0, 1, 2 and
# bring the scores back to zero.

# %%
result = run(program, RunOptions(fair="crisp"))
for ev in result.trace:
    print(ev.pretty())
print(result.outcome)

# %% [markdown]
# Soft scheduling keeps one constraint section per client and compares
# their best levels.  ``min`` serves the client whose section is worst so
# far, ``max`` the best; ties go to whoever ran least.

# %%
for policy in ("min", "max"):
    result = run(program, RunOptions(fair="soft", soft_select=policy))
    order = [ev.agent for ev in result.trace]
    print(f"{policy}: {result.outcome}  order {order}  final level {result.trace[-1].blevel}")
    print("   guard violations:", check_soft_trace(program, result.trace, policy))

# %% [markdown]
# Thresholds: the atomic version of a request fails where the eventual one
# goes through.

# %%
for name in ("threshold_atomic.fcc", "threshold_eventual.fcc"):
    r = run(parse_file(bundled_programs()[name]))
    print(f"{name:24} {r.outcome}")
