"""Post-hoc checks of fair selections recorded in a trace.

These re-derive each selection from the trace alone (plus the program's named
constraint tables), without going through the scheduler: soft section levels
are recomputed by enumerating complete assignments, crisp scores are taken from
the previous event's snapshot.  Programs whose constraints get renamed by
procedure calls or ``exists`` are outside what the soft check can rebuild.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from typing import Any, Iterable, Sequence

from .constraints import SoftConstraint
from .engine import ROOT, TraceEvent
from .lang.ast import Program


def brute_blevel(system, constraints: Sequence[SoftConstraint]) -> Any:
    """Best level of ``constraints`` by enumerating every complete assignment."""
    s = system.semiring
    scope = sorted({v for c in constraints for v in c.scope})
    best = s.zero
    for values in itertools.product(system.domain, repeat=len(scope)):
        at = dict(zip(scope, values))
        level = s.one
        for c in constraints:
            level = s.times(level, c.value(at))
        best = s.plus(best, level)
    return best


def _owned_by(agent: str, slot: str) -> bool:
    return slot == ROOT or agent == slot or agent.startswith(slot + ".")


def check_soft_trace(program: Program, trace: Iterable[TraceEvent], policy: str) -> list[str]:
    """Violations of the soft guard (with its tie-breaks); empty when all hold."""
    s = program.system.semiring
    told: dict[str, list[SoftConstraint]] = defaultdict(list)
    executed: Counter = Counter()
    problems: list[str] = []
    for ev in trace:
        for sel in ev.selections:
            levels = {a: brute_blevel(program.system, told[a]) for a in sel.enabled}
            if policy == "min":
                best = [a for a in sel.enabled if all(s.leq(levels[a], levels[b]) for b in sel.enabled)]
            else:
                best = [a for a in sel.enabled if all(s.leq(levels[b], levels[a]) for b in sel.enabled)]
            expected = min(best, key=lambda a: (executed[a], sel.enabled.index(a))) if best else None
            if sel.chosen != expected:
                shown = {a: s.format_level(v) for a, v in levels.items()}
                problems.append(
                    f"step {ev.step}: group {sel.group} chose {sel.chosen}, "
                    f"guard ({policy}) expects {expected}; levels {shown}"
                )
        for sel in ev.selections:
            executed[sel.chosen] += 1
        # failed tells carry no selections, so only fired tells land here
        if ev.rule.endswith("tell") and ev.constraint:
            c = program.constraints[ev.constraint]
            for sel in ev.selections:
                if _owned_by(ev.agent, sel.chosen):
                    told[sel.chosen].append(c)
    return problems


def check_crisp_trace(trace: Iterable[TraceEvent]) -> list[str]:
    """Each crisp selection must pick the lowest pre-step score (earliest on ties)."""
    problems: list[str] = []
    previous: dict = {}
    for ev in trace:
        for sel in ev.selections:
            scores = previous.get(sel.group)
            if scores is None:
                scores = {a: 0 for a in sel.enabled}
            expected = min(sel.enabled, key=lambda a: (scores[a], sel.enabled.index(a)))
            if sel.chosen != expected:
                problems.append(
                    f"step {ev.step}: group {sel.group} chose {sel.chosen}, lowest score is {expected}"
                )
        for g, vec in ev.scores.items():
            if any(not isinstance(v, int) for v in vec.values()):
                problems.append(f"step {ev.step}: non-integer score in {g}")
        previous = ev.scores
    return problems
