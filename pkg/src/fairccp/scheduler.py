"""Fair selection among enabled agents.

Two score regimes are supported:

* crisp carpool scores -- integers; the executed agent (the "driver") gains
  ``U*(n-1)/n`` and each other enabled agent (a "passenger") loses ``U/n``,
  where ``n`` is the number of enabled agents and ``U = lcm(1..m)``;
* soft sections -- each agent accumulates the ⊗ of the constraints it told,
  and agents are compared by the best level of their section.

The :class:`FairnessLedger` tracks executions ``E`` against the ideal share
``I`` (each enabled agent earns ``1/n`` per step) so that ``|E - I|`` can be
reported.  Everything here is a pure value transformation.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Hashable, Iterable, Mapping, Optional, Sequence

from .constraints import ConstraintSystem, SoftConstraint, combine, constraint_blevel

AgentId = Hashable


class SchedulerError(ValueError):
    pass


def compute_U(m: int) -> int:
    """Least common multiple of ``1..m``."""
    if m < 1:
        raise SchedulerError("compute_U needs m >= 1")
    return reduce(math.lcm, range(1, m + 1), 1)


@dataclass(frozen=True)
class CrispScoreVector:
    U: int
    entries: dict[AgentId, int]

    @classmethod
    def initial(cls, agents: Sequence[AgentId], U: Optional[int] = None) -> "CrispScoreVector":
        if U is None:
            U = compute_U(len(agents))
        return cls(U, {a: 0 for a in agents})

    def total(self) -> int:
        return sum(self.entries.values())


@dataclass(frozen=True)
class SoftScoreVector:
    system: ConstraintSystem
    entries: dict[AgentId, SoftConstraint]

    @classmethod
    def initial(cls, system: ConstraintSystem, agents: Sequence[AgentId]) -> "SoftScoreVector":
        one = SoftConstraint.one(system)
        return cls(system, {a: one for a in agents})

    def levels(self) -> dict[AgentId, Any]:
        return {a: constraint_blevel(c) for a, c in self.entries.items()}


def _check_enabled(enabled: Sequence[AgentId], live: Mapping[AgentId, Any]) -> None:
    if not enabled:
        raise SchedulerError("no enabled agent to select")
    for a in enabled:
        if a not in live:
            raise SchedulerError(f"agent {a!r} is not live")


def select_crisp(enabled: Sequence[AgentId], k: CrispScoreVector) -> AgentId:
    """The enabled agent with the lowest score; ties go to the earliest listed."""
    _check_enabled(enabled, k.entries)
    return min(enumerate(enabled), key=lambda p: (k.entries[p[1]], p[0]))[1]


def update_crisp(k: CrispScoreVector, executed: AgentId, enabled: Sequence[AgentId]) -> CrispScoreVector:
    if executed not in enabled:
        raise SchedulerError(f"executed agent {executed!r} was not enabled")
    _check_enabled(enabled, k.entries)
    n = len(set(enabled))
    alpha, beta = k.U * (n - 1) // n, k.U // n
    if alpha * n != k.U * (n - 1) or beta * n != k.U:
        raise SchedulerError(f"U={k.U} is not divisible by n={n}")
    entries = dict(k.entries)
    for a in set(enabled):
        entries[a] += alpha if a == executed else -beta
    return CrispScoreVector(k.U, entries)


def remove_agent(k, agent: AgentId):
    """Drop an agent's entry (its score or section); the others are untouched."""
    if agent not in k.entries:
        raise SchedulerError(f"unknown agent {agent!r}")
    entries = {a: v for a, v in k.entries.items() if a != agent}
    if isinstance(k, CrispScoreVector):
        return CrispScoreVector(k.U, entries)
    return SoftScoreVector(k.system, entries)


def select_soft(
    enabled: Sequence[AgentId],
    k: SoftScoreVector,
    policy: str = "min",
    ledger: Optional["FairnessLedger"] = None,
) -> AgentId:
    """Pick an enabled agent by the best level of its section.

    ``policy="min"`` picks an agent whose level is not above any other enabled
    agent's; ``"max"`` picks one not below any other.  Ties go to the agent
    with fewer executions in ``ledger``, then to the earliest listed.
    """
    if policy not in ("min", "max"):
        raise SchedulerError(f"unknown soft selection policy {policy!r}")
    _check_enabled(enabled, k.entries)
    s = k.system.semiring
    levels = {a: constraint_blevel(k.entries[a]) for a in enabled}
    if policy == "min":
        beats = lambda x, y: s.lt(x, y)  # noqa: E731
    else:
        beats = lambda x, y: s.lt(y, x)  # noqa: E731
    candidates = [
        (i, a) for i, a in enumerate(enabled)
        if not any(beats(levels[b], levels[a]) for b in enabled)
    ]

    def executed(a: AgentId) -> int:
        return ledger.executed(a) if ledger is not None else 0

    return min(candidates, key=lambda p: (executed(p[1]), p[0]))[1]


def update_soft(k: SoftScoreVector, executed: AgentId, told: Optional[SoftConstraint]) -> SoftScoreVector:
    if executed not in k.entries:
        raise SchedulerError(f"unknown agent {executed!r}")
    if told is None:
        return k
    entries = dict(k.entries)
    entries[executed] = combine(entries[executed], told)
    return SoftScoreVector(k.system, entries)


# -- fairness ledger -----------------------------------------------------------


@dataclass(frozen=True)
class AgentRecord:
    executed: int = 0
    ideal: Fraction = Fraction(0)
    enabled_steps: int = 0

    @property
    def deviation(self) -> Fraction:
        return abs(self.executed - self.ideal)


@dataclass(frozen=True)
class FairnessLedger:
    records: dict[AgentId, AgentRecord] = field(default_factory=dict)
    max_deviation: Fraction = Fraction(0)
    steps: int = 0

    def executed(self, agent: AgentId) -> int:
        rec = self.records.get(agent)
        return rec.executed if rec else 0


def ledger_record(ledger: FairnessLedger, enabled: Sequence[AgentId], executed: AgentId) -> FairnessLedger:
    if executed not in enabled:
        raise SchedulerError(f"executed agent {executed!r} was not enabled")
    share = Fraction(1, len(set(enabled)))
    records = dict(ledger.records)
    for a in dict.fromkeys(enabled):
        rec = records.get(a, AgentRecord())
        records[a] = AgentRecord(
            rec.executed + (a == executed), rec.ideal + share, rec.enabled_steps + 1
        )
    worst = max((r.deviation for r in records.values()), default=Fraction(0))
    return FairnessLedger(records, max(ledger.max_deviation, worst), ledger.steps + 1)


def _fmt(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    return x


@dataclass(frozen=True)
class FairnessReport:
    agents: dict[AgentId, AgentRecord]
    n_bound: Fraction
    final_deviation: Fraction
    scores: dict = field(default_factory=dict)
    max_abs_score: Optional[int] = None

    def to_dict(self) -> dict:
        out = {
            "agents": {
                str(a): {
                    "e": r.executed,
                    "i": str(r.ideal),
                    "deviation": str(r.deviation),
                    "enabled_steps": r.enabled_steps,
                }
                for a, r in self.agents.items()
            },
            "n_bound": str(self.n_bound),
            "final_deviation": str(self.final_deviation),
            "scores": {
                str(g): {str(a): _fmt(v) for a, v in vec.items()}
                for g, vec in self.scores.items()
            },
        }
        if self.max_abs_score is not None:
            out["max_abs_score"] = self.max_abs_score
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def fairness_report(ledger: FairnessLedger, scores: Optional[dict] = None, max_abs_score: Optional[int] = None) -> FairnessReport:
    """Summarise a ledger.

    ``n_bound`` is the largest ``|E - I|`` seen at any step, ``final_deviation``
    the largest at the end of the run.
    """
    final = max((r.deviation for r in ledger.records.values()), default=Fraction(0))
    return FairnessReport(
        dict(ledger.records), max(ledger.max_deviation, final), final,
        dict(scores or {}), max_abs_score,
    )


# -- carpool driver --------------------------------------------------------------


@dataclass
class CarpoolRun:
    chosen: list[AgentId]
    enabled: list[list[AgentId]]
    history: list[dict[AgentId, int]]
    scores: CrispScoreVector
    ledger: FairnessLedger
    max_abs_score: int

    def report(self) -> FairnessReport:
        return fairness_report(self.ledger, {"carpool": self.scores.entries}, self.max_abs_score)


def run_carpool(
    m: int,
    steps: int,
    enablement: Callable[[int, CrispScoreVector], Sequence[AgentId]] | None = None,
    U: Optional[int] = None,
) -> CarpoolRun:
    """Drive the select/update loop for ``m`` agents ``0..m-1``.

    ``enablement(step, scores)`` returns the enabled agents at each step; the
    default enables everyone.
    """
    agents = list(range(m))
    k = CrispScoreVector.initial(agents, U)
    ledger = FairnessLedger()
    run = CarpoolRun([], [], [], k, ledger, 0)
    for t in range(steps):
        enabled = sorted(enablement(t, k)) if enablement else agents
        pick = select_crisp(enabled, k)
        k = update_crisp(k, pick, enabled)
        ledger = ledger_record(ledger, enabled, pick)
        run.chosen.append(pick)
        run.enabled.append(list(enabled))
        run.history.append(dict(k.entries))
        run.max_abs_score = max(run.max_abs_score, max(abs(v) for v in k.entries.values()))
    run.scores, run.ledger = k, ledger
    return run


def random_enablement(m: int, seed: int) -> Callable[[int, CrispScoreVector], list[int]]:
    """Seeded random non-empty subsets, each agent with its own enable rate."""
    rng = random.Random(seed)
    rates = [rng.uniform(0.2, 1.0) for _ in range(m)]

    def pattern(_t: int, _k: CrispScoreVector) -> list[int]:
        picked = [a for a in range(m) if rng.random() < rates[a]]
        return picked or [rng.randrange(m)]

    return pattern


def greedy_adversary(m: int, seed: int) -> Callable[[int, CrispScoreVector], list[int]]:
    """Enable the subset that maximises the largest ``|score|`` after the step.

    Exhaustive over all ``2^m - 1`` subsets; ties broken by a seeded RNG.
    """
    rng = random.Random(seed)
    subsets = [
        [a for a in range(m) if mask >> a & 1] for mask in range(1, 1 << m)
    ]

    def pattern(_t: int, k: CrispScoreVector) -> list[int]:
        best, best_val = [], -1
        order = subsets[:]
        rng.shuffle(order)
        for sub in order:
            nxt = update_crisp(k, select_crisp(sub, k), sub)
            val = max(abs(v) for v in nxt.entries.values())
            if val > best_val:
                best, best_val = sub, val
        return best

    return pattern
