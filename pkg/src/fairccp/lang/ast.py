"""Agents of the (soft) cc language extended with the fair parallel node."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from ..constraints import ConstraintSystem, SoftConstraint


@dataclass(frozen=True)
class ConstraintRef:
    """A named constraint as it appears inside an agent (possibly re-scoped)."""

    name: str
    constraint: SoftConstraint

    def rename(self, mapping: Mapping[str, str]) -> "ConstraintRef":
        c = self.constraint.rename(mapping)
        return self if c is self.constraint else ConstraintRef(self.name, c)


@dataclass(frozen=True)
class Level:
    """Valued threshold ``->[a]``: fail when the store level drops below ``a``."""

    value: Any


@dataclass(frozen=True)
class Cut:
    """Pointwise threshold ``->{phi}``."""

    phi: ConstraintRef


Threshold = Optional[Union[Level, Cut]]


class Agent:
    __slots__ = ()


@dataclass(frozen=True)
class Success(Agent):
    pass


@dataclass(frozen=True)
class Fail(Agent):
    pass


@dataclass(frozen=True)
class Tell(Agent):
    ref: ConstraintRef
    threshold: Threshold
    then: Agent


@dataclass(frozen=True)
class Ask:
    ref: ConstraintRef
    threshold: Threshold
    then: Agent


@dataclass(frozen=True)
class Choice(Agent):
    branches: tuple[Ask, ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("Choice needs at least one branch")


@dataclass(frozen=True)
class Par(Agent):
    left: Agent
    right: Agent


@dataclass(frozen=True)
class FairPar(Agent):
    agents: tuple[Agent, ...]

    def __post_init__(self) -> None:
        if not self.agents:
            raise ValueError("FairPar needs at least one agent")


@dataclass(frozen=True)
class Exists(Agent):
    var: str
    body: Agent


@dataclass(frozen=True)
class Call(Agent):
    name: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Declaration:
    name: str
    params: tuple[str, ...]
    body: Agent


@dataclass(frozen=True)
class Program:
    system: ConstraintSystem
    constraints: dict[str, SoftConstraint]
    declarations: dict[str, Declaration]
    main: Agent

    def __hash__(self) -> int:
        return hash((self.system, self.main))


def ask(ref: ConstraintRef, then: Agent, threshold: Threshold = None) -> Choice:
    return Choice((Ask(ref, threshold, then),))


# -- variables -----------------------------------------------------------------


def _ref_vars(ref: ConstraintRef, threshold: Threshold) -> set[str]:
    out = set(ref.constraint.scope)
    if isinstance(threshold, Cut):
        out |= set(threshold.phi.constraint.scope)
    return out


def free_variables(a: Agent) -> frozenset[str]:
    if isinstance(a, (Success, Fail)):
        return frozenset()
    if isinstance(a, Tell):
        return frozenset(_ref_vars(a.ref, a.threshold)) | free_variables(a.then)
    if isinstance(a, Choice):
        out: set[str] = set()
        for b in a.branches:
            out |= _ref_vars(b.ref, b.threshold) | free_variables(b.then)
        return frozenset(out)
    if isinstance(a, Par):
        return free_variables(a.left) | free_variables(a.right)
    if isinstance(a, FairPar):
        return frozenset().union(*(free_variables(x) for x in a.agents))
    if isinstance(a, Exists):
        return free_variables(a.body) - {a.var}
    if isinstance(a, Call):
        return frozenset(a.args)
    raise TypeError(f"not an agent: {a!r}")


def all_variables(a: Agent) -> frozenset[str]:
    """Every variable name occurring in ``a``, bound or free."""
    if isinstance(a, Exists):
        return all_variables(a.body) | {a.var}
    if isinstance(a, Tell):
        return frozenset(_ref_vars(a.ref, a.threshold)) | all_variables(a.then)
    if isinstance(a, Choice):
        return frozenset().union(
            *(_ref_vars(b.ref, b.threshold) | all_variables(b.then) for b in a.branches)
        )
    if isinstance(a, Par):
        return all_variables(a.left) | all_variables(a.right)
    if isinstance(a, FairPar):
        return frozenset().union(*(all_variables(x) for x in a.agents))
    return free_variables(a)


def node_kinds(a: Agent) -> Counter:
    c: Counter = Counter()

    def walk(x: Any) -> None:
        c[type(x).__name__] += 1
        if isinstance(x, (Tell, Ask)):
            walk(x.then)
        elif isinstance(x, Choice):
            for b in x.branches:
                walk(b)
        elif isinstance(x, Par):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, FairPar):
            for y in x.agents:
                walk(y)
        elif isinstance(x, Exists):
            walk(x.body)

    walk(a)
    return c


# -- substitution --------------------------------------------------------------


def fresh_name(var: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    base = var.split("'")[0]
    n = 1
    while f"{base}'{n}" in avoid:
        n += 1
    return f"{base}'{n}"


def substitute(a: Agent, formals: Sequence[str], actuals: Sequence[str]) -> Agent:
    """``a[actuals/formals]``, renaming ``exists`` binders that would capture."""
    if len(formals) != len(actuals):
        raise ValueError(
            f"arity mismatch: {len(formals)} formals, {len(actuals)} actuals"
        )
    mapping = {f: x for f, x in zip(formals, actuals) if f != x}
    return _subst(a, mapping)


def _threshold(t: Threshold, m: Mapping[str, str]) -> Threshold:
    if isinstance(t, Cut):
        phi = t.phi.rename(m)
        return t if phi is t.phi else Cut(phi)
    return t


def _subst(a: Agent, m: Mapping[str, str]) -> Agent:
    if not m or isinstance(a, (Success, Fail)):
        return a
    if isinstance(a, Tell):
        return Tell(a.ref.rename(m), _threshold(a.threshold, m), _subst(a.then, m))
    if isinstance(a, Choice):
        return Choice(tuple(
            Ask(b.ref.rename(m), _threshold(b.threshold, m), _subst(b.then, m))
            for b in a.branches
        ))
    if isinstance(a, Par):
        return Par(_subst(a.left, m), _subst(a.right, m))
    if isinstance(a, FairPar):
        return FairPar(tuple(_subst(x, m) for x in a.agents))
    if isinstance(a, Call):
        return Call(a.name, tuple(m.get(x, x) for x in a.args))
    if isinstance(a, Exists):
        inner = {k: v for k, v in m.items() if k != a.var}
        body_free = free_variables(a.body)
        inner = {k: v for k, v in inner.items() if k in body_free}
        if not inner:
            return a
        var, body = a.var, a.body
        if var in inner.values():
            var = fresh_name(var, all_variables(body) | set(inner) | set(inner.values()))
            body = _subst(body, {a.var: var})
        return Exists(var, _subst(body, inner))
    raise TypeError(f"not an agent: {a!r}")
