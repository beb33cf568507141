"""Finite-domain soft constraints, SCSPs and constraint stores.

A :class:`SoftConstraint` is a scope (variables, kept in canonical order) and a
dense table with one axis of length ``|D|`` per scope variable.  Tables are
numpy object arrays so carrier values stay exact (``Fraction``/``bool``);
combination broadcasts the semiring ``times`` over the union scope and
projection folds ``plus`` over the eliminated axes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .semiring import CSemiring, SemiringValue

# Characters that only appear in generated variable names (never in source).
FRESH_MARKERS = ("$", "'")


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSystem:
    """``<S, D, V>``: a semiring, a finite domain and an ordered variable list."""

    semiring: CSemiring
    domain: tuple[str, ...]
    variables: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "variables", tuple(self.variables))
        if not self.domain:
            raise ConstraintError("domain must be non-empty")
        if len(set(self.domain)) != len(self.domain):
            raise ConstraintError("domain values must be unique")
        if len(set(self.variables)) != len(self.variables):
            raise ConstraintError("variable names must be unique")
        object.__setattr__(
            self, "_index", {v: i for i, v in enumerate(self.variables)}
        )
        object.__setattr__(
            self, "_dindex", {d: i for i, d in enumerate(self.domain)}
        )

    def __hash__(self) -> int:
        return hash((self.semiring.name, self.domain, self.variables))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConstraintSystem):
            return NotImplemented
        return (
            self.semiring is other.semiring
            and self.domain == other.domain
            and self.variables == other.variables
        )

    def knows(self, var: str) -> bool:
        return var in self._index or any(m in var for m in FRESH_MARKERS)

    def var_key(self, var: str) -> tuple:
        # declared variables first in declaration order, generated ones after
        i = self._index.get(var)
        if i is not None:
            return (0, i, "")
        if any(m in var for m in FRESH_MARKERS):
            return (1, 0, var)
        raise ConstraintError(f"unknown variable {var!r}")

    def canonical(self, variables: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(set(variables), key=self.var_key))

    def domain_index(self, value: str) -> int:
        try:
            return self._dindex[value]
        except KeyError:
            raise ConstraintError(f"{value!r} is not in the domain") from None

    def compatible(self, other: "ConstraintSystem") -> bool:
        return self.semiring is other.semiring and self.domain == other.domain


def _ufunc(op):
    return np.frompyfunc(op, 2, 1)


def _as_table(x: Any) -> np.ndarray:
    arr = np.empty((), dtype=object)
    if isinstance(x, np.ndarray):
        arr = x.astype(object, copy=True)
    else:
        arr[()] = x
    arr.setflags(write=False)
    return arr


class SoftConstraint:
    """A pair ``<def, con>`` with ``def`` stored as a dense table."""

    __slots__ = ("system", "scope", "table", "_hash")

    def __init__(self, system: ConstraintSystem, scope: Sequence[str], table: Any):
        scope = tuple(scope)
        if len(set(scope)) != len(scope):
            raise ConstraintError(f"repeated variable in scope {scope}")
        for v in scope:
            if not system.knows(v):
                raise ConstraintError(f"unknown variable {v!r}")
        arr = np.array(table, dtype=object) if not isinstance(table, np.ndarray) else table
        if arr.ndim == 0 and scope:
            raise ConstraintError("table shape does not match scope")
        expected = (len(system.domain),) * len(scope)
        if arr.shape != expected:
            raise ConstraintError(
                f"table shape {arr.shape} does not match scope {scope} over |D|={len(system.domain)}"
            )
        canon = system.canonical(scope)
        if canon != scope:
            arr = np.transpose(arr, [scope.index(v) for v in canon])
            scope = canon
        s = system.semiring
        out = np.empty(arr.shape, dtype=object)
        for idx, val in np.ndenumerate(arr):
            out[idx] = s.check(val)
        out.setflags(write=False)
        self.system = system
        self.scope = scope
        self.table = out
        self._hash = None

    @classmethod
    def _raw(cls, system: ConstraintSystem, scope: tuple[str, ...], table: np.ndarray) -> "SoftConstraint":
        # trusted constructor: scope canonical, values already in the carrier
        obj = cls.__new__(cls)
        obj.system = system
        obj.scope = scope
        obj.table = _as_table(table)
        obj._hash = None
        return obj

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, system: ConstraintSystem, value: Any, scope: Sequence[str] = ()) -> "SoftConstraint":
        value = system.semiring.check(value)
        scope = system.canonical(scope)
        table = np.empty((len(system.domain),) * len(scope), dtype=object)
        table.fill(value)
        if not scope:
            table = np.empty((), dtype=object)
            table[()] = value
        return cls._raw(system, scope, table)

    @classmethod
    def one(cls, system: ConstraintSystem, scope: Sequence[str] = ()) -> "SoftConstraint":
        return cls.constant(system, system.semiring.one, scope)

    @classmethod
    def zero(cls, system: ConstraintSystem, scope: Sequence[str] = ()) -> "SoftConstraint":
        return cls.constant(system, system.semiring.zero, scope)

    @classmethod
    def from_rows(
        cls,
        system: ConstraintSystem,
        scope: Sequence[str],
        rows: Mapping[tuple, Any],
        default: Any = None,
    ) -> "SoftConstraint":
        """Build a constraint from ``{(d1, ..., dk): level}`` rows.

        Every tuple of ``D^k`` must be listed unless ``default`` is given.
        """
        scope = tuple(scope)
        k = len(scope)
        n = len(system.domain)
        table = np.empty((n,) * k, dtype=object)
        seen = np.zeros((n,) * k, dtype=bool)
        for tup, level in rows.items():
            tup = (tup,) if isinstance(tup, str) else tuple(tup)
            if len(tup) != k:
                raise ConstraintError(f"row {tup} has arity {len(tup)}, expected {k}")
            idx = tuple(system.domain_index(d) for d in tup)
            if seen[idx]:
                raise ConstraintError(f"duplicate row {tup}")
            seen[idx] = True
            table[idx] = level
        if not seen.all():
            if default is None:
                missing = [
                    tuple(system.domain[i] for i in idx)
                    for idx in zip(*np.nonzero(~seen))
                ] if k else [()]
                raise ConstraintError(f"table is not total; missing rows {missing[:4]}")
            table[~seen] = default
        return cls(system, scope, table)

    # -- accessors -----------------------------------------------------------

    @property
    def semiring(self) -> CSemiring:
        return self.system.semiring

    def value(self, assignment: Mapping[str, str]) -> Any:
        idx = tuple(self.system.domain_index(assignment[v]) for v in self.scope)
        return self.table[idx]

    def rows(self) -> Iterable[tuple[tuple[str, ...], Any]]:
        dom = self.system.domain
        for idx in itertools.product(range(len(dom)), repeat=len(self.scope)):
            yield tuple(dom[i] for i in idx), self.table[idx]

    def level(self) -> Any:
        """Value of an empty-scope constraint."""
        if self.scope:
            raise ConstraintError("level() needs an empty-scope constraint")
        return self.table[()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SoftConstraint):
            return NotImplemented
        return (
            self.system.compatible(other.system)
            and self.scope == other.scope
            and self.table.shape == other.table.shape
            and all(a == b for a, b in zip(self.table.flat, other.table.flat))
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.scope, tuple(self.table.flat)))
        return self._hash

    def __repr__(self) -> str:
        fmt = self.semiring.format_level
        if not self.scope:
            return f"SoftConstraint((), {fmt(self.table[()])})"
        body = ", ".join(f"{' '.join(t)}: {fmt(v)}" for t, v in self.rows())
        return f"SoftConstraint({self.scope}, {{{body}}})"

    # -- renaming ------------------------------------------------------------

    def rename(self, mapping: Mapping[str, str]) -> "SoftConstraint":
        """Rename scope variables; variables mapped together keep the diagonal."""
        new = tuple(mapping.get(v, v) for v in self.scope)
        if new == self.scope:
            return self
        if len(set(new)) == len(new):
            return SoftConstraint(self.system, new, self.table)
        target = self.system.canonical(new)
        n = len(self.system.domain)
        table = np.empty((n,) * len(target), dtype=object)
        for idx in itertools.product(range(n), repeat=len(target)):
            at = dict(zip(target, idx))
            table[idx] = self.table[tuple(at[v] for v in new)]
        return SoftConstraint._raw(self.system, target, table)


def _check_same(c1: SoftConstraint, c2: SoftConstraint) -> None:
    if not c1.system.compatible(c2.system):
        raise ConstraintError("constraints belong to different constraint systems")


def _expand(c: SoftConstraint, scope: tuple[str, ...]) -> np.ndarray:
    # insert singleton axes so c's table broadcasts against ``scope``
    shape = [len(c.system.domain) if v in c.scope else 1 for v in scope]
    return c.table.reshape(shape) if scope else c.table


def combine(c1: SoftConstraint, c2: SoftConstraint) -> SoftConstraint:
    """``c1 (x) c2``: pointwise ``times`` over the union of the two scopes."""
    _check_same(c1, c2)
    system = c1.system
    scope = system.canonical(c1.scope + c2.scope)
    res = _ufunc(system.semiring.times)(_expand(c1, scope), _expand(c2, scope))
    if scope:
        res = np.broadcast_to(res, (len(system.domain),) * len(scope))
    return SoftConstraint._raw(system, scope, np.asarray(res, dtype=object))


def combine_all(system: ConstraintSystem, constraints: Iterable[SoftConstraint]) -> SoftConstraint:
    acc = SoftConstraint.one(system)
    for c in constraints:
        acc = combine(acc, c)
    return acc


def project(c: SoftConstraint, keep: Iterable[str]) -> SoftConstraint:
    """``c ⇓ keep``: fold ``plus`` over every scope variable not in ``keep``."""
    keep = set(keep)
    eliminated = [i for i, v in enumerate(c.scope) if v not in keep]
    if not eliminated:
        return c
    plus = _ufunc(c.semiring.plus)
    table = c.table
    for axis in reversed(eliminated):
        table = plus.reduce(table, axis=axis)
    scope = tuple(v for v in c.scope if v in keep)
    return SoftConstraint._raw(c.system, scope, np.asarray(table, dtype=object))


def extend(c: SoftConstraint, scope: Iterable[str]) -> SoftConstraint:
    """Cylindrical extension of ``c`` to ``scope`` (values repeat along new axes)."""
    return combine(c, SoftConstraint.one(c.system, scope))


def leq_constraint(c1: SoftConstraint, c2: SoftConstraint) -> bool:
    """``c1 ⊑ c2``: pointwise ``<=_S``; scopes must be identical."""
    _check_same(c1, c2)
    if c1.scope != c2.scope:
        raise ConstraintError(f"scope mismatch: {c1.scope} vs {c2.scope}")
    leq = c1.semiring.leq
    return all(leq(a, b) for a, b in zip(c1.table.flat, c2.table.flat))


def lt_constraint(c1: SoftConstraint, c2: SoftConstraint) -> bool:
    """Strict ``c1 ⊏ c2``."""
    return leq_constraint(c1, c2) and c1 != c2


def constraint_blevel(c: SoftConstraint) -> Any:
    return project(c, ()).level()


@dataclass(frozen=True)
class SCSP:
    """A soft constraint problem: a set of constraints plus variables of interest."""

    constraints: tuple[SoftConstraint, ...]
    con: frozenset[str]
    system: ConstraintSystem

    def __init__(self, constraints: Iterable[SoftConstraint], con: Iterable[str], system: Optional[ConstraintSystem] = None):
        cs = tuple(constraints)
        if system is None:
            if not cs:
                raise ConstraintError("empty SCSP needs an explicit system")
            system = cs[0].system
        for c in cs:
            if not c.system.compatible(system):
                raise ConstraintError("all constraints must share one system")
        object.__setattr__(self, "constraints", cs)
        object.__setattr__(self, "con", frozenset(con))
        object.__setattr__(self, "system", system)


def solution(p: SCSP) -> SoftConstraint:
    return project(combine_all(p.system, p.constraints), p.con)


def blevel(p: SCSP) -> SemiringValue:
    value = project(combine_all(p.system, p.constraints), ()).level()
    return SemiringValue(p.system.semiring, value)


def is_consistent(p: SCSP) -> bool:
    s = p.system.semiring
    return s.lt(s.zero, blevel(p).value)


# -- store ---------------------------------------------------------------------


@dataclass(frozen=True)
class Store:
    """The shared store σ, with told constraints filed per agent.

    ``combination`` is the ⊗ of everything told; sections are for reporting only.
    """

    system: ConstraintSystem
    sections: tuple[tuple[str, tuple[SoftConstraint, ...]], ...] = ()
    combination: Optional[SoftConstraint] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.combination is None:
            object.__setattr__(self, "combination", self.recompute())

    @classmethod
    def empty(cls, system: ConstraintSystem) -> "Store":
        return cls(system)

    def recompute(self) -> SoftConstraint:
        return combine_all(
            self.system, (c for _, told in self.sections for c in told)
        )

    def section(self, agent: str) -> tuple[SoftConstraint, ...]:
        for a, told in self.sections:
            if a == agent:
                return told
        return ()

    def told(self) -> list[SoftConstraint]:
        return [c for _, told in self.sections for c in told]


def store_tell(s: Store, agent: str, c: SoftConstraint) -> Store:
    if not s.system.compatible(c.system):
        raise ConstraintError("constraint belongs to a different system")
    sections = list(s.sections)
    for i, (a, told) in enumerate(sections):
        if a == agent:
            sections[i] = (a, told + (c,))
            break
    else:
        sections.append((agent, (c,)))
    return Store(s.system, tuple(sections), combine(s.combination, c))


def store_blevel(s: Store) -> SemiringValue:
    return SemiringValue(s.system.semiring, constraint_blevel(s.combination))


def entails(s: Store | SoftConstraint, c: SoftConstraint) -> bool:
    """``σ ⊢ c``: the store's projection on ``con(c)`` is ``⊑`` c."""
    sigma = s.combination if isinstance(s, Store) else s
    return leq_constraint(extend(project(sigma, c.scope), c.scope), c)
