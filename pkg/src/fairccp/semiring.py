"""C-semirings: the algebra of preference levels.

A c-semiring is ``<A, plus, times, zero, one>`` where ``plus`` is commutative,
associative and idempotent with unit ``zero`` and absorbing element ``one``,
and ``times`` is commutative, associative, distributes over ``plus``, has unit
``one`` and absorbing element ``zero``.  ``plus`` induces the partial order
``a <= b  iff  plus(a, b) == b``.

Three instances are shipped:

* ``boolean``  -- ``<{False, True}, or, and, False, True>`` (classical CSPs)
* ``fuzzy``    -- ``<[0, 1], max, min, 0, 1>`` over exact :class:`~fractions.Fraction`
* ``weighted`` -- ``<Q+ u {inf}, min, +, inf, 0>`` (costs; non-idempotent times)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional


class SemiringError(ValueError):
    """Raised for values outside a carrier or for mixed-instance operands."""


class SemiringMismatchError(SemiringError):
    pass


@dataclass(frozen=True, eq=False)
class CSemiring:
    """A c-semiring instance.

    ``plus``/``times`` operate on raw carrier elements; use the module-level
    :func:`plus`, :func:`times` and :func:`leq` on :class:`SemiringValue` when
    instance checking is wanted.
    """

    name: str
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]
    zero: Any
    one: Any
    contains: Callable[[Any], bool]
    coerce: Callable[[Any], Any]
    parse_level: Callable[[str], Any]
    format_level: Callable[[Any], str]
    carrier: Optional[tuple] = None
    idempotent_times: bool = True

    def leq(self, a: Any, b: Any) -> bool:
        return self.plus(a, b) == b

    def lt(self, a: Any, b: Any) -> bool:
        return a != b and self.leq(a, b)

    def sum(self, values: Iterable[Any]) -> Any:
        acc = self.zero
        for v in values:
            acc = self.plus(acc, v)
        return acc

    def product(self, values: Iterable[Any]) -> Any:
        acc = self.one
        for v in values:
            acc = self.times(acc, v)
        return acc

    def value(self, x: Any) -> "SemiringValue":
        return SemiringValue(self, x)

    def check(self, x: Any) -> Any:
        """Coerce ``x`` into the carrier or raise :class:`SemiringError`."""
        try:
            v = self.coerce(x)
        except (TypeError, ValueError) as exc:
            raise SemiringError(f"{x!r} is not a {self.name} value") from exc
        if not self.contains(v):
            raise SemiringError(f"{x!r} is not in the {self.name} carrier")
        return v

    def __repr__(self) -> str:
        return f"CSemiring({self.name!r})"


@dataclass(frozen=True)
class SemiringValue:
    """A carrier element tagged with the instance it belongs to."""

    semiring: CSemiring
    value: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.semiring.check(self.value))

    def __str__(self) -> str:
        return self.semiring.format_level(self.value)


def _same(a: SemiringValue, b: SemiringValue) -> CSemiring:
    if a.semiring is not b.semiring:
        raise SemiringMismatchError(
            f"cannot mix {a.semiring.name} and {b.semiring.name} values"
        )
    return a.semiring


def plus(a: SemiringValue, b: SemiringValue) -> SemiringValue:
    s = _same(a, b)
    return SemiringValue(s, s.plus(a.value, b.value))


def times(a: SemiringValue, b: SemiringValue) -> SemiringValue:
    s = _same(a, b)
    return SemiringValue(s, s.times(a.value, b.value))


def leq(a: SemiringValue, b: SemiringValue) -> bool:
    return _same(a, b).leq(a.value, b.value)


# -- boolean -----------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1"):
        return True
    if t in ("false", "0"):
        return False
    raise SemiringError(f"bad boolean level {text!r}")


def _coerce_bool(x: Any) -> bool:
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, Fraction)) and x in (0, 1):
        return bool(x)
    raise TypeError(x)


BOOLEAN = CSemiring(
    name="boolean",
    plus=lambda a, b: a or b,
    times=lambda a, b: a and b,
    zero=False,
    one=True,
    contains=lambda x: isinstance(x, bool),
    coerce=_coerce_bool,
    parse_level=_parse_bool,
    format_level=lambda x: "true" if x else "false",
    carrier=(False, True),
)


# -- fuzzy -------------------------------------------------------------------

def _coerce_fraction(x: Any) -> Fraction:
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, float):
        # floats are only accepted when they are exact short decimals
        return Fraction(str(x))
    return Fraction(x)


FUZZY = CSemiring(
    name="fuzzy",
    plus=max,
    times=min,
    zero=Fraction(0),
    one=Fraction(1),
    contains=lambda x: isinstance(x, Fraction) and 0 <= x <= 1,
    coerce=_coerce_fraction,
    parse_level=lambda s: _coerce_fraction(s.strip()),
    format_level=str,
)


# -- weighted ----------------------------------------------------------------

def _coerce_weight(x: Any) -> Any:
    if isinstance(x, float) and math.isinf(x) and x > 0:
        return math.inf
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return math.inf
    return _coerce_fraction(x)


def _add_weights(a: Any, b: Any) -> Any:
    if a == math.inf or b == math.inf:
        return math.inf
    return a + b


WEIGHTED = CSemiring(
    name="weighted",
    plus=min,
    times=_add_weights,
    zero=math.inf,
    one=Fraction(0),
    contains=lambda x: x == math.inf or (isinstance(x, Fraction) and x >= 0),
    coerce=_coerce_weight,
    parse_level=lambda s: _coerce_weight(s.strip()),
    format_level=lambda x: "inf" if x == math.inf else str(x),
    idempotent_times=False,
)


REGISTRY: dict[str, CSemiring] = {s.name: s for s in (BOOLEAN, FUZZY, WEIGHTED)}


def get_semiring(name: str) -> CSemiring:
    try:
        return REGISTRY[name]
    except KeyError:
        raise SemiringError(
            f"unknown semiring {name!r}; known: {', '.join(sorted(REGISTRY))}"
        ) from None
