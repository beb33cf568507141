"""Source rendering for agents and whole programs (inverse of the parser)."""

from __future__ import annotations

from .ast import (
    Agent, Call, Choice, Cut, Exists, Fail, FairPar, Level, Par, Program,
    Success, Tell, Threshold,
)


def _arrow(t: Threshold, fmt) -> str:
    if t is None:
        return "->"
    if isinstance(t, Level):
        return f"->[{fmt(t.value)}]"
    if isinstance(t, Cut):
        return f"->{{{t.phi.name}}}"
    raise TypeError(t)


def _wrapped(x: Agent) -> bool:
    return isinstance(x, Par) or (isinstance(x, Choice) and len(x.branches) > 1)


def _open_tail(x: Agent) -> bool:
    """True when the rendering of ``x`` ends in an ask that would swallow a ``+``."""
    while isinstance(x, (Tell, Exists)):
        x = x.then if isinstance(x, Tell) else x.body
        if _wrapped(x):
            return False
    return isinstance(x, Choice)


def format_agent(a: Agent, fmt=str) -> str:
    """Render ``a``; ``fmt`` formats threshold levels."""

    def cont(x: Agent) -> str:
        s = go(x)
        return f"({s})" if _wrapped(x) else s

    def branch(b, last: bool) -> str:
        body = cont(b.then)
        if not last and not _wrapped(b.then) and _open_tail(b.then):
            body = f"({body})"
        return f"ask({b.ref.name}) {_arrow(b.threshold, fmt)} {body}"

    def go(x: Agent) -> str:
        if isinstance(x, Success):
            return "success"
        if isinstance(x, Fail):
            return "fail"
        if isinstance(x, Tell):
            return f"tell({x.ref.name}) {_arrow(x.threshold, fmt)} {cont(x.then)}"
        if isinstance(x, Choice):
            n = len(x.branches)
            return " + ".join(branch(b, i == n - 1) for i, b in enumerate(x.branches))
        if isinstance(x, Par):
            right = go(x.right)
            if isinstance(x.right, Par):
                right = f"({right})"
            return f"{go(x.left)} || {right}"
        if isinstance(x, FairPar):
            return "par(" + ", ".join(go(y) for y in x.agents) + ")"
        if isinstance(x, Exists):
            return f"exists {x.var}. {cont(x.body)}"
        if isinstance(x, Call):
            return f"{x.name}({', '.join(x.args)})"
        raise TypeError(f"not an agent: {x!r}")

    return go(a)


def format_program(p: Program) -> str:
    s = p.system.semiring
    fmt = s.format_level
    lines = [
        f"semiring {s.name};",
        f"domain {{{', '.join(p.system.domain)}}};",
        f"vars {{{', '.join(p.system.variables)}}};",
    ]
    for name, c in p.constraints.items():
        rows = ", ".join(f"({' '.join(t)}) -> {fmt(v)}" for t, v in c.rows())
        lines.append(f"constraint {name} on ({', '.join(c.scope)}) {{ {rows} }};")
    for d in p.declarations.values():
        lines.append(f"proc {d.name}({', '.join(d.params)}) = {format_agent(d.body, fmt)};")
    lines.append(f"init {format_agent(p.main, fmt)};")
    return "\n".join(lines) + "\n"
