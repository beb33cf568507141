"""Small-step execution of (soft) cc programs with the fair parallel operator.

The live agents form a tree: leaves are :class:`Thread` s running one sequential
agent, inner nodes are :class:`Group` s created from ``A || B`` (binary,
leftmost scheduling) or ``par(A1, ..., Am)`` (fair scheduling by carpool
scores or soft sections, depending on ``RunOptions.fair``).  Every call to
:func:`step` fires exactly one rule instance and returns a new
:class:`Configuration` together with the :class:`TraceEvent` describing it.

Scheduling is deterministic: choices take the leftmost fireable branch unless
``choice="seeded"``, and ties in fair selection are broken by fixed rules.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional, Union

from .constraints import (
    SoftConstraint, Store, combine, constraint_blevel, entails, extend,
    lt_constraint, project, store_tell,
)
from .lang.ast import (
    Agent, Call, Choice, Cut, Exists, Fail, FairPar, Level, Par, Program,
    Success, Tell, Threshold, substitute,
)
from .scheduler import (
    CrispScoreVector, FairnessLedger, FairnessReport, SoftScoreVector,
    fairness_report, ledger_record, remove_agent, select_crisp, select_soft,
    update_crisp, update_soft,
)

ROOT = "main"

FIRE, SUSPEND, FAIL = "fire", "suspend", "fail"


class EngineError(RuntimeError):
    pass


class InvariantError(EngineError):
    pass


@dataclass(frozen=True)
class RunOptions:
    mode: str = "scc"              # cc | scc
    fair: str = "none"             # none | crisp | soft
    soft_select: str = "min"       # min | max
    choice: str = "leftmost"       # leftmost | seeded
    seed: Optional[int] = None
    max_steps: int = 10_000
    check_invariants: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("cc", "scc"):
            raise ValueError(f"mode must be cc or scc, not {self.mode!r}")
        if self.fair not in ("none", "crisp", "soft"):
            raise ValueError(f"fair must be none, crisp or soft, not {self.fair!r}")
        if self.soft_select not in ("min", "max"):
            raise ValueError(f"soft_select must be min or max, not {self.soft_select!r}")
        if self.choice not in ("leftmost", "seeded"):
            raise ValueError(f"choice must be leftmost or seeded, not {self.choice!r}")
        if (self.choice == "seeded") != (self.seed is not None):
            raise ValueError("a seed is required exactly when choice is seeded")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")


@dataclass(frozen=True)
class Thread:
    id: str
    agent: Agent


@dataclass(frozen=True)
class Group:
    """A parallel composition; ``slots`` name the children at this level.

    ``fair`` marks a ``par(...)`` node; it is scheduled by whichever score
    vector is present (leftmost when neither is) and absorbs child failures.
    """

    id: str
    fair: bool
    slots: tuple[str, ...]
    children: tuple["Node", ...]
    crisp: Optional[CrispScoreVector] = None
    soft: Optional[SoftScoreVector] = None


Node = Union[Thread, Group]


@dataclass(frozen=True)
class Configuration:
    program: Program
    options: RunOptions
    root: Optional[Node]
    store: Store
    ledger: FairnessLedger = field(default_factory=FairnessLedger)
    step: int = 0
    fresh: int = 0
    failures: tuple[tuple[str, str], ...] = ()
    halted: bool = False
    max_abs_score: int = 0

    @property
    def crisp_scores(self) -> Optional[CrispScoreVector]:
        return self.root.crisp if isinstance(self.root, Group) else None

    @property
    def soft_scores(self) -> Optional[SoftScoreVector]:
        return self.root.soft if isinstance(self.root, Group) else None

    @property
    def done(self) -> bool:
        return self.root is None or self.halted


@dataclass(frozen=True)
class Selection:
    group: str
    enabled: tuple[str, ...]
    chosen: str


@dataclass(frozen=True)
class TraceEvent:
    step: int
    rule: str
    agent: str
    constraint: Optional[str]
    blevel: str
    via: tuple[str, ...] = ()
    selections: tuple[Selection, ...] = ()
    scores: dict = field(default_factory=dict)
    branch: Optional[int] = None

    def to_dict(self) -> dict:
        d = {
            "step": self.step,
            "rule": self.rule,
            "agent": self.agent,
            "constraint": self.constraint,
            "blevel": self.blevel,
            "via": list(self.via),
            "selections": [
                {"group": s.group, "enabled": list(s.enabled), "chosen": s.chosen}
                for s in self.selections
            ],
            "scores": self.scores,
        }
        if self.branch is not None:
            d["branch"] = self.branch
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def pretty(self) -> str:
        via = f" via {','.join(self.via)}" if self.via else ""
        con = f" {self.constraint}" if self.constraint else ""
        scores = ""
        if self.scores:
            scores = "  k=" + "; ".join(
                f"{g}:[{', '.join(f'{a}={v}' for a, v in vec.items())}]"
                for g, vec in self.scores.items()
            )
        return f"{self.step:>5}  {self.agent:<8} {self.rule}{con}{via}  blevel={self.blevel}{scores}"


@dataclass(frozen=True)
class Outcome:
    kind: str                          # success | fail | deadlock | step_limit
    agent: Optional[str] = None
    rule: Optional[str] = None
    suspended: tuple[str, ...] = ()

    EXIT_CODES = {"success": 0, "fail": 1, "deadlock": 2, "step_limit": 3}

    @property
    def exit_code(self) -> int:
        return self.EXIT_CODES[self.kind]

    def __str__(self) -> str:
        if self.kind == "fail":
            return f"fail (agent {self.agent}, rule {self.rule})"
        if self.kind == "deadlock":
            return f"deadlock (suspended: {', '.join(self.suspended)})"
        return self.kind


@dataclass
class RunResult:
    outcome: Outcome
    trace: list[TraceEvent]
    report: FairnessReport
    final: Configuration


# -- construction ----------------------------------------------------------------


def child_id(parent: str, i: int) -> str:
    return str(i) if parent == ROOT else f"{parent}.{i}"


def _spawn(node_id: str, agent: Agent, cfg: Configuration) -> Node:
    if isinstance(agent, Par):
        slots = (child_id(node_id, 0), child_id(node_id, 1))
        kids = (_spawn(slots[0], agent.left, cfg), _spawn(slots[1], agent.right, cfg))
        return Group(node_id, False, slots, kids)
    if isinstance(agent, FairPar):
        if len(agent.agents) == 1:
            return _spawn(node_id, agent.agents[0], cfg)
        slots = tuple(child_id(node_id, i) for i in range(len(agent.agents)))
        kids = tuple(_spawn(s, a, cfg) for s, a in zip(slots, agent.agents))
        fair = cfg.options.fair
        crisp = CrispScoreVector.initial(slots) if fair == "crisp" else None
        soft = SoftScoreVector.initial(cfg.program.system, slots) if fair == "soft" else None
        return Group(node_id, True, slots, kids, crisp, soft)
    return Thread(node_id, agent)


def _nontrivial_thresholds(p: Program) -> list[str]:
    zero = p.system.semiring.zero
    found: list[str] = []

    def check(t: Threshold, where: str) -> None:
        if isinstance(t, Level) and t.value != zero:
            found.append(where)
        if isinstance(t, Cut) and any(v != zero for v in t.phi.constraint.table.flat):
            found.append(where)

    def walk(a: Agent) -> None:
        if isinstance(a, Tell):
            check(a.threshold, f"tell({a.ref.name})")
            walk(a.then)
        elif isinstance(a, Choice):
            for b in a.branches:
                check(b.threshold, f"ask({b.ref.name})")
                walk(b.then)
        elif isinstance(a, Par):
            walk(a.left)
            walk(a.right)
        elif isinstance(a, FairPar):
            for x in a.agents:
                walk(x)
        elif isinstance(a, Exists):
            walk(a.body)

    walk(p.main)
    for d in p.declarations.values():
        walk(d.body)
    return found


def initial(program: Program, options: RunOptions = RunOptions()) -> Configuration:
    if options.mode == "cc":
        bad = _nontrivial_thresholds(program)
        if bad:
            raise EngineError(
                f"cc mode has no thresholds; found them on {', '.join(bad)} (use scc mode)"
            )
    cfg = Configuration(program, options, None, Store.empty(program.system))
    return replace(cfg, root=_spawn(ROOT, program.main, cfg))


# -- rule applicability -------------------------------------------------------------


def _below(sigma: SoftConstraint, phi: SoftConstraint) -> bool:
    """``sigma ⊏ phi`` compared on phi's scope."""
    return lt_constraint(extend(project(sigma, phi.scope), phi.scope), phi)


def _level(c: SoftConstraint) -> Any:
    return constraint_blevel(c)


def _rule_name(kind: str, threshold: Threshold, mode: str) -> str:
    if mode == "cc" or threshold is None:
        return kind
    return f"valued-{kind}" if isinstance(threshold, Level) else f"cut-{kind}"


def _tell_status(cfg: Configuration, t: Tell) -> tuple[str, str]:
    s = cfg.program.system.semiring
    rule = _rule_name("tell", t.threshold, cfg.options.mode)
    after = combine(cfg.store.combination, t.ref.constraint)
    if cfg.options.mode == "cc":
        # cc tell: the resulting store must stay consistent
        return (FAIL if _level(after) == s.zero else FIRE), rule
    th = t.threshold
    if isinstance(th, Level) and s.lt(_level(after), th.value):
        return FAIL, rule
    if isinstance(th, Cut) and _below(after, th.phi.constraint):
        return FAIL, rule
    return FIRE, rule


def _ask_status(cfg: Configuration, b) -> tuple[str, str]:
    s = cfg.program.system.semiring
    sigma = cfg.store.combination
    rule = _rule_name("ask", b.threshold, cfg.options.mode)
    th = b.threshold if cfg.options.mode == "scc" else None
    # threshold violations are permanent: the store only ever decreases
    if isinstance(th, Level) and s.lt(_level(sigma), th.value):
        return FAIL, rule
    if isinstance(th, Cut) and _below(sigma, th.phi.constraint):
        return FAIL, rule
    if entails(sigma, b.ref.constraint):
        return FIRE, rule
    if _level(combine(sigma, b.ref.constraint)) == s.zero:
        return FAIL, rule
    return SUSPEND, rule


def _leaf_status(cfg: Configuration, agent: Agent) -> tuple[str, Optional[str]]:
    if isinstance(agent, Fail):
        return FAIL, "fail"
    if isinstance(agent, (Success, Exists, Call)):
        return FIRE, None
    if isinstance(agent, Tell):
        return _tell_status(cfg, agent)
    if isinstance(agent, Choice):
        statuses = [_ask_status(cfg, b) for b in agent.branches]
        if any(st == FIRE for st, _ in statuses):
            return FIRE, None
        if all(st == FAIL for st, _ in statuses):
            return FAIL, statuses[0][1]
        return SUSPEND, None
    raise EngineError(f"unexpected agent in a thread: {agent!r}")


def _enabled(cfg: Configuration, node: Node) -> bool:
    if isinstance(node, Thread):
        return _leaf_status(cfg, node.agent)[0] == FIRE
    return any(_enabled(cfg, c) for c in node.children)


def enabled_set(cfg: Configuration, group_id: Optional[str] = None) -> list[str]:
    """Slot ids of the children of a group whose next action can fire now.

    Without ``group_id`` the outermost group is used; a lone thread reports
    itself when it can fire.
    """
    node = cfg.root if group_id is None else _find_group(cfg.root, group_id)
    if node is None:
        return []
    if isinstance(node, Thread):
        return [node.id] if _enabled(cfg, node) else []
    return [s for s, c in zip(node.slots, node.children) if _enabled(cfg, c)]


def _find_group(node: Optional[Node], gid: str) -> Optional[Group]:
    if isinstance(node, Group):
        if node.id == gid:
            return node
        for c in node.children:
            found = _find_group(c, gid)
            if found is not None:
                return found
    return None


def threads(node: Optional[Node]) -> list[Thread]:
    if node is None:
        return []
    if isinstance(node, Thread):
        return [node]
    return [t for c in node.children for t in threads(c)]


def suspended_agents(cfg: Configuration) -> list[str]:
    return [t.id for t in threads(cfg.root) if _leaf_status(cfg, t.agent)[0] == SUSPEND]


def is_stuck(cfg: Configuration) -> bool:
    """No rule applies: nothing enabled and nothing failing."""
    if cfg.done:
        return False
    for t in threads(cfg.root):
        if _leaf_status(cfg, t.agent)[0] != SUSPEND:
            return False
    return True


# -- stepping -------------------------------------------------------------------------


@dataclass
class _Ctx:
    cfg: Configuration
    forced: Optional[TraceEvent]
    store: Store
    ledger: FairnessLedger
    fresh: int
    max_abs_score: int
    rule: str = ""
    agent: str = ""
    constraint: Optional[str] = None
    told: Optional[SoftConstraint] = None
    branch: Optional[int] = None
    via: list = field(default_factory=list)
    selections: list = field(default_factory=list)


def _first_failing(cfg: Configuration, node: Node, path: tuple) -> Optional[tuple]:
    if isinstance(node, Thread):
        st, rule = _leaf_status(cfg, node.agent)
        return (path, node, rule) if st == FAIL else None
    for i, c in enumerate(node.children):
        found = _first_failing(cfg, c, path + (i,))
        if found:
            return found
    return None


def _fire_thread(ctx: _Ctx, th: Thread) -> Optional[Node]:
    cfg = ctx.cfg
    a = th.agent
    ctx.agent = th.id
    if isinstance(a, Success):
        ctx.rule = "stop"
        return None
    if isinstance(a, Tell):
        _, ctx.rule = _tell_status(cfg, a)
        ctx.constraint = a.ref.name
        ctx.told = a.ref.constraint
        ctx.store = store_tell(ctx.store, th.id, a.ref.constraint)
        then = a.then
    elif isinstance(a, Choice):
        fireable = [i for i, b in enumerate(a.branches) if _ask_status(cfg, b)[0] == FIRE]
        if ctx.forced is not None and ctx.forced.branch is not None:
            i = ctx.forced.branch
            if i not in fireable:
                raise EngineError(f"replayed branch {i} is not fireable")
        elif cfg.options.choice == "seeded":
            i = random.Random(f"{cfg.options.seed}:{cfg.step}:{th.id}").choice(fireable)
        else:
            i = fireable[0]
        b = a.branches[i]
        _, ctx.rule = _ask_status(cfg, b)
        ctx.constraint = b.ref.name
        if len(a.branches) > 1:
            ctx.branch = i
            ctx.via.append("choice-left" if i == 0 else "choice-right")
        then = b.then
    elif isinstance(a, Exists):
        fresh = f"{a.var}${ctx.fresh}"
        ctx.fresh += 1
        ctx.rule = "exists"
        then = substitute(a.body, [a.var], [fresh])
    elif isinstance(a, Call):
        d = cfg.program.declarations[a.name]
        ctx.rule = "call"
        then = substitute(d.body, d.params, a.args)
    else:
        raise EngineError(f"thread {th.id} cannot fire {a!r}")
    if isinstance(then, Success):
        return None
    return _spawn(th.id, then, cfg)


def _select(ctx: _Ctx, g: Group, enabled: list[str]) -> str:
    if ctx.forced is not None:
        for s in ctx.forced.selections:
            if s.group == g.id:
                if s.chosen not in enabled:
                    raise EngineError(f"replayed choice {s.chosen} is not enabled in {g.id}")
                return s.chosen
        raise EngineError(f"no recorded selection for group {g.id}")
    if g.crisp is not None:
        return select_crisp(enabled, g.crisp)
    if g.soft is not None:
        return select_soft(enabled, g.soft, ctx.cfg.options.soft_select, ctx.ledger)
    return enabled[0]


def _fire_group(ctx: _Ctx, g: Group) -> Optional[Node]:
    cfg = ctx.cfg
    enabled = [s for s, c in zip(g.slots, g.children) if _enabled(cfg, c)]
    if not enabled:
        raise EngineError(f"group {g.id} has no enabled child")
    chosen = _select(ctx, g, enabled)
    ctx.selections.append(Selection(g.id, tuple(enabled), chosen))
    idx = g.slots.index(chosen)
    new_child = _fire(ctx, g.children[idx])
    finished = new_child is None
    ctx.ledger = ledger_record(ctx.ledger, enabled, chosen)

    crisp, soft = g.crisp, g.soft
    if crisp is not None:
        if finished:
            # removal only: the remaining scores are left as they are
            crisp = remove_agent(crisp, chosen)
        else:
            before = crisp.total()
            crisp = update_crisp(crisp, chosen, enabled)
            if cfg.options.check_invariants:
                _check_crisp(crisp, before)
        if crisp.entries:
            ctx.max_abs_score = max(ctx.max_abs_score, max(abs(v) for v in crisp.entries.values()))
    if soft is not None:
        soft = update_soft(soft, chosen, ctx.told)
        if finished:
            soft = remove_agent(soft, chosen)

    kind = "fair-par" if g.fair else "par"
    ctx.via.append(f"{kind}-2" if finished else f"{kind}-1")

    slots, kids = list(g.slots), list(g.children)
    if finished:
        del slots[idx], kids[idx]
    else:
        kids[idx] = new_child
    if not kids:
        return None
    if len(kids) == 1:
        return kids[0]
    return Group(g.id, g.fair, tuple(slots), tuple(kids), crisp, soft)


def _check_crisp(k: CrispScoreVector, before: int) -> None:
    if k.total() != before:
        raise InvariantError(f"carpool scores are not zero-sum: {before} -> {k.total()}")
    if not all(isinstance(v, int) for v in k.entries.values()):
        raise InvariantError("carpool scores left the integers")


def _fire(ctx: _Ctx, node: Node) -> Optional[Node]:
    if isinstance(node, Thread):
        return _fire_thread(ctx, node)
    return _fire_group(ctx, node)


def _remove_failed(cfg: Configuration, node: Node, path: tuple) -> tuple[Optional[Node], bool, list[str]]:
    """Drop the subtree holding the failed thread from its nearest fair group.

    Returns ``(new_node, absorbed, via)``.
    """
    if not path:
        return node, False, []
    g = node
    i = path[0]
    child, absorbed, via = _remove_failed(cfg, g.children[i], path[1:])
    if absorbed:
        kids = list(g.children)
        kids[i] = child
        return replace(g, children=tuple(kids)), True, via
    if not g.fair:
        return node, False, via
    slot = g.slots[i]
    slots = [s for j, s in enumerate(g.slots) if j != i]
    kids = [c for j, c in enumerate(g.children) if j != i]
    crisp = remove_agent(g.crisp, slot) if g.crisp is not None else None
    soft = remove_agent(g.soft, slot) if g.soft is not None else None
    via = ["fair-par-2"] + via
    if len(kids) == 1:
        return kids[0], True, via
    return Group(g.id, g.fair, tuple(slots), tuple(kids), crisp, soft), True, via


def score_snapshot(cfg: Configuration, root: Optional[Node] = None) -> dict:
    fmt = cfg.program.system.semiring.format_level
    out: dict = {}

    def walk(n: Optional[Node]) -> None:
        if not isinstance(n, Group):
            return
        if n.crisp is not None:
            out[n.id] = dict(n.crisp.entries)
        elif n.soft is not None:
            out[n.id] = {a: fmt(_level(c)) for a, c in n.soft.entries.items()}
        for c in n.children:
            walk(c)

    walk(cfg.root if root is None else root)
    return out


def step(cfg: Configuration, forced: Optional[TraceEvent] = None) -> tuple[Configuration, TraceEvent]:
    """Fire one rule instance.

    A thread whose next action can only fail is handled first (leftmost); its
    failure is absorbed by the nearest fair group, otherwise the run halts.
    ``forced`` replays the selections and branch recorded in an earlier event.
    """
    if cfg.done:
        raise EngineError("configuration is terminal")
    fmt = cfg.program.system.semiring.format_level
    failing = _first_failing(cfg, cfg.root, ())
    if failing is not None:
        path, th, rule = failing
        a = th.agent
        name = None
        if isinstance(a, Tell):
            name = a.ref.name
        elif isinstance(a, Choice):
            name = a.branches[0].ref.name
        root, absorbed, via = _remove_failed(cfg, cfg.root, path)
        new = replace(
            cfg,
            root=root if absorbed else None,
            step=cfg.step + 1,
            failures=cfg.failures + ((th.id, rule),),
            halted=not absorbed,
        )
        if new.root is None:
            new = replace(new, halted=True)
        ev = TraceEvent(
            cfg.step, rule, th.id, name, fmt(_level(cfg.store.combination)),
            tuple(via), (), score_snapshot(new),
        )
        return new, ev

    if not _enabled(cfg, cfg.root):
        raise EngineError("no rule applies (deadlock)")
    ctx = _Ctx(cfg, forced, cfg.store, cfg.ledger, cfg.fresh, cfg.max_abs_score)
    root = _fire(ctx, cfg.root)
    if not ctx.selections and ctx.agent in ctx.ledger.records:
        # a lone survivor of a collapsed group still counts its executions
        ctx.ledger = ledger_record(ctx.ledger, [ctx.agent], ctx.agent)
    new = replace(
        cfg, root=root, store=ctx.store, ledger=ctx.ledger, step=cfg.step + 1,
        fresh=ctx.fresh, max_abs_score=ctx.max_abs_score,
    )
    ev = TraceEvent(
        cfg.step, ctx.rule, ctx.agent, ctx.constraint,
        fmt(_level(ctx.store.combination)), tuple(reversed(ctx.via)),
        tuple(reversed(ctx.selections)), score_snapshot(new), ctx.branch,
    )
    return new, ev


def outcome_of(cfg: Configuration) -> Outcome:
    if cfg.failures:
        agent, rule = cfg.failures[0]
        return Outcome("fail", agent, rule)
    if cfg.root is None:
        return Outcome("success")
    if is_stuck(cfg):
        return Outcome("deadlock", suspended=tuple(suspended_agents(cfg)))
    return Outcome("step_limit")


def run(program: Program, options: RunOptions = RunOptions()) -> RunResult:
    """Step until every agent is done, one fails, nothing can move, or the step limit."""
    cfg = initial(program, options)
    trace: list[TraceEvent] = []
    last_scores = score_snapshot(cfg)
    while not cfg.done and not is_stuck(cfg) and cfg.step < options.max_steps:
        cfg, ev = step(cfg)
        trace.append(ev)
        if ev.scores:
            last_scores = ev.scores
    # fair groups vanish when they collapse, so report the last vectors seen
    report = fairness_report(
        cfg.ledger, last_scores, cfg.max_abs_score if options.fair == "crisp" else None
    )
    return RunResult(outcome_of(cfg), trace, report, cfg)


def replay(program: Program, options: RunOptions, trace: Iterable[TraceEvent]) -> Configuration:
    """Re-execute ``trace`` by forcing its recorded selections and branches."""
    cfg = initial(program, options)
    for ev in trace:
        cfg, again = step(cfg, forced=ev)
        if (again.rule, again.agent, again.constraint) != (ev.rule, ev.agent, ev.constraint):
            raise EngineError(f"replay diverged at step {ev.step}")
    return cfg


# -- eventual equivalence ------------------------------------------------------------


def _normalise(ev: TraceEvent) -> dict:
    d = ev.to_dict()
    for prefix in ("valued-", "cut-"):
        if d["rule"].startswith(prefix):
            d["rule"] = d["rule"][len(prefix):]
    return d


def equivalence_check(program: Program, **options) -> bool:
    """Do the scc and cc traces of a threshold-free program coincide event for event?"""
    base = {k: v for k, v in options.items() if k != "mode"}
    scc = run(program, RunOptions(mode="scc", **base))
    cc = run(program, RunOptions(mode="cc", **base))
    return (
        scc.outcome == cc.outcome
        and [_normalise(e) for e in scc.trace] == [_normalise(e) for e in cc.trace]
    )


def format_trace(trace: Iterable[TraceEvent], style: str = "json") -> str:
    if style == "json":
        return "".join(ev.to_json() + "\n" for ev in trace)
    if style == "pretty":
        return "".join(ev.pretty() + "\n" for ev in trace)
    raise ValueError(f"unknown trace style {style!r}")
