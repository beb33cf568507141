import itertools
from fractions import Fraction as F

import pytest

from fairccp.constraints import extend, leq_constraint, store_blevel
from fairccp.engine import (
    EngineError, InvariantError, RunOptions, enabled_set, equivalence_check,
    initial, replay, run, score_snapshot, step, suspended_agents,
)
from fairccp.lang import parse
from fairccp.scheduler import CrispScoreVector

from oracles import brute_blevel, random_threshold_free_program, seeded, tell_chains_program

FUZZY_HEAD = """\
semiring fuzzy;
domain {a, b};
vars {x, y};
constraint half on (x) { (a) -> 0.5, (b) -> 0.3 };
constraint c on (x) { (a) -> 0.5, (b) -> 0.5 };
constraint good on (y) { (a) -> 1, (b) -> 0.9 };
constraint tight on (x) { (a) -> 0.4, (b) -> 0.1 };
constraint never on (x) { (a) -> 0, (b) -> 0 };
"""


def fz(body):
    return parse(FUZZY_HEAD + f"init {body};\n")


def rules(result):
    return [(e.rule, e.agent, e.constraint) for e in result.trace]


# -- enabled_set ----------------------------------------------------------------


def test_three_tell_chains_enabled(bundled):
    cfg = initial(bundled("sla3.fcc"), RunOptions(fair="crisp"))
    assert enabled_set(cfg) == ["0", "1", "2"]


def test_unentailed_ask_is_suspended():
    cfg = initial(fz("par(ask(good) -> success, tell(c) -> success)"))
    assert enabled_set(cfg) == ["1"]
    assert suspended_agents(cfg) == ["0"]


def test_violated_valued_tell_not_enabled():
    # store level 1/2, request keeps it at 1/2, threshold 3/5
    cfg = initial(fz("tell(half) -> par(tell(c) ->[0.6] success, tell(good) -> success)"))
    cfg, _ = step(cfg)
    assert store_blevel(cfg.store).value == F(1, 2)
    assert enabled_set(cfg) == ["1"]
    cfg, ev = step(cfg)
    assert (ev.rule, ev.agent) == ("valued-tell", "0")
    assert cfg.failures


# -- step -------------------------------------------------------------------------


def test_tell_axiom():
    p = fz("tell(c) -> success")
    cfg, ev = step(initial(p))
    assert cfg.done
    assert cfg.store.combination == p.constraints["c"]
    assert (ev.rule, ev.constraint, ev.blevel) == ("tell", "c", "1/2")


def test_valued_tell_guard():
    failing = run(fz("tell(half) -> tell(c) ->[0.6] success"))
    assert failing.outcome.kind == "fail"
    assert (failing.outcome.agent, failing.outcome.rule) == ("main", "valued-tell")
    passing = run(fz("tell(half) -> tell(c) ->[0.4] success"))
    assert passing.outcome.kind == "success"


def test_cut_tell_guard():
    # store stays above tight pointwise: fires
    assert run(fz("tell(half) -> tell(c) ->{tight} success")).outcome.kind == "success"
    # combination equal to half is not strictly below half: fires
    assert run(fz("tell(half) -> tell(c) ->{half} success")).outcome.kind == "success"
    # half ⊗ tight = tight, strictly below c: fails
    r = run(fz("tell(half) -> tell(tight) ->{c} success"))
    assert (r.outcome.kind, r.outcome.rule) == ("fail", "cut-tell")


def test_ask_variants():
    assert run(fz("tell(half) -> ask(c) -> success")).outcome.kind == "success"
    r = run(fz("tell(half) -> ask(c) ->[0.6] success"))
    assert (r.outcome.kind, r.outcome.rule) == ("fail", "valued-ask")
    r = run(fz("ask(never) -> success"))
    assert (r.outcome.kind, r.outcome.rule) == ("fail", "ask")
    assert run(fz("ask(c) -> success")).outcome.kind == "deadlock"


def test_choice_leftmost_fireable():
    r = run(fz("tell(half) -> (ask(tight) -> fail + ask(c) -> tell(good) -> success)"))
    assert r.outcome.kind == "success"
    assert r.trace[1].via == ("choice-right",)


def test_plain_par_leftmost_and_removal():
    r = run(fz("tell(c) -> success || tell(good) -> success"))
    assert [(e.agent, e.via) for e in r.trace] == [("0", ("par-2",)), ("1", ())]


def test_exists_renames_apart():
    p = parse(FUZZY_HEAD + "proc q(y) = exists x. tell(tight) -> success;\n"
              "init tell(c) -> q(y);\n")
    r = run(p)
    assert [e.rule for e in r.trace] == ["tell", "call", "exists", "tell"]
    final = r.final.store.combination
    assert final.system.variables[:2] == ("x", "y")
    fresh = [v for v in final.scope if v != "x"]
    assert len(fresh) == 1 and "$" in fresh[0]
    # tight sits on the fresh variable, so x=b keeps c's 1/2 against tight(a)=2/5
    assert final.value({"x": "b", fresh[0]: "a"}) == F(2, 5)
    assert final.value({"x": "b", fresh[0]: "b"}) == F(1, 10)


def test_sla_first_crisp_steps(bundled):
    cfg = initial(bundled("sla3.fcc"), RunOptions(fair="crisp"))
    assert cfg.crisp_scores == CrispScoreVector(6, {"0": 0, "1": 0, "2": 0})
    agents, snaps = [], []
    for _ in range(3):
        cfg, ev = step(cfg)
        agents.append(ev.agent)
        snaps.append(ev.scores["main"])
    assert agents == ["0", "1", "2"]
    assert snaps == [
        {"0": 4, "1": -2, "2": -2},
        {"0": 2, "1": 2, "2": -4},
        {"0": 0, "1": 0, "2": 0},
    ]


# -- run ---------------------------------------------------------------------------


def test_run_tell1(bundled):
    p = bundled("tell1.fcc")
    r = run(p)
    assert r.outcome.kind == "success" and len(r.trace) == 1
    assert r.trace[0].blevel == str(brute_blevel(p.system, [p.constraints["c1"]]))
    assert r.report.n_bound == 0


def test_deadlock(bundled):
    r = run(bundled("deadlock.fcc"))
    assert r.outcome.kind == "deadlock"
    assert r.outcome.suspended == ("0", "1")
    assert r.outcome.exit_code == 2
    assert r.trace == []


@pytest.mark.parametrize("policy", ["min", "max"])
def test_sla_soft(bundled, policy):
    r = run(bundled("sla3.fcc"), RunOptions(fair="soft", soft_select=policy))
    assert r.outcome.kind == "success"
    told = sorted(e.constraint for e in r.trace if e.rule.endswith("tell"))
    assert told == [f"c{i}" for i in range(1, 10)]


def test_step_limit():
    p = parse(FUZZY_HEAD + "proc loop(x) = tell(c) -> loop(x);\ninit loop(x);\n")
    r = run(p, RunOptions(max_steps=25))
    assert r.outcome.kind == "step_limit" and len(r.trace) == 25
    assert r.outcome.exit_code == 3


def test_fail_absorbed_but_recorded(bundled):
    r = run(bundled("threshold_atomic.fcc"))
    assert r.outcome.kind == "fail" and r.outcome.agent == "0"
    # the sibling still completes
    assert ("tell", "1", "side") in rules(r)
    assert run(bundled("threshold_eventual.fcc")).outcome.kind == "success"


def test_cc_rejects_thresholds(bundled):
    with pytest.raises(EngineError):
        run(bundled("sla3.fcc"), RunOptions(mode="cc"))
    zero = fz("tell(c) ->[0] success")
    assert run(zero, RunOptions(mode="cc")).outcome.kind == "success"


def test_cc_tell_fails_on_inconsistency():
    r = run(fz("tell(never) -> success"), RunOptions(mode="cc"))
    assert (r.outcome.kind, r.outcome.rule) == ("fail", "tell")
    assert run(fz("tell(never) -> success")).outcome.kind == "success"


def test_options_validation():
    with pytest.raises(ValueError):
        RunOptions(fair="sometimes")
    with pytest.raises(ValueError):
        RunOptions(choice="seeded")


# -- equivalence -----------------------------------------------------------------


def test_equivalence_examples(bundled):
    assert equivalence_check(bundled("threshold_eventual.fcc"))
    assert equivalence_check(fz("tell(c) ->[0] success"))


def test_equivalence_corpus():
    for seed in range(20):
        p = parse(random_threshold_free_program(seeded(seed)))
        for fair in ("none", "crisp", "soft"):
            assert equivalence_check(p, fair=fair), seed


def test_equivalence_needs_consistent_stores():
    # cc refuses a tell that empties the store; eventual scc accepts it
    assert not equivalence_check(fz("tell(never) -> success"))


# -- invariants --------------------------------------------------------------------


def walk(program, options):
    cfg = initial(program, options)
    configs = [cfg]
    while not cfg.done and cfg.step < options.max_steps:
        if not enabled_set(cfg) and not cfg.failures and suspended_agents(cfg):
            break
        cfg, _ = step(cfg)
        configs.append(cfg)
        if cfg.halted:
            break
    return configs


@pytest.mark.parametrize("name", ["sla3.fcc", "carpool.fcc", "procs.fcc"])
@pytest.mark.parametrize("fair", ["none", "crisp", "soft"])
def test_store_monotone(bundled, name, fair):
    configs = walk(bundled(name), RunOptions(fair=fair))
    for a, b in zip(configs, configs[1:]):
        after = b.store.combination
        assert leq_constraint(after, extend(a.store.combination, after.scope))


@pytest.mark.parametrize("name", ["sla3.fcc", "carpool.fcc", "procs.fcc", "threshold_atomic.fcc"])
@pytest.mark.parametrize("fair", ["none", "crisp", "soft"])
def test_determinism_and_replay(bundled, name, fair):
    p = bundled(name)
    opts = RunOptions(fair=fair)
    a, b = run(p, opts), run(p, opts)
    assert [e.to_json() for e in a.trace] == [e.to_json() for e in b.trace]
    final = replay(p, opts, a.trace)
    assert final.store == a.final.store
    assert score_snapshot(final) == score_snapshot(a.final)
    assert final.ledger == a.final.ledger


def test_seeded_choice_is_reproducible():
    p = fz("par(ask(c) -> success + ask(tight) -> success + ask(half) -> success, tell(never) -> success)")
    traces = {}
    for seed in range(12):
        r1 = run(p, RunOptions(choice="seeded", seed=seed))
        r2 = run(p, RunOptions(choice="seeded", seed=seed))
        assert [e.to_json() for e in r1.trace] == [e.to_json() for e in r2.trace]
        traces[seed] = tuple(e.branch for e in r1.trace)
    assert len(set(traces.values())) > 1


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("fair", ["crisp", "soft"])
def test_fair_par_liveness(m, fair):
    for lengths in itertools.product(range(1, 5), repeat=m):
        r = run(parse(tell_chains_program(lengths)), RunOptions(fair=fair))
        assert r.outcome.kind == "success", lengths
        per_agent = {}
        for e in r.trace:
            per_agent[e.agent] = per_agent.get(e.agent, 0) + 1
        if m > 1:
            assert [per_agent[str(i)] for i in range(m)] == list(lengths)


def test_par2_conformance(bundled):
    r = run(bundled("sla3.fcc"), RunOptions(fair="crisp"))
    prev = 3
    for e in r.trace:
        live = len(e.scores.get("main", {}))
        if "fair-par-2" in e.via:
            assert live == prev - 1 or (prev == 2 and live == 0)
        elif e.scores:
            assert live == prev
        prev = live if e.scores else prev


def test_crisp_invariants_checked_inline(bundled):
    r = run(bundled("carpool.fcc"), RunOptions(fair="crisp", check_invariants=True))
    assert r.outcome.kind == "success"
    assert r.report.max_abs_score is not None


def test_invariant_breach_is_reported(monkeypatch, bundled):
    import fairccp.engine as engine

    def broken(k, executed, enabled):
        entries = dict(k.entries)
        entries[executed] += 1
        return CrispScoreVector(k.U, entries)

    monkeypatch.setattr(engine, "update_crisp", broken)
    with pytest.raises(InvariantError):
        run(bundled("carpool.fcc"), RunOptions(fair="crisp", check_invariants=True))
