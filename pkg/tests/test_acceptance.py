"""The nine acceptance criteria, one test each.

Every test records a single PASS/FAIL line; the lines are repeated in a block
at the end of the pytest run.
"""

import itertools
import subprocess
import sys
from fractions import Fraction as F

from fairccp.cli import bundled_programs, main
from fairccp.audit import check_soft_trace
from fairccp.constraints import SCSP, blevel, solution
from fairccp.engine import RunOptions, equivalence_check, run
from fairccp.lang import parse
from fairccp.scheduler import compute_U, greedy_adversary, random_enablement, run_carpool
from fairccp.semiring import BOOLEAN, FUZZY

from oracles import (
    as_rows, brute_blevel, brute_solution, random_scsp, random_threshold_free_program, seeded,
)

AXIOMS = {
    "plus commutative": lambda s, a, b, c: s.plus(a, b) == s.plus(b, a),
    "plus associative": lambda s, a, b, c: s.plus(s.plus(a, b), c) == s.plus(a, s.plus(b, c)),
    "plus idempotent": lambda s, a, b, c: s.plus(a, a) == a,
    "zero unit of plus": lambda s, a, b, c: s.plus(a, s.zero) == a,
    "one absorbing for plus": lambda s, a, b, c: s.plus(a, s.one) == s.one,
    "times commutative": lambda s, a, b, c: s.times(a, b) == s.times(b, a),
    "times associative": lambda s, a, b, c: s.times(s.times(a, b), c) == s.times(a, s.times(b, c)),
    "times distributes": lambda s, a, b, c:
        s.times(a, s.plus(b, c)) == s.plus(s.times(a, b), s.times(a, c)),
    "one unit of times": lambda s, a, b, c: s.times(a, s.one) == a,
    "zero absorbing for times": lambda s, a, b, c: s.times(a, s.zero) == s.zero,
}


def test_1_semiring_laws(verdict):
    broken = []
    for a, b, c in itertools.product(BOOLEAN.carrier, repeat=3):
        broken += [("boolean", n, (a, b, c)) for n, ax in AXIOMS.items() if not ax(BOOLEAN, a, b, c)]
    rng = seeded(1)

    def level():
        d = rng.randint(1, 1000)
        return F(rng.randint(0, d), d)

    for _ in range(10_000):
        a, b, c = level(), level(), level()
        broken += [("fuzzy", n, (a, b, c)) for n, ax in AXIOMS.items() if not ax(FUZZY, a, b, c)]
    ok = not broken
    verdict(1, ok, f"{len(AXIOMS)} laws, boolean exhaustive + 10000 fuzzy triples, "
                   f"{len(broken)} violations")
    assert ok, broken[:5]


def test_2_scsp_oracle(verdict):
    rng = seeded(2)
    mismatches = 0
    for i in range(500):
        system, cs, con = random_scsp(rng, rng.choice([BOOLEAN, FUZZY]))
        p = SCSP(cs, con, system)
        keep, table = brute_solution(system, cs, con)
        sol = solution(p)
        if sol.scope != keep or as_rows(sol) != table or blevel(p).value != brute_blevel(system, cs):
            mismatches += 1
    ok = mismatches == 0
    verdict(2, ok, f"500 random SCSPs vs enumeration, {mismatches} mismatches")
    assert ok


def test_3_carpool_rotation(verdict):
    # hand-simulated with U=6: alpha_3 = 4, beta_3 = 2
    oracle_cycle = [{0: 4, 1: -2, 2: -2}, {0: 2, 1: 2, 2: -4}, {0: 0, 1: 0, 2: 0}]
    r = run_carpool(3, 99)
    checks = {
        "U": r.scores.U == compute_U(3) == 6,
        "round robin": r.chosen == [t % 3 for t in range(99)],
        "oracle scores": r.history == oracle_cycle * 33,
        "zero every 3rd": all(set(r.history[t].values()) == {0} for t in range(2, 99, 3)),
        "zero sum": all(sum(h.values()) == 0 for h in r.history),
    }
    counts = [0, 0, 0]
    spread = 0
    for a in r.chosen:
        counts[a] += 1
        spread = max(spread, max(counts) - min(counts))
    checks["prefix spread <= 1"] = spread <= 1
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    verdict(3, ok, "m=3, 99 steps: " + ("all checks hold" if ok else f"failed {failed}"))
    assert ok


def test_4_fairness_bound(verdict):
    rows, ok = [], True
    for m in (2, 3, 4):
        for name, make in (("random", random_enablement), ("adversary", greedy_adversary)):
            r = run_carpool(m, 10_000, make(m, seed=4))
            n_bound = r.report().n_bound
            good = n_bound <= m and r.max_abs_score <= compute_U(m) * m
            ok &= good
            rows.append(f"m={m} {name}: max|E-I|={n_bound} max|k|={r.max_abs_score}")
    verdict(4, ok, "10000 steps; " + "; ".join(rows))
    assert ok


def test_5_eventual_equivalence(verdict):
    same = 0
    for seed in range(20):
        p = parse(random_threshold_free_program(seeded(500 + seed)))
        same += equivalence_check(p)
    ok = same == 20
    verdict(5, ok, f"threshold-free corpus, scc and cc traces identical for {same}/20")
    assert ok


def test_6_sla_example(verdict):
    program = parse(open(bundled_programs()["sla3.fcc"]).read())
    notes, ok = [], True
    for policy in ("min", "max"):
        r = run(program, RunOptions(mode="scc", fair="soft", soft_select=policy))
        told = sorted(e.constraint for e in r.trace if e.rule.endswith("tell"))
        problems = check_soft_trace(program, r.trace, policy)
        selections = sum(len(e.selections) for e in r.trace)
        good = (
            r.outcome.kind == "success"
            and told == [f"c{i}" for i in range(1, 10)]
            and not problems
        )
        ok &= good
        notes.append(f"{policy}: {r.outcome.kind}, {len(told)} tells, "
                     f"{selections} selections, {len(problems)} guard violations")
    verdict(6, ok, "sla3 scc+soft; " + "; ".join(notes))
    assert ok


THRESHOLD_PROGRAM = """\
semiring fuzzy;
domain {{a, b}};
vars {{x, y}};
constraint base on (x) {{ (a) -> 0.5, (b) -> 0.3 }};
constraint wish on (x) {{ (a) -> 0.7, (b) -> 0.5 }};
constraint side on (y) {{ (a) -> 1, (b) -> 0.9 }};
init tell(base) -> par(tell(wish) ->[{a}] success, tell(side) -> success);
"""


def test_7_threshold_semantics(verdict):
    strict = parse(THRESHOLD_PROGRAM.format(a="0.6"))
    loose = parse(THRESHOLD_PROGRAM.format(a="0.4"))
    c = strict.constraints
    # the level the guarded tell would leave behind, by enumeration
    level = brute_blevel(strict.system, [c["base"], c["wish"]])
    r1 = run(strict)
    r2 = run(loose)
    ok = (
        level == F(1, 2)
        and r1.outcome.kind == "fail"
        and r1.final.failures == (("0", "valued-tell"),)
        and r2.outcome.kind == "success"
        and not r2.final.failures
    )
    verdict(7, ok, f"blevel(store*c)={level}: a=0.6 -> {r1.outcome}; a=0.4 -> {r2.outcome}")
    assert ok


def test_8_deadlock(verdict, capsys):
    code = main(["run", "examples/deadlock.fcc"])
    err = capsys.readouterr().err
    r = run(parse(open(bundled_programs()["deadlock.fcc"]).read()))
    ok = code == 2 and r.outcome.suspended == ("0", "1") and "suspended agents 0, 1" in err
    verdict(8, ok, f"exit {code}, suspended {list(r.outcome.suspended)}")
    assert ok


FLAG_SETS = [
    [],
    ["--fair", "crisp", "--report"],
    ["--fair", "soft", "--report"],
    ["--fair", "soft", "--soft-select", "max", "--trace", "pretty"],
    ["--choice", "seeded", "--seed", "9"],
]


def test_9_determinism(verdict):
    differing = []
    total = 0
    for name in sorted(bundled_programs()):
        for flags in FLAG_SETS:
            cmd = [sys.executable, "-m", "fairccp", "run", name, *flags]
            a = subprocess.run(cmd, capture_output=True)
            b = subprocess.run(cmd, capture_output=True)
            total += 1
            if (a.stdout, a.stderr, a.returncode) != (b.stdout, b.stderr, b.returncode):
                differing.append((name, flags))
    ok = not differing
    verdict(9, ok, f"{total} program/flag combinations run twice, {len(differing)} differ")
    assert ok, differing
