"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest summary.
Random draws are seeded loops so the number of cases is exact.
"""

from __future__ import annotations

import random
import time

import pytest

import conftest
from macroforge.bench.generators import domain_text, generate_problems, make_suite
from macroforge.bench.harness import (
    BASELINE,
    MACRO,
    build_corpus,
    relative_gain,
    report_csv,
    quality_score,
    sweep,
    time_score,
)
from macroforge.macros import Macro, MacroLibrary, apply_macro, encode_macros, enhanced_astar
from macroforge.mining import (
    ActionDictionary,
    MiningConfig,
    SequenceDatabase,
    build_sequence_db,
    encode_dictionary,
    mine_maximal,
    spmf_decode,
    spmf_encode,
)
from macroforge.search import Limits, astar
from macroforge.strips import (
    PlanExecutionError,
    apply,
    apply_sequence,
    load_task,
    make_task,
    validate_plan,
)

from oracles import (
    bfs_optimal_cost,
    brute_force_maximal,
    naive_apply,
    naive_run,
    random_task_spec,
    random_walks,
    reachable_states,
    to_task,
)


class Criterion:
    """Context manager that logs one PASS/FAIL line for a criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        secs = time.perf_counter() - self.start
        line = f"[{status}] criterion {self.number}: {self.title} ({self.detail}; {secs:.1f}s)"
        conftest.ACCEPTANCE_LINES.append(line)
        print(line)
        return False


def _random_db(rng: random.Random) -> list[list[int]]:
    alphabet = rng.randint(1, 5)
    return [[rng.randint(1, alphabet) for _ in range(rng.randint(1, 8))]
            for _ in range(rng.randint(1, 10))]


def _as_db(seqs) -> SequenceDatabase:
    top = max(i for s in seqs for i in s)
    return SequenceDatabase(tuple(map(tuple, seqs)),
                            ActionDictionary(tuple(f"act{i}" for i in range(1, top + 1))))


def _threshold(percent: int, n: int) -> int:
    # integer ceiling of percent% of n, independent of the package's rounding
    return max(1, -(-percent * n // 100))


def test_criterion_1_miner_matches_brute_force():
    rng = random.Random(101)
    with Criterion(1, "maximal miner equals brute-force oracle") as c:
        cases = 1200
        for _ in range(cases):
            seqs = _random_db(rng)
            percent = rng.randint(1, 100)
            got = mine_maximal(_as_db(seqs), MiningConfig(percent / 100))
            want = brute_force_maximal(seqs, _threshold(percent, len(seqs)))
            assert {p.items: p.support for p in got} == want, (seqs, percent)
        c.detail = f"{cases} databases"


def test_criterion_2_transition_algebra():
    rng = random.Random(202)
    draws = 0
    with Criterion(2, "transition function algebra") as c:
        while draws < 10_000:
            actions, _, _ = random_task_spec(rng, rng.randint(1, 8), rng.randint(2, 5))
            atoms = sorted({p for v in actions.values() for part in v for p in part} | {"z"})
            named = {sig: v for sig, v in actions.items()}
            named["noop"] = (frozenset(), frozenset(), frozenset())
            task = make_task([(sig, *v) for sig, v in named.items()], atoms, [])
            raw = frozenset(rng.sample(atoms, rng.randint(0, len(atoms))))
            s = task.state(raw)
            # identity
            assert apply(s, task.action("noop")) == s
            a = task.action(rng.choice(sorted(actions)))
            pre, add, dele = actions[a.signature]
            if not pre <= raw:
                continue
            draws += 1
            t = apply(s, a)
            out = task.decode(t)
            # delete-then-add order, checked against the set formula
            assert out == naive_apply(raw, pre, add, dele)
            assert add <= out
            assert not (dele - add) & out
            assert out - add - dele == raw - add - dele
            # applying a sequence is a left fold of single steps
            seq = [task.action(rng.choice(sorted(actions))) for _ in range(rng.randint(0, 4))]
            cut = rng.randint(0, len(seq))
            final = naive_run(actions, raw, [x.signature for x in seq])
            try:
                whole = apply_sequence(s, seq)
            except PlanExecutionError:
                assert final is None
                continue
            assert task.decode(whole) == final
            assert apply_sequence(apply_sequence(s, seq[:cut]), seq[cut:]) == whole
        c.detail = f"{draws} applicable draws"


def test_criterion_3_macro_semantics():
    rng = random.Random(303)
    pairs = 0
    with Criterion(3, "macro application equals step sequence") as c:
        while pairs < 10_000:
            actions, init, _ = random_task_spec(rng, rng.randint(1, 7), rng.randint(1, 6))
            task = to_task(actions, init, [next(iter(init), "p0")] if init else ["p0"])
            raw = frozenset(rng.sample(list(task.atoms), rng.randint(0, len(task.atoms))))
            walk, state = [], raw
            for _ in range(rng.randint(2, 6)):
                options = [sig for sig in sorted(actions)
                           if naive_apply(state, *actions[sig]) is not None]
                if not options:
                    break
                sig = rng.choice(options)
                walk.append(sig)
                state = naive_apply(state, *actions[sig])
            if len(walk) < 2:
                continue
            steps = tuple(task.action(sig) for sig in walk)
            s = task.state(raw)
            states = apply_macro(s, Macro(steps))
            assert states[-1] == apply_sequence(s, steps)
            assert task.decode(states[-1]) == state
            pairs += 1
        c.detail = f"{pairs} pairs"


def test_criterion_4_empty_library_is_identity():
    per_domain = {"blocksworld": 17, "ferry": 17, "gripper": 16}
    with Criterion(4, "empty macro library reproduces baseline search") as c:
        n = 0
        for domain, count in per_domain.items():
            dom = domain_text(domain)
            for prob in generate_problems(domain, count, 404):
                task = load_task(dom, prob.text)
                base = astar(task, trace=True)
                enh = enhanced_astar(task, MacroLibrary(()), trace=True)
                assert base.solved, prob.name
                assert (enh.plan, enh.cost, enh.expanded, enh.trace) == \
                    (base.plan, base.cost, base.expanded, base.trace), prob.name
                n += 1
        assert n == 50
        c.detail = f"{n} problems"


def test_criterion_5_soundness_on_small_tasks():
    rng = random.Random(505)
    with Criterion(5, "soundness and reachability on small tasks") as c:
        tasks = solvable = with_macros = 0
        while tasks < 400:
            actions, init, goal = random_task_spec(rng, rng.randint(2, 7), rng.randint(2, 8))
            if len(reachable_states(actions, init)) > 200:
                continue
            task = to_task(actions, init, goal)
            walks = random_walks(actions, init, rng, rng.randint(1, 8), 6)
            lib = MacroLibrary(())
            if walks:
                db = build_sequence_db(walks)
                pats = mine_maximal(db, MiningConfig(rng.choice([0.1, 0.3, 0.5, 1.0])))
                lib = encode_macros(pats, db.dictionary, task)
            optimum = bfs_optimal_cost(actions, init, goal)
            base = astar(task)
            for mode in ("all", "final"):
                enh = enhanced_astar(task, lib, successors=mode)
                assert enh.solved == base.solved == (optimum is not None)
                if enh.solved:
                    assert validate_plan(task, enh.plan)
                    assert enh.cost >= optimum
            if base.solved:
                assert validate_plan(task, base.plan)
                solvable += 1
            with_macros += bool(len(lib))
            tasks += 1
        c.detail = f"{tasks} tasks, {solvable} solvable, {with_macros} with macros"


def test_criterion_6_score_formulas():
    with Criterion(6, "score and gain formulas") as c:
        assert time_score(2.0, 4.0) == 0.5
        assert time_score(3.0, 3.0) == 1.0
        assert time_score(2.0, None) == 0.0
        assert quality_score(6, 8) == 0.75
        assert quality_score(5, 5) == 1.0
        assert quality_score(5, None) == 0.0
        assert relative_gain(10.0, 47.2) == pytest.approx(372.0, abs=1e-9)
        assert relative_gain(10.0, 8.8) == pytest.approx(-12.0, abs=1e-9)
        assert relative_gain(10.0, 10.0) == 0.0
        c.detail = "hand values, +372% and -12%"


def test_criterion_7_sweep_protocol():
    rng = random.Random(707)
    with Criterion(7, "sweep stops at first empty mining result") as c:
        # plan-like sequences where the last frequent support is well below 100%
        seqs = [[rng.randint(1, 12) for _ in range(rng.randint(1, 6))] for _ in range(40)]
        db = _as_db(seqs)
        first_empty = next(k for k in range(1, 101)
                           if not brute_force_maximal(seqs, _threshold(k, len(seqs))))
        tests = generate_problems("blocksworld", 3, 70, blocks=3)
        res = sweep(domain_text("blocksworld"), db, tests, 0.01, 0.01, 1.0, Limits(timeout=60))
        assert res.stop_reason == "no sequences"
        assert [round(p.minsup * 100) for p in res.points] == list(range(1, first_empty))
        keys = [(r.minsup, r.problem, r.config) for r in res.records]
        assert len(keys) == len(set(keys)) == len(tests) * (1 + len(res.points))
        assert {k for k in keys if k[2] == BASELINE} == {(None, t.name, BASELINE) for t in tests}
        assert all(k[2] == MACRO for k in keys if k[0] is not None)
        body = report_csv(res.report).splitlines()[1:]
        assert len(body) == len(keys)
        c.detail = f"first empty at {first_empty}%, {len(res.points)} points, {len(keys)} rows"


@pytest.mark.slow
def test_criterion_8_macros_reduce_expansions():
    with Criterion(8, "macros cut expansions on blocksworld") as c:
        suite = make_suite("blocksworld", 50, 20, 7)
        text = domain_text("blocksworld")
        limits = Limits(timeout=60)
        corpus = build_corpus(text, suite.training, limits)
        res = sweep(text, corpus.database, suite.test, 0.01, 0.01, 0.01, limits)
        base = {r.problem: r for r in res.records if r.config == BASELINE}
        wins = [r.problem for r in res.records
                if r.config == MACRO and r.macros_used >= 1
                and r.outcome == "solved" and r.expanded < base[r.problem].expanded]
        c.detail = f"{len(wins)} of {len(suite.test)} test problems improved"
        assert wins


def test_criterion_9_spmf_round_trip():
    rng = random.Random(909)
    with Criterion(9, "SPMF round trip") as c:
        assert spmf_encode(_as_db([[1, 2]])) == "1 -1 2 -1 -2\n"
        n = 500
        for _ in range(n):
            seqs = _random_db(rng)
            db = build_sequence_db([[f"op x{i}" for i in s] for s in seqs])
            text = spmf_encode(db)
            back = spmf_decode(text, encode_dictionary(db.dictionary))
            assert back.sequences == db.sequences and back.dictionary == db.dictionary
            assert spmf_encode(spmf_decode(text)) == text
        c.detail = f"fixed vector and {n} databases"
