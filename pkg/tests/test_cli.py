import subprocess
import sys

import pytest

from macroforge.bench.generators import domain_text
from macroforge.bench.harness import REPORT_HEADER, build_corpus
from macroforge.cli import dispatch
from macroforge.mining import MiningConfig, format_patterns, mine_maximal
from macroforge.search import Limits, astar
from macroforge.strips import format_plan, load_task, parse_plan


@pytest.fixture
def workdir(tmp_path):
    assert dispatch(["gen-problems", "--domain-name", "blocksworld", "--count", "6",
                     "--seed", "3", "--blocks", "3", "--out", str(tmp_path / "train")]) == 0
    assert dispatch(["gen-problems", "--domain-name", "blocksworld", "--count", "2",
                     "--seed", "4", "--prefix", "t", "--blocks", "3",
                     "--out", str(tmp_path / "test")]) == 0
    return tmp_path


def test_help_and_usage_errors(capsys):
    assert dispatch(["--help"]) == 0
    assert dispatch(["sweep", "--bogus"]) == 2
    assert dispatch([]) == 2
    assert dispatch(["mine", "--plans", "x", "--out", "y", "--minsup", "0"]) == 2
    assert dispatch(["gen-problems", "--domain-name", "ferry", "--blocks", "3",
                     "--out", "x"]) == 2


def test_missing_and_malformed_inputs(tmp_path):
    bad = tmp_path / "bad.pddl"
    bad.write_text("(define (domain d)")
    assert dispatch(["solve", "--domain", str(tmp_path / "nope"), "--problem", str(bad)]) == 2
    assert dispatch(["solve", "--domain", str(bad), "--problem", str(bad)]) == 2


def test_solve_writes_plan_matching_library(workdir, bw_domain, bw2_problem):
    dom, prob = workdir / "train" / "domain.pddl", workdir / "bw2.pddl"
    prob.write_text(bw2_problem)
    assert dispatch(["solve", "--domain", str(dom), "--problem", str(prob), "-v"]) == 0
    expected = astar(load_task(bw_domain, bw2_problem)).plan
    assert (workdir / "bw2.plan").read_text() == format_plan(expected)


def test_solve_reports_failure(workdir):
    prob = workdir / "dead.pddl"
    prob.write_text("(define (problem dead) (:domain blocksworld) (:objects a)"
                    " (:init (ontable a)) (:goal (and (holding a))))")
    assert dispatch(["solve", "--domain", str(workdir / "train" / "domain.pddl"),
                     "--problem", str(prob)]) == 1
    assert not (workdir / "dead.plan").exists()


def test_pipeline_matches_library_calls(workdir):
    train = workdir / "train"
    corpus = workdir / "corpus"
    assert dispatch(["gen-corpus", "--domain", str(train / "domain.pddl"),
                     "--problems", str(train), "--out", str(corpus)]) == 0
    problems = sorted(train.glob("blocksworld-*.pddl"))
    assert len(list((corpus / "plans").glob("*.plan"))) == len(problems) == 6

    from macroforge.bench.generators import GeneratedProblem
    lib_corpus = build_corpus(domain_text("blocksworld"),
                              [GeneratedProblem(p.stem, p.read_text()) for p in problems],
                              Limits(timeout=60))
    for name, plan in lib_corpus.plans.items():
        assert parse_plan((corpus / "plans" / f"{name}.plan").read_text()) == plan

    pats = workdir / "pats.txt"
    assert dispatch(["mine", "--plans", str(corpus / "plans"), "--minsup", "0.3",
                     "--out", str(pats)]) == 0
    expected = mine_maximal(lib_corpus.database, MiningConfig(0.3))
    assert pats.read_text() == format_patterns(expected, lib_corpus.database.dictionary)

    lib = workdir / "lib.txt"
    assert dispatch(["encode", "--domain", str(train / "domain.pddl"),
                     "--problem", str(problems[0]), "--patterns", str(pats),
                     "--minsup", "0.3", "--out", str(lib)]) == 0
    assert lib.read_text().startswith("# corpus: ")
    assert dispatch(["solve", "--domain", str(train / "domain.pddl"),
                     "--problem", str(problems[0]), "--macros", str(lib),
                     "--out", str(workdir / "m.plan")]) == 0

    out = workdir / "rep"
    assert dispatch(["sweep", "--domain", str(train / "domain.pddl"),
                     "--plans", str(corpus / "plans"), "--tests", str(workdir / "test"),
                     "--start", "0.5", "--step", "0.25", "--single-thread",
                     "--out", str(out)]) == 0
    rows = (out / "runs.csv").read_text().splitlines()
    assert rows[0] == ",".join(REPORT_HEADER)
    for name in ("gains.csv", "blocksworld-time.dat", "blocksworld-quality.dat"):
        assert (out / name).exists()

    rescored = workdir / "rescored"
    assert dispatch(["score", "--runs", str(out / "runs.csv"), "--out", str(rescored)]) == 0
    assert (rescored / "runs.csv").read_text() == (out / "runs.csv").read_text()


def test_gen_corpus_all_unsolved_fails(workdir):
    assert dispatch(["gen-corpus", "--domain", str(workdir / "train" / "domain.pddl"),
                     "--problems", str(workdir / "train"), "--max-nodes", "1",
                     "--out", str(workdir / "c")]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "macroforge", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "sweep" in proc.stdout
