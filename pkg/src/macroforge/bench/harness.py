"""
Corpus building, IPC-style scoring and the minimum-support sweep.

Scores follow the competition convention: time ``T*/T`` and quality
``Q*/Q`` against the best value seen for the same problem, zero when the run
did not solve it. References are the best among the configurations
evaluated in the same experiment.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from ..macros import encode_macros, enhanced_astar
from ..mining import (
    MiningConfig,
    Pattern,
    SequenceDatabase,
    build_sequence_db,
    encode_dictionary,
    mine_maximal,
    spmf_encode,
)
from ..search import Limits, SearchResult, astar
from ..strips import GroundTask, Plan, format_plan, load_task
from .generators import GeneratedProblem

log = logging.getLogger(__name__)

CLOCK_RESOLUTION = time.get_clock_info("perf_counter").resolution

REPORT_HEADER = ["minsup", "problem", "config", "outcome", "cost", "seconds",
                 "expanded", "time_score", "quality_score"]

BASELINE = "baseline"
MACRO = "macro"

GAIN_NOTES = (
    "# gain = (sum candidate score - sum baseline score) / sum baseline score * 100",
    "# unsolved runs score 0 for both time and quality",
    "# T* and Q* are the best values among the configurations of this experiment",
)


class CorpusError(RuntimeError):
    pass


@dataclass
class Corpus:
    plans: dict[str, Plan]
    database: SequenceDatabase
    unsolved: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class RunRecord:
    problem: str
    config: str
    minsup: float | None
    outcome: str
    cost: int | None
    seconds: float
    expanded: int
    generated: int = 0
    macros: int = 0
    macros_used: int = 0

    @property
    def solved(self) -> bool:
        return self.cost is not None

    @property
    def key(self) -> tuple[str, float | None]:
        return (self.config, self.minsup)


def time_score(t_best: float | None, t: float | None) -> float:
    if t is None or t_best is None:
        return 0.0
    t_best = max(t_best, CLOCK_RESOLUTION)
    t = max(t, CLOCK_RESOLUTION)
    if t_best > t:
        raise ValueError(f"reference time {t_best} exceeds run time {t}")
    return t_best / t


def quality_score(q_best: int | None, q: int | None) -> float:
    if q is None or q_best is None:
        return 0.0
    if q_best > q:
        raise ValueError(f"reference cost {q_best} exceeds run cost {q}")
    if q == 0:
        return 1.0
    return q_best / q


def relative_gain(baseline_total: float, candidate_total: float) -> float | None:
    """Percentage change of an aggregate score; None when the baseline sums to 0."""
    if baseline_total == 0:
        return None
    return (candidate_total - baseline_total) / baseline_total * 100


@dataclass(frozen=True)
class ScoredRun:
    record: RunRecord
    time_score: float
    quality_score: float


@dataclass
class ScoreReport:
    runs: list[ScoredRun]
    best_time: dict[str, float]
    best_cost: dict[str, int]

    def totals(self, key: tuple[str, float | None]) -> tuple[float, float]:
        t = q = 0.0
        for r in self.runs:
            if r.record.key == key:
                t += r.time_score
                q += r.quality_score
        return t, q

    def configs(self) -> list[tuple[str, float | None]]:
        return list(dict.fromkeys(r.record.key for r in self.runs))


def score_runs(records: Iterable[RunRecord]) -> ScoreReport:
    records = list(records)
    best_time: dict[str, float] = {}
    best_cost: dict[str, int] = {}
    for r in records:
        if not r.solved:
            continue
        if r.problem not in best_time or r.seconds < best_time[r.problem]:
            best_time[r.problem] = r.seconds
        if r.problem not in best_cost or r.cost < best_cost[r.problem]:
            best_cost[r.problem] = r.cost
    scored = []
    for r in records:
        if r.solved:
            ts = time_score(best_time[r.problem], r.seconds)
            qs = quality_score(best_cost[r.problem], r.cost)
        else:
            ts = qs = 0.0
        scored.append(ScoredRun(r, ts, qs))
    return ScoreReport(scored, best_time, best_cost)


def gain(report: ScoreReport, candidate: tuple[str, float | None],
         baseline: tuple[str, float | None] = (BASELINE, None)) -> tuple[float | None, float | None]:
    """(time gain %, quality gain %) of ``candidate`` over ``baseline``."""
    bt, bq = report.totals(baseline)
    ct, cq = report.totals(candidate)
    return relative_gain(bt, ct), relative_gain(bq, cq)


def _record(problem: str, config: str, minsup: float | None, res: SearchResult,
            macros: int = 0) -> RunRecord:
    # microsecond rounding matches the report, so re-scoring a report is exact
    return RunRecord(problem, config, minsup, res.outcome, res.cost, round(res.seconds, 6),
                     res.expanded, res.generated, macros, res.macros_used)


def build_corpus(domain_text: str, problems: Sequence[GeneratedProblem], limits: Limits,
                 out_dir: Path | None = None, heuristic: str = "ff") -> Corpus:
    """Solve every training problem with the baseline planner and keep the plans."""
    plans: dict[str, Plan] = {}
    unsolved: list[str] = []
    for prob in problems:
        task = load_task(domain_text, prob.text)
        res = astar(task, heuristic, limits)
        if res.solved and res.plan.steps:
            plans[prob.name] = res.plan
        else:
            log.warning("corpus: %s not used (%s)", prob.name,
                        "empty plan" if res.solved else res.outcome)
            unsolved.append(prob.name)
    if not plans:
        raise CorpusError("no training problem was solved; the corpus would be empty")
    db = build_sequence_db(list(plans.values()), labels=list(plans))
    if out_dir is not None:
        write_corpus(out_dir, plans, db)
    return Corpus(plans, db, unsolved)


def write_corpus(out_dir: Path, plans: dict[str, Plan], db: SequenceDatabase) -> None:
    out_dir = Path(out_dir)
    (out_dir / "plans").mkdir(parents=True, exist_ok=True)
    for name, plan in plans.items():
        (out_dir / "plans" / f"{name}.plan").write_text(format_plan(plan))
    (out_dir / "corpus.spmf").write_text(spmf_encode(db))
    (out_dir / "corpus.dict").write_text(encode_dictionary(db.dictionary))


@dataclass(frozen=True)
class SweepPoint:
    minsup: float
    threshold: int
    patterns: int
    macros: int  # encoded macros summed over the test problems
    time_total: float = 0.0
    quality_total: float = 0.0
    time_gain: float | None = None
    quality_gain: float | None = None


@dataclass
class SweepResult:
    points: list[SweepPoint]
    stop_reason: str
    records: list[RunRecord]
    report: ScoreReport | None = None


def support_values(start: float, step: float, end: float) -> list[float]:
    if not 0 < start <= 1 or not 0 < end <= 1 or step <= 0:
        raise ValueError("need 0 < start, end <= 1 and step > 0")
    values = []
    k = 0
    while True:
        v = round(start + k * step, 10)
        if v > end + 1e-12:
            break
        values.append(v)
        k += 1
    return values


@lru_cache(maxsize=64)
def _task(domain_text: str, problem_text: str) -> GroundTask:
    return load_task(domain_text, problem_text)


def _run_job(job: tuple) -> RunRecord:
    domain_text, name, text, minsup, patterns, dictionary, heuristic, limits, successors = job
    task = _task(domain_text, text)
    if minsup is None:
        return _record(name, BASELINE, None, astar(task, heuristic, limits))
    lib = encode_macros(patterns, dictionary, task, minsup)
    res = enhanced_astar(task, lib, heuristic, limits, successors)
    return _record(name, MACRO, minsup, res, len(lib))


def _run_all(jobs: list[tuple], workers: int) -> list[RunRecord]:
    if workers <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs, chunksize=1))


def sweep(domain_text: str, database: SequenceDatabase, tests: Sequence[GeneratedProblem],
          start: float = 0.01, step: float = 0.01, end: float = 1.0,
          limits: Limits = Limits(timeout=60), heuristic: str = "ff",
          successors: str = "all", max_length: int | None = None,
          workers: int = 1) -> SweepResult:
    """Run the baseline once, then the macro planner at increasing support.

    Stops at the first support value whose mining result is empty, or after
    ``end``.
    """
    supports = support_values(start, step, end)
    base = [(domain_text, p.name, p.text, None, (), None, heuristic, limits, successors)
            for p in tests]
    records = _run_all(base, workers)
    points: list[SweepPoint] = []
    stop = "range end"
    for minsup in supports:
        cfg = MiningConfig(minsup, max_length)
        patterns: list[Pattern] = mine_maximal(database, cfg)
        if not patterns:
            stop = "no sequences"
            break
        jobs = [(domain_text, p.name, p.text, minsup, tuple(patterns), database.dictionary,
                 heuristic, limits, successors) for p in tests]
        batch = _run_all(jobs, workers)
        records.extend(batch)
        points.append(SweepPoint(minsup, cfg.threshold(len(database)), len(patterns),
                                 sum(r.macros for r in batch)))
        log.info("minsup %.2f: %d patterns, %d macros", minsup, len(patterns), points[-1].macros)
    report = score_runs(records)
    scored = []
    for pt in points:
        t, q = report.totals((MACRO, pt.minsup))
        tg, qg = gain(report, (MACRO, pt.minsup))
        scored.append(SweepPoint(pt.minsup, pt.threshold, pt.patterns, pt.macros, t, q, tg, qg))
    return SweepResult(scored, stop, records, report)


def _num(x: float | None) -> str:
    return "" if x is None else f"{x:g}"


def report_csv(report: ScoreReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for s in report.runs:
        r = s.record
        w.writerow([_num(r.minsup), r.problem, r.config, r.outcome,
                    "" if r.cost is None else r.cost, f"{r.seconds:.6f}", r.expanded,
                    f"{s.time_score:.6f}", f"{s.quality_score:.6f}"])
    return buf.getvalue()


def read_report(text: str) -> list[RunRecord]:
    rows = csv.DictReader(io.StringIO(text))
    if rows.fieldnames is None or rows.fieldnames[:7] != REPORT_HEADER[:7]:
        raise ValueError(f"report header must start with {','.join(REPORT_HEADER[:7])}")
    out = []
    for row in rows:
        out.append(RunRecord(
            problem=row["problem"],
            config=row["config"],
            minsup=float(row["minsup"]) if row["minsup"] else None,
            outcome=row["outcome"],
            cost=int(row["cost"]) if row["cost"] else None,
            seconds=float(row["seconds"]),
            expanded=int(row["expanded"]),
        ))
    return out


def gains_csv(report: ScoreReport, points: Sequence[SweepPoint] | None = None,
              stop_reason: str = "") -> str:
    lines = list(GAIN_NOTES)
    if stop_reason:
        lines.append(f"# stop: {stop_reason}")
    lines.append("minsup,patterns,macros,time_total,quality_total,time_gain,quality_gain")
    bt, bq = report.totals((BASELINE, None))
    lines.append(f"baseline,,,{bt:.6f},{bq:.6f},0,0")
    if points is None:
        points = [SweepPoint(minsup, 0, 0, 0) for config, minsup in report.configs()
                  if config == MACRO]
    for p in points:
        t, q = report.totals((MACRO, p.minsup))
        tg, qg = gain(report, (MACRO, p.minsup))
        lines.append(f"{_num(p.minsup)},{p.patterns or ''},{p.macros or ''},{t:.6f},{q:.6f},"
                     f"{'' if tg is None else f'{tg:.2f}'},{'' if qg is None else f'{qg:.2f}'}")
    return "\n".join(lines) + "\n"


def plot_data(points: Sequence[SweepPoint]) -> tuple[str, str]:
    """Two gnuplot-ready files: support (%) against time gain and quality gain."""
    time_lines = ["# minsup(%) time_gain(%)"]
    quality_lines = ["# minsup(%) quality_gain(%)"]
    for p in points:
        x = f"{p.minsup * 100:g}"
        if p.time_gain is not None:
            time_lines.append(f"{x} {p.time_gain:.2f}")
        if p.quality_gain is not None:
            quality_lines.append(f"{x} {p.quality_gain:.2f}")
    return "\n".join(time_lines) + "\n", "\n".join(quality_lines) + "\n"


def write_sweep(out_dir: Path, domain: str, result: SweepResult) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "runs.csv").write_text(report_csv(result.report))
    (out_dir / "gains.csv").write_text(gains_csv(result.report, result.points, result.stop_reason))
    t, q = plot_data(result.points)
    (out_dir / f"{domain}-time.dat").write_text(t)
    (out_dir / f"{domain}-quality.dat").write_text(q)
