"""Command-line entry point: ``macroforge <subcommand> ...``."""

from __future__ import annotations

import argparse
import datetime
import logging
import os
import sys
from pathlib import Path

from .bench.generators import (
    DEFAULT_SIZES,
    DOMAINS,
    GeneratedProblem,
    domain_text,
    generate_problems,
)
from .bench.harness import (
    CorpusError,
    build_corpus,
    gains_csv,
    read_report,
    report_csv,
    score_runs,
    sweep,
    write_sweep,
)
from .macros import MACRO_SUCCESSORS, encode_macros, enhanced_astar, format_library, read_library
from .mining import (
    ActionDictionary,
    MiningConfig,
    Pattern,
    build_sequence_db,
    format_patterns,
    mine_maximal,
    parse_pattern_line,
)
from .pddl import PDDLError, parse_domain
from .search import SOLVED, Limits, astar
from .strips import format_plan, load_task, parse_plan

log = logging.getLogger("macroforge")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _env_seed() -> int:
    raw = os.environ.get("MACROFORGE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MACROFORGE_SEED must be an integer, got {raw!r}") from None


def _minsup(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _positive(kind):
    def convert(text: str):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return convert


def _add_limits(p: argparse.ArgumentParser, timeout: float) -> None:
    p.add_argument("--timeout", type=_positive(float), default=timeout,
                   help=f"search time limit in seconds (default: {timeout:g})")
    p.add_argument("--memory-mb", type=_positive(int), default=8192,
                   help="memory cap in MB, enforced as a generated-node cap of "
                        "memory / node-bytes (default: 8192)")
    p.add_argument("--node-bytes", type=_positive(int), default=1024,
                   help="estimated bytes per search node for the memory cap (default: 1024)")
    p.add_argument("--max-nodes", type=_positive(int), default=None,
                   help="explicit generated-node cap; overrides the memory estimate")
    p.add_argument("--heuristic", choices=("ff", "zero"), default="ff",
                   help="search heuristic (default: ff)")


def _limits(args) -> Limits:
    nodes = args.max_nodes or args.memory_mb * 2**20 // args.node_bytes
    return Limits(timeout=args.timeout, max_nodes=nodes)


def _existing_file(path: str | None, what: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _existing_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} is not a directory: {path}")
    return p


def _problem_files(directory: Path) -> list[GeneratedProblem]:
    files = sorted(f for f in directory.glob("*.pddl") if f.name != "domain.pddl")
    if not files:
        raise UsageError(f"no problem files (*.pddl) in {directory}")
    return [GeneratedProblem(f.stem, f.read_text()) for f in files]


def _plan_files(directory: Path) -> tuple[list, list[str]]:
    files = sorted(directory.glob("*.plan"))
    if not files:
        raise UsageError(f"no plan files (*.plan) in {directory}")
    return [parse_plan(f.read_text()) for f in files], [f.stem for f in files]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macroforge",
        description="Learn macro-actions from plan corpora and search with them.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("solve", parents=[common],
                       help="solve one problem with A* (optionally with macros)")
    p.add_argument("--domain", required=True, help="PDDL domain file")
    p.add_argument("--problem", required=True, help="PDDL problem file")
    p.add_argument("--macros", help="macro library file to search with")
    p.add_argument("--macro-successors", choices=MACRO_SUCCESSORS, default="all",
                   help="add every intermediate macro state as a node, or only the final "
                        "one (default: all)")
    p.add_argument("--out", help="plan file to write (default: <problem>.plan)")
    _add_limits(p, 300)

    p = sub.add_parser("gen-problems", parents=[common],
                       help="generate random problems for a bundled domain")
    p.add_argument("--domain-name", choices=DOMAINS, required=True)
    p.add_argument("--count", type=int, default=10, help="number of problems (default: 10)")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default: $MACROFORGE_SEED, else 0)")
    p.add_argument("--prefix", default="p", help="problem name prefix (default: p)")
    for name in sorted({k for sizes in DEFAULT_SIZES.values() for k in sizes}):
        owners = ", ".join(f"{d}={s[name]}" for d, s in DEFAULT_SIZES.items() if name in s)
        p.add_argument(f"--{name}", type=int, default=None, help=f"size (default: {owners})")
    p.add_argument("--out", required=True, help="output directory; domain.pddl is copied there")

    p = sub.add_parser("gen-corpus", parents=[common],
                       help="solve training problems and store their plans")
    p.add_argument("--domain", required=True, help="PDDL domain file")
    p.add_argument("--problems", required=True, help="directory of training problems")
    p.add_argument("--out", required=True,
                   help="output directory (plans/, corpus.spmf, corpus.dict)")
    _add_limits(p, 60)

    p = sub.add_parser("mine", parents=[common],
                       help="mine maximal contiguous action patterns from plans")
    p.add_argument("--plans", required=True, help="directory of *.plan files")
    p.add_argument("--minsup", type=_minsup, default=0.01,
                   help="minimum support as a fraction of plans (default: 0.01)")
    p.add_argument("--max-length", type=_positive(int), default=None,
                   help="longest pattern to consider (default: unlimited)")
    p.add_argument("--out", required=True, help="mined-pattern file to write")

    p = sub.add_parser("encode", parents=[common],
                       help="bind mined patterns to a problem as a macro library")
    p.add_argument("--domain", required=True, help="PDDL domain file")
    p.add_argument("--problem", required=True, help="PDDL problem file")
    p.add_argument("--patterns", required=True, help="mined-pattern file")
    p.add_argument("--minsup", type=_minsup, default=None, help="support recorded in the header")
    p.add_argument("--out", required=True, help="macro library file to write")

    p = sub.add_parser("sweep", parents=[common],
                       help="compare baseline and macro search over a support range")
    p.add_argument("--domain", required=True, help="PDDL domain file")
    p.add_argument("--plans", required=True, help="training plan directory (from gen-corpus)")
    p.add_argument("--tests", required=True, help="directory of test problems")
    p.add_argument("--start", type=_minsup, default=0.01, help="first support (default: 0.01)")
    p.add_argument("--step", type=_positive(float), default=0.01,
                   help="support increment (default: 0.01)")
    p.add_argument("--end", type=_minsup, default=1.0, help="last support (default: 1.0)")
    p.add_argument("--max-length", type=_positive(int), default=None,
                   help="longest pattern to mine (default: unlimited)")
    p.add_argument("--macro-successors", choices=MACRO_SUCCESSORS, default="all",
                   help="intermediate macro states as nodes (default: all)")
    p.add_argument("--jobs", type=_positive(int), default=os.cpu_count() or 1,
                   help="parallel worker processes (default: CPU count)")
    p.add_argument("--single-thread", action="store_true",
                   help="run every search in this process, in a fixed order")
    p.add_argument("--out", required=True,
                   help="report directory (runs.csv, gains.csv, <domain>-{time,quality}.dat)")
    _add_limits(p, 60)

    p = sub.add_parser("score", parents=[common],
                       help="recompute IPC scores and gains from a runs.csv report")
    p.add_argument("--runs", required=True, help="runs.csv written by sweep")
    p.add_argument("--out", required=True, help="output directory for runs.csv and gains.csv")
    return parser


def cmd_solve(args) -> int:
    dpath = _existing_file(args.domain, "domain")
    ppath = _existing_file(args.problem, "problem")
    mpath = _existing_file(args.macros, "macro library")
    task = load_task(dpath.read_text(), ppath.read_text())
    limits = _limits(args)
    if mpath is not None:
        loaded = read_library(mpath.read_text(), task)
        for entry in loaded.dropped:
            log.warning("macro dropped: %s", entry)
        res = enhanced_astar(task, loaded.library, args.heuristic, limits, args.macro_successors)
    else:
        res = astar(task, args.heuristic, limits)
    print(res.record(ppath.stem))
    if res.outcome != SOLVED:
        print(f"no plan: {res.outcome}", file=sys.stderr)
        return EXIT_FAILED
    out = Path(args.out) if args.out else ppath.with_suffix(".plan")
    out.write_text(format_plan(res.plan))
    return EXIT_OK


def cmd_gen_problems(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    sizes = {k: getattr(args, k) for k in DEFAULT_SIZES[args.domain_name]}
    extra = [k for k in {k for s in DEFAULT_SIZES.values() for k in s} - set(sizes)
             if getattr(args, k) is not None]
    if extra:
        raise UsageError(f"{args.domain_name} does not take --{', --'.join(sorted(extra))}")
    problems = generate_problems(args.domain_name, args.count, seed, args.prefix, **sizes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(domain_text(args.domain_name))
    for prob in problems:
        (out / f"{prob.name}.pddl").write_text(prob.text)
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    dpath = _existing_file(args.domain, "domain")
    problems = _problem_files(_existing_dir(args.problems, "problem directory"))
    try:
        corpus = build_corpus(dpath.read_text(), problems, _limits(args), Path(args.out),
                              args.heuristic)
    except CorpusError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILED
    log.info("corpus: %d plans, %d unsolved", len(corpus.plans), len(corpus.unsolved))
    return EXIT_OK


def cmd_mine(args) -> int:
    plans, labels = _plan_files(_existing_dir(args.plans, "plan directory"))
    db = build_sequence_db(plans, labels)
    patterns = mine_maximal(db, MiningConfig(args.minsup, args.max_length))
    Path(args.out).write_text(format_patterns(patterns, db.dictionary))
    log.info("%d maximal patterns at minsup %g", len(patterns), args.minsup)
    return EXIT_OK


def _read_patterns(text: str) -> tuple[list[Pattern], ActionDictionary]:
    rows = [parse_pattern_line(line) for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    dictionary = ActionDictionary.from_signatures(s for sigs, _ in rows for s in sigs)
    patterns = [Pattern(tuple(dictionary.id_of(s) for s in sigs), sup) for sigs, sup in rows]
    return patterns, dictionary


def cmd_encode(args) -> int:
    dpath = _existing_file(args.domain, "domain")
    ppath = _existing_file(args.problem, "problem")
    patpath = _existing_file(args.patterns, "pattern file")
    task = load_task(dpath.read_text(), ppath.read_text())
    patterns, dictionary = _read_patterns(patpath.read_text())
    lib = encode_macros(patterns, dictionary, task, args.minsup, corpus=str(patpath))
    log.info("%d of %d patterns encoded", len(lib), len(patterns))
    Path(args.out).write_text(format_library(lib, datetime.date.today().isoformat()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    dpath = _existing_file(args.domain, "domain")
    plans, labels = _plan_files(_existing_dir(args.plans, "plan directory"))
    tests = _problem_files(_existing_dir(args.tests, "test directory"))
    text = dpath.read_text()
    name = parse_domain(text).name
    db = build_sequence_db(plans, labels)
    workers = 1 if args.single_thread else args.jobs
    result = sweep(text, db, tests, args.start, args.step, args.end, _limits(args),
                   args.heuristic, args.macro_successors, args.max_length, workers)
    write_sweep(Path(args.out), name, result)
    log.info("sweep: %d support values, stopped on %s", len(result.points), result.stop_reason)
    return EXIT_OK


def cmd_score(args) -> int:
    rpath = _existing_file(args.runs, "runs report")
    report = score_runs(read_report(rpath.read_text()))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs.csv").write_text(report_csv(report))
    (out / "gains.csv").write_text(gains_csv(report))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "gen-problems": cmd_gen_problems,
    "gen-corpus": cmd_gen_corpus,
    "mine": cmd_mine,
    "encode": cmd_encode,
    "sweep": cmd_sweep,
    "score": cmd_score,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, PDDLError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
