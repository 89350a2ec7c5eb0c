from .generators import (
    DOMAINS,
    BenchmarkSuite,
    GeneratedProblem,
    domain_text,
    generate_problems,
    make_suite,
)
from .harness import (
    Corpus,
    CorpusError,
    RunRecord,
    ScoreReport,
    SweepPoint,
    SweepResult,
    build_corpus,
    gain,
    quality_score,
    relative_gain,
    score_runs,
    sweep,
    time_score,
)
