"""Macro-action learning from plan corpora via maximal contiguous pattern mining."""

from .macros import (
    Macro,
    MacroLibrary,
    apply_macro,
    encode_macros,
    enhanced_astar,
    macro_applicable,
)
from .mining import (
    ActionDictionary,
    MiningConfig,
    Pattern,
    SequenceDatabase,
    build_sequence_db,
    mine_maximal,
    spmf_decode,
    spmf_encode,
    support_of,
)
from .pddl import parse_domain, parse_problem
from .search import FFHeuristic, Limits, SearchResult, ZeroHeuristic, astar, extract_plan, h_ff
from .strips import (
    GroundAction,
    GroundTask,
    Plan,
    applicable,
    apply,
    apply_sequence,
    ground,
    load_task,
    make_task,
    validate_plan,
)

__version__ = "0.1.0"
