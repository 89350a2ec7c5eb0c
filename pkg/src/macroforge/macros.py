"""
Macro-actions: binding mined patterns to a task and searching with them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .mining import ActionDictionary, Pattern, parse_pattern_line
from .search import (
    HEURISTICS,
    Heuristic,
    Limits,
    SearchNode,
    SearchResult,
    best_first_search,
)
from .strips import GroundAction, GroundTask, PlanExecutionError, State, bits

MACRO_SUCCESSORS = ("all", "final")


@dataclass(frozen=True)
class Macro:
    steps: tuple[GroundAction, ...]
    pattern: tuple[int, ...] = ()
    support: int = 0

    def __post_init__(self):
        if len(self.steps) < 2:
            raise ValueError("a macro needs at least two steps")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def signatures(self) -> tuple[str, ...]:
        return tuple(a.signature for a in self.steps)


@dataclass(frozen=True)
class MacroLibrary:
    macros: tuple[Macro, ...] = ()
    minsup: float | None = None
    corpus: str = ""

    def __len__(self) -> int:
        return len(self.macros)

    def __iter__(self) -> Iterator[Macro]:
        return iter(self.macros)


def _ordered(macros: Iterable[Macro]) -> tuple[Macro, ...]:
    unique: dict[tuple[str, ...], Macro] = {}
    for m in macros:
        prev = unique.get(m.signatures)
        if prev is None or m.support > prev.support:
            unique[m.signatures] = m
    return tuple(sorted(unique.values(), key=lambda m: (-m.support, m.signatures)))


def encode_macros(
    patterns: Iterable[Pattern],
    dictionary: ActionDictionary,
    task: GroundTask,
    minsup: float | None = None,
    corpus: str = "",
) -> MacroLibrary:
    """Keep the patterns whose every action exists in ``task``.

    A pattern with any unresolved action is dropped whole, as is any pattern
    of length one.
    """
    kept = []
    for p in patterns:
        if len(p.items) < 2:
            continue
        sigs = [dictionary.signature_of(i) for i in p.items]
        if all(s in task.action_index for s in sigs):
            kept.append(Macro(tuple(task.action(s) for s in sigs), p.items, p.support))
    return MacroLibrary(_ordered(kept), minsup, corpus)


def macro_applicable(state: State, macro: Macro) -> bool:
    for a in macro.steps:
        if state & a.pre_mask != a.pre_mask:
            return False
        state = (state & ~a.del_mask) | a.add_mask
    return True


def apply_macro(state: State, macro: Macro) -> list[State]:
    """Intermediate states after each step; the last one is the macro's result."""
    out = []
    for k, a in enumerate(macro.steps):
        if state & a.pre_mask != a.pre_mask:
            raise PlanExecutionError(k, a, frozenset(bits(a.pre_mask & ~state)))
        state = (state & ~a.del_mask) | a.add_mask
        out.append(state)
    return out


def macro_expander(library: MacroLibrary, successors: str = "all"):
    if successors not in MACRO_SUCCESSORS:
        raise ValueError(f"macro successors must be one of {MACRO_SUCCESSORS}")
    macros = library.macros

    def expand(node: SearchNode) -> Iterator[SearchNode]:
        for m in macros:
            if not macro_applicable(node.state, m):
                continue
            states = apply_macro(node.state, m)
            if successors == "final":
                yield SearchNode(states[-1], node.g + len(m), 0, node, macro=m)
                continue
            parent = node
            for k, s in enumerate(states):
                child = SearchNode(s, node.g + k + 1, 0, parent, macro=m, offset=k)
                yield child
                parent = child

    return expand


def enhanced_astar(
    task: GroundTask,
    library: MacroLibrary,
    heuristic: Heuristic | str = "ff",
    limits: Limits = Limits(),
    successors: str = "all",
    trace: bool = False,
) -> SearchResult:
    """A* that tries every applicable macro before the primitive actions.

    With ``successors="all"`` each intermediate state of a macro becomes a
    node at depth ``g + k``; with ``"final"`` only the last one does.
    """
    if isinstance(heuristic, str):
        heuristic = HEURISTICS[heuristic](task)
    expander = macro_expander(library, successors) if library.macros else None
    return best_first_search(task, heuristic, limits, expander, trace=trace)


def format_library(library: MacroLibrary, date: str = "") -> str:
    lines = [f"# corpus: {library.corpus}",
             f"# minsup: {'' if library.minsup is None else library.minsup}",
             f"# date: {date}"]
    for m in library.macros:
        lines.append(f"{' ; '.join(m.signatures)} #SUP: {m.support}")
    return "\n".join(lines) + "\n"


@dataclass
class LoadedLibrary:
    library: MacroLibrary
    dropped: list[str] = field(default_factory=list)


def read_library(text: str, task: GroundTask) -> LoadedLibrary:
    """Parse a macro library file against ``task``; unresolvable lines are reported."""
    header: dict[str, str] = {}
    macros, dropped = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
            continue
        sigs, support = parse_pattern_line(line)
        if len(sigs) < 2:
            dropped.append(f"{line} (length 1)")
            continue
        missing = [s for s in sigs if s not in task.action_index]
        if missing:
            dropped.append(f"{line} (unknown: {', '.join(missing)})")
            continue
        macros.append(Macro(tuple(task.action(s) for s in sigs), (), support))
    minsup = float(header["minsup"]) if header.get("minsup") else None
    lib = MacroLibrary(_ordered(macros), minsup, header.get("corpus", ""))
    return LoadedLibrary(lib, dropped)
