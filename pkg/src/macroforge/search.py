"""
Forward A* over grounded STRIPS tasks, with a relaxed-plan (FF) heuristic.

The search core takes an optional macro expander so the macro-enhanced
variant shares the exact bookkeeping and tie-breaking of the baseline.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

from .strips import GroundTask, Plan, State, bits

INF = math.inf

SOLVED = "solved"
UNSOLVABLE = "unsolvable"
TIMEOUT = "timeout"
MEMORY_OUT = "memory-out"


class Heuristic(Protocol):
    def __call__(self, state: State) -> float: ...


class ZeroHeuristic:
    def __init__(self, task: GroundTask):
        self.task = task

    def __call__(self, state: State) -> float:
        return 0


class FFHeuristic:
    """Length of a relaxed plan extracted from the relaxed planning graph.

    Graph construction stops at the first layer containing every goal atom.
    Extraction walks goal layers from the highest down; each open goal at
    layer ``i`` is achieved by the lowest-id action first applicable at layer
    ``i - 1``, whose preconditions become goals at their own first layers and
    whose adds are marked true at layers ``i`` and ``i - 1``.
    """

    def __init__(self, task: GroundTask):
        self.task = task
        self.adders: list[list[int]] = [[] for _ in task.atoms]
        for idx, action in enumerate(task.actions):
            for atom in action.add:
                self.adders[atom].append(idx)
        self._pre = [a.pre_mask for a in task.actions]
        self._add = [a.add_mask for a in task.actions]

    def __call__(self, state: State) -> float:
        task = self.task
        goal = task.goal_mask
        if state & goal == goal:
            return 0
        pre, add = self._pre, self._add
        atom_level: dict[int, int] = {i: 0 for i in bits(state)}
        action_level: dict[int, int] = {}
        pending = [i for i in range(len(pre))]
        reached = state
        layer = 0
        while reached & goal != goal:
            fired = [i for i in pending if reached & pre[i] == pre[i]]
            if not fired:
                return INF
            new = 0
            for i in fired:
                action_level[i] = layer
                new |= add[i]
            new &= ~reached
            if not new:
                return INF
            layer += 1
            for atom in bits(new):
                atom_level[atom] = layer
            reached |= new
            fired_set = set(fired)
            pending = [i for i in pending if i not in fired_set]

        goals_at: list[set[int]] = [set() for _ in range(layer + 1)]
        for g in bits(goal):
            goals_at[atom_level[g]].add(g)
        marked: list[set[int]] = [set() for _ in range(layer + 1)]
        chosen: set[int] = set()
        for i in range(layer, 0, -1):
            for g in sorted(goals_at[i]):
                if g in marked[i]:
                    continue
                achiever = next(a for a in self.adders[g] if action_level.get(a) == i - 1)
                chosen.add(achiever)
                for p in task.actions[achiever].pre:
                    lvl = atom_level[p]
                    if lvl and p not in marked[i - 1]:
                        goals_at[lvl].add(p)
                for q in task.actions[achiever].add:
                    marked[i].add(q)
                    marked[i - 1].add(q)
        return len(chosen)


HEURISTICS: dict[str, Callable[[GroundTask], Heuristic]] = {
    "ff": FFHeuristic,
    "zero": ZeroHeuristic,
}


def h_ff(task: GroundTask, state: State) -> float:
    return FFHeuristic(task)(state)


@dataclass(frozen=True)
class Limits:
    timeout: float | None = None
    max_nodes: int | None = None


@dataclass(eq=False)
class SearchNode:
    state: State
    g: int
    h: float
    parent: "SearchNode | None" = None
    action: int | None = None  # primitive edge: index into task.actions
    macro: object = None  # macro edge: the Macro that produced this node
    offset: int | None = None  # step of ``macro`` on this edge; None = every step

    @property
    def f(self) -> float:
        return self.g + self.h


@dataclass
class SearchResult:
    outcome: str
    plan: Plan | None = None
    expanded: int = 0
    generated: int = 0
    seconds: float = 0.0
    macros_used: int = 0
    trace: list[State] | None = field(default=None, repr=False)

    @property
    def solved(self) -> bool:
        return self.outcome == SOLVED

    @property
    def cost(self) -> int | None:
        return self.plan.cost if self.plan is not None else None

    def record(self, problem: str) -> str:
        """One machine-readable line: problem, outcome, cost, expanded, generated, seconds."""
        cost = "" if self.cost is None else str(self.cost)
        return f"{problem},{self.outcome},{cost},{self.expanded},{self.generated},{self.seconds:.6f}"


def extract_plan(node: SearchNode, task: GroundTask) -> Plan:
    """Primitive plan along the parent chain of ``node``."""
    steps: list[str] = []
    while node.parent is not None:
        if node.macro is None:
            steps.append(task.actions[node.action].signature)
        elif node.offset is None:
            steps.extend(a.signature for a in reversed(node.macro.steps))
        else:
            steps.append(node.macro.steps[node.offset].signature)
        node = node.parent
    steps.reverse()
    return Plan(tuple(steps))


def _macros_on_path(node: SearchNode) -> int:
    used = 0
    while node.parent is not None:
        if node.macro is not None and node.offset in (None, 0):
            used += 1
        node = node.parent
    return used


# (parent node) -> iterable of child nodes produced by macros, already linked.
MacroExpander = Callable[[SearchNode], Iterable[SearchNode]]


def best_first_search(
    task: GroundTask,
    heuristic: Heuristic,
    limits: Limits = Limits(),
    macro_expander: MacroExpander | None = None,
    trace: bool = False,
) -> SearchResult:
    """A* with duplicate detection and reopening of closed states.

    Heap order is ``(f, -g, sequence)``: lowest f, then deepest, then FIFO.
    Heuristic values are cached per state for the duration of one search.
    """
    start = time.perf_counter()
    deadline = None if limits.timeout is None else start + limits.timeout
    actions = task.actions
    pre = [a.pre_mask for a in actions]
    dele = [a.del_mask for a in actions]
    add = [a.add_mask for a in actions]
    goal = task.goal_mask

    h_cache: dict[State, float] = {}
    best_g: dict[State, int] = {}  # open index
    closed: dict[State, int] = {}
    heap: list = []
    seq = 0
    expanded = 0
    generated = 1
    order: list[State] | None = [] if trace else None

    def result(outcome: str, node: SearchNode | None = None) -> SearchResult:
        plan = extract_plan(node, task) if node is not None else None
        return SearchResult(
            outcome=outcome,
            plan=plan,
            expanded=expanded,
            generated=generated,
            seconds=time.perf_counter() - start,
            macros_used=_macros_on_path(node) if node is not None else 0,
            trace=order,
        )

    def push(node: SearchNode) -> None:
        nonlocal seq
        s = node.state
        old = best_g.get(s)
        if old is not None and old <= node.g:
            return
        done = closed.get(s)
        if done is not None:
            if done <= node.g:
                return
            del closed[s]
        h = h_cache.get(s)
        if h is None:
            h = heuristic(s)
            h_cache[s] = h
        if h == INF:
            return
        node.h = h
        best_g[s] = node.g
        heapq.heappush(heap, (node.g + h, -node.g, seq, node))
        seq += 1

    push(SearchNode(task.init, 0, 0))
    while heap:
        _, _, _, node = heapq.heappop(heap)
        s = node.state
        if best_g.get(s) != node.g:
            continue  # stale entry superseded by a cheaper path
        del best_g[s]
        if s & goal == goal:
            return result(SOLVED, node)
        if deadline is not None and time.perf_counter() > deadline:
            return result(TIMEOUT)
        closed[s] = node.g
        expanded += 1
        if order is not None:
            order.append(s)
        if macro_expander is not None:
            for child in macro_expander(node):
                generated += 1
                push(child)
        g1 = node.g + 1
        for i in range(len(pre)):
            if s & pre[i] == pre[i]:
                generated += 1
                push(SearchNode((s & ~dele[i]) | add[i], g1, 0, node, i))
        if limits.max_nodes is not None and generated > limits.max_nodes:
            return result(MEMORY_OUT)
    return result(UNSOLVABLE)


def astar(
    task: GroundTask,
    heuristic: Heuristic | str = "ff",
    limits: Limits = Limits(),
    trace: bool = False,
) -> SearchResult:
    if isinstance(heuristic, str):
        heuristic = HEURISTICS[heuristic](task)
    return best_first_search(task, heuristic, limits, trace=trace)
