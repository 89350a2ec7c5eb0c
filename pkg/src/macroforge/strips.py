"""
Grounded STRIPS tasks.

A state is a plain ``int`` used as a bitset over the task's atom ids, so
states are immutable, hashable and cheap to copy. Ground actions carry both
the id sets and the matching bitmasks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pddl import Domain, OperatorSchema, Problem, parse_domain, parse_problem

State = int


class InapplicableActionError(Exception):
    """Raised by :func:`apply` when preconditions are missing."""

    def __init__(self, action: "GroundAction", missing: frozenset[int], atoms: Sequence[str] = ()):
        names = sorted(atoms[i] for i in missing) if atoms else sorted(missing)
        super().__init__(f"inapplicable action ({action.signature}): missing {names}")
        self.action = action
        self.missing = missing


class PlanExecutionError(Exception):
    """A sequence failed at ``step`` (0-based)."""

    def __init__(self, step: int, action: "GroundAction", missing: frozenset[int]):
        super().__init__(f"inapplicable at step {step} ({action.signature})")
        self.step = step
        self.action = action
        self.missing = missing


def _mask(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def bits(mask: int) -> list[int]:
    """Ids of the set bits of ``mask`` in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class GroundAction:
    signature: str
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    pre_mask: int = field(init=False, repr=False, compare=False)
    add_mask: int = field(init=False, repr=False, compare=False)
    del_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pre_mask", _mask(self.pre))
        object.__setattr__(self, "add_mask", _mask(self.add))
        object.__setattr__(self, "del_mask", _mask(self.delete))

    @property
    def name(self) -> str:
        return self.signature.split(" ", 1)[0]


@dataclass(frozen=True)
class GroundTask:
    atoms: tuple[str, ...]
    actions: tuple[GroundAction, ...]
    init: State
    goal: frozenset[int]
    name: str = ""
    atom_index: dict[str, int] = field(init=False, repr=False, compare=False)
    action_index: dict[str, int] = field(init=False, repr=False, compare=False)
    goal_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "atom_index", {a: i for i, a in enumerate(self.atoms)})
        object.__setattr__(self, "action_index", {a.signature: i for i, a in enumerate(self.actions)})
        object.__setattr__(self, "goal_mask", _mask(self.goal))
        if len(self.action_index) != len(self.actions):
            raise ValueError("duplicate action signatures")

    def state(self, atoms: Iterable[str]) -> State:
        return _mask(self.atom_index[a] for a in atoms)

    def decode(self, state: State) -> frozenset[str]:
        return frozenset(self.atoms[i] for i in bits(state))

    def action(self, signature: str) -> GroundAction:
        return self.actions[self.action_index[signature]]

    def is_goal(self, state: State) -> bool:
        return state & self.goal_mask == self.goal_mask


@dataclass(frozen=True)
class Plan:
    steps: tuple[str, ...]

    @property
    def cost(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Validation:
    valid: bool
    reason: str = ""
    step: int | None = None

    def __bool__(self) -> bool:
        return self.valid


def make_task(actions, init, goal, name: str = "") -> GroundTask:
    """Build a task from string atoms.

    ``actions`` is an iterable of ``(signature, pre, add, delete)`` with each
    of the last three an iterable of atom strings. Ids follow lexicographic
    order of atom strings and action signatures, and deletes that are also
    adds are dropped.
    """
    actions = [(sig, set(p), set(a), set(d)) for sig, p, a, d in actions]
    universe = set(init) | set(goal)
    for _, p, a, d in actions:
        universe |= p | a | d
    atoms = tuple(sorted(universe))
    index = {a: i for i, a in enumerate(atoms)}
    ground = []
    for sig, p, a, d in sorted(actions, key=lambda t: t[0]):
        ground.append(GroundAction(
            signature=sig,
            pre=frozenset(index[x] for x in p),
            add=frozenset(index[x] for x in a),
            delete=frozenset(index[x] for x in d - a),
        ))
    return GroundTask(
        atoms=atoms,
        actions=tuple(ground),
        init=_mask(index[x] for x in init),
        goal=frozenset(index[x] for x in goal),
        name=name,
    )


def _atom_str(atom: tuple[str, ...]) -> str:
    return " ".join(atom)


def _static_predicates(domain: Domain) -> set[str]:
    fluent = {t[0] for op in domain.operators for t in op.add + op.delete}
    return set(domain.predicates) - fluent


def _instantiate(op: OperatorSchema, binding: dict[str, str], templates):
    return [tuple(binding.get(t, t) for t in tpl) for tpl in templates]


def _binding_conflicts(op: OperatorSchema, binding: dict[str, str]) -> bool:
    """True when two distinct add/del templates collapse onto one atom.

    That only happens when the binding repeats an object where the schema
    relies on the arguments being different (``stack ?x ?x``).
    """
    adds = {tuple(binding.get(t, t) for t in tpl): tpl for tpl in op.add}
    for tpl in op.delete:
        g = tuple(binding.get(t, t) for t in tpl)
        if g in adds and adds[g] != tpl:
            return True
    return False


def ground(domain: Domain, problem: Problem) -> GroundTask:
    static = _static_predicates(domain)
    init = {_atom_str(a) for a in problem.init}
    by_type: dict[str, list[str]] = {}

    def objects_of(typ: str) -> list[str]:
        if typ not in by_type:
            by_type[typ] = sorted(o for o, t in problem.objects.items() if domain.is_subtype(t, typ))
        return by_type[typ]

    raw = []
    for op in domain.operators:
        pools = [objects_of(t) for t in op.parameter_types]
        for combo in itertools.product(*pools):
            binding = dict(zip(op.parameters, combo))
            if _binding_conflicts(op, binding):
                continue
            pre = _instantiate(op, binding, op.precondition)
            if any(a[0] in static and _atom_str(a) not in init for a in pre):
                continue
            sig = " ".join((op.name,) + combo)
            raw.append((
                sig,
                [_atom_str(a) for a in pre],
                [_atom_str(a) for a in _instantiate(op, binding, op.add)],
                [_atom_str(a) for a in _instantiate(op, binding, op.delete)],
            ))
    return make_task(raw, init, {_atom_str(a) for a in problem.goal}, name=problem.name)


def load_task(domain_text: str, problem_text: str) -> GroundTask:
    domain = parse_domain(domain_text)
    return ground(domain, parse_problem(problem_text, domain))


def applicable(state: State, action: GroundAction) -> bool:
    return state & action.pre_mask == action.pre_mask


def apply(state: State, action: GroundAction) -> State:
    """Successor ``(state - del) | add``; the input is untouched."""
    if state & action.pre_mask != action.pre_mask:
        raise InapplicableActionError(action, frozenset(bits(action.pre_mask & ~state)))
    return (state & ~action.del_mask) | action.add_mask


def apply_sequence(state: State, actions: Iterable[GroundAction]) -> State:
    for k, action in enumerate(actions):
        if state & action.pre_mask != action.pre_mask:
            raise PlanExecutionError(k, action, frozenset(bits(action.pre_mask & ~state)))
        state = (state & ~action.del_mask) | action.add_mask
    return state


def validate_plan(task: GroundTask, plan: Plan | Sequence[str]) -> Validation:
    steps = plan.steps if isinstance(plan, Plan) else tuple(plan)
    actions = []
    for k, sig in enumerate(steps):
        if sig not in task.action_index:
            return Validation(False, f"unknown action at step {k}: ({sig})", k)
        actions.append(task.action(sig))
    try:
        final = apply_sequence(task.init, actions)
    except PlanExecutionError as err:
        return Validation(False, str(err), err.step)
    if not task.is_goal(final):
        missing = sorted(task.atoms[i] for i in task.goal if not final >> i & 1)
        return Validation(False, f"goal not reached, missing {missing}")
    return Validation(True)


def format_plan(plan: Plan) -> str:
    lines = [f"({sig})" for sig in plan.steps]
    lines.append(f"; cost = {plan.cost}")
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> Plan:
    steps = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if not (line.startswith("(") and line.endswith(")")):
            raise ValueError(f"malformed plan line: {raw!r}")
        steps.append(" ".join(line[1:-1].lower().split()))
    return Plan(tuple(steps))
