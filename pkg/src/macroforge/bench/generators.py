"""
Random problem generators for the bundled domains.

Every generator draws the initial state and the goal from random reachable
configurations, so generated problems are solvable by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources

DOMAINS = ("blocksworld", "ferry", "gripper")

DEFAULT_SIZES = {
    "blocksworld": {"blocks": 5},
    "ferry": {"locations": 3, "cars": 3},
    "gripper": {"balls": 4},
}


@dataclass(frozen=True)
class GeneratedProblem:
    name: str
    text: str


def domain_text(domain: str) -> str:
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}; choose from {', '.join(DOMAINS)}")
    return resources.files("macroforge.data").joinpath(f"{domain}.pddl").read_text()


def _towers(blocks: list[str], rng: random.Random) -> list[list[str]]:
    """Random partition of ``blocks`` into towers, bottom block first."""
    order = blocks[:]
    rng.shuffle(order)
    towers: list[list[str]] = []
    for b in order:
        k = rng.randrange(len(towers) + 1)
        if k == len(towers):
            towers.append([b])
        else:
            towers[k].append(b)
    return towers


def _tower_atoms(towers: list[list[str]]) -> list[str]:
    atoms = []
    for t in towers:
        atoms.append(f"ontable {t[0]}")
        atoms.extend(f"on {above} {below}" for below, above in zip(t, t[1:]))
        atoms.append(f"clear {t[-1]}")
    return atoms


def _blocksworld(rng: random.Random, blocks: int = 5):
    if blocks < 2:
        raise ValueError("blocksworld needs at least 2 blocks to state a stacking goal")
    names = [f"b{i}" for i in range(1, blocks + 1)]
    init = _tower_atoms(_towers(names, rng)) + ["handempty"]
    goal = [a for a in _tower_atoms(_towers(names, rng)) if a.startswith("on ")]
    if not goal:
        return None
    return names, init, goal


def _ferry(rng: random.Random, locations: int = 3, cars: int = 3):
    if locations < 2 or cars < 1:
        raise ValueError("ferry needs at least 2 locations and 1 car")
    locs = [f"l{i}" for i in range(1, locations + 1)]
    carnames = [f"c{i}" for i in range(1, cars + 1)]
    init = [f"at-ferry {rng.choice(locs)}", "empty-ferry"]
    init += [f"at {c} {rng.choice(locs)}" for c in carnames]
    goal = [f"at {c} {rng.choice(locs)}" for c in carnames]
    objects = " ".join(locs) + " - location " + " ".join(carnames) + " - car"
    return objects, init, goal


def _gripper(rng: random.Random, balls: int = 4):
    if balls < 1:
        raise ValueError("gripper needs at least 1 ball")
    rooms = ["rooma", "roomb"]
    ballnames = [f"ball{i}" for i in range(1, balls + 1)]
    grippers = ["left", "right"]
    init = [f"room {r}" for r in rooms] + [f"gripper {g}" for g in grippers]
    init += [f"ball {b}" for b in ballnames] + [f"free {g}" for g in grippers]
    init.append(f"at-robby {rng.choice(rooms)}")
    init += [f"at {b} {rng.choice(rooms)}" for b in ballnames]
    goal = [f"at {b} {rng.choice(rooms)}" for b in ballnames]
    return rooms + ballnames + grippers, init, goal


_GENERATORS = {"blocksworld": _blocksworld, "ferry": _ferry, "gripper": _gripper}


def _render(domain: str, name: str, objects, init: list[str], goal: list[str]) -> str:
    objs = objects if isinstance(objects, str) else " ".join(objects)
    init_s = "\n    ".join(f"({a})" for a in sorted(init))
    goal_s = "\n    ".join(f"({a})" for a in sorted(goal))
    return (f"(define (problem {name})\n"
            f"  (:domain {domain})\n"
            f"  (:objects {objs})\n"
            f"  (:init\n    {init_s})\n"
            f"  (:goal (and\n    {goal_s})))\n")


def generate_problems(domain: str, count: int, seed: int, prefix: str = "p",
                      exclude: set[tuple] | None = None, **size) -> list[GeneratedProblem]:
    """``count`` distinct problems whose goal does not already hold initially.

    ``exclude`` holds (init, goal) keys to avoid and is extended in place,
    which is how training and test sets are kept disjoint.
    """
    if domain not in _GENERATORS:
        raise ValueError(f"unknown domain {domain!r}; choose from {', '.join(DOMAINS)}")
    if count < 0:
        raise ValueError("count must be non-negative")
    params = {**DEFAULT_SIZES[domain], **{k: v for k, v in size.items() if v is not None}}
    unknown = set(params) - set(DEFAULT_SIZES[domain])
    if unknown:
        raise ValueError(f"{domain} does not take {', '.join(sorted(unknown))}")
    _GENERATORS[domain](random.Random(0), **params)  # validates the size parameters
    rng = random.Random(seed)
    seen = exclude if exclude is not None else set()
    out: list[GeneratedProblem] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 1000 * (count + 1):
            raise ValueError(f"could not draw {count} distinct {domain} problems of this size")
        drawn = _GENERATORS[domain](rng, **params)
        if drawn is None:
            continue
        objects, init, goal = drawn
        if set(goal) <= set(init):
            continue
        key = (frozenset(init), frozenset(goal))
        if key in seen:
            continue
        seen.add(key)
        name = f"{domain}-{prefix}{len(out) + 1:03d}"
        out.append(GeneratedProblem(name, _render(domain, name, objects, init, goal)))
    return out


@dataclass(frozen=True)
class BenchmarkSuite:
    domain: str
    training: tuple[GeneratedProblem, ...]
    test: tuple[GeneratedProblem, ...]
    seed: int


def make_suite(domain: str, training: int, test: int, seed: int, **size) -> BenchmarkSuite:
    """Disjoint training and test sets drawn from one seed."""
    seen: set[tuple] = set()
    train = generate_problems(domain, training, seed, "train", seen, **size)
    tests = generate_problems(domain, test, seed + 1, "test", seen, **size)
    return BenchmarkSuite(domain, tuple(train), tuple(tests), seed)
