"""
Sequence databases of plans and maximal contiguous pattern mining.

Support is counted per plan: a pattern occurring twice in one plan still
contributes one. Patterns must occur without gaps, so "contained in" means
contained as a contiguous run throughout this module.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .strips import Plan


class SPMFFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ActionDictionary:
    """Bijection between action signatures and item ids ``1..k``."""

    signatures: tuple[str, ...]
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_ids", {s: i + 1 for i, s in enumerate(self.signatures)})
        if len(self._ids) != len(self.signatures):
            raise ValueError("duplicate signatures in dictionary")

    @classmethod
    def from_signatures(cls, signatures: Iterable[str]) -> "ActionDictionary":
        return cls(tuple(sorted(set(signatures))))

    def id_of(self, signature: str) -> int:
        return self._ids[signature]

    def signature_of(self, item: int) -> str:
        if item < 1 or item > len(self.signatures):
            raise KeyError(item)
        return self.signatures[item - 1]

    def __len__(self) -> int:
        return len(self.signatures)

    def __contains__(self, signature: str) -> bool:
        return signature in self._ids


@dataclass(frozen=True)
class SequenceDatabase:
    sequences: tuple[tuple[int, ...], ...]
    dictionary: ActionDictionary
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        k = len(self.dictionary)
        for seq in self.sequences:
            if not seq:
                raise ValueError("empty sequence in database")
            if any(item < 1 or item > k for item in seq):
                raise ValueError(f"item outside dictionary in {seq}")

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass(frozen=True, order=True)
class Pattern:
    items: tuple[int, ...]
    support: int


@dataclass(frozen=True)
class MiningConfig:
    minsup: float
    max_length: int | None = None
    min_count: int | None = None  # absolute threshold, overrides minsup

    def __post_init__(self):
        if self.min_count is not None and self.min_count < 1:
            raise ValueError("min_count must be positive")
        if not 0 < self.minsup <= 1:
            raise ValueError(f"minsup must lie in (0, 1], got {self.minsup}")
        if self.max_length is not None and self.max_length < 1:
            raise ValueError("max_length must be positive")

    def threshold(self, size: int) -> int:
        if self.min_count is not None:
            return self.min_count
        # rounding first keeps 0.07 * 100 from turning into 8
        return max(1, math.ceil(round(self.minsup * size, 9)))


def build_sequence_db(plans: Sequence[Plan | Sequence[str]], labels: Sequence[str] = ()) -> SequenceDatabase:
    if not plans:
        raise ValueError("empty plan corpus")
    steps = [p.steps if isinstance(p, Plan) else tuple(p) for p in plans]
    for i, s in enumerate(steps):
        if not s:
            name = labels[i] if i < len(labels) else f"#{i}"
            raise ValueError(f"empty plan in corpus: {name}")
    dictionary = ActionDictionary.from_signatures(sig for s in steps for sig in s)
    sequences = tuple(tuple(dictionary.id_of(sig) for sig in s) for s in steps)
    return SequenceDatabase(sequences, dictionary, tuple(labels))


def occurs_in(items: Sequence[int], seq: Sequence[int]) -> bool:
    n = len(items)
    items = tuple(items)
    return any(tuple(seq[i:i + n]) == items for i in range(len(seq) - n + 1))


def support_of(db: SequenceDatabase, items: Sequence[int]) -> int:
    if not items:
        raise ValueError("support of an empty pattern is undefined")
    return sum(1 for seq in db.sequences if occurs_in(items, seq))


def _distinct(occurrences: list[tuple[int, int]]) -> int:
    count, last = 0, -1
    for sid, _ in occurrences:
        if sid != last:
            count += 1
            last = sid
    return count


def mine_maximal(db: SequenceDatabase, cfg: MiningConfig) -> list[Pattern]:
    """All maximal frequent contiguous patterns, sorted by item tuple.

    Depth-first prefix growth over vertical occurrence lists: each pattern
    keeps ``(sequence id, start)`` for every occurrence, and growing it by one
    item filters those lists against the next position. An item pair that is
    not itself frequent as a 2-pattern is never tried as an extension. A
    frequent pattern is maximal when neither a one-item right extension nor
    a one-item left extension is frequent; any longer frequent container
    would imply one of the two.
    """
    seqs = db.sequences
    minsup = cfg.threshold(len(seqs))
    max_len = cfg.max_length
    if minsup > len(seqs):
        return []

    # vertical representation of single items
    first: dict[int, list[tuple[int, int]]] = defaultdict(list)
    pair_sids: dict[tuple[int, int], set[int]] = defaultdict(set)
    for sid, seq in enumerate(seqs):
        for pos, item in enumerate(seq):
            first[item].append((sid, pos))
            if pos + 1 < len(seq):
                pair_sids[(item, seq[pos + 1])].add(sid)
    frequent_next: dict[int, list[int]] = defaultdict(list)
    for (a, b), sids in sorted(pair_sids.items()):
        if len(sids) >= minsup:
            frequent_next[a].append(b)

    def has_frequent_left(occ: list[tuple[int, int]]) -> bool:
        sids_by_item: dict[int, set[int]] = defaultdict(set)
        for sid, start in occ:
            if start > 0:
                sids_by_item[seqs[sid][start - 1]].add(sid)
        return any(len(s) >= minsup for s in sids_by_item.values())

    found: list[Pattern] = []
    stack = [((item,), occ) for item, occ in sorted(first.items(), reverse=True)
             if _distinct(occ) >= minsup]
    while stack:
        items, occ = stack.pop()
        n = len(items)
        grown = False
        if max_len is None or n < max_len:
            children = []
            for nxt in frequent_next.get(items[-1], ()):
                ext = [(sid, st) for sid, st in occ
                       if st + n < len(seqs[sid]) and seqs[sid][st + n] == nxt]
                if _distinct(ext) >= minsup:
                    children.append((items + (nxt,), ext))
            if children:
                grown = True
                stack.extend(reversed(children))
        if grown:
            continue
        if max_len is not None and n >= max_len:
            # a left extension would exceed the length cap
            found.append(Pattern(items, _distinct(occ)))
        elif not has_frequent_left(occ):
            found.append(Pattern(items, _distinct(occ)))
    found.sort()
    return found


def spmf_encode(db: SequenceDatabase) -> str:
    """``1 -1 2 -1 -2`` per sequence, one sequence per line."""
    return "".join(" ".join(f"{item} -1" for item in seq) + " -2\n" for seq in db.sequences)


def encode_dictionary(dictionary: ActionDictionary) -> str:
    return "".join(f"{i}\t{sig}\n" for i, sig in enumerate(dictionary.signatures, start=1))


def decode_dictionary(text: str) -> ActionDictionary:
    signatures = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            ident, sig = raw.split("\t", 1)
            ident = int(ident)
        except ValueError:
            raise SPMFFormatError(lineno, f"expected '<id>\\t<signature>', got {raw!r}") from None
        if ident != len(signatures) + 1:
            raise SPMFFormatError(lineno, f"dictionary ids must be dense from 1, got {ident}")
        signatures.append(sig)
    return ActionDictionary(tuple(signatures))


def spmf_decode(text: str, dictionary: ActionDictionary | str | None = None) -> SequenceDatabase:
    """Parse an SPMF sequence file.

    Without a dictionary, one is synthesised whose signatures are the item
    ids zero-padded to a common width, so their sort order matches id order.
    """
    sequences = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if tokens[-1] != "-2":
            raise SPMFFormatError(lineno, "sequence not terminated by -2")
        body = tokens[:-1]
        if not body:
            raise SPMFFormatError(lineno, "empty sequence")
        if len(body) % 2:
            raise SPMFFormatError(lineno, "every item must be followed by -1")
        seq = []
        for k in range(0, len(body), 2):
            item, sep = body[k], body[k + 1]
            if sep != "-1":
                raise SPMFFormatError(lineno, f"expected -1 after item {item}, got {sep}")
            if not item.isdigit() or int(item) < 1:
                raise SPMFFormatError(lineno, f"item must be a positive integer, got {item}")
            seq.append(int(item))
        sequences.append(tuple(seq))
    if isinstance(dictionary, str):
        dictionary = decode_dictionary(dictionary)
    if dictionary is None:
        top = max((i for s in sequences for i in s), default=0)
        width = len(str(top))
        dictionary = ActionDictionary(tuple(str(i).zfill(width) for i in range(1, top + 1)))
    return SequenceDatabase(tuple(sequences), dictionary)


def format_patterns(patterns: Iterable[Pattern], dictionary: ActionDictionary) -> str:
    """One pattern per line: ``sig1 ; sig2 #SUP: n``."""
    lines = []
    for p in patterns:
        sigs = " ; ".join(dictionary.signature_of(i) for i in p.items)
        lines.append(f"{sigs} #SUP: {p.support}\n")
    return "".join(lines)


def parse_pattern_line(line: str) -> tuple[tuple[str, ...], int]:
    body, sep, sup = line.rpartition("#SUP:")
    if not sep:
        raise ValueError(f"missing #SUP: in {line!r}")
    sigs = tuple(" ".join(s.split()) for s in body.split(";"))
    if not all(sigs):
        raise ValueError(f"empty signature in {line!r}")
    return sigs, int(sup.strip())


def parse_patterns(text: str, dictionary: ActionDictionary) -> list[Pattern]:
    out = []
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        sigs, sup = parse_pattern_line(raw)
        out.append(Pattern(tuple(dictionary.id_of(s) for s in sigs), sup))
    return out
