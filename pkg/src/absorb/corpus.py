"""Exhaustive small-domain fixture corpus.

Enumerates every structure carrying a single relation of bounded arity over a
fixed domain (singleton unary relations added), pairs each with every
nonempty proper subuniverse subset, and reports the counts.  The acceptance
suites sweep this corpus to cross-check the decision procedures against the
brute-force oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .engine import DEFAULT_VERTEX_CAP, closure_unary
from .model import Relation, RelationalStructure, Subset, subset, with_singletons


@dataclass(frozen=True)
class CorpusEntry:
    label: str
    structure: RelationalStructure
    b: Subset


@dataclass
class CorpusManifest:
    size: int
    max_arity: int
    relation_choices: int       # raw count before structural dedup
    structures: list            # (label, RelationalStructure)
    entries: list               # CorpusEntry per (structure, B) pair


def relation_choices(size: int, max_arity: int):
    """Every relation of arity 1..max_arity over {0..size-1}, as
    (arity, bitmask, Relation); bitmask indexes the sorted tuple universe."""
    for arity in range(1, max_arity + 1):
        universe = sorted(product(range(size), repeat=arity))
        for mask in range(1 << len(universe)):
            tuples = frozenset(t for i, t in enumerate(universe) if mask >> i & 1)
            yield arity, mask, Relation(arity, tuples)


def enumerate_structures(size: int, max_arity: int):
    """Deduplicated labeled structures: relation "r" plus all singletons.

    Two choices collapse when they induce the same multiset of relations
    (e.g. r = {(0,)} against r = {(1,)}, which differ only in which
    singleton the extra unary relation duplicates).
    """
    seen = {}
    out = []
    raw = 0
    for arity, mask, rel in relation_choices(size, max_arity):
        raw += 1
        base = RelationalStructure(size, (("r", rel),))
        expanded, _ = with_singletons(base)
        key = frozenset(
            ((r.arity, r.tuples), sum(1 for _, o in expanded.relations if o == r))
            for _, r in expanded.relations
        )
        if key in seen:
            continue
        label = "a%d_m%d" % (arity, mask)
        seen[key] = label
        out.append((label, expanded))
    return raw, out


def subuniverse_subsets(a: RelationalStructure, cap: int = DEFAULT_VERTEX_CAP):
    """Nonempty proper subsets of the domain closed under all polymorphisms."""
    out = []
    for mask in range(1, (1 << a.size) - 1):
        b = subset(e for e in range(a.size) if mask >> e & 1)
        _, closed = closure_unary(a, b, cap)
        if closed:
            out.append(b)
    return out


def build_corpus(size: int, max_arity: int, cap: int = DEFAULT_VERTEX_CAP) -> CorpusManifest:
    raw, structures = enumerate_structures(size, max_arity)
    entries = []
    for label, a in structures:
        for b in subuniverse_subsets(a, cap):
            blabel = "".join(str(e) for e in b)
            entries.append(CorpusEntry("%s_b%s" % (label, blabel), a, b))
    return CorpusManifest(size, max_arity, raw, structures, entries)


def manifest_obj(m: CorpusManifest):
    return {
        "size": m.size,
        "max_arity": m.max_arity,
        "relation_choices": m.relation_choices,
        "structure_count": len(m.structures),
        "instance_count": len(m.entries),
        "instances": [
            {"label": e.label, "structure": e.label.split("_b")[0], "b": e.b.sorted_elements()}
            for e in m.entries
        ],
    }
