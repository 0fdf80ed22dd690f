"""Homomorphism-extension CSP solver and the subpower layer built on it.

Membership in a generated subpower <S> is realized as a homomorphism
extension problem: t is in <S> iff some homomorphism from the |S|-th power
of the structure to the structure maps the generator columns to t.  The
solver is generalized arc consistency plus backtracking with
minimum-remaining-values variable order and lexicographic value order, so
every "first witness" output is reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Optional

from .errors import CapExceeded, InputError
from .model import (
    OperationTable,
    Relation,
    RelationalStructure,
    Subset,
    relation,
    subset,
    tuple_rank,
    unrank_tuple,
)

DEFAULT_VERTEX_CAP = 10 ** 6


@dataclass(frozen=True)
class Subpower:
    """An n-ary subpower together with the generators it came from."""

    arity: int
    tuples: Relation
    generators: tuple

    def __contains__(self, t):
        return tuple(t) in self.tuples.tuples


@dataclass(frozen=True)
class EssentialWitness:
    """Generators of a B-essential subpower in the canonical one-per-row form:
    the i-th generator lies in B^(i-1) x (A\\B) x B^(n-i)."""

    arity: int
    generators: tuple
    generated: Relation


@dataclass(frozen=True)
class HomInstance:
    """A homomorphism-extension instance between same-signature structures.

    pins maps a source vertex to a forced target element; domains optionally
    restricts per-vertex candidate sets (vertices not listed keep the full
    target domain).
    """

    source: RelationalStructure
    target: RelationalStructure
    pins: tuple = ()       # ((vertex, element), ...)
    domains: tuple = ()    # ((vertex, frozenset), ...)

    def __post_init__(self):
        if self.source.signature() != self.target.signature():
            raise InputError("source and target structures have different signatures")
        object.__setattr__(self, "pins", tuple(self.pins))
        object.__setattr__(self, "domains", tuple((v, frozenset(d)) for v, d in self.domains))
        restr = dict(self.domains)
        for v, e in self.pins:
            if not 0 <= v < self.source.size:
                raise InputError("pinned vertex %d out of range" % v)
            if not 0 <= e < self.target.size:
                raise InputError("pinned value %d out of range" % e)
            if v in restr and e not in restr[v]:
                raise InputError("pin %d->%d lies outside the vertex domain" % (v, e))


# --- low-level bitmask CSP core ----------------------------------------------


def _initial_masks(inst: HomInstance):
    full = (1 << inst.target.size) - 1
    masks = [full] * inst.source.size
    for v, dom in inst.domains:
        m = 0
        for e in dom:
            m |= 1 << e
        masks[v] &= m
    for v, e in inst.pins:
        masks[v] &= 1 << e
    return masks


@lru_cache(maxsize=None)
def _constraints(source: RelationalStructure, target: RelationalStructure):
    """Constraint list [(scope, allowed_tuples)] plus vertex->constraints index."""
    cons = []
    for name, rel in source.relations:
        allowed = target.rel(name).sorted_tuples()
        for scope in rel.sorted_tuples():
            cons.append((scope, allowed))
    var_cons = [[] for _ in range(source.size)]
    for ci, (scope, _) in enumerate(cons):
        for v in scope:
            if ci not in var_cons[v]:
                var_cons[v].append(ci)
    return cons, var_cons


def _gac(masks, cons, var_cons, queue=None):
    """Generalized arc consistency to fixpoint; False on a domain wipeout."""
    if queue is None:
        queue = deque(range(len(cons)))
        in_queue = [True] * len(cons)
    else:
        in_queue = [False] * len(cons)
        queue = deque(queue)
        for ci in queue:
            in_queue[ci] = True
    while queue:
        ci = queue.popleft()
        in_queue[ci] = False
        scope, allowed = cons[ci]
        k = len(scope)
        supported = [0] * k
        for t in allowed:
            for i in range(k):
                if not (masks[scope[i]] >> t[i]) & 1:
                    break
            else:
                for i in range(k):
                    supported[i] |= 1 << t[i]
        for i in range(k):
            v = scope[i]
            m = masks[v] & supported[i]
            if m != masks[v]:
                if m == 0:
                    return False
                masks[v] = m
                for cj in var_cons[v]:
                    if not in_queue[cj]:
                        queue.append(cj)
                        in_queue[cj] = True
    return True


def _bits(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _search(masks, cons, var_cons):
    """First solution under MRV + lexicographic value order, or None."""
    best = -1
    best_count = None
    for v, m in enumerate(masks):
        c = bin(m).count("1")
        if c > 1 and (best_count is None or c < best_count):
            best, best_count = v, c
    if best < 0:
        return list(masks)
    for val in _bits(masks[best]):
        masks2 = list(masks)
        masks2[best] = 1 << val
        if _gac(masks2, cons, var_cons, queue=var_cons[best]):
            result = _search(masks2, cons, var_cons)
            if result is not None:
                return result
    return None


def ac_fixpoint(inst: HomInstance) -> Optional[dict]:
    """Greatest arc-consistent domains, or None when some domain empties."""
    cons, var_cons = _constraints(inst.source, inst.target)
    masks = _initial_masks(inst)
    if 0 in masks or not _gac(masks, cons, var_cons):
        return None
    return {v: frozenset(_bits(m)) for v, m in enumerate(masks)}


def find_hom(inst: HomInstance) -> Optional[tuple]:
    """A full assignment (tuple indexed by source vertex), or None."""
    cons, var_cons = _constraints(inst.source, inst.target)
    masks = _initial_masks(inst)
    if 0 in masks or not _gac(masks, cons, var_cons):
        return None
    solution = _search(masks, cons, var_cons)
    if solution is None:
        return None
    return tuple(_bits(m)[0] for m in solution)


# --- power structures and subpowers ------------------------------------------


@lru_cache(maxsize=None)
def _power_structure_cached(a: RelationalStructure, k: int) -> RelationalStructure:
    n = a.size ** k
    rels = []
    for name, rel in a.relations:
        tuples = set()
        for rows in product(rel.sorted_tuples(), repeat=k):
            tuples.add(
                tuple(tuple_rank([row[j] for row in rows], a.size) for j in range(rel.arity))
            )
        rels.append((name, Relation(rel.arity, frozenset(tuples))))
    # RelationalStructure validates bounds against n via a size override
    return RelationalStructure(n, tuple(rels))


def power_structure(a: RelationalStructure, k: int, cap: int = DEFAULT_VERTEX_CAP) -> RelationalStructure:
    """The k-th power of a; vertices are k-tuples in lexicographic rank order."""
    if k < 1:
        raise InputError("power exponent must be positive")
    if a.size ** k > cap:
        raise CapExceeded(
            "power structure would have %d vertices, cap is %d" % (a.size ** k, cap)
        )
    return _power_structure_cached(a, k)


def _columns(generators, size):
    """Vertex ranks of the generator columns in power(A, len(generators))."""
    n = len(generators[0])
    return [
        tuple_rank([g[j] for g in generators], size)
        for j in range(n)
    ]


def subpower_membership(a: RelationalStructure, s, t, cap: int = DEFAULT_VERTEX_CAP) -> bool:
    """True iff t lies in the subpower of A^n generated by the tuples in s."""
    s = [tuple(g) for g in s]
    t = tuple(t)
    if not s:
        raise InputError("generator list must be nonempty")
    n = len(t)
    if any(len(g) != n for g in s):
        raise InputError("generator arity mismatch")
    power = power_structure(a, len(s), cap)
    pins = {}
    for j, col in enumerate(_columns(s, a.size)):
        if col in pins and pins[col] != t[j]:
            return False
        pins[col] = t[j]
    inst = HomInstance(power, a, pins=tuple(sorted(pins.items())))
    return find_hom(inst) is not None


@lru_cache(maxsize=None)
def _generate_cached(a: RelationalStructure, s: tuple, n: int, cap: int) -> Subpower:
    tuples = frozenset(
        t for t in product(range(a.size), repeat=n) if subpower_membership(a, s, t, cap)
    )
    return Subpower(n, Relation(n, tuples), s)


def generate_subpower(a: RelationalStructure, s, n: int, cap: int = DEFAULT_VERTEX_CAP) -> Subpower:
    """The subpower of A^n generated by s: exactly the membership-positive tuples."""
    s = tuple(tuple(g) for g in s)
    if any(len(g) != n for g in s):
        raise InputError("generator arity mismatch")
    return _generate_cached(a, s, n, cap)


def closure_unary(a: RelationalStructure, b: Subset, cap: int = DEFAULT_VERTEX_CAP):
    """Smallest subuniverse containing b, plus a flag: closure == b."""
    if len(b) == 0:
        raise InputError("cannot close the empty subset")
    b.check_bounds(a.size)
    gens = [(e,) for e in b.sorted_elements()]
    sub = generate_subpower(a, gens, 1, cap)
    closed = subset(t[0] for t in sub.tuples.tuples)
    return closed, closed.elements == b.elements


# --- B-essential relations and absorption terms -------------------------------


def is_b_essential(a: RelationalStructure, r: Relation, b: Subset) -> bool:
    """R cap B^n empty, and every drop-one projection meets B^(n-1)."""
    if r.arity < 2:
        raise InputError("B-essentiality is defined for arity >= 2")
    belems = b.elements
    for t in r.tuples:
        if all(e in belems for e in t):
            return False
    for i in range(r.arity):
        if not any(
            all(e in belems for j, e in enumerate(t) if j != i) for t in r.tuples
        ):
            return False
    return True


def _essential_generator_choices(a: RelationalStructure, b: Subset, n: int):
    """Per-position candidate generators, each in B^(i-1) x (A\\B) x B^(n-i)."""
    bs = b.sorted_elements()
    outside = [e for e in range(a.size) if e not in b]
    for i in range(n):
        parts = [bs] * i + [outside] + [bs] * (n - 1 - i)
        yield [tuple(t) for t in product(*parts)]


def essential_witness_search(
    a: RelationalStructure, b: Subset, n: int, cap: int = DEFAULT_VERTEX_CAP
) -> Optional[EssentialWitness]:
    """First (lexicographic) generator list whose subpower avoids B^n, or None.

    Avoidance is certified by a single CSP: the power(A,n) -> A instance with
    every generator column restricted to B has no homomorphism.
    """
    if len(b) == 0:
        raise InputError("B must be nonempty")
    if n < 2:
        raise InputError("essential witnesses require arity >= 2")
    b.check_bounds(a.size)
    if len(b) == a.size:
        return None
    choices = list(_essential_generator_choices(a, b, n))
    power = power_structure(a, n, cap)
    bset = frozenset(b.elements)
    for gens in product(*choices):
        cols = _columns(list(gens), a.size)
        domains = tuple((c, bset) for c in sorted(set(cols)))
        inst = HomInstance(power, a, domains=domains)
        if find_hom(inst) is None:
            generated = generate_subpower(a, gens, n, cap)
            return EssentialWitness(n, tuple(gens), generated.tuples)
    return None


def absorption_term_search(
    a: RelationalStructure, b: Subset, n: int, cap: int = DEFAULT_VERTEX_CAP
) -> Optional[OperationTable]:
    """An n-ary absorption term for B, found by one CSP over power(A,n).

    Diagonal vertices are pinned to their element (idempotence); every vertex
    whose tuple has at most one coordinate outside B is restricted to B.
    """
    if len(b) == 0:
        raise InputError("B must be nonempty")
    b.check_bounds(a.size)
    power = power_structure(a, n, cap)
    bset = frozenset(b.elements)
    pins = []
    domains = []
    for rank in range(a.size ** n):
        t = unrank_tuple(rank, a.size, n)
        if all(e == t[0] for e in t):
            pins.append((rank, t[0]))
        outside = sum(1 for e in t if e not in bset)
        if outside <= 1:
            domains.append((rank, bset))
    try:
        inst = HomInstance(power, a, pins=tuple(pins), domains=tuple(domains))
    except InputError:
        # a diagonal pin outside B clashes with a B-restriction (n == 1 case)
        return None
    values = find_hom(inst)
    if values is None:
        return None
    return OperationTable(n, a.size, values)
