"""Decision procedures: the local Jónsson absorption test, NP certificates,
chain/term checkers and converters, the small-domain chain oracle, and the
arity-bound calculators.

The decider iterates all quintuples (a, c, d, b1, b2) in lexicographic order
and, for each, asks for a B-colored directed path from a to c in the digraph
read off the subpower generated by (b1,a,a), (b2,c,c), (d,a,c).  A verdict of
"absorbing" is the same verdict: for finitely related algebras the two
notions coincide, and no absorption term is ever synthesized (the arity bound
is astronomically large); the certificate of the path test is the proof
object.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Optional

from .errors import CapExceeded, InputError, NotSubuniverseError
from .engine import (
    DEFAULT_VERTEX_CAP,
    HomInstance,
    closure_unary,
    find_hom,
    generate_subpower,
    power_structure,
)
from .model import (
    Digraph,
    OperationTable,
    RelationalStructure,
    Subset,
    digraph_reach,
    is_polymorphism,
    projection_table,
    tuple_rank,
    with_singletons,
)


@dataclass(frozen=True)
class Quintuple:
    a: int
    c: int
    d: int
    b1: int
    b2: int

    def as_list(self):
        return [self.a, self.c, self.d, self.b1, self.b2]

    def generators(self):
        return ((self.b1, self.a, self.a), (self.b2, self.c, self.c), (self.d, self.a, self.c))


@dataclass(frozen=True)
class CertStep:
    """One path edge (u, v) with its B-color b and the generating table phi:
    phi applied coordinatewise to the quintuple's generators yields (b,u,v)."""

    b: int
    u: int
    v: int
    phi: OperationTable


@dataclass(frozen=True)
class CertEntry:
    q: Quintuple
    steps: tuple


@dataclass(frozen=True)
class Certificate:
    entries: tuple

    def by_quintuple(self):
        return {e.q: e for e in self.entries}


@dataclass(frozen=True)
class Decision:
    holds: bool
    mode: str  # "jonsson" or "absorb"
    failing: Optional[Quintuple] = None
    certificate: Optional[Certificate] = None


@dataclass(frozen=True)
class ChainWitness:
    tables: tuple  # ternary OperationTables d_0 .. d_n


@dataclass(frozen=True)
class BoundReport:
    theta: int
    size: int
    kappa: int
    lower_bound: Optional[int]


def _quintuples(size: int, b: Subset):
    bs = b.sorted_elements()
    for a, c, d in product(range(size), repeat=3):
        for b1, b2 in product(bs, repeat=2):
            yield Quintuple(a, c, d, b1, b2)


def jonsson_digraph(a: RelationalStructure, b: Subset, q: Quintuple, cap: int = DEFAULT_VERTEX_CAP):
    """The B-colored edge digraph of R = <(b1,a,a),(b2,c,c),(d,a,c)> <= A^3."""
    r = generate_subpower(a, q.generators(), 3, cap)
    edges = frozenset((u, v) for (col, u, v) in r.tuples.tuples if col in b)
    return Digraph(a.size, edges), r


def _recover_table(a: RelationalStructure, q: Quintuple, target, cap: int) -> OperationTable:
    """A ternary polymorphism mapping the quintuple's generators to `target`."""
    power = power_structure(a, 3, cap)
    gens = q.generators()
    pins = {}
    for j in range(3):
        col = tuple_rank([g[j] for g in gens], a.size)
        pins[col] = target[j]
    values = find_hom(HomInstance(power, a, pins=tuple(sorted(pins.items()))))
    if values is None:
        raise AssertionError("generated tuple has no generating polymorphism")
    return OperationTable(3, a.size, values)


def _validate_inputs(a: RelationalStructure, b: Subset, cap: int):
    if len(b) == 0:
        raise InputError("B must be nonempty")
    b.check_bounds(a.size)
    expanded, _ = with_singletons(a)
    _, is_sub = closure_unary(expanded, b, cap)
    if not is_sub:
        raise NotSubuniverseError(
            "B=%r is not a subuniverse of the polymorphism algebra" % (b.sorted_elements(),)
        )
    return expanded


def decide_jonsson(a: RelationalStructure, b: Subset, cap: int = DEFAULT_VERTEX_CAP) -> Decision:
    """Decide B Jónsson-absorbs Pol(A); on failure report the least failing
    quintuple, on success assemble the NP certificate."""
    expanded = _validate_inputs(a, b, cap)
    size = a.size
    if len(b) == size:
        # B = A: every quintuple passes via the third-projection witness.
        proj3 = projection_table(size, 3, 2)
        entries = []
        for q in _quintuples(size, b):
            steps = () if q.a == q.c else (CertStep(q.d, q.a, q.c, proj3),)
            entries.append(CertEntry(q, steps))
        return Decision(True, "jonsson", certificate=Certificate(tuple(entries)))
    entries = []
    for q in _quintuples(size, b):
        if q.a == q.c:
            entries.append(CertEntry(q, ()))
            continue
        graph, r = jonsson_digraph(expanded, b, q, cap)
        walk = digraph_reach(graph, {q.a}, {q.c})
        if walk is None:
            return Decision(False, "jonsson", failing=q)
        steps = []
        for u, v in zip(walk, walk[1:]):
            color = min(col for (col, x, y) in r.tuples.tuples if x == u and y == v and col in b)
            phi = _recover_table(expanded, q, (color, u, v), cap)
            steps.append(CertStep(color, u, v, phi))
        entries.append(CertEntry(q, tuple(steps)))
    return Decision(True, "jonsson", certificate=Certificate(tuple(entries)))


def decide_absorption(a: RelationalStructure, b: Subset, cap: int = DEFAULT_VERTEX_CAP) -> Decision:
    """Identical verdict to decide_jonsson; annotated as an absorption verdict."""
    d = decide_jonsson(a, b, cap)
    return Decision(d.holds, "absorb", failing=d.failing, certificate=d.certificate)


def is_absorption_term(a: RelationalStructure, b: Subset, t: OperationTable):
    """t is an idempotent polymorphism with t(B,..,B,A,B,..,B) <= B at every position."""
    expanded, _ = with_singletons(a)
    if not t.is_idempotent():
        return False
    ok, _ = is_polymorphism(expanded, t)
    if not ok:
        return False
    bs = b.sorted_elements()
    n = t.arity
    for i in range(n):
        pools = [bs] * i + [list(range(a.size))] + [bs] * (n - 1 - i)
        for args in product(*pools):
            if t.apply(args) not in b:
                return False
    return True


def is_jonsson_chain(a: RelationalStructure, b: Subset, chain: ChainWitness):
    """Check the chain axioms; returns (ok, first_violation_or_None)."""
    tables = chain.tables
    size = a.size
    if not tables:
        return False, "empty chain"
    for i, t in enumerate(tables):
        if t.arity != 3 or t.size != size:
            return False, "table %d is not ternary over the domain" % i
    pairs = list(product(range(size), repeat=2))
    triples = list(product(range(size), repeat=3))
    d0, dn = tables[0], tables[-1]
    for x, y, z in triples:
        if d0.apply((x, y, z)) != x:
            return False, "d_0 is not the first projection at (%d,%d,%d)" % (x, y, z)
        if dn.apply((x, y, z)) != z:
            return False, "d_n is not the third projection at (%d,%d,%d)" % (x, y, z)
    for i in range(len(tables) - 1):
        for x, y in pairs:
            if tables[i].apply((x, y, y)) != tables[i + 1].apply((x, x, y)):
                return False, "link d_%d(x,y,y) != d_%d(x,x,y) at x=%d y=%d" % (i, i + 1, x, y)
    expanded, _ = with_singletons(a)
    for i, t in enumerate(tables):
        ok, _ = is_polymorphism(expanded, t)
        if not ok:
            return False, "d_%d is not a polymorphism" % i
        for x, z in product(b.sorted_elements(), repeat=2):
            for y in range(size):
                if t.apply((x, y, z)) not in b:
                    return False, "d_%d(B,A,B) leaves B at (%d,%d,%d)" % (i, x, y, z)
    return True, None


def chain_from_absorption_term(t: OperationTable) -> ChainWitness:
    """The standard n+2 term chain derived from an n-ary absorption term:
    first projection, then (x,y,z) -> t(z,..,z,y,x,..,x) with i-1 leading z's,
    then third projection."""
    if t.arity < 1:
        raise InputError("term arity must be positive")
    size, n = t.size, t.arity
    tables = [projection_table(size, 3, 0)]
    for i in range(1, n + 1):
        values = []
        for x, y, z in product(range(size), repeat=3):
            values.append(t.apply((z,) * (i - 1) + (y,) + (x,) * (n - i)))
        tables.append(OperationTable(3, size, tuple(values)))
    tables.append(projection_table(size, 3, 2))
    return ChainWitness(tuple(tables))


def _all_tables(size: int, arity: int):
    count = size ** arity
    for values in product(range(size), repeat=count):
        yield OperationTable(arity, size, values)


def oracle_chain_search(
    a: RelationalStructure, b: Subset, max_size: int = 2
) -> Optional[ChainWitness]:
    """Complete chain search by exhaustive ternary table enumeration.

    Only feasible for tiny domains (all size^(size^3) ternary tables are
    enumerated), hence the hard size limit.
    """
    if a.size > max_size:
        raise CapExceeded(
            "oracle chain search enumerates %d^%d tables; domain too large"
            % (a.size, a.size ** 3)
        )
    if len(b) == 0:
        raise InputError("B must be nonempty")
    expanded, _ = with_singletons(a)
    size = a.size
    candidates = []
    for t in _all_tables(size, 3):
        if not t.is_idempotent():
            continue
        if not all(
            t.apply((x, y, z)) in b
            for x in b
            for z in b
            for y in range(size)
        ):
            continue
        ok, _ = is_polymorphism(expanded, t)
        if ok:
            candidates.append(t)
    proj1 = projection_table(size, 3, 0)
    proj3 = projection_table(size, 3, 2)
    index = {t.values: i for i, t in enumerate(candidates)}
    if proj1.values not in index or proj3.values not in index:
        return None
    pairs = list(product(range(size), repeat=2))
    start, goal = index[proj1.values], index[proj3.values]
    prev = {start: None}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        if i == goal:
            chain = []
            while i is not None:
                chain.append(candidates[i])
                i = prev[i]
            return ChainWitness(tuple(reversed(chain)))
        ti = candidates[i]
        for j, tj in enumerate(candidates):
            if j in prev:
                continue
            if all(ti.apply((x, y, y)) == tj.apply((x, x, y)) for x, y in pairs):
                prev[j] = i
                queue.append(j)
    return None


def verify_np_certificate(a: RelationalStructure, b: Subset, cert: Certificate):
    """Polynomial-time certificate check; returns (ok, first_defect_or_None)."""
    if len(b) == 0:
        return False, "B is empty"
    b.check_bounds(a.size)
    expanded, _ = with_singletons(a)
    size = a.size
    table = {}
    for entry in cert.entries:
        if entry.q in table:
            return False, "duplicate quintuple %r" % (entry.q.as_list(),)
        table[entry.q] = entry
    poly_cache = {}

    def _is_poly(phi):
        key = phi.values
        if key not in poly_cache:
            ok, _ = is_polymorphism(expanded, phi)
            poly_cache[key] = ok
        return poly_cache[key]

    for q in _quintuples(size, b):
        entry = table.get(q)
        if entry is None:
            return False, "missing quintuple %r" % (q.as_list(),)
        if len(entry.steps) > size:
            return False, "quintuple %r: more than %d steps" % (q.as_list(), size)
        gens = q.generators()
        cur = q.a
        for k, step in enumerate(entry.steps):
            where = "quintuple %r step %d" % (q.as_list(), k)
            if step.phi.arity != 3 or step.phi.size != size:
                return False, "%s: phi is not ternary over the domain" % where
            if step.b not in b:
                return False, "%s: color %d not in B" % (where, step.b)
            image = tuple(step.phi.apply([g[j] for g in gens]) for j in range(3))
            if image != (step.b, step.u, step.v):
                return False, "%s: phi does not generate (b,u,v)" % where
            if not _is_poly(step.phi):
                return False, "%s: not a polymorphism" % where
            if step.u != cur:
                return False, "%s: path chaining broken" % where
            cur = step.v
        if cur != q.c:
            return False, "quintuple %r: path endpoint %d != %d" % (q.as_list(), cur, q.c)
    return True, None


def bounds(theta: int, size: int) -> BoundReport:
    """Exact big-integer arity bounds for the absorption-term arity."""
    if theta < 2:
        raise InputError("theta must be at least 2")
    if size < 1:
        raise InputError("domain size must be at least 1")
    kappa = (2 * theta - 2) ** (3 ** size) // 2 + 1
    lower = None
    if theta >= 3 and size >= 3:
        lower = (theta - 1) ** (2 ** (size - 2))
    elif theta == 2 and size >= 4:
        lower = 2 ** (2 ** (size - 3))
    return BoundReport(theta, size, kappa, lower)
