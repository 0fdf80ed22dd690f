"""JSON codecs for every externally visible value.

Serialization is canonical: tuples and keys are sorted, so
parse(serialize(v)) == v and serialize(parse(text)) is byte-stable.
"""

from __future__ import annotations

import json

from .comb import CombFormula
from .decide import Certificate, CertEntry, CertStep, ChainWitness, Decision, Quintuple
from .engine import EssentialWitness
from .errors import InputError, ParseError
from .model import (
    OperationTable,
    Relation,
    RelationalStructure,
    Subset,
    relation,
    subset,
)
from .ppform import Atom, PPFormula


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("malformed JSON: %s" % exc) from None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _expect(obj, key, types, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError("%s: missing key %r" % (where, key))
    val = obj[key]
    if not isinstance(val, types):
        raise ParseError("%s: key %r has wrong type" % (where, key))
    return val


def _int_list(val, where):
    if not isinstance(val, list) or not all(isinstance(x, int) for x in val):
        raise ParseError("%s: expected a list of integers" % where)
    return val


# --- structures -------------------------------------------------------------

def parse_structure(text: str) -> RelationalStructure:
    obj = _loads(text)
    size = _expect(obj, "size", int, "structure")
    rels_obj = _expect(obj, "relations", dict, "structure")
    items = []
    for name in rels_obj:
        where = "relation %r" % name
        rel_obj = rels_obj[name]
        arity = _expect(rel_obj, "arity", int, where)
        tuples_obj = _expect(rel_obj, "tuples", list, where)
        tuples = set()
        for t in tuples_obj:
            t = tuple(_int_list(t, where))
            if len(t) != arity:
                raise ParseError("%s: tuple %r does not match arity %d" % (where, t, arity))
            for e in t:
                if not 0 <= e < size:
                    raise ParseError("%s: entry %d out of range" % (where, e))
            tuples.add(t)
        items.append((name, Relation(arity, frozenset(tuples))))
    items.sort(key=lambda kv: kv[0])
    try:
        return RelationalStructure(size, tuple(items))
    except InputError as exc:
        raise ParseError(str(exc)) from None


def dump_structure(a: RelationalStructure) -> str:
    rels = {
        name: {"arity": rel.arity, "tuples": [list(t) for t in rel.sorted_tuples()]}
        for name, rel in a.relations
    }
    return _dumps({"size": a.size, "relations": rels})


# --- subsets ----------------------------------------------------------------

def parse_subset(text: str) -> Subset:
    obj = _loads(text)
    elems = _int_list(_expect(obj, "elements", list, "subset"), "subset")
    for e in elems:
        if e < 0:
            raise ParseError("subset: element %d out of range" % e)
    return subset(elems)


def dump_subset(b: Subset) -> str:
    return _dumps({"elements": b.sorted_elements()})


# --- operation tables -------------------------------------------------------

def _derive_size(arity: int, length: int) -> int:
    if arity == 1:
        return length
    size = round(length ** (1.0 / arity))
    for cand in (size - 1, size, size + 1):
        if cand >= 1 and cand ** arity == length:
            return cand
    raise ParseError("table: length %d is not a perfect %d-th power" % (length, arity))


def parse_table(text: str) -> OperationTable:
    return table_from_obj(_loads(text))


def table_from_obj(obj) -> OperationTable:
    arity = _expect(obj, "arity", int, "table")
    values = _int_list(_expect(obj, "values", list, "table"), "table")
    if arity < 1 or not values:
        raise ParseError("table: arity and values must be nonempty")
    size = _derive_size(arity, len(values))
    for v in values:
        if not 0 <= v < size:
            raise ParseError("table: value %d out of range for size %d" % (v, size))
    return OperationTable(arity, size, tuple(values))


def table_to_obj(t: OperationTable):
    return {"arity": t.arity, "values": list(t.values)}


def dump_table(t: OperationTable) -> str:
    return _dumps(table_to_obj(t))


# --- relations (shared by witnesses and comb sections) ----------------------

def relation_from_obj(obj, where="relation") -> Relation:
    arity = _expect(obj, "arity", int, where)
    tuples_obj = _expect(obj, "tuples", list, where)
    tuples = set()
    for t in tuples_obj:
        t = tuple(_int_list(t, where))
        if len(t) != arity:
            raise ParseError("%s: tuple %r does not match arity %d" % (where, t, arity))
        tuples.add(t)
    return Relation(arity, frozenset(tuples))


def relation_to_obj(r: Relation):
    return {"arity": r.arity, "tuples": [list(t) for t in r.sorted_tuples()]}


def canonical_json(obj) -> str:
    return _dumps(obj)


# --- decisions and certificates ----------------------------------------------

def _quintuple_from_list(val, where):
    vals = _int_list(val, where)
    if len(vals) != 5:
        raise ParseError("%s: quintuple must have 5 entries" % where)
    return Quintuple(*vals)


def certificate_to_obj(cert: Certificate):
    return {
        "quintuples": [
            {
                "q": e.q.as_list(),
                "steps": [
                    {"b": s.b, "u": s.u, "v": s.v, "phi": table_to_obj(s.phi)}
                    for s in e.steps
                ],
            }
            for e in cert.entries
        ]
    }


def certificate_from_obj(obj) -> Certificate:
    items = _expect(obj, "quintuples", list, "certificate")
    entries = []
    for i, entry_obj in enumerate(items):
        where = "certificate entry %d" % i
        q = _quintuple_from_list(_expect(entry_obj, "q", list, where), where)
        steps = []
        for j, step_obj in enumerate(_expect(entry_obj, "steps", list, where)):
            sw = "%s step %d" % (where, j)
            steps.append(
                CertStep(
                    _expect(step_obj, "b", int, sw),
                    _expect(step_obj, "u", int, sw),
                    _expect(step_obj, "v", int, sw),
                    table_from_obj(_expect(step_obj, "phi", dict, sw)),
                )
            )
        entries.append(CertEntry(q, tuple(steps)))
    return Certificate(tuple(entries))


def dump_certificate(cert: Certificate) -> str:
    return _dumps(certificate_to_obj(cert))


def parse_certificate(text: str) -> Certificate:
    return certificate_from_obj(_loads(text))


def decision_to_obj(d: Decision):
    obj = {"holds": d.holds}
    if d.failing is not None:
        obj["failing"] = d.failing.as_list()
    if d.certificate is not None:
        obj["certificate"] = certificate_to_obj(d.certificate)
    return obj


def decision_from_obj(obj, mode: str = "jonsson") -> Decision:
    holds = _expect(obj, "holds", bool, "decision")
    failing = None
    if "failing" in obj:
        failing = _quintuple_from_list(obj["failing"], "decision")
    cert = None
    if "certificate" in obj:
        cert = certificate_from_obj(_expect(obj, "certificate", dict, "decision"))
    return Decision(holds, mode, failing=failing, certificate=cert)


def dump_decision(d: Decision) -> str:
    return _dumps(decision_to_obj(d))


def parse_decision(text: str, mode: str = "jonsson") -> Decision:
    return decision_from_obj(_loads(text), mode)


def chain_to_obj(chain: ChainWitness):
    return {"tables": [table_to_obj(t) for t in chain.tables]}


def chain_from_obj(obj) -> ChainWitness:
    tables = _expect(obj, "tables", list, "chain")
    return ChainWitness(tuple(table_from_obj(t) for t in tables))


# --- essential witnesses ------------------------------------------------------

def witness_to_obj(w: EssentialWitness):
    return {"arity": w.arity, "generators": [list(g) for g in w.generators]}


def witness_from_obj(obj, a=None) -> "tuple":
    """Parse {"arity", "generators"}; returns (arity, generators)."""
    arity = _expect(obj, "arity", int, "witness")
    gens = []
    for g in _expect(obj, "generators", list, "witness"):
        g = tuple(_int_list(g, "witness"))
        if len(g) != arity:
            raise ParseError("witness: generator %r does not match arity %d" % (g, arity))
        gens.append(g)
    return arity, tuple(gens)


def dump_witness(w: EssentialWitness) -> str:
    return _dumps(witness_to_obj(w))


# --- formulas ------------------------------------------------------------------

def formula_to_obj(phi: PPFormula):
    return {
        "free": list(phi.free),
        "atoms": [{"rel": at.rel, "scope": list(at.scope)} for at in phi.atoms],
    }


def formula_from_obj(obj) -> PPFormula:
    free = _expect(obj, "free", list, "formula")
    if not all(isinstance(v, str) for v in free):
        raise ParseError("formula: free variables must be strings")
    atoms = []
    for i, at in enumerate(_expect(obj, "atoms", list, "formula")):
        where = "formula atom %d" % i
        rel = _expect(at, "rel", str, where)
        scope = _expect(at, "scope", list, where)
        if not all(isinstance(v, str) for v in scope):
            raise ParseError("%s: scope entries must be strings" % where)
        atoms.append(Atom(rel, tuple(scope)))
    return PPFormula(tuple(free), tuple(atoms))


def dump_formula(phi: PPFormula) -> str:
    return _dumps(formula_to_obj(phi))


def parse_formula(text: str) -> PPFormula:
    return formula_from_obj(_loads(text))


def comb_to_obj(comb: CombFormula):
    return {"sections": [relation_to_obj(s) for s in comb.sections]}


def comb_from_obj(obj) -> CombFormula:
    sections = _expect(obj, "sections", list, "comb")
    rels = tuple(relation_from_obj(s, "comb section %d" % i) for i, s in enumerate(sections))
    return CombFormula(len(rels), rels)


def dump_comb(comb: CombFormula) -> str:
    return _dumps(comb_to_obj(comb))


def parse_comb(text: str) -> CombFormula:
    return comb_from_obj(_loads(text))
