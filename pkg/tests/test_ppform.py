"""pp-formula evaluation, structural analysis, simplification, substitution."""

import pytest
from hypothesis import given, settings, strategies as st

from absorb import (
    InputError,
    PPFormula,
    Relation,
    SimplifyError,
    analyze_formula,
    evaluate_pp,
    is_satisfiable,
    is_simplified,
    pp_substitute,
    relation,
    simplify,
    structure,
)
from absorb.ppform import Atom, Registry, _evaluate_backtrack
from fixtures import B0, LEQ, NEQ, aff2, neq2, ord2


def comp_formula():
    return PPFormula(("x1", "x2"), (Atom("leq", ("x1", "y")), Atom("leq", ("y", "x2"))))


class TestEvaluate:
    def test_composition_of_leq_is_leq(self):
        assert evaluate_pp(comp_formula(), ord2()).tuples == frozenset(LEQ)

    def test_single_atom_verbatim(self):
        phi = PPFormula(("x", "y"), (Atom("leq", ("x", "y")),))
        assert evaluate_pp(phi, ord2()).tuples == frozenset(LEQ)

    def test_conflicting_singletons_empty(self):
        phi = PPFormula(("x",), (Atom("s0", ("x",)), Atom("s1", ("x",))))
        assert evaluate_pp(phi, ord2()).tuples == frozenset()

    def test_free_variable_order_respected(self):
        phi = PPFormula(("x2", "x1"), (Atom("leq", ("x1", "x2")),))
        assert evaluate_pp(phi, ord2()).tuples == frozenset({(0, 0), (1, 0), (1, 1)})

    def test_unknown_relation(self):
        with pytest.raises(InputError):
            evaluate_pp(PPFormula(("x",), (Atom("nope", ("x",)),)), ord2())

    def test_cyclic_formula_uses_backtracking(self):
        # x != y, y != z, z != x over a 2-element domain: unsatisfiable
        phi = PPFormula(
            ("x",),
            (Atom("neq", ("x", "y")), Atom("neq", ("y", "z")), Atom("neq", ("z", "x"))),
        )
        assert not analyze_formula(phi).acyclic
        assert evaluate_pp(phi, neq2()).tuples == frozenset()

    def test_satisfiability_probe(self):
        sat = PPFormula((), (Atom("neq", ("x", "y")),))
        unsat = PPFormula((), (Atom("s0", ("x",)), Atom("s1", ("x",))))
        assert is_satisfiable(sat, neq2())
        assert not is_satisfiable(unsat, ord2())

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_tree_dp_agrees_with_backtracking(self, data):
        # random path-with-teeth formulas stay trees by construction
        a = neq2()
        names = ["v%d" % i for i in range(5)]
        atoms = []
        rels = ["neq", "s0", "s1"]
        for i in range(len(names) - 1):
            if data.draw(st.booleans()):
                atoms.append(Atom("neq", (names[i], names[i + 1])))
        for v in names:
            if data.draw(st.integers(0, 3)) == 0:
                atoms.append(Atom(data.draw(st.sampled_from(rels[1:])), (v,)))
        free = tuple(
            v for v in names if data.draw(st.booleans())
        ) or (names[0],)
        phi = PPFormula(free, tuple(atoms))
        report = analyze_formula(phi)
        if not report.is_tree:
            return
        assert evaluate_pp(phi, a) == _evaluate_backtrack(phi, a, 22)


class TestAnalyze:
    def test_composition_is_tree(self):
        report = analyze_formula(comp_formula())
        assert report.is_tree and report.connected
        assert report.leaves == frozenset({"x1", "x2"})
        assert report.degrees["y"] == 2

    def test_multi_edge_cycle_not_tree(self):
        phi = PPFormula(("x",), (Atom("r", ("x", "y")), Atom("r", ("y", "x"))))
        assert not analyze_formula(phi).is_tree

    def test_repeated_scope_not_simple(self):
        phi = PPFormula(("x",), (Atom("r", ("x", "x")),))
        report = analyze_formula(phi)
        assert not report.simple and not report.is_tree

    def test_neigh(self):
        phi = PPFormula(
            ("z1", "z2"),
            (Atom("r", ("z1", "w1", "w2")), Atom("r", ("z2", "w2", "w3"))),
        )
        assert analyze_formula(phi).neigh("w2") == frozenset({"z1", "w1", "z2", "w3"})

    def test_branch_splits_a_path(self):
        phi = PPFormula(
            ("x1", "x2"),
            (Atom("leq", ("x1", "y")), Atom("leq", ("y", "w")), Atom("leq", ("w", "x2"))),
        )
        report = analyze_formula(phi)
        assert report.branch("y", "x1") == frozenset({"x1", "y"})
        assert report.branch("y", "x2") == frozenset({"y", "w", "x2"})
        with pytest.raises(InputError):
            report.branch("y", "y")

    def test_disconnected_components(self):
        phi = PPFormula(("x", "u"), (Atom("leq", ("x", "y")), Atom("leq", ("u", "v"))))
        report = analyze_formula(phi)
        assert not report.connected and len(report.components) == 2


class TestSimplify:
    def test_already_simplified_unchanged(self):
        phi = comp_formula()
        result = simplify(phi, ord2())
        assert result.formula.atoms == phi.atoms
        assert is_simplified(result.formula, result.structure)

    def test_repeated_scope_rewritten(self):
        phi = PPFormula(("x",), (Atom("leq", ("x", "x")),))
        before = evaluate_pp(phi, ord2())
        result = simplify(phi, ord2())
        assert evaluate_pp(result.formula, result.structure) == before
        assert is_simplified(result.formula, result.structure)

    def test_isolated_bound_variable_dropped(self):
        phi = PPFormula(("x", "y"), (Atom("leq", ("x", "y")),), extra_vars=("junk",))
        result = simplify(phi, ord2())
        assert "junk" not in result.formula.variables

    def test_bound_only_component_dropped_when_satisfiable(self):
        phi = PPFormula(
            ("x", "y"), (Atom("leq", ("x", "y")), Atom("leq", ("u", "v")))
        )
        result = simplify(phi, ord2())
        assert set(result.formula.variables) == {"x", "y"}

    def test_unsatisfiable_component_rejected(self):
        phi = PPFormula(
            ("x", "y"),
            (Atom("leq", ("x", "y")), Atom("s0", ("u",)), Atom("s1", ("u",))),
        )
        with pytest.raises(SimplifyError):
            simplify(phi, ord2())

    def test_split_free_components_rejected(self):
        phi = PPFormula(("x", "u"), (Atom("leq", ("x", "y")), Atom("leq", ("u", "v"))))
        with pytest.raises(SimplifyError):
            simplify(phi, ord2())

    def test_unary_atom_folded(self):
        phi = PPFormula(("x", "y"), (Atom("leq", ("x", "y")), Atom("s1", ("y",))))
        before = evaluate_pp(phi, ord2())
        result = simplify(phi, ord2())
        assert evaluate_pp(result.formula, result.structure) == before
        assert all(len(at.scope) > 1 for at in result.formula.atoms)

    def test_free_non_leaf_split_with_equality(self):
        phi = PPFormula(("x",), (Atom("leq", ("x", "y")), Atom("leq", ("y", "x"))))
        before = evaluate_pp(phi, ord2())
        result = simplify(phi, ord2())
        assert evaluate_pp(result.formula, result.structure) == before
        report = analyze_formula(result.formula)
        assert report.degrees["x"] <= 1

    def test_high_degree_bound_variable_chained(self):
        phi = PPFormula(
            ("a", "b", "c", "d"),
            (
                Atom("leq", ("a", "m")),
                Atom("leq", ("b", "m")),
                Atom("leq", ("c", "m")),
                Atom("leq", ("m", "d")),
            ),
        )
        before = evaluate_pp(phi, ord2())
        result = simplify(phi, ord2())
        assert evaluate_pp(result.formula, result.structure) == before
        assert is_simplified(result.formula, result.structure)


class TestSubstitute:
    def test_replace_with_singleton_pair(self):
        phi = comp_formula()
        new, struct = pp_substitute(phi, {0: relation(2, [(0, 0)]), 1: relation(2, [(0, 0)])}, ord2())
        assert evaluate_pp(new, struct).tuples == frozenset({(0, 0)})

    def test_identity_replacement(self):
        phi = comp_formula()
        new, struct = pp_substitute(phi, {0: relation(2, LEQ)}, ord2())
        assert evaluate_pp(new, struct) == evaluate_pp(phi, ord2())

    def test_empty_replacement(self):
        phi = comp_formula()
        new, struct = pp_substitute(phi, {1: Relation(2, frozenset())}, ord2())
        assert evaluate_pp(new, struct).tuples == frozenset()

    def test_containment_under_subrelation(self):
        # shrinking an atom's relation can only shrink the evaluation
        phi = comp_formula()
        new, struct = pp_substitute(phi, {0: relation(2, [(0, 1), (1, 1)])}, ord2())
        assert evaluate_pp(new, struct).tuples <= evaluate_pp(phi, ord2()).tuples

    def test_arity_mismatch(self):
        with pytest.raises(InputError):
            pp_substitute(comp_formula(), {0: relation(1, [(0,)])}, ord2())


class TestRegistry:
    def test_existing_relation_reused(self):
        reg = Registry(ord2())
        assert reg.ensure(relation(2, LEQ), "again") == "leq"

    def test_diagonal_gets_eq_name(self):
        reg = Registry(ord2())
        name = reg.ensure(relation(2, [(0, 0), (1, 1)]), "equality")
        assert name == "_eq"

    def test_fresh_names_do_not_collide(self):
        a = structure(2, {"_d0": [(0, 1)]})
        reg = Registry(a)
        name = reg.ensure(relation(2, NEQ), "other")
        assert name != "_d0" and reg.structure().has(name)
