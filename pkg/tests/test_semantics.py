"""Structures, evaluation, definable sets, closures, and diagrams."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusionkit.logic import (
    And,
    App,
    Eq,
    Exists,
    Forall,
    Not,
    Rel,
    Signature,
    SignatureError,
    Var,
    free_vars,
    validate_family,
)
from fusionkit.semantics import (
    DefinabilityClass,
    EvaluationError,
    FiniteStructure,
    atomic_type,
    automorphisms,
    ccl,
    definable_atoms,
    diagram_constants,
    diagram_expansion,
    ef_color,
    enumerate_definable,
    enumerate_structures,
    evaluate,
    expand_with_constants,
    extension,
    flat_diagram,
    from_extension,
    is_automorphism,
    is_morphism,
    orbit_closure,
    reduct,
)

from helpers import assignments, cycle_graph, pred_host, pure_set, random_structure

GRAPH = Signature(("V",), {"E": ("V", "V")}, {})
x, y = Var("x", "S"), Var("y", "S")


def directed_path(n: int) -> FiniteStructure:
    elems = tuple(f"v{i}" for i in range(n))
    return FiniteStructure(
        f"P{n}", GRAPH, {"V": elems},
        {"E": frozenset(zip(elems, elems[1:]))}, {},
    )


# ---------------------------------------------------------------------------
# Structure validation


def test_structure_requires_every_sort_and_symbol():
    sig = Signature(("S", "T"), {"P": ("S",)}, {})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a",)}, {"P": frozenset()}, {})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a",), "T": ()}, {}, {})


def test_structure_rejects_duplicates_and_bad_tuples():
    sig = Signature(("S",), {"P": ("S",)}, {})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a", "a")}, {"P": frozenset()}, {})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a",)}, {"P": frozenset({("z",)})}, {})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a",)}, {"P": frozenset({("a", "a")})}, {})


def test_structure_functions_must_be_total_and_well_typed():
    sig = Signature(("S",), {}, {"f": (("S",), "S")})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a", "b")}, {}, {"f": {("a",): "a"}})
    with pytest.raises(SignatureError):
        FiniteStructure("M", sig, {"S": ("a",)}, {}, {"f": {("a",): "z"}})
    # empty domain is fine, a constant into an empty sort is not
    FiniteStructure("M", sig, {"S": ()}, {}, {"f": {}})
    csig = Signature(("S",), {}, {"c": ((), "S")})
    with pytest.raises(SignatureError):
        FiniteStructure("M", csig, {"S": ()}, {}, {"c": {}})


def test_elements_and_tuples_iteration():
    M = pred_host(2, {"a"})
    assert list(M.elements()) == [("S", "a"), ("S", "b")]
    assert sorted(M.tuples(("S", "S"))) == [
        ("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")
    ]
    assert list(M.tuples(())) == [()]


def test_reduct_and_expand_with_constants():
    M = pred_host(2, {"a"})
    bare = reduct(M, Signature(("S",), {}, {}))
    assert bare.universes == M.universes and bare.relations == {}
    with pytest.raises(SignatureError):
        reduct(M, GRAPH)
    N = expand_with_constants(M, {"c": ("S", "b")})
    assert N.functions["c"] == {(): "b"}
    assert evaluate(N, Eq(Var("u", "S"), App("c")), {Var("u", "S"): "b"})
    with pytest.raises(SignatureError):
        expand_with_constants(M, {"P": ("S", "a")})
    with pytest.raises(SignatureError):
        expand_with_constants(M, {"d": ("S", "z")})


# ---------------------------------------------------------------------------
# Evaluation


def test_evaluate_matches_hand_truth_table():
    M = pred_host(3, {"a", "b"})
    p = Rel("P", (x,))
    assert [evaluate(M, p, {x: e}) for e in "abc"] == [True, True, False]
    assert evaluate(M, Exists(x, p), {})
    assert not evaluate(M, Forall(x, p), {})
    assert evaluate(M, Forall(x, Exists(y, Not(Eq(x, y)))), {})
    assert evaluate(M, And(p, Not(Rel("P", (y,)))), {x: "a", y: "c"})


def test_evaluate_function_terms_and_errors():
    sig = Signature(("S",), {}, {"f": (("S",), "S")})
    M = FiniteStructure("M", sig, {"S": ("a", "b")}, {}, {"f": {("a",): "b", ("b",): "b"}})
    u = Var("u", "S")
    assert evaluate(M, Eq(App("f", (App("f", (u,)),)), App("f", (u,))), {u: "a"})
    with pytest.raises(EvaluationError):
        evaluate(M, Eq(u, u), {})
    with pytest.raises(EvaluationError):
        evaluate(M, Rel("Q", (u,)), {u: "a"})


def test_quantifier_over_empty_sort():
    sig = Signature(("S", "T"), {}, {})
    M = FiniteStructure("M", sig, {"S": ("a",), "T": ()}, {}, {})
    t = Var("t", "T")
    assert evaluate(M, Forall(t, Eq(t, t)), {})
    assert not evaluate(M, Exists(t, Eq(t, t)), {})


# ---------------------------------------------------------------------------
# Definable sets


def test_extension_builder_and_verify():
    M = pred_host(3, {"a"})
    D = extension(M, Rel("P", (x,)))
    assert D.x == (x,) and D.extension == frozenset({("a",)})
    assert D.verify()
    assert D.describe() == "P(x)"
    # params split off the remaining free variables
    E = extension(M, Not(Eq(x, y)), params={y: "a"})
    assert E.extension == frozenset({("b",), ("c",)})
    assert "y=a" in E.describe()
    with pytest.raises(EvaluationError):
        extension(M, Eq(x, y), params={}, x=(x,))
    with pytest.raises(EvaluationError):
        extension(M, Eq(x, y), params={y: "z"})


def test_from_extension_verifies_by_construction():
    M = pure_set(3)
    D = from_extension(M, ("S", "S"), [("a", "b"), ("b", "a")])
    assert D.verify()
    assert D.extension == frozenset({("a", "b"), ("b", "a")})
    E = from_extension(M, ("S",), [])
    assert E.verify() and E.extension == frozenset()
    with pytest.raises(EvaluationError):
        from_extension(M, ("S",), [("a", "b")])


# ---------------------------------------------------------------------------
# Atoms and class enumeration


def test_atomic_type_and_ef_color_distinguish_tuples():
    M = pred_host(3, {"a"})
    t = lambda e: atomic_type(M, ("S",), (e,))
    assert t("b") == t("c") != t("a")
    # a directed path: rank 0 sees nothing, rank 1 separates all positions
    P = directed_path(3)
    c0 = [ef_color(P, ("V",), (v,), 0) for v in ("v0", "v1", "v2")]
    assert len(set(c0)) == 1
    c1 = [ef_color(P, ("V",), (v,), 1) for v in ("v0", "v1", "v2")]
    assert len(set(c1)) == 3


def test_definable_atoms_partition_the_tuple_space():
    M = pred_host(3, {"a"})
    blocks = definable_atoms(M, DefinabilityClass(M.signature), ("S",))
    assert sorted(map(sorted, blocks)) == [[("a",)], [("b",), ("c",)]]
    # with all parameters every element is pinned down
    blocks = definable_atoms(M, DefinabilityClass(M.signature, params="all"), ("S",))
    assert sorted(map(sorted, blocks)) == [[("a",)], [("b",)], [("c",)]]
    pairs = definable_atoms(M, DefinabilityClass(M.signature), ("S", "S"))
    flat = [t for b in pairs for t in b]
    assert sorted(flat) == sorted(M.tuples(("S", "S")))
    assert sum(1 for _ in pairs) == len({frozenset(b) for b in pairs})


def test_enumerate_definable_uncapped_is_the_block_union_family():
    M = pure_set(3)
    fam = list(enumerate_definable(M, DefinabilityClass(M.signature, params="all"), ("S",)))
    exts = {D.extension for D in fam}
    assert len(fam) == 8 and len(exts) == 8
    assert exts == {
        frozenset((e,) for e in sub)
        for k in range(4)
        for sub in itertools.combinations("abc", k)
    }
    assert all(D.verify() for D in fam)

    N = pred_host(3, {"a"})
    fam = list(enumerate_definable(N, DefinabilityClass(N.signature), ("S",)))
    assert {D.extension for D in fam} == {
        frozenset(), frozenset({("a",)}), frozenset({("b",), ("c",)}),
        frozenset({("a",), ("b",), ("c",)}),
    }


def test_enumerate_definable_capped_respects_the_cap():
    N = pred_host(3, {"a"})
    capped = list(enumerate_definable(N, DefinabilityClass(N.signature, size_cap=2), ("S",)))
    full = {D.extension for D in enumerate_definable(N, DefinabilityClass(N.signature), ("S",))}
    assert {D.extension for D in capped} <= full
    assert all(D.verify() for D in capped)
    # size two admits P(x) but not its negation
    assert frozenset({("a",)}) in {D.extension for D in capped}
    assert frozenset({("b",), ("c",)}) not in {D.extension for D in capped}


def test_enumerate_structures_counts():
    sig = Signature(("V",), {"P": ("V",)}, {})
    all_structs = list(enumerate_structures(sig, 2))
    assert len(all_structs) == 1 + 2 + 4
    assert len({S.name for S in all_structs}) == len(all_structs)
    assert all_structs[0].universes == {"V": ()}
    assert len(list(enumerate_structures(GRAPH, 2))) == 1 + 2 + 16
    fsig = Signature(("V",), {}, {"f": (("V",), "V")})
    assert len(list(enumerate_structures(fsig, 2))) == 1 + 1 + 4
    # a constant cannot live over an empty universe, so size 0 is skipped
    csig = Signature(("V",), {}, {"c": ((), "V")})
    assert len(list(enumerate_structures(csig, 1))) == 1


# ---------------------------------------------------------------------------
# Automorphisms and closures


def test_automorphism_counts():
    assert len(automorphisms(pure_set(3))) == 6
    assert len(automorphisms(pure_set(4))) == 24
    assert len(automorphisms(cycle_graph(4))) == 8
    assert len(automorphisms(cycle_graph(3))) == 6
    assert len(automorphisms(pred_host(3, {"a"}))) == 2
    assert len(automorphisms(pure_set(3), fix=[("S", "a")])) == 2
    assert len(automorphisms(directed_path(3))) == 1


def test_is_automorphism_rejects_non_isomorphisms():
    M = pred_host(2, {"a"})
    swap = {"S": {"a": "b", "b": "a"}}
    assert not is_automorphism(M, swap)
    assert is_automorphism(M, {"S": {"a": "a", "b": "b"}})
    assert not is_automorphism(M, {"S": {"a": "a", "b": "a"}})
    assert all(is_automorphism(cycle_graph(4), g) for g in automorphisms(cycle_graph(4)))


def test_orbit_closure_dcl_and_acl():
    M = pred_host(3, {"a"})
    assert orbit_closure(M, []) == frozenset({("S", "a")})
    assert orbit_closure(M, [], "acl", 2) == frozenset(M.elements())
    assert orbit_closure(M, [], "acl", 1) == frozenset({("S", "a")})
    # fixing one point of a rigid orbit pins everything
    C = FiniteStructure(
        "C", GRAPH, {"V": ("p", "q", "r", "s")},
        {"E": frozenset([("p", "q"), ("q", "r"), ("r", "s"), ("s", "p")])}, {},
    )
    assert orbit_closure(C, []) == frozenset()
    assert orbit_closure(C, [("V", "p")]) == frozenset(C.elements())
    with pytest.raises(ValueError):
        orbit_closure(M, [], "acl")
    with pytest.raises(ValueError):
        orbit_closure(M, [], "cl")
    with pytest.raises(EvaluationError):
        orbit_closure(M, [("S", "z")])


def test_ccl_alternates_member_closures():
    sig = Signature(("S",), {"P": ("S",), "Q": ("S",)}, {})
    fam = validate_family([("L1", sig.restrict(["P"])), ("L2", sig.restrict(["Q"]))])
    M = FiniteStructure(
        "M", sig, {"S": ("a", "b", "c")},
        {"P": frozenset({("a",)}), "Q": frozenset({("b",)})}, {},
    )
    assert orbit_closure(reduct(M, fam["L1"]), []) == frozenset({("S", "a")})
    assert ccl(M, fam, []) == frozenset(M.elements())


# ---------------------------------------------------------------------------
# Diagrams


def test_diagram_constants_reuse_and_rename():
    M = pred_host(2, {"a"})
    assert diagram_constants(M) == {"a": ("S", "a"), "b": ("S", "b")}
    # clash with a signature symbol forces the positional name
    sig = Signature(("S",), {"P": ("S",)}, {})
    N = FiniteStructure("N", sig, {"S": ("P", "1")}, {"P": frozenset()}, {})
    assert diagram_constants(N) == {"e_S_0": ("S", "P"), "e_S_1": ("S", "1")}
    # the same id in two sorts is ambiguous, so neither reuses it
    two = Signature(("S", "T"), {}, {})
    B = FiniteStructure("B", two, {"S": ("a",), "T": ("a",)}, {}, {})
    assert diagram_constants(B) == {"e_S_0": ("S", "a"), "e_T_0": ("T", "a")}


def test_flat_diagram_sentences_hold_in_the_expansion():
    sig = Signature(("S",), {"P": ("S",)}, {"f": (("S",), "S")})
    M = FiniteStructure(
        "M", sig, {"S": ("a", "b")},
        {"P": frozenset({("a",)})}, {"f": {("a",): "b", ("b",): "b"}},
    )
    E = diagram_expansion(M)
    assert E.universes == M.universes
    phis = flat_diagram(M)
    # 4 equalities, 2 membership facts, 2*2 function value facts
    assert len(phis) == 4 + 2 + 4
    assert all(not free_vars(phi) for phi in phis)
    assert all(evaluate(E, phi, {}) for phi in phis)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_flat_diagram_holds_on_random_structures(seed):
    import random

    rng = random.Random(seed)
    sig = Signature(("S",), {"R": ("S", "S")}, {"f": (("S",), "S")})
    S = random_structure(rng, sig, 3, min_size=1)
    E = diagram_expansion(S)
    assert all(evaluate(E, phi, {}) for phi in flat_diagram(S))


# ---------------------------------------------------------------------------
# Morphisms


def test_embedding_checks_atomic_facts_on_the_domain():
    M = pred_host(3, {"a"})
    assert is_morphism({"S": {"b": "c"}}, M, M)
    assert not is_morphism({"S": {"a": "b"}}, M, M)
    assert not is_morphism({"S": {"a": "a", "b": "a"}}, M, M)
    assert is_morphism({}, M, M)
    C = cycle_graph(4)
    assert is_morphism({"V": {"v0": "v1", "v1": "v2"}}, C, C)
    # v0-v1 is an edge but its image v1-v3 is a diagonal
    assert not is_morphism({"V": {"v0": "v1", "v1": "v3"}}, C, C)


def test_partial_elementary_uses_colors():
    M = pred_host(3, {"a"})
    assert is_morphism({"S": {"b": "c"}}, M, M, "partial-elementary", qrank=1)
    assert not is_morphism({"S": {"a": "b"}}, M, M, "partial-elementary", qrank=0)
    P = directed_path(3)
    # endpoints agree atomically but not once one quantifier can probe
    assert is_morphism({"V": {"v0": "v2"}}, P, P, "partial-elementary", qrank=0)
    assert not is_morphism({"V": {"v0": "v2"}}, P, P, "partial-elementary", qrank=1)


def test_morphism_validation_errors():
    M, N = pred_host(2, {"a"}), pure_set(2)
    with pytest.raises(SignatureError):
        is_morphism({}, M, N)
    with pytest.raises(ValueError):
        is_morphism({}, M, M, mode="isomorphism")
    with pytest.raises(EvaluationError):
        is_morphism({"S": {"z": "a"}}, M, M)
    with pytest.raises(EvaluationError):
        is_morphism({"S": {"a": "z"}}, M, M)


def test_morphism_orbit_agreement():
    # images under an automorphism are partial-elementary at every rank
    C = cycle_graph(4)
    for g in automorphisms(C):
        sub = {"V": {v: g["V"][v] for v in ("v0", "v1")}}
        assert is_morphism(sub, C, C, "partial-elementary", qrank=2)
