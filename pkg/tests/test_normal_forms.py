"""Flattening, bounded forms, DNF, relationalization, Morleyization.

Rewrites are checked against an evaluation oracle: the output must agree
with the input on every assignment over small concrete structures.
"""

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from fusionkit.logic import (
    And,
    Bot,
    Eq,
    Not,
    Or,
    Rel,
    Signature,
    Theory,
    Top,
    Var,
    disj,
    forall_many,
    free_vars,
    is_flat,
    print_formula,
    validate_family,
)
from fusionkit.normal_forms import (
    BoundedFormula,
    EFlatFormula,
    NormalFormError,
    be_conjoin,
    eflat_conjoin,
    eflat_to_bounded,
    literal_to_eflat,
    morleyize,
    normalize_formula,
    qf_to_bounded,
    qf_to_dnf,
    qf_to_eflat_disjunction,
    relationalize,
    split_flat,
    verify_bound,
    verify_functional,
)
from fusionkit.semantics import evaluate
from helpers import (
    assignments,
    equivalent_on,
    pure_set,
    random_qf_formula,
    random_structure,
    witness_counts,
)

SIG = Signature(("V",), {"R": ("V", "V")}, {"f": (("V",), "V"), "g": (("V", "V"), "V")})
x, y, z = Var("x", "V"), Var("y", "V"), Var("z", "V")


def eflat_equiv(S, phi, efs, xs):
    """Original formula versus the disjunction of E-flat disjuncts."""
    translated = disj([ef.to_formula() for ef in efs])
    return equivalent_on(S, phi, translated, xs)


def some_structures(seed, count=3, max_size=3):
    rng = random.Random(seed)
    return [random_structure(rng, SIG, max_size, min_size=1) for _ in range(count)]


# ---------------------------------------------------------------------------
# Literal flattening


def test_literal_to_eflat_unnests_terms():
    ef = literal_to_eflat(Rel("R", (Var("x", "V"), Var("y", "V"))), SIG)
    assert ef.witnesses == ()
    nested = Eq(App_g(App_f(x), y), z)
    ef = literal_to_eflat(nested, SIG)
    assert is_flat(ef.matrix)
    for S in some_structures(0):
        assert equivalent_on(S, nested, ef.to_formula(), (x, y, z))


def App_f(t):
    from fusionkit.logic import App

    return App("f", (t,))


def App_g(t, u):
    from fusionkit.logic import App

    return App("g", (t, u))


def test_literal_to_eflat_rejects_compounds():
    with pytest.raises(NormalFormError):
        literal_to_eflat(And(Top(), Top()), SIG)


def test_eflat_conjoin_renames_witness_collisions():
    a = literal_to_eflat(Eq(App_f(x), y), SIG)
    b = literal_to_eflat(Eq(App_f(y), x), SIG)
    joined = eflat_conjoin([a, b])
    assert len(set(joined.witnesses)) == len(joined.witnesses)
    for S in some_structures(1):
        assert equivalent_on(
            S, And(Eq(App_f(x), y), Eq(App_f(y), x)), joined.to_formula(), (x, y)
        )


# ---------------------------------------------------------------------------
# Quantifier-free to E-flat disjunction


def test_top_bottom_edge_cases():
    assert qf_to_eflat_disjunction(Bot(), SIG) == []
    tops = qf_to_eflat_disjunction(Top(), SIG)
    assert len(tops) == 1 and tops[0].witnesses == ()


def test_disjunct_cap_refuses_rather_than_truncates():
    phi = Or(Or(Eq(x, x), Eq(y, y)), Eq(z, z))
    with pytest.raises(NormalFormError):
        qf_to_eflat_disjunction(phi, SIG, max_disjuncts=2)


def test_quantified_input_rejected():
    from fusionkit.logic import Exists

    with pytest.raises(NormalFormError):
        qf_to_eflat_disjunction(Exists(x, Eq(x, x)), SIG)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_eflat_disjunction_is_evaluation_equivalent(seed):
    rng = random.Random(seed)
    xs = (x, y)
    phi = random_qf_formula(rng, SIG, xs, depth=3)
    efs = qf_to_eflat_disjunction(phi, SIG)
    for S in some_structures(seed, count=2):
        assert eflat_equiv(S, phi, efs, xs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_eflat_witnesses_are_unique(seed):
    rng = random.Random(seed)
    xs = (x, y)
    phi = random_qf_formula(rng, SIG, xs, depth=3)
    for ef in qf_to_eflat_disjunction(phi, SIG):
        for S in some_structures(seed, count=2):
            assert max(witness_counts(S, ef.x, ef.witnesses, ef.matrix), default=0) <= 1
        assert verify_functional(ef, some_structures(seed + 1, count=2))


def test_verify_functional_flags_hand_built_junk():
    # R(x, w) has as many witnesses as R-successors of x
    ef = EFlatFormula((x,), (Var("w", "V"),), Rel("R", (x, Var("w", "V"))))
    from fusionkit.semantics import FiniteStructure

    S = FiniteStructure(
        "M",
        SIG,
        {"V": ("a", "b")},
        {"R": frozenset({("a", "a"), ("a", "b")})},
        {"f": {("a",): "a", ("b",): "b"}, "g": {t: "a" for t in itertools.product("ab", repeat=2)}},
    )
    assert not verify_functional(ef, [S])


# ---------------------------------------------------------------------------
# Bounded-existential forms


def test_bounds_multiply_under_conjunction():
    ef = literal_to_eflat(Eq(App_f(x), y), SIG)
    parts = [eflat_to_bounded(ef, "test"), qf_to_bounded(Eq(x, y), "test")]
    joined = be_conjoin(parts)
    assert joined.bound == 1
    three = be_conjoin([BoundedFormula(ef.to_formula(), 2, "test")] * 2)
    assert three.bound == 4
    with pytest.raises(NormalFormError):
        be_conjoin([qf_to_bounded(Top(), "a"), qf_to_bounded(Top(), "b")])


def test_verify_bound_on_structures():
    ef = literal_to_eflat(Eq(App_f(x), y), SIG)
    bf = eflat_to_bounded(ef, "test")
    assert verify_bound(bf, some_structures(2))


# ---------------------------------------------------------------------------
# Flat splitting across a family


def test_split_flat_buckets_by_owner():
    a = Signature(("V",), {"P": ("V",)}, {})
    b = Signature(("V",), {"Q": ("V",)}, {})
    fam = validate_family([("A", a), ("B", b)])
    phi = And(And(Rel("P", (x,)), Not(Rel("Q", (x,)))), Eq(x, y))
    parts = split_flat(phi, fam)
    assert parts["A"] == Rel("P", (x,))
    assert parts["B"] == Not(Rel("Q", (x,)))
    assert parts[None] == Eq(x, y)
    dup = split_flat(phi, fam, duplicate_to=["B"])
    assert print_formula(dup["B"]) == "~Q(x) & x=y"
    with pytest.raises(NormalFormError):
        split_flat(Or(Top(), Top()), fam)


# ---------------------------------------------------------------------------
# Canonical form and DNF


def test_normalize_formula_sorts_chains_and_is_idempotent():
    phi = Or(And(Eq(y, y), Eq(x, x)), Bot())
    out = normalize_formula(phi)
    assert out == normalize_formula(out)
    assert print_formula(out) == "false | x=x & y=y"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_qf_to_dnf_equivalent_and_shaped(seed):
    rng = random.Random(seed)
    xs = (x, y)
    phi = random_qf_formula(rng, SIG, xs, depth=3)
    out = qf_to_dnf(phi)
    for S in some_structures(seed, count=2):
        assert equivalent_on(S, phi, out, xs)

    def literals(f):
        while isinstance(f, Or):
            yield from literals(f.lhs)
            f = f.rhs
        stack = [f]
        while stack:
            g = stack.pop()
            if isinstance(g, And):
                stack.extend((g.lhs, g.rhs))
            else:
                yield g

    for lit in literals(out):
        inner = lit.sub if isinstance(lit, Not) else lit
        assert not isinstance(inner, (And, Or, Not)), print_formula(out)


# ---------------------------------------------------------------------------
# Relationalization


def test_relationalize_theory_and_transport():
    T = Theory("T", SIG, (forall_many((x,), Eq(App_f(x), App_f(x))),))
    T2, tr = relationalize(T)
    assert not T2.signature.functions
    assert set(tr.graph_names.values()) <= set(T2.signature.relations)
    rng = random.Random(7)
    for _ in range(4):
        S = random_structure(rng, SIG, 3, min_size=1)
        G = tr.structure(S)
        # totality and uniqueness axioms hold in any transported structure
        for ax in T2.axioms:
            assert evaluate(G, ax)
        phi = random_qf_formula(rng, SIG, (x, y), depth=3)
        for a in assignments(S, (x, y)):
            assert evaluate(S, phi, a) == evaluate(G, tr(phi), a)


# ---------------------------------------------------------------------------
# Morleyization


def test_morleyize_adds_definitions_with_sound_axioms():
    a = Signature(("V",), {"P": ("V",)}, {})
    b = Signature(("V",), {"Q": ("V",)}, {})
    fam = validate_family([("A", a), ("B", b)])
    exp = morleyize(fam, {}, qrank=0, max_arity=1, size_cap=3)
    assert exp.expanded_family.intersection.symbols() == fam.intersection.symbols()
    assert exp.definitions["A"] and exp.definitions["B"]
    union_sig = exp.family.union
    rng = random.Random(3)
    for _ in range(3):
        S = random_structure(rng, union_sig, 3)
        E = exp.expand_structure(S)
        for label in fam.labels:
            for ax in exp.axioms[label]:
                assert evaluate(E, ax)
