"""Concrete syntax: parsing, precedence, sort inference, round trips."""

import random

import pytest
from hypothesis import given, strategies as st

from fusionkit.logic import (
    And,
    Eq,
    Exists,
    Implies,
    Not,
    Or,
    Rel,
    Signature,
    Var,
    free_vars,
    print_formula,
)
from fusionkit.parser import ParseError, parse_formula
from fusionkit.semantics import FiniteStructure, evaluate
from helpers import random_formula

SIG1 = Signature(("V",), {"R": ("V", "V")}, {"f": (("V",), "V")})
SIG2 = Signature(("V", "W"), {"R": ("V", "V"), "P": ("W",)}, {})
x, y = Var("x", "V"), Var("y", "V")


def test_precedence_and_associativity():
    phi = parse_formula("~R(x,y) & x=y | R(y,x) -> R(x,x)", SIG1)
    assert phi == Implies(
        Or(And(Not(Rel("R", (x, y))), Eq(x, y)), Rel("R", (y, x))),
        Rel("R", (x, x)),
    )
    # -> is right associative
    chain = parse_formula("x=x -> x=y -> y=y", SIG1)
    assert isinstance(chain, Implies) and isinstance(chain.rhs, Implies)


def test_quantifier_body_is_unary():
    phi = parse_formula("exists u. R(u,u) & x=y", SIG1)
    assert phi == And(Exists(Var("u", "V"), Rel("R", (Var("u", "V"), Var("u", "V")))), Eq(x, y))
    wide = parse_formula("exists u. (R(u,u) & x=y)", SIG1)
    assert isinstance(wide, Exists)


def test_sort_inference_and_annotations():
    phi = parse_formula("P(w) & R(x,y)", SIG2)
    assert free_vars(phi) == (Var("w", "W"), Var("x", "V"), Var("y", "V"))
    # one annotation propagates through the equality link
    anno = parse_formula("u:W = v", SIG2)
    assert free_vars(anno) == (Var("u", "W"), Var("v", "W"))
    with pytest.raises(ParseError):
        parse_formula("u = v", SIG2)  # two sorts, nothing forces either


def test_parse_error_position_is_one_based():
    with pytest.raises(ParseError) as e:
        parse_formula("R(x", SIG1)
    assert e.value.position == 4
    with pytest.raises(ParseError) as e:
        parse_formula("x = ", SIG1)
    assert e.value.position >= 4


def test_function_terms_and_boolean_literals():
    phi = parse_formula("f(f(x)) = y | true", SIG1)
    assert print_formula(phi) == "f(f(x))=y | true"
    assert print_formula(parse_formula("false -> true", SIG1)) == "false -> true"


def test_counting_quantifier_sugar():
    S = FiniteStructure(
        "M",
        SIG1,
        {"V": ("a", "b", "c")},
        {"R": frozenset({("a", "a"), ("a", "b")})},
        {"f": {("a",): "a", ("b",): "a", ("c",): "c"}},
    )
    phi = parse_formula("exists<=1 u. R(x,u)", SIG1)
    assert free_vars(phi) == (x,)
    # a has two R-successors, b and c have none
    assert not evaluate(S, phi, {x: "a"})
    assert evaluate(S, phi, {x: "b"})
    assert evaluate(S, phi, {x: "c"})


@given(st.integers(0, 10**6))
def test_print_parse_round_trip(seed):
    rng = random.Random(seed)
    xs = (x, y)
    phi = random_formula(rng, SIG1, xs, depth=3, qdepth=2)
    assert parse_formula(print_formula(phi), SIG1) == phi
