"""Signature, structure, and rank-table file formats."""

import pytest

from fusionkit.files import (
    FileFormatError,
    parse_rank_table,
    parse_signature_file,
    parse_structure_file,
    render_signature_file,
    render_structure_file,
)

SIG_TEXT = """\
# a two-sorted example
sort V
sort W
rel R : V V
fun f : V -> W
fun c : -> W
lang L1 uses R f
lang L2 uses c
"""

STRUCT_TEXT = """\
structure M
sort V = {a, b}
sort W = {}
rel R : V V = {(a,b), (b,a)}
"""


def test_signature_round_trip():
    sf = parse_signature_file(SIG_TEXT)
    assert sf.signature.sorts == ("V", "W")
    assert sf.signature.functions["c"] == ((), "W")
    assert sf.family is not None
    assert set(sf.family.intersection.symbols()) == set()
    again = parse_signature_file(render_signature_file(sf.signature, sf.family))
    assert again.signature == sf.signature
    assert again.family.labels == sf.family.labels
    assert all(again.family[l] == sf.family[l] for l in sf.family.labels)


def test_signature_errors_carry_line_numbers():
    with pytest.raises(FileFormatError) as e:
        parse_signature_file("sort V\nrel R V V\n")
    assert e.value.line == 2
    with pytest.raises(FileFormatError):
        parse_signature_file("sort V\nlang L uses Missing\n")


def test_structure_round_trip_and_empty_sort():
    S = parse_structure_file(STRUCT_TEXT)
    assert S.universes["W"] == ()
    assert S.relations["R"] == frozenset({("a", "b"), ("b", "a")})
    again = parse_structure_file(render_structure_file(S))
    assert again == S


def test_structure_against_given_signature_fills_missing_symbols():
    sf = parse_signature_file("sort V\nrel P : V\nrel Q : V\n")
    S = parse_structure_file("structure M\nsort V = {a}\nrel P : V = {a}\n", sf.signature)
    assert S.relations["Q"] == frozenset()
    with pytest.raises(FileFormatError):
        parse_structure_file("structure M\nsort U = {a}\n", sf.signature)
    with pytest.raises(FileFormatError):
        parse_structure_file(
            "structure M\nsort V = {a}\nrel P : V V = {}\n", sf.signature
        )


def test_unary_tuples_bare_or_parenthesized():
    a = parse_structure_file("structure M\nsort V = {a, b}\nrel P : V = {a, b}\n")
    b = parse_structure_file("structure M\nsort V = {a, b}\nrel P : V = {(a), (b)}\n")
    assert a == b


def test_function_map_and_constant():
    S = parse_structure_file(
        "structure M\nsort V = {a, b}\n"
        "fun f : V -> V = {a->b, b->a}\nfun c : -> V = {-> a}\n"
    )
    assert S.functions["f"][("b",)] == "a"
    assert S.functions["c"][()] == "a"
    again = parse_structure_file(render_structure_file(S))
    assert again == S


def test_total_function_enforced_on_load():
    with pytest.raises(FileFormatError):
        parse_structure_file("structure M\nsort V = {a, b}\nfun f : V -> V = {a->b}\n")


def test_rank_table_values_and_conflicts():
    table = parse_rank_table("dim {} = -inf\ndim {(a)} = 0\ndim {(a), (b)} = 2\n")
    assert table[frozenset()] == float("-inf")
    assert table[frozenset({("a",)})] == 0
    assert table[frozenset({("a",), ("b",)})] == 2
    with pytest.raises(FileFormatError):
        parse_rank_table("dim {(a)} = 0\ndim {(a)} = 1\n")
    with pytest.raises(FileFormatError):
        parse_rank_table("dim {(a)} = minus\n")
