"""Graph-pair, automorphism, and Skolem encoders plus the generic predicate check."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from fusionkit.logic import Eq, Rel, Signature, Top, Var
from fusionkit.semantics import (
    DefinabilityClass,
    FiniteStructure,
    automorphisms,
    enumerate_definable,
)
from fusionkit.encodings import (
    EncodingError,
    aut_decode,
    aut_encode,
    generic_predicate_check,
    is_large,
    rg_decode,
    rg_encode,
    skolem_decode,
    skolem_encode,
)

GRAPH_SIG = Signature(("V",), {"E": ("V", "V")}, {})
SET_SIG = Signature(("M",), {}, {})
XM, YM = Var("x", "M"), Var("y", "M")


def graph(name, vertices, edges):
    sym = frozenset((a, b) for a, b in edges) | frozenset((b, a) for a, b in edges)
    return FiniteStructure(name, GRAPH_SIG, {"V": tuple(vertices)}, {"E": sym}, {})


def pure(name, elems):
    return FiniteStructure(name, SET_SIG, {"M": tuple(elems)}, {}, {})


def rebuild(P, relations=None, functions=None, universes=None):
    return FiniteStructure(
        "tampered",
        P.signature,
        universes if universes is not None else P.universes,
        relations if relations is not None else P.relations,
        functions if functions is not None else P.functions,
    )


# ---------------------------------------------------------------------------
# Random-graph encoding


def test_rg_encode_single_edge():
    enc = rg_encode(graph("single", ["a", "b"], [("a", "b")]))
    assert enc.target.universes["S_V"] == ("a__b",)
    assert enc.target.relations["E_V"] == frozenset({("a__b",)})
    assert enc.target.relations["pi"] == frozenset({("a", "b", "a__b"), ("b", "a", "a__b")})
    assert enc.check_maps()


def test_rg_encode_edgeless_and_complete():
    edgeless = rg_encode(graph("edgeless", ["a", "b", "c"], []))
    assert len(edgeless.target.universes["S_V"]) == 3
    assert edgeless.target.relations["E_V"] == frozenset()
    k3 = rg_encode(graph("k3", "abc", [("a", "b"), ("a", "c"), ("b", "c")]))
    assert len(k3.target.relations["E_V"]) == 3


def test_rg_round_trips_every_graph_up_to_four_vertices():
    verts = ["v0", "v1", "v2", "v3"]
    for n in range(5):
        vs = verts[:n]
        possible = list(itertools.combinations(vs, 2))
        for k in range(len(possible) + 1):
            for chosen in itertools.combinations(possible, k):
                G = graph("g", vs, chosen)
                back = rg_decode(rg_encode(G).target)
                assert back.universes == G.universes
                assert back.relations["E"] == G.relations["E"]
                assert back.signature == G.signature


def test_rg_encode_rejects_loops_and_asymmetry():
    loop = FiniteStructure(
        "bad", GRAPH_SIG, {"V": ("a",)}, {"E": frozenset({("a", "a")})}, {}
    )
    with pytest.raises(EncodingError, match="loop"):
        rg_encode(loop)
    oneway = FiniteStructure(
        "bad", GRAPH_SIG, {"V": ("a", "b")}, {"E": frozenset({("a", "b")})}, {}
    )
    with pytest.raises(EncodingError, match="not symmetric"):
        rg_encode(oneway)


def test_rg_decode_validates_the_quotient():
    enc = rg_encode(graph("g", "abc", []))
    pi = enc.target.relations["pi"]
    merged = frozenset((v1, v2, "a__b" if s == "a__c" else s) for v1, v2, s in pi)
    with pytest.raises(EncodingError, match="merges distinct"):
        rg_decode(rebuild(enc.target, relations={"pi": merged, "E_V": frozenset()}))
    partial = frozenset(t for t in pi if t[:2] != ("a", "b"))
    with pytest.raises(EncodingError, match="undefined on"):
        rg_decode(rebuild(enc.target, relations={"pi": partial, "E_V": frozenset()}))
    split = frozenset((v1, v2, "a__c" if (v1, v2) == ("a", "b") else s) for v1, v2, s in pi)
    with pytest.raises(EncodingError, match="splits the unordered pair"):
        rg_decode(rebuild(enc.target, relations={"pi": split, "E_V": frozenset()}))
    padded = dict(enc.target.universes)
    padded["S_V"] = padded["S_V"] + ("zz",)
    with pytest.raises(EncodingError, match="not onto"):
        rg_decode(rebuild(enc.target, universes=padded))


def test_rg_empty_graph_round_trips():
    back = rg_decode(rg_encode(graph("empty", [], [])).target)
    assert back.universes["V"] == ()
    assert back.relations["E"] == frozenset()


@settings(max_examples=30, deadline=None)
@given(st.sets(st.sampled_from(list(itertools.combinations("pqrst", 2)))))
def test_rg_round_trips_random_graphs(edges):
    G = graph("g", "pqrst", sorted(edges))
    back = rg_decode(rg_encode(G).target)
    assert back.relations["E"] == G.relations["E"]


# ---------------------------------------------------------------------------
# Automorphism encoding


def c3():
    sig = Signature(("V",), {"R": ("V", "V")}, {})
    edges = frozenset({("a", "b"), ("b", "c"), ("c", "a")})
    return FiniteStructure("c3", sig, {"V": ("a", "b", "c")}, {"R": edges}, {})


ROT = {"V": {"a": "b", "b": "c", "c": "a"}}


def test_aut_encode_builds_two_labelled_copies():
    enc = aut_encode(c3(), ROT)
    assert enc.target.signature.sorts == ("V_1", "V_2")
    assert enc.target.functions["emb_V"] == {("a",): "a", ("b",): "b", ("c",): "c"}
    assert enc.target.functions["tw_V"] == {("a",): "b", ("b",): "c", ("c",): "a"}
    assert enc.target.relations["R_1"] == enc.target.relations["R_2"] == c3().relations["R"]


def test_aut_round_trips_every_automorphism():
    M = c3()
    autos = list(automorphisms(M))
    assert len(autos) == 3  # the directed triangle admits only rotations
    for g in autos:
        back, sigma = aut_decode(aut_encode(M, g).target)
        assert sigma == g
        assert back.signature == M.signature
        assert back.relations["R"] == M.relations["R"]


def test_aut_identity_round_trips():
    ident = {"V": {e: e for e in "abc"}}
    _, sigma = aut_decode(aut_encode(c3(), ident).target)
    assert sigma == ident


def test_aut_encode_rejects_non_automorphisms():
    with pytest.raises(EncodingError, match="not an automorphism"):
        aut_encode(c3(), {"V": {"a": "a", "b": "c", "c": "b"}})  # reverses the cycle


def test_aut_decode_validates_both_copy_maps():
    enc = aut_encode(c3(), ROT)
    collapsed = dict(enc.target.functions)
    collapsed["tw_V"] = {("a",): "a", ("b",): "a", ("c",): "a"}
    with pytest.raises(EncodingError, match="tw functions"):
        aut_decode(rebuild(enc.target, functions=collapsed))
    dropped = {k: v for k, v in enc.target.functions.items() if k != "emb_V"}
    sig = Signature(
        enc.target.signature.sorts,
        enc.target.signature.relations,
        {k: v for k, v in enc.target.signature.functions.items() if k != "emb_V"},
    )
    host = FiniteStructure("bad", sig, enc.target.universes, enc.target.relations, dropped)
    with pytest.raises(EncodingError, match="missing copy function emb_V"):
        aut_decode(host)


def test_aut_decode_composes_distinct_copy_maps():
    # second copy on fresh letters: emb relabels, tw rotates after the
    # relabelling, and the decoded map is emb^-1 after tw
    enc = aut_encode(c3(), ROT)
    second = frozenset({("x", "y"), ("y", "z"), ("z", "x")})
    host = FiniteStructure(
        "mn",
        enc.target.signature,
        {"V_1": ("a", "b", "c"), "V_2": ("x", "y", "z")},
        {"R_1": c3().relations["R"], "R_2": second},
        {
            "emb_V": {("a",): "x", ("b",): "y", ("c",): "z"},
            "tw_V": {("a",): "y", ("b",): "z", ("c",): "x"},
        },
    )
    _, sigma = aut_decode(host)
    assert sigma == ROT


# ---------------------------------------------------------------------------
# Skolem encoding


def m3():
    sig = Signature(("M",), {"P": ("M",)}, {})
    return FiniteStructure(
        "m3", sig, {"M": ("a", "b", "c")}, {"P": frozenset({("a",), ("b",)})}, {}
    )


def test_skolem_encode_guarded_choice():
    # y must land in P whatever x is, so E has |M| * |P| elements
    M = m3()
    f = {("a",): "a", ("b",): "b", ("c",): "a"}
    enc = skolem_encode(M, Rel("P", (YM,)), (XM,), YM, f)
    assert set(enc.target.universes["E"]) == {
        "a__a", "a__b", "b__a", "b__b", "c__a", "c__b"
    }
    assert enc.target.functions["g"][("c",)] == "c__a"
    assert enc.target.functions["py"][("c__a",)] == "a"
    assert enc.target.functions["px1"][("c__a",)] == "c"
    back, f_back = skolem_decode(enc.target)
    assert f_back == f
    assert back.signature == M.signature
    assert back.relations == M.relations


def test_skolem_encode_top_formula_uses_the_full_square():
    f = {("a",): "c", ("b",): "a", ("c",): "b"}
    enc = skolem_encode(m3(), Top(), (XM,), YM, f)
    assert len(enc.target.universes["E"]) == 9
    assert skolem_decode(enc.target)[1] == f


def test_skolem_round_trips_every_small_table():
    M2 = pure("m2", "ab")
    for n in (1, 2):
        xs = tuple(Var(f"x{i}", "M") for i in range(n))
        doms = list(itertools.product("ab", repeat=n))
        for values in itertools.product("ab", repeat=len(doms)):
            table = dict(zip(doms, values))
            back, f_back = skolem_decode(skolem_encode(M2, Top(), xs, YM, table).target)
            assert f_back == table
            assert back.universes == M2.universes


def test_skolem_encode_input_validation():
    M = m3()
    guard = Rel("P", (YM,))
    off_phi = {("a",): "c", ("b",): "a", ("c",): "a"}
    with pytest.raises(EncodingError, match=r"f\('a',\) = c does not satisfy"):
        skolem_encode(M, guard, (XM,), YM, off_phi)
    with pytest.raises(EncodingError, match=r"undefined on \('b',\)"):
        skolem_encode(M, guard, (XM,), YM, {("a",): "a", ("c",): "a"})
    with pytest.raises(EncodingError, match="only use the given x and y"):
        skolem_encode(M, Eq(Var("w", "M"), YM), (XM,), YM, {(e,): "a" for e in "abc"})
    esort = FiniteStructure("me", Signature(("E",), {}, {}), {"E": ("a",)}, {}, {})
    with pytest.raises(EncodingError, match="reserves"):
        skolem_encode(esort, Top(), (Var("x", "E"),), Var("y", "E"), {("a",): "a"})
    clash_sig = Signature(("M",), {}, {"py": (("M",), "M")})
    clash = FiniteStructure("mf", clash_sig, {"M": ("a",)}, {}, {"py": {("a",): "a"}})
    with pytest.raises(EncodingError, match="reserved by the encoding"):
        skolem_encode(clash, Top(), (XM,), YM, {("a",): "a"})


def test_skolem_decode_requires_a_section():
    enc = skolem_encode(m3(), Top(), (XM,), YM, {(e,): "a" for e in "abc"})
    warped = dict(enc.target.functions)
    warped["px1"] = {k: "a" for k in warped["px1"]}
    with pytest.raises(EncodingError, match="not a section"):
        skolem_decode(rebuild(enc.target, functions=warped))


# ---------------------------------------------------------------------------
# Largeness and generic predicates


def test_is_large_by_fresh_extension():
    # a fresh tuple has pairwise-distinct entries off every named element,
    # so exactly the sets with an off-diagonal part count as large
    set8 = pure("s8", "abcdefgh")
    cls = DefinabilityClass(SET_SIG, 0, "none")
    diag = {(e, e) for e in "abcdefgh"}
    for D in enumerate_definable(set8, cls, ("M", "M")):
        assert is_large(D) == bool(D.extension and not D.extension <= diag)


def test_is_large_rejects_function_signatures():
    sig = Signature(("M",), {}, {"f": (("M",), "M")})
    host = FiniteStructure("mf", sig, {"M": ("a",)}, {}, {"f": {("a",): "a"}})
    D_ext = frozenset({("a",)})
    from fusionkit.semantics import from_extension

    with pytest.raises(EncodingError, match="relation-only"):
        is_large(from_extension(host, ("M",), D_ext))


def test_generic_predicate_check_passes_a_balanced_split():
    rep = generic_predicate_check(pure("s8", "abcdefgh"), list("abcd"),
                                  DefinabilityClass(SET_SIG, 0, "none"), n_max=2)
    assert rep.verdict == "ok"
    assert rep.sets_checked == 6
    assert not rep.approximate
    assert rep.lines() == ["OK"]


def test_generic_predicate_check_fails_trivial_predicates():
    cls = DefinabilityClass(SET_SIG, 0, "none")
    empty = generic_predicate_check(pure("s8", "abcdefgh"), [], cls, n_max=1)
    assert empty.verdict == "violation"
    assert empty.lines() == ["VIOLATION arity=1 set=true pattern=P intersection=EMPTY"]
    assert empty.data()["violations"][0]["pattern"] == ["P"]
    full = generic_predicate_check(pure("s8", "abcdefgh"), list("abcdefgh"), cls, n_max=1)
    assert full.lines() == ["VIOLATION arity=1 set=true pattern=~P intersection=EMPTY"]


def test_generic_predicate_check_notes_heuristic_largeness():
    sig = Signature(("M",), {"R": ("M", "M")}, {})
    host = FiniteStructure(
        "mr", sig, {"M": ("a", "b", "c")}, {"R": frozenset({("a", "b")})}, {}
    )
    rep = generic_predicate_check(host, ["a"], DefinabilityClass(sig, 0, "none"), n_max=1)
    assert rep.approximate
    assert rep.lines()[-1].endswith("heuristic beyond pure equality")


def test_generic_predicate_check_input_validation():
    cls = DefinabilityClass(SET_SIG, 0, "none")
    with pytest.raises(EncodingError, match="not in the host"):
        generic_predicate_check(pure("s2", "ab"), ["z"], cls)
    psig = Signature(("M",), {"P": ("M",)}, {})
    named = FiniteStructure("mp", psig, {"M": ("a",)}, {"P": frozenset({("a",)})}, {})
    with pytest.raises(EncodingError, match="already contain"):
        generic_predicate_check(named, ["a"], DefinabilityClass(psig, 0, "none"))
