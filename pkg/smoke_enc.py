"""Scratch checks for the encodings module."""

import itertools

from fusionkit.logic import Rel, Signature, Top, Var
from fusionkit.semantics import DefinabilityClass, FiniteStructure, automorphisms
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

graph_sig = Signature(sorts=("V",), relations={"E": ("V", "V")}, functions={})


def graph(name, vertices, edges):
    sym = frozenset((a, b) for a, b in edges) | frozenset((b, a) for a, b in edges)
    return FiniteStructure(name, graph_sig, {"V": tuple(vertices)}, {"E": sym}, {})


# --- random graph ---------------------------------------------------------
single = graph("single", ["a", "b"], [("a", "b")])
enc = rg_encode(single)
assert enc.target.universes["S_V"] == ("a__b",)
assert enc.target.relations["E_V"] == frozenset({("a__b",)})
assert enc.check_maps()

edgeless = graph("edgeless", ["a", "b", "c"], [])
enc = rg_encode(edgeless)
assert len(enc.target.universes["S_V"]) == 3
assert enc.target.relations["E_V"] == frozenset()

k3 = graph("k3", ["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")])
enc = rg_encode(k3)
assert len(enc.target.universes["S_V"]) == 3
assert len(enc.target.relations["E_V"]) == 3

# round trips: every graph on <= 4 vertices decodes back identically
verts = ["v0", "v1", "v2", "v3"]
for n in range(0, 5):
    vs = verts[:n]
    possible = list(itertools.combinations(vs, 2))
    for k in range(len(possible) + 1):
        for chosen in itertools.combinations(possible, k):
            G = graph("g", vs, chosen)
            back = rg_decode(rg_encode(G).target)
            assert back.universes == G.universes
            assert back.relations["E"] == G.relations["E"]

# loops and asymmetry are rejected
try:
    rg_encode(FiniteStructure("bad", graph_sig, {"V": ("a",)}, {"E": frozenset({("a", "a")})}, {}))
    raise AssertionError("expected loop rejection")
except EncodingError:
    pass
try:
    rg_encode(FiniteStructure("bad", graph_sig, {"V": ("a", "b")}, {"E": frozenset({("a", "b")})}, {}))
    raise AssertionError("expected symmetry rejection")
except EncodingError:
    pass

# malformed pi: merge two unordered pairs into one class
enc = rg_encode(edgeless)
pi = set(enc.target.relations["pi"])
merged = frozenset(
    (v1, v2, "a__b" if s == "a__c" else s) for v1, v2, s in pi
)
try:
    rg_decode(
        FiniteStructure(
            "bad",
            enc.target.signature,
            enc.target.universes,
            {"pi": merged, "E_V": frozenset()},
            {},
        )
    )
    raise AssertionError("expected quotient rejection")
except EncodingError:
    pass

# empty graph round trip
empty = graph("empty", [], [])
assert rg_decode(rg_encode(empty).target).universes["V"] == ()

# --- automorphisms ----------------------------------------------------------
cyc_sig = Signature(sorts=("V",), relations={"R": ("V", "V")}, functions={})
C3 = FiniteStructure(
    "c3", cyc_sig, {"V": ("a", "b", "c")},
    {"R": frozenset({("a", "b"), ("b", "c"), ("c", "a")})}, {},
)
rot = {"V": {"a": "b", "b": "c", "c": "a"}}
enc = aut_encode(C3, rot)
assert enc.target.functions["emb_V"] == {("a",): "a", ("b",): "b", ("c",): "c"}
assert enc.target.functions["tw_V"] == {("a",): "b", ("b",): "c", ("c",): "a"}
M, sigma = aut_decode(enc.target)
assert sigma == rot
assert M.relations["R"] == C3.relations["R"]
assert M.signature == C3.signature

# identity automorphism
ident = {"V": {e: e for e in "abc"}}
M, sigma = aut_decode(aut_encode(C3, ident).target)
assert sigma == ident

# every automorphism of a small structure round-trips
for g in automorphisms(C3):
    _, back = aut_decode(aut_encode(C3, g).target)
    assert back == g

# non-automorphism rejected at encode
try:
    aut_encode(C3, {"V": {"a": "a", "b": "c", "c": "b"}})
    raise AssertionError("expected automorphism rejection")
except EncodingError:
    pass

# decode rejects a non-isomorphism tw
enc = aut_encode(C3, rot)
broken = dict(enc.target.functions)
broken["tw_V"] = {("a",): "a", ("b",): "a", ("c",): "a"}
try:
    aut_decode(
        FiniteStructure(
            "bad", enc.target.signature, enc.target.universes,
            enc.target.relations, broken,
        )
    )
    raise AssertionError("expected isomorphism rejection")
except EncodingError:
    pass

# general (M, N; f, g) decode: f^-1 after g
MN = FiniteStructure(
    "mn",
    enc.target.signature,
    {"V_1": ("a", "b", "c"), "V_2": ("x", "y", "z")},
    {
        "R_1": C3.relations["R"],
        "R_2": frozenset({("x", "y"), ("y", "z"), ("z", "x")}),
    },
    {
        "emb_V": {("a",): "x", ("b",): "y", ("c",): "z"},
        "tw_V": {("a",): "y", ("b",): "z", ("c",): "x"},
    },
)
M, sigma = aut_decode(MN)
assert sigma == rot  # f^-1(g(a)) = f^-1(y) = b, and so on

# --- Skolem ------------------------------------------------------------------
pure = Signature(sorts=("M",), relations={"P": ("M",)}, functions={})
M3 = FiniteStructure(
    "m3", pure, {"M": ("a", "b", "c")}, {"P": frozenset({("a",), ("b",)})}, {}
)
xv, yv = Var("x", "M"), Var("y", "M")
phi = Rel("P", (yv,))  # y must land in P, regardless of x
f = {("a",): "a", ("b",): "b", ("c",): "a"}
enc = skolem_encode(M3, phi, (xv,), yv, f)
assert set(enc.target.universes["E"]) == {
    "a__a", "a__b", "b__a", "b__b", "c__a", "c__b"
}
M_back, f_back = skolem_decode(enc.target)
assert f_back == f
assert M_back.relations == M3.relations
assert M_back.signature == M3.signature

# top formula: E is the whole square
enc = skolem_encode(M3, Top(), (xv,), yv, {("a",): "c", ("b",): "a", ("c",): "b"})
assert len(enc.target.universes["E"]) == 9

# all tables on a 2-element pure set round-trip (arity 1 and 2)
set_sig = Signature(sorts=("M",), relations={}, functions={})
M2 = FiniteStructure("m2", set_sig, {"M": ("a", "b")}, {}, {})
for n in (1, 2):
    xs = tuple(Var(f"x{i}", "M") for i in range(n))
    doms = list(itertools.product("ab", repeat=n))
    for values in itertools.product("ab", repeat=len(doms)):
        table = dict(zip(doms, values))
        M_back, f_back = skolem_decode(skolem_encode(M2, Top(), xs, yv, table).target)
        assert f_back == table

# f landing outside phi is rejected with the witness
try:
    skolem_encode(M3, phi, (xv,), yv, {("a",): "c", ("b",): "a", ("c",): "a"})
    raise AssertionError("expected choice-function rejection")
except EncodingError as e:
    assert "('a',)" in str(e)

# --- largeness and generic predicates ----------------------------------------
set8 = FiniteStructure("s8", set_sig, {"M": tuple("abcdefgh")}, {}, {})
cls0 = DefinabilityClass(signature=set_sig, max_qrank=0, params="none")

from fusionkit.semantics import enumerate_definable
sets2 = list(enumerate_definable(set8, cls0, ("M", "M")))
diag = {(e, e) for e in "abcdefgh"}
# exactly the sets with an off-diagonal part are large (fresh tuple distinct)
for D in sets2:
    assert is_large(D) == bool(D.extension and not D.extension <= diag), D.describe()

rep = generic_predicate_check(set8, ["a", "b", "c", "d"], cls0, n_max=2)
assert rep.verdict == "ok", rep.lines()
assert not rep.approximate

# P = empty fails at n=1 (the full line misses the P side)
rep = generic_predicate_check(set8, [], cls0, n_max=1)
assert rep.verdict == "violation"
assert any(v.pattern == (True,) for v in rep.violations)

# P = everything fails the complement pattern at n=1
rep = generic_predicate_check(set8, list("abcdefgh"), cls0, n_max=1)
assert rep.verdict == "violation"
assert any(v.pattern == (False,) for v in rep.violations)

# any relation beyond equality makes the largeness rule heuristic
rsig = Signature(sorts=("M",), relations={"R": ("M", "M")}, functions={})
Mr = FiniteStructure(
    "mr", rsig, {"M": ("a", "b", "c")}, {"R": frozenset({("a", "b")})}, {}
)
rep = generic_predicate_check(
    Mr, ["a"], DefinabilityClass(signature=rsig, max_qrank=0, params="none"), n_max=1
)
assert rep.approximate
assert any("heuristic" in line for line in rep.lines())

print("ALL ENCODINGS SMOKE OK")
