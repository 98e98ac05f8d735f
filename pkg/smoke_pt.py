"""Scratch checks for the pseudotopology module."""

from fusionkit.logic import (
    And, App, Eq, Not, Or, Rel, Top, Var, print_formula, validate_family,
    Signature,
)
from fusionkit.semantics import (
    DefinabilityClass, FiniteStructure, enumerate_definable, evaluate,
    extension, from_extension, diagram_expansion, reduct,
)
from fusionkit.pseudotopology import (
    MINUS_INF, PseudoTopologyError, RankFunction,
    threshold_rank, growth_rank, table_rank, validate_rank,
    pseudo_dense, pseudo_dense_witness, pseudo_closure,
    check_approximable, check_approx_interpolative,
    emit_pt_axioms, tabulate_pseudo_density,
    almost_relations, almost_subset, almost_equal, is_almost_irreducible,
    degree_proxy, pseudo_dense_inductive,
    topology_basis, product_basis, topology_ops, dense, check_dim_compatible,
    decompose_pseudo_cells, definable_union, definable_difference,
)

x = Var("x", "S")
y = Var("y", "S")

sigP = Signature(sorts=("S",), relations={"P": ("S",)}, functions={})
M3 = FiniteStructure("m3", sigP, {"S": ("a", "b", "c")}, {"P": frozenset({("a",)})}, {})
cls_none = DefinabilityClass(signature=sigP, max_qrank=0, params="none")
cls_all = DefinabilityClass(signature=sigP, max_qrank=0, params="all")

# --- rank validation ---------------------------------------------------
t1 = threshold_rank(1, cls_none)
rep = validate_rank(t1, M3, cls_none)
assert rep.verdict == "ok", rep.lines()

g = growth_rank(cls_none)
rep = validate_rank(g, M3, cls_none)
assert rep.verdict == "ok", rep.lines()

# params=all makes singletons definable; t=1 then breaks union additivity
t1a = threshold_rank(1, cls_all)
rep = validate_rank(t1a, M3, cls_all)
assert rep.verdict == "violation" and any("axiom 1" in v for v in rep.violations), rep.lines()

# t=3 swallows the whole universe, so additivity is restored
rep = validate_rank(threshold_rank(3, cls_all), M3, cls_all)
assert rep.verdict == "ok", rep.lines()

# a constant rank misses emptiness
bad = RankFunction(kind="const", evaluator=lambda D: 0, scope=cls_none)
rep = validate_rank(bad, M3, cls_none)
assert rep.verdict == "violation" and any("axiom 2" in v for v in rep.violations)

# growth dims on the named blocks
sets = {D.extension: D for D in enumerate_definable(M3, cls_none, ("S",))}
ext_a = frozenset({("a",)})
ext_bc = frozenset({("b",), ("c",)})
ext_all = frozenset({("a",), ("b",), ("c",)})
assert g.dim(sets[frozenset()]) == MINUS_INF
assert g.dim(sets[ext_a]) == 0
assert g.dim(sets[ext_bc]) == 1
assert g.dim(sets[ext_all]) == 1

# table rank: lookups work, gaps raise
tr = table_rank({frozenset(): MINUS_INF, ext_a: 0}, cls_none)
assert tr.dim(sets[ext_a]) == 0
try:
    tr.dim(sets[ext_bc])
    raise AssertionError("expected missing-entry error")
except PseudoTopologyError:
    pass

# --- pseudo-density and closures ----------------------------------------
X_bc = sets[ext_bc]
X_all = sets[ext_all]
X_a = sets[ext_a]
# dim-0 sets: pseudo-dense iff contained
for A in [frozenset(), ext_a, ext_bc, ext_all]:
    assert pseudo_dense(A, X_a, t1, cls_none) == (ext_a <= A)
# the universe: density only needs to hit the full-rank class subsets
assert pseudo_dense(frozenset({("b",)}), X_all, t1, cls_none)
assert not pseudo_dense(ext_a, X_all, t1, cls_none)
w = pseudo_dense_witness(ext_a, X_all, t1, cls_none)
assert w is not None and w.extension == ext_bc

# {b} is pseudo-dense in both {b,c} and the universe (they tie on dim and
# degree); either is a legitimate closure
cl = pseudo_closure(M3, frozenset({("b",)}), ("S",), t1, cls_none, mode="any")
assert cl is not None and frozenset({("b",)}) <= cl.extension
assert pseudo_dense(frozenset({("b",)}), cl, t1, cls_none)
cl = pseudo_closure(M3, frozenset({("b",)}), ("S",), t1, cls_none, mode="lex_minimal")
assert cl is not None and (t1.dim(cl), t1.degree(cl, cls_none)) == (1, 1)
# nothing below dim 1 contains {b}: the lex key is genuinely minimal
assert all(
    not (frozenset({("b",)}) <= D.extension) or t1.dim(D) >= 1
    for D in enumerate_definable(M3, cls_none, ("S",))
)

# --- approximability -----------------------------------------------------
sigPQ = Signature(sorts=("S",), relations={"P": ("S",), "Q": ("S",)}, functions={})
M3pq = FiniteStructure(
    "m3pq", sigPQ, {"S": ("a", "b", "c")},
    {"P": frozenset({("a",)}), "Q": frozenset({("b",)})}, {},
)
cls_pq = DefinabilityClass(signature=sigPQ, max_qrank=0, params="none")
# with t=1 every expansion set has a base pseudo-closure
rep = check_approximable(M3pq, cls_pq, cls_none, threshold_rank(1, cls_none))
assert rep.verdict == "ok", rep.lines()
# a size-capped base class is not union-closed: {a,b} and {a,c} have no
# closure among {∅, {a}, {b}, {c}, {b,c}, univ} when everything is small
base_capped = DefinabilityClass(signature=sigP, max_qrank=0, params="all", size_cap=3)
t3c = threshold_rank(3, base_capped)
assert validate_rank(t3c, M3, base_capped).verdict == "ok"
rep = check_approximable(M3pq, cls_pq, base_capped, t3c)
assert rep.verdict == "violation" and len(rep.failures) == 2, rep.lines()
assert {f.extension for f in rep.failures} == {
    frozenset({("a",), ("b",)}), frozenset({("a",), ("c",)})
}

# --- approximate interpolativity ----------------------------------------
sig1 = Signature(sorts=("S",), relations={"P": ("S",)}, functions={})
sig2 = Signature(sorts=("S",), relations={"Q": ("S",)}, functions={})
fam = validate_family([("L1", sig1), ("L2", sig2)])
M2 = FiniteStructure(
    "m2", fam.union, {"S": ("a", "b")},
    {"P": frozenset({("a",)}), "Q": frozenset({("b",)})}, {},
)
cap_cls = DefinabilityClass(signature=fam.intersection, max_qrank=0, params="none")
mem_cls = {
    "L1": DefinabilityClass(signature=sig1, max_qrank=0, params="none"),
    "L2": DefinabilityClass(signature=sig2, max_qrank=0, params="none"),
}
rcap = threshold_rank(1, cap_cls)
rep = check_approx_interpolative(M2, fam, rcap, cap_cls, mem_cls)
assert rep.verdict == "violation", rep.lines()
assert any("intersection=EMPTY" in line for line in rep.lines())
# both the P/Q and the complement family are dense in the universe with
# empty intersection; nothing else is flagged
assert len(rep.violations) == 2, rep.lines()

# --- axiom emission and tabulation ---------------------------------------
Px = Rel("P", (x,))
Qx = Rel("Q", (x,))
d1 = tabulate_pseudo_density(M2, Top(), Px, (x,), (), (), rcap, cap_cls)
d2 = tabulate_pseudo_density(M2, Top(), Qx, (x,), (), (), rcap, cap_cls)
assert d1 == Top() and d2 == Top(), (print_formula(d1), print_formula(d2))
inst = emit_pt_axioms(Top(), [Px, Qx], [d1, d2], (x,), (), [(), ()])
assert not evaluate(M2, inst.sentence), print_formula(inst.sentence)

M2b = FiniteStructure(
    "m2b", fam.union, {"S": ("a", "b")},
    {"P": frozenset({("a",)}), "Q": frozenset({("a",)})}, {},
)
d1 = tabulate_pseudo_density(M2b, Top(), Px, (x,), (), (), rcap, cap_cls)
d2 = tabulate_pseudo_density(M2b, Top(), Qx, (x,), (), (), rcap, cap_cls)
inst = emit_pt_axioms(Top(), [Px, Qx], [d1, d2], (x,), (), [(), ()])
assert evaluate(M2b, inst.sentence)
# complement families like (P, ~Q) still violate, but the (P, Q) family whose
# axiom came out true is never flagged
rep = check_approx_interpolative(M2b, fam, rcap, cap_cls, mem_cls)
ext_pq = frozenset({("a",)})
assert all(
    not (v.sets[0].extension == ext_pq and v.sets[1].extension == ext_pq)
    for v in rep.violations
), rep.lines()
assert rep.verdict == "violation"

# tabulation with a genuine parameter: delta mentions diagram constants
zv = Var("z", "S")
d3 = tabulate_pseudo_density(M2, Top(), Eq(x, zv), (x,), (), (zv,), rcap, cap_cls)
Mdiag = diagram_expansion(M2)
ext_d3 = extension(Mdiag, d3, x=(zv,))
# the trivial cap class has no full-rank set below the universe, so every
# singleton is pseudo-dense in it
assert ext_d3.extension == frozenset({("a",), ("b",)}), print_formula(d3)

# --- almost-relations, irreducibility, degree -----------------------------
assert almost_relations(X_all, X_bc, t1) == {"almost_subset": True, "almost_equal": True}
assert not almost_subset(X_all, X_a, t1)
assert almost_subset(X_a, X_a, t1)
assert is_almost_irreducible(X_bc, t1, cls_none)
assert is_almost_irreducible(X_all, t1, cls_none)
assert degree_proxy(X_all, t1, cls_none) == 1

sigP4 = sigP
M4 = FiniteStructure(
    "m4", sigP4, {"S": ("a", "b", "c", "d")},
    {"P": frozenset({("a",), ("b",)})}, {},
)
cls4 = DefinabilityClass(signature=sigP4, max_qrank=0, params="none")
t14 = threshold_rank(1, cls4)
sets4 = {D.extension: D for D in enumerate_definable(M4, cls4, ("S",))}
ext_ab = frozenset({("a",), ("b",)})
ext_cd = frozenset({("c",), ("d",)})
univ4 = ext_ab | ext_cd
assert not is_almost_irreducible(sets4[univ4], t14, cls4)
assert degree_proxy(sets4[univ4], t14, cls4) == 2

# --- inductive pseudo-density --------------------------------------------
D_pool = [
    D for D in enumerate_definable(M3, cls_none, ("S",))
    if is_almost_irreducible(D, t1, cls_none)
]
import itertools
elems = [("a",), ("b",), ("c",)]
for X in (X_bc, X_all, X_a):
    for k in range(4):
        for combo in itertools.combinations(elems, k):
            A = frozenset(combo)
            got = pseudo_dense_inductive(A, X, D_pool, t1)
            want = pseudo_dense(A, X, t1, cls_none)
            assert got == want, (X.describe(), sorted(A), got, want)

# --- topologies ------------------------------------------------------------
beta = Or(Rel("P", (y,)), Not(Rel("P", (x,))))  # opens: universe (y=a), {b,c}
basis = topology_basis(M3, beta, (x,), (y,))
assert {frozenset(b) for b in basis.basics} == {ext_bc, ext_all}
assert basis.minimal_neighborhood(("a",)) == ext_all
assert basis.minimal_neighborhood(("b",)) == ext_bc

ops = topology_ops(X_a, basis, t1)
assert ops["closure"].extension == ext_a
assert ops["interior"].extension == frozenset()
assert ops["frontier"].extension == frozenset()
assert ops["essence"].extension == ext_a
ops = topology_ops(X_bc, basis, t1)
assert ops["closure"].extension == ext_all
assert ops["frontier"].extension == ext_a
assert ops["essence"].extension == ext_bc
assert ops["residue"].extension == frozenset()

rep = check_dim_compatible(M3, basis, t1, cls_none, samples=60, seed=7)
assert rep.verdict == "ok", rep.lines()

# the discrete topology starves the essence of dim-1 sets
disc = topology_basis(M3, Eq(x, y), (x,), (y,))
rep = check_dim_compatible(M3, disc, t1, cls_none, samples=10, seed=7)
assert rep.verdict == "violation" and any("residue" in v for v in rep.violations)

# product boxes
basis2 = product_basis(basis, 2)
assert len(basis2.basics) == 4
assert basis2.minimal_neighborhood((("b"), ("a"))) == frozenset(
    (p, q) for p in ["b", "c"] for q in ["a", "b", "c"]
)

# dense vs pseudo-dense through the essence (already covered by the check)
assert dense(frozenset({("b",)}), X_bc, basis)
assert not dense(frozenset({("a",)}), X_bc, basis)

# --- pseudo-cells -----------------------------------------------------------
cells = decompose_pseudo_cells(X_all, list(sets.values()), t1, mode="decomposition")
assert cells is not None and len(cells) <= 1, [c.describe() for c in cells]

t1_all = threshold_rank(1, cls_all)
patch = decompose_pseudo_cells(
    X_bc, [X_bc], t1_all, mode="patching", cls=cls_all
)
assert patch is not None and len(patch) == 1
dom, cell, graph = patch[0]
assert dom.extension == ext_bc and cell.extension == ext_bc

print("ALL PSEUDOTOPOLOGY SMOKE OK")
