"""Dimension ranks and the pseudo-topological toolkit.

A rank assigns to each definable set a natural number or minus infinity,
subject to three axioms: union additivity (dim of a union is the max), minus
infinity exactly on the empty set, and zero exactly on nonempty "small" sets,
where smallness is reinterpreted per rank kind at finite scale.  Whether a
rank satisfies the axioms depends on the definability class it is measured
against, so :func:`validate_rank` gates everything downstream.

On top of a validated rank: pseudo-density and pseudo-closures, the
approximability and approximate-interpolativity checks, emission of the
axiom schema that turns tabulated pseudo-density predicates into first-order
sentences, almost-containment and almost-irreducibility, the stratum-
stripping inductive pseudo-density procedure, and finite (hence Alexandrov)
definable topologies with frontier/residue checks.

Dimensions are plain ints with ``float("-inf")`` as the bottom element, so
comparisons and ``max`` work unmodified.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .logic import (
    And,
    App,
    Eq,
    Formula,
    Implies,
    LanguageFamily,
    Not,
    Or,
    SortId,
    Top,
    Var,
    conj,
    disj,
    exists_many,
    forall_many,
    free_vars,
    print_formula,
    substitute,
)
from .semantics import (
    DefinabilityClass,
    DefinableSet,
    FiniteStructure,
    _compute_extension,
    diagram_constants,
    enumerate_definable,
    extension,
    from_extension,
    reduct,
)

MINUS_INF = float("-inf")
Dim = Union[int, float]

TupleSet = frozenset  # of tuple[str, ...]


class PseudoTopologyError(ValueError):
    """Rank, basis, or schema input violates a documented requirement."""


# ---------------------------------------------------------------------------
# Definable-set algebra

def _merge_sets(D1: DefinableSet, D2: DefinableSet, op: str) -> DefinableSet:
    """Boolean combination of two definable sets over the same host tuples.

    The second set's tuple variables are renamed onto the first's and its
    parameter variables are primed out of the way, so the result is again a
    single formula with a combined parameter assignment.
    """
    if D1.sorts != D2.sorts:
        raise PseudoTopologyError(f"mixed arities {D1.sorts} and {D2.sorts}")
    for s in D1.sorts:
        if D1.host.universes.get(s) != D2.host.universes.get(s):
            raise PseudoTopologyError("definable sets live over different universes")
    taken = {v.name for v in free_vars(D1.formula)} | {v.name for v in D1.x}
    taken |= {v.name for v, _ in D1.params}
    rename: dict[Var, Var] = {}
    for old, new in zip(D2.x, D1.x):
        if old != new:
            rename[old] = new
    params = dict(D1.params)
    for v, e in D2.params:
        new = v
        while new.name in taken or (new in params and params.get(new) != e):
            new = Var(new.name + "'", new.sort)
        if new != v:
            rename[v] = new
        params[new] = e
        taken.add(new.name)
    phi2 = substitute(D2.formula, rename) if rename else D2.formula
    if op == "and":
        phi, ext = And(D1.formula, phi2), D1.extension & D2.extension
    elif op == "or":
        phi, ext = Or(D1.formula, phi2), D1.extension | D2.extension
    elif op == "diff":
        phi, ext = And(D1.formula, Not(phi2)), D1.extension - D2.extension
    elif op == "xor":
        phi = Or(And(D1.formula, Not(phi2)), And(phi2, Not(D1.formula)))
        ext = D1.extension ^ D2.extension
    else:
        raise ValueError(f"unknown operation {op}")
    return DefinableSet(
        D1.host, phi, D1.x, tuple(sorted(params.items(), key=lambda p: p[0].name)),
        frozenset(ext),
    )


def definable_union(D1: DefinableSet, D2: DefinableSet) -> DefinableSet:
    return _merge_sets(D1, D2, "or")


def definable_intersection(D1: DefinableSet, D2: DefinableSet) -> DefinableSet:
    return _merge_sets(D1, D2, "and")


def definable_difference(D1: DefinableSet, D2: DefinableSet) -> DefinableSet:
    return _merge_sets(D1, D2, "diff")


def definable_symmetric_difference(D1: DefinableSet, D2: DefinableSet) -> DefinableSet:
    return _merge_sets(D1, D2, "xor")


# ---------------------------------------------------------------------------
# Rank functions


@dataclass(frozen=True)
class RankFunction:
    """Dimension assignment on definable sets of one host.

    ``small`` is the kind's reinterpretation of "nonempty and finite" used by
    the third rank axiom; kinds without an intrinsic notion (tables) leave it
    None and get only the weakened axiom-3 check.  ``infinity_threshold`` is
    the desk surrogate for "infinitely many": streams of more than this many
    almost-equality classes count as infinite in the inductive procedure.
    """

    kind: str
    evaluator: Callable[[DefinableSet], Dim]
    scope: DefinabilityClass
    small: Optional[Callable[[DefinableSet], bool]] = None
    degree_evaluator: Optional[Callable[[DefinableSet], int]] = None
    infinity_threshold: int = 3

    def dim(self, D: DefinableSet) -> Dim:
        return self.evaluator(D)

    def degree(self, D: DefinableSet, cls: Optional[DefinabilityClass] = None) -> int:
        """Degree of D: the custom evaluator when present, otherwise the
        minimal number of class-definable almost-irreducible sets whose
        union is almost equal to D."""
        if self.degree_evaluator is not None:
            return self.degree_evaluator(D)
        return degree_proxy(D, self, cls if cls is not None else self.scope)


def threshold_rank(t: int, scope: DefinabilityClass, infinity_threshold: Optional[int] = None) -> RankFunction:
    """Rank by size: empty is minus infinity, at most t elements is 0, more
    is 1.  "Finite" in the rank axioms becomes "at most t" at this scale."""
    if t < 1:
        raise PseudoTopologyError("threshold must be at least 1")

    def dim(D: DefinableSet) -> Dim:
        n = len(D.extension)
        if n == 0:
            return MINUS_INF
        return 0 if n <= t else 1

    return RankFunction(
        kind=f"threshold({t})",
        evaluator=dim,
        scope=scope,
        small=lambda D: 0 < len(D.extension) <= t,
        infinity_threshold=infinity_threshold if infinity_threshold is not None else t,
    )


def _fresh_extension(S: FiniteStructure, k: int) -> FiniteStructure:
    taken = {e for s in S.signature.sorts for e in S.universes[s]}
    universes = {}
    for s in S.signature.sorts:
        fresh = []
        i = 0
        while len(fresh) < k:
            name = f"_g{i}"
            while name in taken:
                name += "'"
            taken.add(name)
            fresh.append(name)
            i += 1
        universes[s] = tuple(S.universes[s]) + tuple(fresh)
    return FiniteStructure(
        name=f"{S.name}+{k}",
        signature=S.signature,
        universes=universes,
        relations=dict(S.relations),
        functions=dict(S.functions),
    )


def _growth_counts(D: DefinableSet) -> list[int]:
    if D.host.signature.functions:
        raise PseudoTopologyError(
            "growth rank needs a relation-only signature; function symbols "
            "have no canonical extension to fresh elements"
        )
    counts = []
    for k in range(len(D.sorts) + 1):
        host = _fresh_extension(D.host, k)
        counts.append(len(_compute_extension(host, D.formula, D.x, dict(D.params))))
    return counts


def growth_rank(scope: DefinabilityClass, infinity_threshold: int = 3) -> RankFunction:
    """Rank by growth: the set is recounted after adding k fresh elements to
    every sort (k up to the arity) and the dimension is the degree of the
    interpolating counting polynomial.  Empty in the host is minus infinity.
    """

    def dim(D: DefinableSet) -> Dim:
        if not D.extension:
            return MINUS_INF
        diffs = _growth_counts(D)
        degree = 0
        order = 0
        while len(diffs) > 1:
            diffs = [b - a for a, b in zip(diffs, diffs[1:])]
            order += 1
            if any(diffs):
                degree = order
        return degree

    def small(D: DefinableSet) -> bool:
        if not D.extension:
            return False
        counts = _growth_counts(D)
        return len(set(counts)) == 1

    return RankFunction(
        kind="growth", evaluator=dim, scope=scope, small=small,
        infinity_threshold=infinity_threshold,
    )


def table_rank(
    table: Mapping[frozenset, Dim], scope: DefinabilityClass, infinity_threshold: int = 3
) -> RankFunction:
    """Rank read off a user-supplied extension-to-dimension table."""

    def dim(D: DefinableSet) -> Dim:
        key = frozenset(D.extension)
        if key not in table:
            raise PseudoTopologyError(
                f"rank table has no entry for the {len(key)}-element set {sorted(key)[:4]}..."
                if len(key) > 4
                else f"rank table has no entry for {sorted(key)}"
            )
        return table[key]

    return RankFunction(
        kind="table", evaluator=dim, scope=scope, small=None,
        infinity_threshold=infinity_threshold,
    )


@dataclass(frozen=True)
class RankReport:
    verdict: str  # "ok" or "violation"
    violations: tuple[str, ...]
    sets_checked: int

    def lines(self) -> list[str]:
        return ["OK"] if not self.violations else list(self.violations)

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": list(self.violations),
            "sets_checked": self.sets_checked,
        }


def validate_rank(
    r: RankFunction, S: FiniteStructure, cls: DefinabilityClass, max_arity: int = 1
) -> RankReport:
    """Check the three rank axioms over every class-definable set and pair.

    Axiom 1: dim(X ∪ X') = max(dim X, dim X').  Axiom 2: dim X is minus
    infinity exactly when X is empty.  Axiom 3: dim X = 0 exactly when X is
    nonempty and small per the rank kind; kinds without a smallness notion
    get only the one-sided check that dim 0 sets are nonempty.
    """
    violations: list[str] = []
    checked = 0
    for n in range(1, max_arity + 1):
        for sorts in itertools.product(S.signature.sorts, repeat=n):
            sets = list(enumerate_definable(S, cls, sorts))
            checked += len(sets)
            dims = [r.dim(D) for D in sets]
            for D, d in zip(sets, dims):
                if (d == MINUS_INF) != (not D.extension):
                    violations.append(
                        f"axiom 2: dim {d} on {'empty' if not D.extension else 'nonempty'} "
                        f"set {D.describe()}"
                    )
                if r.small is not None:
                    if (d == 0) != r.small(D):
                        violations.append(
                            f"axiom 3: dim {d} but small={r.small(D)} on {D.describe()}"
                        )
                elif d == 0 and not D.extension:
                    violations.append(f"axiom 3: dim 0 on empty set {D.describe()}")
            for (D1, d1), (D2, d2) in itertools.combinations(zip(sets, dims), 2):
                du = r.dim(definable_union(D1, D2))
                if du != max(d1, d2):
                    violations.append(
                        f"axiom 1: dim({D1.describe()} | {D2.describe()}) = {du}, "
                        f"expected max({d1}, {d2})"
                    )
    verdict = "ok" if not violations else "violation"
    return RankReport(verdict, tuple(violations), checked)


# ---------------------------------------------------------------------------
# Pseudo-density and pseudo-closure


def _full_rank_miss(
    A: TupleSet,
    X: DefinableSet,
    r: RankFunction,
    pool: Iterable[DefinableSet],
    dim_x: Dim,
) -> Optional[DefinableSet]:
    for cand in pool:
        if not cand.extension or not cand.extension <= X.extension:
            continue
        if r.dim(cand) != dim_x:
            continue
        if not (A & cand.extension):
            return cand
    return None


def pseudo_dense_witness(
    A: TupleSet, X: DefinableSet, r: RankFunction, cls: DefinabilityClass
) -> Optional[DefinableSet]:
    """A nonempty class-definable full-rank subset of X missed by A, if any."""
    pool = enumerate_definable(X.host, cls, X.sorts)
    return _full_rank_miss(frozenset(A), X, r, pool, r.dim(X))


def pseudo_dense(
    A: TupleSet, X: DefinableSet, r: RankFunction, cls: DefinabilityClass
) -> bool:
    """True when A meets every nonempty class-definable X' ⊆ X of full rank."""
    return pseudo_dense_witness(A, X, r, cls) is None


def pseudo_closure(
    S: FiniteStructure,
    A: TupleSet,
    sorts: Sequence[SortId],
    r: RankFunction,
    cls: DefinabilityClass,
    mode: str = "any",
) -> Optional[DefinableSet]:
    """A class-definable set containing A in which A is pseudo-dense.

    Mode "any" returns the first such set in the class enumeration order;
    mode "lex_minimal" returns the class superset minimizing (dim, degree)
    lexicographically, which is a pseudo-closure whenever the rank behaves
    like a Morley rank on the class.  None when the class has no candidate.
    """
    A = frozenset(A)
    sorts = tuple(sorts)
    if mode == "any":
        pool = list(enumerate_definable(S, cls, sorts))
        for cand in pool:
            if A <= cand.extension and _full_rank_miss(A, cand, r, pool, r.dim(cand)) is None:
                return cand
        return None
    if mode == "lex_minimal":
        best: Optional[DefinableSet] = None
        best_key: Optional[tuple] = None
        for cand in enumerate_definable(S, cls, sorts):
            if not A <= cand.extension:
                continue
            key = (r.dim(cand), r.degree(cand, cls))
            if best_key is None or key < best_key:
                best, best_key = cand, key
        return best
    raise ValueError(f"unknown mode {mode}")


@dataclass(frozen=True)
class ApproximabilityReport:
    verdict: str
    failures: tuple[DefinableSet, ...]
    sets_checked: int

    def lines(self) -> list[str]:
        if not self.failures:
            return ["OK"]
        return [f"VIOLATION set={D.describe()} pseudo_closure=NONE" for D in self.failures]

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": [
                {"set": D.describe(), "pseudo_closure": "NONE"} for D in self.failures
            ],
            "sets_checked": self.sets_checked,
        }


def check_approximable(
    S_exp: FiniteStructure,
    cls_exp: DefinabilityClass,
    cls_base: DefinabilityClass,
    r: RankFunction,
    max_arity: int = 1,
) -> ApproximabilityReport:
    """Does every expansion-definable set admit a base-definable
    pseudo-closure?  Reports the expansion sets for which none exists."""
    if not cls_base.signature.is_reduct_of(cls_exp.signature):
        raise PseudoTopologyError("base class signature must be a reduct of the expansion's")
    S_base = reduct(S_exp, cls_base.signature)
    failures: list[DefinableSet] = []
    checked = 0
    for n in range(1, max_arity + 1):
        for sorts in itertools.product(S_exp.signature.sorts, repeat=n):
            for D in enumerate_definable(S_exp, cls_exp, sorts):
                checked += 1
                if pseudo_closure(S_base, D.extension, sorts, r, cls_base) is None:
                    failures.append(D)
    return ApproximabilityReport(
        "ok" if not failures else "violation", tuple(failures), checked
    )


# ---------------------------------------------------------------------------
# Approximate interpolativity


@dataclass(frozen=True)
class ApproxViolation:
    """Member sets simultaneously pseudo-dense in a nonempty common class set
    whose joint intersection is nevertheless empty."""

    labels: tuple[str, ...]
    sets: tuple[DefinableSet, ...]
    within: DefinableSet

    def line(self) -> str:
        fams = ";".join(d.describe() for d in self.sets)
        params = ";".join(
            ",".join(f"{v.name}={e}" for v, e in d.params) or "-" for d in self.sets
        )
        return (
            f"VIOLATION family={fams} params={params} "
            f"within={self.within.describe()} intersection=EMPTY"
        )

    def data(self) -> dict:
        return {
            "labels": list(self.labels),
            "family": [print_formula(d.formula) for d in self.sets],
            "params": [{v.name: e for v, e in d.params} for d in self.sets],
            "within": self.within.describe(),
            "intersection": "EMPTY",
        }


@dataclass(frozen=True)
class ApproxInterpolativityReport:
    verdict: str
    violations: tuple[ApproxViolation, ...]
    families_checked: int

    def lines(self) -> list[str]:
        return ["OK"] if not self.violations else [v.line() for v in self.violations]

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": [v.data() for v in self.violations],
            "families_checked": self.families_checked,
        }


def check_approx_interpolative(
    S: FiniteStructure,
    fam: LanguageFamily,
    r: RankFunction,
    cap_class: DefinabilityClass,
    member_classes: Mapping[str, DefinabilityClass],
    max_family: Optional[int] = None,
    max_arity: int = 1,
) -> ApproxInterpolativityReport:
    """Flag member-definable families that are simultaneously pseudo-dense in
    some nonempty intersection-class set yet have empty intersection."""
    if max_family is None:
        max_family = len(fam.labels)
    violations: list[ApproxViolation] = []
    checked = 0
    for n in range(1, max_arity + 1):
        for sorts in itertools.product(S.signature.sorts, repeat=n):
            cap_pool = [
                D for D in enumerate_definable(S, cap_class, sorts) if D.extension
            ]
            member_sets = {
                label: list(
                    enumerate_definable(reduct(S, fam[label]), member_classes[label], sorts)
                )
                for label in fam.labels
            }
            # pseudo-density of each member candidate in each cap set
            dense_in: dict[tuple[str, int], list[DefinableSet]] = {}
            full_pool = list(enumerate_definable(S, cap_class, sorts))
            for ci, cap in enumerate(cap_pool):
                dim_cap = r.dim(cap)
                for label in fam.labels:
                    dense_in[(label, ci)] = [
                        D
                        for D in member_sets[label]
                        if _full_rank_miss(D.extension, cap, r, full_pool, dim_cap) is None
                    ]
            for m in range(1, max_family + 1):
                for labels in itertools.combinations(fam.labels, m):
                    for ci, cap in enumerate(cap_pool):
                        pools = [dense_in[(label, ci)] for label in labels]
                        for family in itertools.product(*pools):
                            checked += 1
                            common = set(family[0].extension)
                            for d in family[1:]:
                                common &= d.extension
                            if not common:
                                violations.append(ApproxViolation(labels, tuple(family), cap))
    verdict = "ok" if not violations else "violation"
    return ApproxInterpolativityReport(verdict, tuple(violations), checked)


# ---------------------------------------------------------------------------
# Axiom schema emission


@dataclass(frozen=True)
class AxiomSchemaInstance:
    """One pseudo-topological axiom: if each member set is pseudo-dense in
    the (guarded) intersection-language instance, a common point exists."""

    phi_cap: Formula
    phis: tuple[Formula, ...]
    deltas: tuple[Formula, ...]
    gamma: Optional[Formula]
    x: tuple[Var, ...]
    y: tuple[Var, ...]
    zs: tuple[tuple[Var, ...], ...]
    sentence: Formula


def emit_pt_axioms(
    phi_cap: Formula,
    phis: Sequence[Formula],
    deltas: Sequence[Formula],
    x: Sequence[Var],
    y: Sequence[Var],
    zs: Sequence[Sequence[Var]],
    gamma: Optional[Formula] = None,
) -> AxiomSchemaInstance:
    """Build ∀y z1..zn ((γ(y) ∧ ⋀δ_i(y,z_i)) → ∃x ⋀φ_i(x,z_i)).

    Variable discipline: x is shared by φ∩ and the φ_i; y belongs to φ∩, the
    δ_i, and γ; z_i to φ_i and δ_i.  Trivially true conjuncts are dropped
    from the antecedent, and when nothing remains the implication is elided.
    """
    if len(phis) != len(deltas) or len(phis) != len(zs):
        raise PseudoTopologyError("need one delta and one z block per member formula")
    if not phis:
        raise PseudoTopologyError("need at least one member formula")
    x, y = tuple(x), tuple(y)
    zs = tuple(tuple(z) for z in zs)
    xy = set(x) | set(y)
    if not set(free_vars(phi_cap)) <= xy:
        raise PseudoTopologyError("the intersection formula may only use x and y")
    if gamma is not None and not set(free_vars(gamma)) <= set(y):
        raise PseudoTopologyError("the guard may only use y")
    for i, (phi, delta, z) in enumerate(zip(phis, deltas, zs)):
        if not set(free_vars(phi)) <= set(x) | set(z):
            raise PseudoTopologyError(f"member formula {i} may only use x and z_{i}")
        if not set(free_vars(delta)) <= set(y) | set(z):
            raise PseudoTopologyError(f"delta {i} may only use y and z_{i}")
    antecedent = [g for g in ([gamma] if gamma is not None else []) if g != Top()]
    antecedent += [d for d in deltas if d != Top()]
    consequent = exists_many(list(x), conj(list(phis)))
    body = consequent if not antecedent else Implies(conj(antecedent), consequent)
    outer = list(y) + [v for z in zs for v in z]
    sentence = forall_many(outer, body)
    return AxiomSchemaInstance(
        phi_cap, tuple(phis), tuple(deltas), gamma, x, y, zs, sentence
    )


def tabulate_pseudo_density(
    S: FiniteStructure,
    phi_cap: Formula,
    phi_member: Formula,
    x: Sequence[Var],
    y: Sequence[Var],
    z: Sequence[Var],
    r: RankFunction,
    cap_class: DefinabilityClass,
) -> Formula:
    """The exact pseudo-density predicate δ(y, z) for two formula families,
    written as a disjunction over diagram constants.

    A pair (b, c) is recorded when the instance φ∩(S, b) is nonempty and the
    member instance's extension is pseudo-dense in it; the nonemptiness
    requirement keeps the emitted axioms aligned with the checker, which
    quantifies over nonempty intersection sets only.  The result mentions
    diagram constants, so it evaluates over :func:`diagram_expansion` hosts.
    """
    x, y, z = tuple(x), tuple(y), tuple(z)
    consts = diagram_constants(S)
    name_of = {se: name for name, se in consts.items()}
    pool = list(enumerate_definable(S, cap_class, tuple(v.sort for v in x)))
    disjuncts: list[Formula] = []
    y_sorts = [v.sort for v in y]
    z_sorts = [v.sort for v in z]
    for b in S.tuples(y_sorts):  # type: ignore[arg-type]
        cap = extension(S, phi_cap, params=dict(zip(y, b)), x=x)
        if not cap.extension:
            continue
        dim_cap = r.dim(cap)
        for c in S.tuples(z_sorts):  # type: ignore[arg-type]
            member = extension(S, phi_member, params=dict(zip(z, c)), x=x)
            if _full_rank_miss(member.extension, cap, r, pool, dim_cap) is None:
                eqs = [
                    Eq(v, App(name_of[(v.sort, e)], ()))
                    for v, e in zip(y + z, b + c)
                ]
                disjuncts.append(conj(eqs))
    return disj(disjuncts)


# ---------------------------------------------------------------------------
# Almost-containment and almost-irreducibility


def almost_relations(X1: DefinableSet, X2: DefinableSet, r: RankFunction) -> dict[str, bool]:
    """Almost-containment both ways: X1 is almost a subset of X2 when their
    difference is empty or has strictly lower rank than X1."""

    def almost_sub(A: DefinableSet, B: DefinableSet) -> bool:
        diff = definable_difference(A, B)
        if not diff.extension:
            return True
        return r.dim(diff) < r.dim(A)

    sub = almost_sub(X1, X2)
    sup = almost_sub(X2, X1)
    return {"almost_subset": sub, "almost_equal": sub and sup}


def almost_subset(X1: DefinableSet, X2: DefinableSet, r: RankFunction) -> bool:
    return almost_relations(X1, X2, r)["almost_subset"]


def almost_equal(X1: DefinableSet, X2: DefinableSet, r: RankFunction) -> bool:
    return almost_relations(X1, X2, r)["almost_equal"]


def is_almost_irreducible(X: DefinableSet, r: RankFunction, cls: DefinabilityClass) -> bool:
    """No class-definable cover X = X1 ∪ X2 avoids X being almost equal to a
    part.  The empty set is almost irreducible by convention."""
    if not X.extension:
        return True
    parts = [
        D
        for D in enumerate_definable(X.host, cls, X.sorts)
        if D.extension <= X.extension
    ]
    for D1, D2 in itertools.combinations_with_replacement(parts, 2):
        if D1.extension | D2.extension != X.extension:
            continue
        if not almost_equal(X, D1, r) and not almost_equal(X, D2, r):
            return False
    return True


def degree_proxy(X: DefinableSet, r: RankFunction, cls: DefinabilityClass) -> int:
    """Minimal number of class-definable almost-irreducible sets whose union
    is almost equal to X; 0 for the empty set."""
    if not X.extension:
        return 0
    atoms = [
        D
        for D in enumerate_definable(X.host, cls, X.sorts)
        if D.extension and is_almost_irreducible(D, r, cls)
    ]
    for m in range(1, len(atoms) + 1):
        for combo in itertools.combinations(atoms, m):
            union = combo[0]
            for D in combo[1:]:
                union = definable_union(union, D)
            if almost_equal(X, union, r):
                return m
    raise PseudoTopologyError(
        f"no almost-irreducible class cover found for {X.describe()}"
    )


def pseudo_dense_inductive(
    A: TupleSet, X: DefinableSet, D: Sequence[DefinableSet], r: RankFunction
) -> bool:
    """Stratum-stripping pseudo-density check for almost irreducible X.

    D must contain, up to almost equality, every almost-irreducible class
    set of X's arity.  Working down from rank dim(X) − 1, the strata of
    almost-irreducible sets in which the current A is pseudo-dense and that
    almost sit inside X are collected; more than the rank's infinity
    threshold many almost-equality classes decides pseudo-density positively,
    otherwise the representatives are stripped from A and the next stratum
    is examined.  At rank 0 the check ends with leftover-intersection
    nonemptiness.  Density tests run in the rank's scope class.
    """
    for Y in D:
        if Y.sorts != X.sorts:
            raise PseudoTopologyError(
                f"representative {Y.describe()} has arity {Y.sorts}, expected {X.sorts}"
            )
    dim_x = r.dim(X)
    if dim_x == MINUS_INF:
        return True
    if dim_x == 0:
        return X.extension <= frozenset(A)
    pool = list(enumerate_definable(X.host, r.scope, X.sorts))
    current = frozenset(A)
    for alpha in range(int(dim_x) - 1, -1, -1):
        stratum = [
            Y
            for Y in D
            if r.dim(Y) == alpha
            and almost_subset(Y, X, r)
            and _full_rank_miss(current, Y, r, pool, alpha) is None
        ]
        reps: list[DefinableSet] = []
        for Y in stratum:
            if not any(almost_equal(Y, rep, r) for rep in reps):
                reps.append(Y)
        if len(reps) > r.infinity_threshold:
            return True
        for rep in reps:
            current = current - rep.extension
    return bool(current & X.extension)


# ---------------------------------------------------------------------------
# Definable topologies (finite hosts, hence Alexandrov)


@dataclass(frozen=True)
class TopologyBasis:
    """Instances of one formula as an open basis over a finite host.

    Finite spaces make the topology Alexandrov: every point has a minimal
    open neighborhood (the intersection of the basic sets through it), and
    closure, interior, and density questions reduce to those neighborhoods.
    Build through :func:`topology_basis`, which validates the basis axioms.
    """

    host: FiniteStructure
    formula: Formula
    x: tuple[Var, ...]
    y: tuple[Var, ...]
    basics: tuple[frozenset, ...]

    @property
    def sorts(self) -> tuple[SortId, ...]:
        return tuple(v.sort for v in self.x)  # type: ignore[misc]

    def minimal_neighborhood(self, point: tuple[str, ...]) -> frozenset:
        through = [b for b in self.basics if point in b]
        if not through:
            raise PseudoTopologyError(f"basis does not cover the point {point}")
        out = set(through[0])
        for b in through[1:]:
            out &= b
        return frozenset(out)


def topology_basis(
    S: FiniteStructure, formula: Formula, x: Sequence[Var], y: Sequence[Var]
) -> TopologyBasis:
    """Instantiate and validate a basis formula: instances must cover every
    tuple and pairwise intersections must be unions of instances."""
    x, y = tuple(x), tuple(y)
    if not set(free_vars(formula)) <= set(x) | set(y):
        raise PseudoTopologyError("basis formula may only use x and y")
    instances: list[frozenset] = []
    seen = set()
    for b in S.tuples([v.sort for v in y]):  # type: ignore[arg-type]
        ext = _compute_extension(S, formula, x, dict(zip(y, b)))
        if ext and ext not in seen:
            seen.add(ext)
            instances.append(ext)
    basics = tuple(sorted(instances, key=lambda e: (len(e), sorted(e))))
    space = set(S.tuples([v.sort for v in x]))  # type: ignore[arg-type]
    covered = set()
    for b in basics:
        covered |= b
    if covered != space:
        missing = sorted(space - covered)[:3]
        raise PseudoTopologyError(f"basis does not cover the space; missing {missing}")
    for b1, b2 in itertools.combinations(basics, 2):
        inter = b1 & b2
        for p in inter:
            if not any(p in b3 and b3 <= inter for b3 in basics):
                raise PseudoTopologyError(
                    f"basis not closed under intersection at {p}: no basic set "
                    f"inside the overlap"
                )
    return TopologyBasis(S, formula, x, y, basics)


def product_basis(basis: TopologyBasis, n: int) -> TopologyBasis:
    """Box topology on n-tuples from an arity-1 basis: basic sets are
    products of basic sets, given by conjoining renamed copies of the
    formula."""
    if len(basis.x) != 1:
        raise PseudoTopologyError("product basis needs an arity-1 input basis")
    if n == 1:
        return basis
    xs = tuple(Var(f"_x{i}", basis.x[0].sort) for i in range(n))
    ys: list[Var] = []
    parts = []
    for i in range(n):
        rename: dict[Var, Var] = {basis.x[0]: xs[i]}
        copy_y = tuple(Var(f"_y{i}_{j}", v.sort) for j, v in enumerate(basis.y))
        for old, new in zip(basis.y, copy_y):
            rename[old] = new
        ys.extend(copy_y)
        parts.append(substitute(basis.formula, rename))
    return topology_basis(basis.host, conj(parts), xs, tuple(ys))


def topology_ops(
    X: DefinableSet, basis: TopologyBasis, r: RankFunction
) -> dict[str, DefinableSet]:
    """Closure, interior, frontier, essence, and residue of X.

    The essence keeps the points whose minimal neighborhood meets X in a
    full-rank set; the residue is the rest of X.  All five come back as
    tabulated definable sets over X's host.
    """
    if X.sorts != basis.sorts:
        raise PseudoTopologyError(f"basis arity {basis.sorts} does not match {X.sorts}")
    host = X.host
    space = list(host.tuples(X.sorts))
    closure = frozenset(
        p for p in space if basis.minimal_neighborhood(p) & X.extension
    )
    interior = frozenset(
        p for p in X.extension if basis.minimal_neighborhood(p) <= X.extension
    )
    frontier = closure - X.extension
    dim_x = r.dim(X)
    essence = frozenset(
        p
        for p in X.extension
        if r.dim(
            from_extension(host, X.sorts, basis.minimal_neighborhood(p) & X.extension)
        )
        == dim_x
    )
    residue = X.extension - essence
    mk = lambda ext: from_extension(host, X.sorts, ext)
    return {
        "closure": mk(closure),
        "interior": mk(interior),
        "frontier": mk(frontier),
        "essence": mk(essence),
        "residue": mk(residue),
    }


def dense(A: TupleSet, Y: DefinableSet, basis: TopologyBasis) -> bool:
    """Is A dense in Y for the relative topology?  On a finite host this is
    exactly: the minimal neighborhood of every point of Y meets A within Y."""
    A = frozenset(A)
    for p in Y.extension:
        if not (basis.minimal_neighborhood(p) & Y.extension & A):
            return False
    return True


@dataclass(frozen=True)
class DimCompatibilityReport:
    verdict: str
    violations: tuple[str, ...]
    sets_checked: int
    samples_checked: int

    def lines(self) -> list[str]:
        return ["OK"] if not self.violations else list(self.violations)

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": list(self.violations),
            "sets_checked": self.sets_checked,
            "samples_checked": self.samples_checked,
        }


def check_dim_compatible(
    S: FiniteStructure,
    basis: TopologyBasis,
    r: RankFunction,
    cls: DefinabilityClass,
    samples: int = 100,
    seed: int = 0,
) -> DimCompatibilityReport:
    """Frontier and residue inequalities over all class sets of the basis
    arity, then (on pass) sampled agreement between pseudo-density and
    density-in-essence.

    The inequalities read dim fr(X) < dim X and dim rs(X) < dim X; an empty
    frontier or residue satisfies its inequality vacuously.
    """
    violations: list[str] = []
    pool = list(enumerate_definable(S, cls, basis.sorts))
    for D in pool:
        ops = topology_ops(D, basis, r)
        fr, rs = ops["frontier"], ops["residue"]
        if fr.extension and not r.dim(fr) < r.dim(D):
            violations.append(
                f"frontier inequality fails on {D.describe()}: "
                f"dim fr = {r.dim(fr)}, dim X = {r.dim(D)}"
            )
        if rs.extension and not r.dim(rs) < r.dim(D):
            violations.append(
                f"residue inequality fails on {D.describe()}: "
                f"dim rs = {r.dim(rs)}, dim X = {r.dim(D)}"
            )
    sampled = 0
    if not violations and pool:
        rng = random.Random(seed)
        space = list(S.tuples(basis.sorts))
        for _ in range(samples):
            D = rng.choice(pool)
            A = frozenset(p for p in space if rng.random() < 0.5)
            sampled += 1
            pd = pseudo_dense(A, D, r, cls)
            dn = dense(A, topology_ops(D, basis, r)["essence"], basis)
            if pd != dn:
                violations.append(
                    f"pseudo-density/essence-density mismatch on {D.describe()} "
                    f"with |A|={len(A)}: pseudo_dense={pd}, dense-in-essence={dn}"
                )
    verdict = "ok" if not violations else "violation"
    return DimCompatibilityReport(verdict, tuple(violations), len(pool), sampled)


# ---------------------------------------------------------------------------
# Pseudo-cells


def _rank_drop(X: DefinableSet, union: Optional[DefinableSet], r: RankFunction) -> bool:
    if union is None:
        delta: frozenset = X.extension
        if not delta:
            return True
        return False
    sym = definable_symmetric_difference(X, union)
    if not sym.extension:
        return True
    return r.dim(sym) < r.dim(X)


def _graph_candidates(
    S: FiniteStructure, cls: DefinabilityClass, sorts: tuple[SortId, ...]
) -> Iterable[DefinableSet]:
    """Class-definable relations to probe as bijection graphs.

    A parameter-definable class with no size cap contains every subset, so
    its graphs are tabulated directly; streaming the class enumeration over
    pair sorts is hopeless once more than a handful of blocks exist.
    """
    if cls.params == "all" and cls.size_cap is None:
        space = sorted(S.tuples(sorts))
        half = len(sorts) // 2
        lefts = sorted({t[:half] for t in space})
        rights = sorted({t[half:] for t in space})
        for m in range(1, min(len(lefts), len(rights)) + 1):
            for dom in itertools.combinations(lefts, m):
                for img in itertools.permutations(rights, m):
                    ext = frozenset(a + b for a, b in zip(dom, img))
                    yield from_extension(S, sorts, ext)
        return
    yield from enumerate_definable(S, cls, sorts)


def decompose_pseudo_cells(
    X: DefinableSet,
    C: Sequence[DefinableSet],
    r: RankFunction,
    mode: str = "decomposition",
    cls: Optional[DefinabilityClass] = None,
):
    """Cover X by cells up to lower-rank error: the smallest subfamily
    (X^j) of C with dim(X △ ⋃X^j) < dim X, an empty symmetric difference
    counting as a success.

    Decomposition mode returns the cells themselves.  Patching mode searches
    class-definable graphs of bijections from candidate domains onto cells
    (rank preservation checked per patch) and returns (domain, cell, graph)
    triples whose domains achieve the rank drop.  None when exhaustive
    search fails.
    """
    if mode == "decomposition":
        for m in range(0, len(C) + 1):
            for combo in itertools.combinations(C, m):
                union: Optional[DefinableSet] = None
                for D in combo:
                    union = D if union is None else definable_union(union, D)
                if _rank_drop(X, union, r):
                    return list(combo)
        return None
    if mode == "patching":
        scope = cls if cls is not None else r.scope
        patches: list[tuple[DefinableSet, DefinableSet, DefinableSet]] = []
        for Y in C:
            graph_sorts = X.sorts + Y.sorts
            for g in _graph_candidates(X.host, scope, graph_sorts):
                pairs = [(t[: len(X.sorts)], t[len(X.sorts) :]) for t in g.extension]
                domain = frozenset(a for a, _ in pairs)
                image = frozenset(b for _, b in pairs)
                if len(pairs) != len(domain) or len(pairs) != len(image):
                    continue
                if image != Y.extension:
                    continue
                dom_set = from_extension(X.host, X.sorts, domain)
                if r.dim(dom_set) != r.dim(Y):
                    continue
                patches.append((dom_set, Y, g))
        if len(patches) > 14:
            raise PseudoTopologyError(
                f"{len(patches)} candidate patches; narrow the cell list or class"
            )
        for m in range(0, len(patches) + 1):
            for combo in itertools.combinations(patches, m):
                union = None
                for dom, _, _ in combo:
                    union = dom if union is None else definable_union(union, dom)
                if _rank_drop(X, union, r):
                    return list(combo)
        return None
    raise ValueError(f"unknown mode {mode}")
