"""Separation and interpolation over language families.

A family of definable sets X_i (each definable in a member language) is
*separated* within an intersection-language class when there are class sets
X^i ⊇ X_i with empty intersection.  A structure is interpolative within the
checked classes when empty intersection and separation coincide; the checker
reports every family with empty intersection that the intersection class
cannot separate.

Interpolant construction follows the standard reduction of the n-ary case
to pairwise interpolation: ψ splits off the last formula, and the remaining
family is corrected by ¬ψ and handled recursively.  The brute-force pairwise
oracle decides existence exactly on the bounded model class by comparing
rank-k behaviors of the intersection reducts, then synthesizes a witness
sentence from a canonical stream, falling back to a disjunction of
characteristic sentences when the stream-size budget runs out.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence

from .logic import (
    And,
    Bot,
    Eq,
    Exists,
    Forall,
    Formula,
    LanguageFamily,
    Not,
    Or,
    Rel,
    Signature,
    SignatureError,
    SortId,
    Top,
    Var,
    conj,
    disj,
    free_vars,
    print_formula,
    signature_union,
)
from .semantics import (
    DefinabilityClass,
    DefinableSet,
    FiniteStructure,
    definable_atoms,
    definable_extensions,
    ef_color,
    enumerate_definable,
    enumerate_structures,
    evaluate,
    reduct,
)


class InterpolationError(ValueError):
    """No interpolant exists within the class for a required pair."""


class JointConsistencyError(ValueError):
    """A pair handed to the pairwise oracle has a joint model."""

    def __init__(self, message: str, model: FiniteStructure):
        super().__init__(message)
        self.model = model


# ---------------------------------------------------------------------------
# Separation


@dataclass(frozen=True)
class SeparationCertificate:
    """Intersection-class supersets with empty intersection, one per input."""

    sets: tuple[DefinableSet, ...]
    inputs: tuple[DefinableSet, ...]

    def verify(self) -> bool:
        if len(self.sets) != len(self.inputs):
            return False
        for sup, x in zip(self.sets, self.inputs):
            if not x.extension <= sup.extension:
                return False
        common = set(self.sets[0].extension)
        for sup in self.sets[1:]:
            common &= sup.extension
        return not common


def _common_host_check(Xs: Sequence[DefinableSet]) -> tuple[tuple[SortId, ...], FiniteStructure]:
    if not Xs:
        raise ValueError("need at least one definable set")
    sorts = Xs[0].sorts
    universes = Xs[0].host.universes
    for X in Xs[1:]:
        if X.sorts != sorts:
            raise ValueError(f"mixed arities {X.sorts} and {sorts}")
        for s in sorts:
            if X.host.universes.get(s) != universes.get(s):
                raise ValueError("definable sets live over different universes")
    return sorts, Xs[0].host


def find_separation(
    Xs: Sequence[DefinableSet], cls: DefinabilityClass
) -> Optional[SeparationCertificate]:
    """First (in the class's canonical enumeration order) separating family
    of class supersets, or None when exhaustive search finds none.

    Without a size cap the decision runs on the class's atom blocks: the
    componentwise-minimal class supersets have empty intersection iff any
    separation exists, and the certificate is then built greedily so each
    chosen set is the earliest stream set completable to a separation.
    """
    sorts, host = _common_host_check(Xs)
    if cls.size_cap is None:
        blocks = definable_atoms(host, cls, sorts)
        hats = [
            frozenset(t for b in blocks if b & X.extension for t in b) for X in Xs
        ]
        common = set(hats[0])
        for h in hats[1:]:
            common &= h
        if common:
            return None
        chosen: list[DefinableSet] = []
        for i, X in enumerate(Xs):
            suffix = hats[i + 1 :]
            for cand in enumerate_definable(host, cls, sorts):
                if not X.extension <= cand.extension:
                    continue
                inter = set(cand.extension)
                for c in chosen:
                    inter &= c.extension
                for h in suffix:
                    inter &= h
                if not inter:
                    chosen.append(cand)
                    break
            else:
                raise RuntimeError("separation decided positive but greedy build failed")
        return SeparationCertificate(tuple(chosen), tuple(Xs))

    candidates = list(enumerate_definable(host, cls, sorts))

    def search(i: int, inter: Optional[frozenset]) -> Optional[list[DefinableSet]]:
        if i == len(Xs):
            return [] if not inter else None
        for cand in candidates:
            if not Xs[i].extension <= cand.extension:
                continue
            nxt = cand.extension if inter is None else inter & cand.extension
            rest = search(i + 1, nxt)
            if rest is not None:
                return [cand, *rest]
        return None

    found = search(0, None)
    if found is None:
        return None
    return SeparationCertificate(tuple(found), tuple(Xs))


# ---------------------------------------------------------------------------
# Interpolativity checking


@dataclass(frozen=True)
class FamilyViolation:
    """A member-definable family with empty intersection but no separation."""

    labels: tuple[str, ...]
    sets: tuple[DefinableSet, ...]

    def line(self) -> str:
        fams = ";".join(d.describe() for d in self.sets)
        params = ";".join(
            ",".join(f"{v.name}={e}" for v, e in d.params) or "-" for d in self.sets
        )
        return f"VIOLATION family={fams} params={params} intersection=EMPTY separation=NONE"

    def data(self) -> dict:
        return {
            "labels": list(self.labels),
            "family": [print_formula(d.formula) for d in self.sets],
            "params": [{v.name: e for v, e in d.params} for d in self.sets],
            "intersection": "EMPTY",
            "separation": "NONE",
        }


@dataclass(frozen=True)
class InterpolativityReport:
    verdict: str  # "ok" or "violation"
    violations: tuple[FamilyViolation, ...]
    families_checked: int

    def lines(self) -> list[str]:
        if not self.violations:
            return ["OK"]
        return [v.line() for v in self.violations]

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": [v.data() for v in self.violations],
            "families_checked": self.families_checked,
        }


def check_interpolative(
    S: FiniteStructure,
    fam: LanguageFamily,
    cap_class: DefinabilityClass,
    member_classes: Mapping[str, DefinabilityClass],
    max_family: Optional[int] = None,
    max_arity: int = 1,
) -> InterpolativityReport:
    """Scan member-definable families for interpolativity failures.

    For every tuple arity up to ``max_arity`` and every choice of at most
    ``max_family`` distinct member languages, each family of candidate sets
    (one per chosen member, enumerated within that member's class on the
    member reduct) with empty intersection must be separated within the
    intersection class; families that are not are reported.  The verdict is
    relative to the classes searched.
    """
    if max_family is None:
        max_family = len(fam.labels)
    violations: list[FamilyViolation] = []
    checked = 0
    sort_pool = S.signature.sorts
    member_sets: dict[tuple[str, tuple[SortId, ...]], list[DefinableSet]] = {}
    for n in range(1, max_arity + 1):
        for sorts in itertools.product(sort_pool, repeat=n):
            for label in fam.labels:
                base = reduct(S, fam[label])
                member_sets[(label, sorts)] = list(
                    enumerate_definable(base, member_classes[label], sorts)
                )
            for m in range(1, max_family + 1):
                for labels in itertools.combinations(fam.labels, m):
                    pools = [member_sets[(label, sorts)] for label in labels]
                    for family in itertools.product(*pools):
                        checked += 1
                        common = set(family[0].extension)
                        for d in family[1:]:
                            common &= d.extension
                        if common:
                            continue
                        if find_separation(list(family), cap_class) is None:
                            violations.append(FamilyViolation(labels, tuple(family)))
    verdict = "ok" if not violations else "violation"
    return InterpolativityReport(verdict, tuple(violations), checked)


# ---------------------------------------------------------------------------
# Interpolants


@dataclass(frozen=True)
class InterpolantFamily:
    """Intersection-language sentences φ^i with φ_i ⊨ φ^i and ⋀φ^i
    unsatisfiable (relative to the oracle's model class)."""

    formulas: tuple[Formula, ...]


PairwiseOracle = Callable[[Formula, Signature, Formula, Signature], Formula]


def nary_interpolants(
    items: Sequence[tuple[Formula, Signature]], oracle: PairwiseOracle
) -> InterpolantFamily:
    """Reduce an n-ary jointly inconsistent family to pairwise interpolation.

    For n = 1 the family is ⊥ (the input must itself be inconsistent).  For
    n ≥ 2, ψ interpolates between the conjunction of the first n−1 formulas
    and the last one; the first n−1 are corrected by ¬ψ and recursed on, and
    the results are rejoined as ψ ∨ θ^i, with ¬ψ for the last member.
    """
    if not items:
        raise ValueError("need at least one formula")
    for phi, _sig in items:
        if free_vars(phi):
            raise ValueError("interpolation inputs must be sentences")
    if len(items) == 1:
        return InterpolantFamily((Bot(),))
    left = conj([phi for phi, _ in items[:-1]])
    left_sig = signature_union([sig for _, sig in items[:-1]])
    last, last_sig = items[-1]
    psi = oracle(left, left_sig, last, last_sig)
    corrected = [(And(phi, Not(psi)), sig) for phi, sig in items[:-1]]
    theta = nary_interpolants(corrected, oracle).formulas
    return InterpolantFamily((*[Or(psi, th) for th in theta], Not(psi)))


def characteristic_sentence(S: FiniteStructure, qrank: int) -> Formula:
    """A sentence true exactly in the structures that agree with S on all
    sentences of quantifier rank ≤ qrank.  Function symbols are not
    supported (term depth is unbounded); relational signatures only."""
    if S.signature.functions:
        raise ValueError("characteristic sentences need a relation-only signature")

    def chi(tup: tuple[tuple[SortId, str], ...], k: int) -> Formula:
        # one variable per tuple position, so a repeated element shows up as
        # an equality atom rather than silently collapsing
        xs = [Var(f"_b{i}", s) for i, (s, _) in enumerate(tup)]
        atoms: list[Formula] = []
        for i, (s1, e1) in enumerate(tup):
            for j in range(i + 1, len(tup)):
                s2, e2 = tup[j]
                if s1 == s2:
                    atom = Eq(xs[i], xs[j])
                    atoms.append(atom if e1 == e2 else Not(atom))
        for r in sorted(S.signature.relations):
            arg_sorts = S.signature.relations[r]
            pools = [[i for i, (s, _) in enumerate(tup) if s == want] for want in arg_sorts]
            for combo in itertools.product(*pools):
                atom = Rel(r, tuple(xs[i] for i in combo))
                holds = tuple(tup[i][1] for i in combo) in S.relations[r]
                atoms.append(atom if holds else Not(atom))
        base = conj(atoms)
        if k == 0:
            return base
        parts: list[Formula] = [base]
        for s in S.signature.sorts:
            fresh = Var(f"_b{len(tup)}", s)
            subs: dict[str, Formula] = {}
            for e in S.universes[s]:
                sub = chi((*tup, (s, e)), k - 1)
                subs[print_formula(sub)] = sub
            for sub in subs.values():
                parts.append(Exists(fresh, sub))
            if subs:
                parts.append(Forall(fresh, disj(list(subs.values()))))
            else:
                parts.append(Forall(fresh, Bot()))
        return conj(parts)

    return chi((), qrank)


def pairwise_interpolant_bruteforce(
    phi1: Formula,
    sig1: Signature,
    phi2: Formula,
    sig2: Signature,
    max_size: int,
    cap_class: DefinabilityClass,
    stream_budget: int = 12,
) -> Optional[Formula]:
    """Exact interpolation over all structures with sorts of size ≤ max_size.

    Raises :class:`JointConsistencyError` when the two sentences have a joint
    model in that class.  Returns a ``cap_class``-signature sentence ψ of
    quantifier rank ≤ the class rank with φ1 ⊨ ψ and φ2 ⊨ ¬ψ over the class,
    or None when no class sentence can separate (for a size-capped class,
    when nothing within the cap separates).
    """
    if free_vars(phi1) or free_vars(phi2):
        raise ValueError("interpolation inputs must be sentences")
    union = signature_union([sig1, sig2])
    cap_sig = cap_class.signature
    if not cap_sig.is_reduct_of(union):
        raise SignatureError("intersection class signature must embed in the union")
    models_a: list[FiniteStructure] = []
    models_b: list[FiniteStructure] = []
    for M in enumerate_structures(union, max_size):
        a = evaluate(M, phi1)
        b = evaluate(M, phi2)
        if a and b:
            raise JointConsistencyError(
                f"joint model found: {M.name} with universes {dict(M.universes)}", M
            )
        if a:
            models_a.append(M)
        elif b:
            models_b.append(M)

    k = cap_class.max_qrank
    colors_a = {ef_color(reduct(M, cap_sig), (), (), k) for M in models_a}
    colors_b = {ef_color(reduct(M, cap_sig), (), (), k) for M in models_b}
    if colors_a & colors_b:
        return None

    def separates(psi: Formula) -> bool:
        return all(evaluate(M, psi) for M in models_a) and not any(
            evaluate(M, psi) for M in models_b
        )

    from .semantics import formula_stream

    budget = cap_class.size_cap if cap_class.size_cap is not None else stream_budget
    for size, psi in formula_stream(cap_sig, (), k):
        if size > budget:
            break
        if separates(psi):
            return psi
    if cap_class.size_cap is not None:
        return None
    if cap_sig.functions:
        raise InterpolationError(
            "no small interpolant found and the intersection language has "
            "function symbols, so characteristic-sentence synthesis is unavailable"
        )
    seen: dict[str, Formula] = {}
    for M in models_a:
        chi = characteristic_sentence(reduct(M, cap_sig), k)
        seen.setdefault(print_formula(chi), chi)
    psi = disj(list(seen.values()))
    if not separates(psi):
        raise RuntimeError("characteristic-sentence synthesis failed; internal error")
    return psi


def bruteforce_oracle(
    max_size: int, cap_class: DefinabilityClass, stream_budget: int = 12
) -> PairwiseOracle:
    """Package the brute-force search as an oracle for nary_interpolants."""

    def oracle(phi1: Formula, sig1: Signature, phi2: Formula, sig2: Signature) -> Formula:
        psi = pairwise_interpolant_bruteforce(
            phi1, sig1, phi2, sig2, max_size, cap_class, stream_budget
        )
        if psi is None:
            raise InterpolationError(
                f"no interpolant within the class for "
                f"{print_formula(phi1)} | {print_formula(phi2)}"
            )
        return psi

    return oracle


# ---------------------------------------------------------------------------
# Joint consistency


@dataclass(frozen=True)
class JcpViolation:
    """Compatible member types over a common base with no common realization."""

    base: tuple[tuple[SortId, str], ...]
    sort: SortId
    representatives: tuple[tuple[str, str], ...]  # (label, witness element)

    def line(self) -> str:
        base = ",".join(f"{e}:{s}" for s, e in self.base) or "-"
        reps = ";".join(f"{label}~{e}" for label, e in self.representatives)
        return f"VIOLATION base={base} sort={self.sort} types={reps} realization=NONE"

    def data(self) -> dict:
        return {
            "base": [f"{e}:{s}" for s, e in self.base],
            "sort": self.sort,
            "types": [{"label": l, "witness": e} for l, e in self.representatives],
            "realization": "NONE",
        }


@dataclass(frozen=True)
class JcpReport:
    verdict: str
    violations: tuple[JcpViolation, ...]
    bases_checked: int

    def lines(self) -> list[str]:
        if not self.violations:
            return ["OK"]
        return [v.line() for v in self.violations]

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": [v.data() for v in self.violations],
            "bases_checked": self.bases_checked,
        }


def check_jcp(
    S: FiniteStructure,
    fam: LanguageFamily,
    B_bound: int = 1,
    qrank: int = 0,
    closure: Optional[str] = None,
    closure_threshold: Optional[int] = None,
) -> JcpReport:
    """Joint consistency over finite bases: whenever one rank-``qrank`` type
    per member language is chosen over a base B, all with the same
    intersection-language restriction, some element must realize them all.

    Bases are element sets of size ≤ ``B_bound``; with ``closure`` set to
    ``dcl`` or ``acl`` only bases closed under the family closure operator
    are considered.  Types are taken in one free variable, per sort.
    """
    from .semantics import ccl, expand_with_constants

    elements = list(S.elements())
    bases: list[tuple[tuple[SortId, str], ...]] = []
    for n in range(B_bound + 1):
        for combo in itertools.combinations(elements, n):
            if closure is not None:
                closed = ccl(S, fam, combo, closure, closure_threshold)
                if closed != frozenset(combo):
                    continue
            bases.append(combo)

    violations: list[JcpViolation] = []
    for base in bases:
        consts = {f"_k{i}": se for i, se in enumerate(base)}
        expanded: dict[Optional[str], FiniteStructure] = {
            None: expand_with_constants(reduct(S, fam.intersection), consts)
        }
        for label in fam.labels:
            expanded[label] = expand_with_constants(reduct(S, fam[label]), consts)
        for sort in S.signature.sorts:
            classes: dict[str, list[list[str]]] = {}
            cap_color = {
                e: ef_color(expanded[None], (sort,), (e,), qrank)
                for e in S.universes[sort]
            }
            for label in fam.labels:
                by_color: dict[tuple, list[str]] = {}
                for e in S.universes[sort]:
                    by_color.setdefault(
                        ef_color(expanded[label], (sort,), (e,), qrank), []
                    ).append(e)
                classes[label] = sorted(by_color.values(), key=lambda c: c[0])
            for chosen in itertools.product(*(classes[l] for l in fam.labels)):
                caps = {cap_color[c[0]] for c in chosen}
                if len(caps) != 1:
                    continue
                common = set(chosen[0])
                for c in chosen[1:]:
                    common &= set(c)
                if not common:
                    violations.append(
                        JcpViolation(
                            base,
                            sort,
                            tuple((l, c[0]) for l, c in zip(fam.labels, chosen)),
                        )
                    )
    verdict = "ok" if not violations else "violation"
    return JcpReport(verdict, tuple(violations), len(bases))
