"""Flat and bounded-existential normal forms, and signature translations.

A flat formula is a conjunction of literals whose atoms are ``x=y``,
``R(x1..xn)``, or ``f(x1..xn)=y`` with bare-variable arguments.  Every
quantifier-free formula is equivalent to a finite disjunction of
existentially quantified flat formulas whose witnesses are uniquely
determined by the free variables (each witness names a term value); that
unique-witness property is what the rest of the toolkit relies on, and
``verify_functional`` checks it against concrete structures.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .logic import (
    And,
    App,
    Bot,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    LanguageFamily,
    Not,
    Or,
    Rel,
    Signature,
    SortId,
    SortMismatchError,
    Term,
    Theory,
    Top,
    Var,
    classify,
    conj,
    disj,
    exists_many,
    flat_conjuncts,
    forall_many,
    formula_symbols,
    free_vars,
    is_flat,
    is_flat_literal,
    is_quantifier_free,
    print_formula,
    print_term,
    substitute,
    term_sort,
    term_vars,
    validate_family,
)
from .semantics import FiniteStructure, evaluate, formula_stream, reduct


class NormalFormError(ValueError):
    """Input outside the operation's syntactic precondition."""


# ---------------------------------------------------------------------------
# Existential flat formulas


@dataclass(frozen=True)
class EFlatFormula:
    """An existentially quantified flat formula ∃w̄ μ with free variables x.

    Constructions in this module keep the defining property that the witness
    block has at most one satisfying tuple per assignment of ``x`` (each
    witness names a term value); hand-built instances can be checked with
    :func:`verify_functional`.
    """

    x: tuple[Var, ...]
    witnesses: tuple[Var, ...]
    matrix: Formula
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not is_flat(self.matrix):
            raise NormalFormError(f"matrix is not flat: {print_formula(self.matrix)}")
        if set(self.x) & set(self.witnesses):
            raise NormalFormError("witness variables must be disjoint from free variables")
        allowed = set(self.x) | set(self.witnesses)
        stray = [v.name for v in free_vars(self.matrix) if v not in allowed]
        if stray:
            raise NormalFormError(f"matrix mentions undeclared variables {stray}")

    def to_formula(self) -> Formula:
        return exists_many(self.witnesses, self.matrix)


class _Fresh:
    """Deterministic ``_w0, _w1, ...`` witness names avoiding a taken set."""

    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)
        self.counter = 0

    def var(self, sort: SortId) -> Var:
        name = f"_w{self.counter}"
        self.counter += 1
        while name in self.taken:
            name += "'"
        self.taken.add(name)
        return Var(name, sort)


def _flatten_into(
    t: Term, target: Var, sig: Signature, fresh: _Fresh,
    literals: list[Formula], witnesses: list[Var],
) -> None:
    """Append literals forcing ``t = target``, creating witnesses for nested
    arguments.  The final literal for an application is emitted last."""
    if isinstance(t, Var):
        literals.append(Eq(t, target))
        return
    arg_vars: list[Var] = []
    for a in t.args:
        if isinstance(a, Var):
            arg_vars.append(a)
        else:
            w = fresh.var(term_sort(a, sig))
            witnesses.append(w)
            _flatten_into(a, w, sig, fresh, literals, witnesses)
            arg_vars.append(w)
    literals.append(Eq(App(t.func, tuple(arg_vars)), target))


def flatten_term(t: Term, result: Var, sig: Signature) -> EFlatFormula:
    """The defining formula φ_t(x̄, y): ∃-flat, true iff t evaluates to y.

    A bare variable yields ``x=y`` with no witnesses; an application gets a
    witness for every argument that is itself an application, recursively.
    """
    sort = term_sort(t, sig)
    if result.sort is None:
        result = Var(result.name, sort)
    elif result.sort != sort:
        raise SortMismatchError(f"term has sort {sort}, result variable {result.sort}")
    fresh = _Fresh({v.name for v in (*term_vars(t), result)})
    literals: list[Formula] = []
    witnesses: list[Var] = []
    _flatten_into(t, result, sig, fresh, literals, witnesses)
    matrix = conj(literals)
    x = tuple(v for v in free_vars(matrix) if v not in witnesses)
    return EFlatFormula(x, tuple(witnesses), matrix, (f"term {print_term(t)}",))


def literal_to_eflat(lit: Formula, sig: Signature) -> EFlatFormula:
    """Translate a possibly negated atom with arbitrary terms into ∃-flat
    form; an already-flat literal comes back unchanged with no witnesses."""
    if is_flat_literal(lit):
        return EFlatFormula(free_vars(lit), (), lit, (print_formula(lit),))

    negated = isinstance(lit, Not)
    atom = lit.sub if negated else lit
    if not isinstance(atom, (Eq, Rel)):
        raise NormalFormError(f"not a literal: {print_formula(lit)}")

    fresh = _Fresh(v.name for v in free_vars(lit))
    literals: list[Formula] = []
    witnesses: list[Var] = []

    def value_of(t: Term) -> Var:
        if isinstance(t, Var):
            return t
        w = fresh.var(term_sort(t, sig))
        witnesses.append(w)
        _flatten_into(t, w, sig, fresh, literals, witnesses)
        return w

    if isinstance(atom, Eq) and isinstance(atom.lhs, App) and isinstance(atom.rhs, Var):
        # f(t̄)=y: flatten the application onto y itself; when negated, the
        # argument chains stay positive and only the final link is negated.
        _flatten_into(atom.lhs, atom.rhs, sig, fresh, literals, witnesses)
        if negated:
            literals.append(Not(literals.pop()))
    else:
        if isinstance(atom, Eq):
            core: Formula = Eq(value_of(atom.lhs), value_of(atom.rhs))
        else:
            core = Rel(atom.name, tuple(value_of(a) for a in atom.args))
        literals.append(Not(core) if negated else core)

    matrix = conj(literals)
    x = tuple(v for v in free_vars(matrix) if v not in witnesses)
    return EFlatFormula(x, tuple(witnesses), matrix, (print_formula(lit),))


def eflat_conjoin(parts: Sequence[EFlatFormula]) -> EFlatFormula:
    """Conjoin by concatenating witness blocks and matrices.

    Witnesses are renamed apart to ``_w0, _w1, ...`` in order; the empty
    conjunction is ⊤ with no witnesses.
    """
    x: list[Var] = []
    for p in parts:
        for v in p.x:
            if v not in x:
                x.append(v)
    fresh = _Fresh(v.name for v in x)
    witnesses: list[Var] = []
    literals: list[Formula] = []
    provenance: list[str] = []
    for p in parts:
        theta = {}
        for w in p.witnesses:
            v = fresh.var(w.sort)
            theta[w] = v
            witnesses.append(v)
        matrix = substitute(p.matrix, theta) if theta else p.matrix
        literals.extend(flat_conjuncts(matrix) or ())
        provenance.extend(p.provenance)
    return EFlatFormula(tuple(x), tuple(witnesses), conj(literals), tuple(provenance))


# ---------------------------------------------------------------------------
# Quantifier-free formulas to disjunctions of ∃-flat formulas


def _nnf(phi: Formula, positive: bool = True) -> Formula:
    if isinstance(phi, Top):
        return Top() if positive else Bot()
    if isinstance(phi, Bot):
        return Bot() if positive else Top()
    if isinstance(phi, (Eq, Rel)):
        return phi if positive else Not(phi)
    if isinstance(phi, Not):
        return _nnf(phi.sub, not positive)
    if isinstance(phi, And):
        parts = (_nnf(phi.lhs, positive), _nnf(phi.rhs, positive))
        return And(*parts) if positive else Or(*parts)
    if isinstance(phi, Or):
        parts = (_nnf(phi.lhs, positive), _nnf(phi.rhs, positive))
        return Or(*parts) if positive else And(*parts)
    if isinstance(phi, Implies):
        return _nnf(Or(Not(phi.lhs), phi.rhs), positive)
    raise NormalFormError(f"not quantifier-free: {print_formula(phi)}")


def _dnf(phi: Formula) -> list[list[Formula]]:
    if isinstance(phi, Top):
        return [[]]
    if isinstance(phi, Bot):
        return []
    if isinstance(phi, (Eq, Rel, Not)):
        return [[phi]]
    if isinstance(phi, Or):
        return _dnf(phi.lhs) + _dnf(phi.rhs)
    if isinstance(phi, And):
        return [l + r for l in _dnf(phi.lhs) for r in _dnf(phi.rhs)]
    raise NormalFormError(f"unexpected connective in negation normal form: {phi!r}")


def qf_to_eflat_disjunction(
    phi: Formula, sig: Signature, max_disjuncts: Optional[int] = None
) -> list[EFlatFormula]:
    """Equivalent disjunction of ∃-flat formulas, one per DNF disjunct.

    ⊥ gives the empty list and ⊤ a single trivial disjunct.  When the DNF
    would exceed ``max_disjuncts`` the translation refuses rather than
    truncate.
    """
    if not is_quantifier_free(phi):
        raise NormalFormError(f"not quantifier-free: {print_formula(phi)}")
    disjuncts = _dnf(_nnf(phi))
    if max_disjuncts is not None and len(disjuncts) > max_disjuncts:
        raise NormalFormError(f"{len(disjuncts)} disjuncts exceed the cap of {max_disjuncts}")
    return [
        eflat_conjoin([literal_to_eflat(l, sig) for l in lits]) for lits in disjuncts
    ]


def qf_to_dnf(phi: Formula) -> Formula:
    """Disjunctive normal form of a quantifier-free formula."""
    if not is_quantifier_free(phi):
        raise NormalFormError(f"not quantifier-free: {print_formula(phi)}")
    return disj([conj(lits) for lits in _dnf(_nnf(phi))])


def verify_functional(ef: EFlatFormula, structures: Iterable[FiniteStructure]) -> bool:
    """Check the ≤1-witness property of an ∃-flat formula on given hosts."""
    return _max_witnesses(ef.x, ef.witnesses, ef.matrix, structures) <= 1


def _max_witnesses(
    x: Sequence[Var],
    block: Sequence[Var],
    matrix: Formula,
    structures: Iterable[FiniteStructure],
) -> int:
    worst = 0
    for S in structures:
        for tup in S.tuples([v.sort for v in x]):  # type: ignore[list-item]
            a = dict(zip(x, tup))
            count = 0
            for wtup in S.tuples([v.sort for v in block]):  # type: ignore[list-item]
                a.update(zip(block, wtup))
                if evaluate(S, matrix, a):
                    count += 1
            worst = max(worst, count)
    return worst


# ---------------------------------------------------------------------------
# Bounded-existential formulas


@dataclass(frozen=True)
class BoundedFormula:
    """∃ȳ ψ with ψ quantifier-free, carrying a witness-count bound valid
    across a named scope of structures (a theory or structure class).
    Quantifier-free formulas are bounded with bound 1 by convention."""

    formula: Formula
    bound: int
    scope: str

    def __post_init__(self) -> None:
        if self.bound < 0:
            raise NormalFormError("bound must be nonnegative")
        if not classify(self.formula).be_shaped:
            raise NormalFormError(
                f"not an existentially quantified quantifier-free formula: "
                f"{print_formula(self.formula)}"
            )

    @property
    def witness_block(self) -> tuple[Var, ...]:
        return classify(self.formula).witness_block


def qf_to_bounded(phi: Formula, scope: str) -> BoundedFormula:
    if not is_quantifier_free(phi):
        raise NormalFormError(f"not quantifier-free: {print_formula(phi)}")
    return BoundedFormula(phi, 1, scope)


def eflat_to_bounded(ef: EFlatFormula, scope: str) -> BoundedFormula:
    return BoundedFormula(ef.to_formula(), 1, scope)


def be_conjoin(parts: Sequence[BoundedFormula]) -> BoundedFormula:
    """Conjoin bounded-existential formulas; the bounds multiply.

    All parts must share a scope, since a bound is only meaningful there.
    """
    if not parts:
        return BoundedFormula(Top(), 1, "any")
    scopes = {p.scope for p in parts}
    if len(scopes) > 1:
        raise NormalFormError(f"cannot conjoin across scopes {sorted(scopes)}")
    free: list[Var] = []
    for p in parts:
        for v in free_vars(p.formula):
            if v not in free:
                free.append(v)
    fresh = _Fresh(v.name for v in free)
    block: list[Var] = []
    matrices: list[Formula] = []
    bound = 1
    for p in parts:
        body = p.formula
        theta = {}
        while isinstance(body, Exists):
            v = fresh.var(body.var.sort)
            theta[body.var] = v
            block.append(v)
            body = body.body
        if theta:
            body = substitute(body, theta)
        matrices.append(body)
        bound *= p.bound
    return BoundedFormula(exists_many(block, conj(matrices)), bound, parts[0].scope)


def verify_bound(bf: BoundedFormula, structures: Iterable[FiniteStructure]) -> bool:
    """Check the declared witness bound on concrete structures."""
    block = bf.witness_block
    body = bf.formula
    while isinstance(body, Exists):
        body = body.body
    x = tuple(free_vars(bf.formula))
    return _max_witnesses(x, block, body, structures) <= bf.bound


# ---------------------------------------------------------------------------
# Splitting flat formulas across a language family


def split_flat(
    phi: Formula,
    fam: LanguageFamily,
    duplicate_to: Optional[Iterable[str]] = None,
) -> dict[Optional[str], Formula]:
    """Partition a flat formula's literals by the member language owning them.

    A flat literal mentions at most one non-equality symbol, so each literal
    lands either in a unique member bucket or, when its symbols all lie in
    the intersection language, in the ``None`` bucket; ``duplicate_to``
    copies the intersection literals into the named member buckets as well.
    Empty buckets hold ⊤.
    """
    lits = flat_conjuncts(phi)
    if lits is None:
        raise NormalFormError(f"not flat: {print_formula(phi)}")
    inter = fam.intersection.symbols()
    buckets: dict[Optional[str], list[Formula]] = {None: []}
    for label in fam.labels:
        buckets[label] = []
    for lit in lits:
        syms = formula_symbols(lit)
        if syms <= inter:
            buckets[None].append(lit)
            continue
        owners = [label for label in fam.labels if syms <= fam[label].symbols()]
        if not owners:
            raise NormalFormError(f"literal {print_formula(lit)} fits no member language")
        buckets[owners[0]].append(lit)
    if duplicate_to:
        for label in duplicate_to:
            if label not in fam.labels:
                raise NormalFormError(f"unknown family label {label!r}")
            buckets[label].extend(buckets[None])
    return {key: conj(ls) for key, ls in buckets.items()}


# ---------------------------------------------------------------------------
# Relationalization


@dataclass(frozen=True)
class RelationalTranslation:
    """Formula translator into the graph language, with the name map and a
    structure transport for checking the translation on finite hosts."""

    base: Signature
    target: Signature
    graph_names: Mapping[str, str]

    def __call__(self, phi: Formula) -> Formula:
        return self._walk(phi)

    def _walk(self, phi: Formula) -> Formula:
        if isinstance(phi, (Top, Bot)):
            return phi
        if isinstance(phi, (Eq, Rel)):
            return self._atom(phi)
        if isinstance(phi, Not):
            return Not(self._walk(phi.sub))
        if isinstance(phi, (And, Or, Implies)):
            return type(phi)(self._walk(phi.lhs), self._walk(phi.rhs))
        if isinstance(phi, (Exists, Forall)):
            return type(phi)(phi.var, self._walk(phi.body))
        raise TypeError(f"not a formula: {phi!r}")

    def _atom(self, atom: Formula) -> Formula:
        # Unnest terms, then turn every function link into its graph atom.
        # Negation commutes with the translation because the witness chain
        # always has exactly one value (functions are total and single
        # valued), so translating atoms positively is sound.
        ef = literal_to_eflat(atom, self.base)
        fixed = [self._flat_literal(l) for l in flat_conjuncts(ef.matrix) or ()]
        return exists_many(ef.witnesses, conj(fixed))

    def _flat_literal(self, lit: Formula) -> Formula:
        negated = isinstance(lit, Not)
        inner = lit.sub if negated else lit
        if isinstance(inner, Eq) and isinstance(inner.lhs, App):
            new: Formula = Rel(self.graph_names[inner.lhs.func], (*inner.lhs.args, inner.rhs))
            return Not(new) if negated else new
        return lit

    def structure(self, S: FiniteStructure) -> FiniteStructure:
        """Transport a base-signature structure to the graph signature."""
        relations = {r: S.relations[r] for r in self.base.relations}
        for f, rname in self.graph_names.items():
            relations[rname] = frozenset(
                (*args, val) for args, val in S.functions[f].items()
            )
        return FiniteStructure(S.name, self.target, dict(S.universes), relations, {})


def relationalize(T: Theory) -> tuple[Theory, RelationalTranslation]:
    """Replace every function symbol by its graph relation.

    The output theory holds the translated axioms plus totality and
    uniqueness axioms for each graph relation.
    """
    sig = T.signature
    taken = set(sig.symbols())
    graph_names: dict[str, str] = {}
    for f in sig.functions:
        name = f"R_{f}"
        while name in taken:
            name += "'"
        taken.add(name)
        graph_names[f] = name
    relations = dict(sig.relations)
    for f, (arg_sorts, res) in sig.functions.items():
        relations[graph_names[f]] = (*arg_sorts, res)
    target = Signature(sig.sorts, relations, {})
    tr = RelationalTranslation(sig, target, graph_names)

    axioms: list[Formula] = [tr(ax) for ax in T.axioms]
    for f, (arg_sorts, res) in sig.functions.items():
        xs = tuple(Var(f"_a{i}", s) for i, s in enumerate(arg_sorts))
        y = Var("_v", res)
        y2 = Var("_v'", res)
        graph = graph_names[f]
        axioms.append(forall_many(xs, Exists(y, Rel(graph, (*xs, y)))))
        axioms.append(
            forall_many(
                (*xs, y, y2),
                Implies(And(Rel(graph, (*xs, y)), Rel(graph, (*xs, y2))), Eq(y, y2)),
            )
        )
    return Theory(f"{T.name}_relational", target, tuple(axioms)), tr


# ---------------------------------------------------------------------------
# Definitional expansions


def normalize_formula(phi: Formula) -> Formula:
    """Canonical form: conjunction and disjunction chains flattened and
    sorted by print string, other nodes normalized structurally."""

    def chain(f: Formula, node) -> list[Formula]:
        if isinstance(f, node):
            return chain(f.lhs, node) + chain(f.rhs, node)
        return [normalize_formula(f)]

    if isinstance(phi, And):
        return conj(sorted(chain(phi, And), key=print_formula))
    if isinstance(phi, Or):
        return disj(sorted(chain(phi, Or), key=print_formula))
    if isinstance(phi, Not):
        return Not(normalize_formula(phi.sub))
    if isinstance(phi, Implies):
        return Implies(normalize_formula(phi.lhs), normalize_formula(phi.rhs))
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, normalize_formula(phi.body))
    return phi


@dataclass(frozen=True)
class DefinitionalExpansion:
    """Per-member fresh relation symbols with their defining formulas.

    New symbols are distinct across members, so the expanded family has the
    same intersection language as the original.  Each axiom is the universal
    closure of both implications between a fresh atom and its definition.
    """

    family: LanguageFamily
    expanded_family: LanguageFamily
    definitions: Mapping[str, Mapping[str, Formula]]
    axioms: Mapping[str, tuple[Formula, ...]]

    def expand_structure(self, S: FiniteStructure) -> FiniteStructure:
        """Interpret every fresh symbol by evaluating its definition on the
        matching member reduct of a union-signature structure."""
        relations = dict(S.relations)
        new_rels: dict[str, tuple[SortId, ...]] = {}
        for label in self.family.labels:
            base = reduct(S, self.family[label])
            for sym, phi in self.definitions[label].items():
                arg_sorts = self.expanded_family[label].relations[sym]
                xs = tuple(Var(f"_x{i}", s) for i, s in enumerate(arg_sorts))
                ext = {
                    tup
                    for tup in base.tuples(arg_sorts)
                    if evaluate(base, phi, dict(zip(xs, tup)))
                }
                relations[sym] = frozenset(ext)
                new_rels[sym] = arg_sorts
        sig = S.signature
        expanded_sig = Signature(sig.sorts, {**sig.relations, **new_rels}, dict(sig.functions))
        return FiniteStructure(
            S.name, expanded_sig, dict(S.universes), relations, dict(S.functions)
        )


def morleyize(
    fam: LanguageFamily,
    theories: Mapping[str, Theory],
    qrank: int,
    max_arity: int = 1,
    size_cap: int = 7,
) -> DefinitionalExpansion:
    """Adjoin a fresh relation symbol for each member-language formula of
    quantifier rank at most ``qrank``, up to canonical form.

    Canonical forms alone leave infinitely many formulas, so enumeration is
    additionally bounded by AST size; the cap is part of the contract and
    the fresh-symbol count grows quickly with it.
    """
    definitions: dict[str, dict[str, Formula]] = {}
    axioms: dict[str, tuple[Formula, ...]] = {}
    expanded_members: list[tuple[str, Signature]] = []
    for label in fam.labels:
        sig = fam[label]
        seen: set[str] = set()
        defs: dict[str, Formula] = {}
        decls: dict[str, tuple[SortId, ...]] = {}
        axs: list[Formula] = list(theories[label].axioms) if label in theories else []
        counter = 0
        arities: list[tuple[SortId, ...]] = [()]
        for n in range(1, max_arity + 1):
            arities.extend(itertools.product(sig.sorts, repeat=n))
        for sorts in arities:
            xs = tuple(Var(f"_x{i}", s) for i, s in enumerate(sorts))
            for size, phi in formula_stream(sig, xs, qrank):
                if size > size_cap:
                    break
                key = print_formula(normalize_formula(phi))
                if key in seen:
                    continue
                seen.add(key)
                sym = f"D_{label}_{counter}"
                counter += 1
                defs[sym] = phi
                decls[sym] = sorts
                atom = Rel(sym, xs)
                axs.append(forall_many(xs, And(Implies(atom, phi), Implies(phi, atom))))
        definitions[label] = defs
        axioms[label] = tuple(axs)
        expanded_members.append(
            (label, Signature(sig.sorts, {**sig.relations, **decls}, dict(sig.functions)))
        )
    expanded = validate_family(expanded_members)
    if expanded.intersection.symbols() != fam.intersection.symbols():
        raise NormalFormError("expansion changed the intersection language")
    return DefinitionalExpansion(fam, expanded, definitions, axioms)
