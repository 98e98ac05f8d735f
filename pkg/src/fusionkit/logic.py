"""Multi-sorted first-order syntax.

Signatures declare sorts, relation symbols and function symbols (constants are
0-ary functions).  A language family is an indexed family of signatures whose
pairwise intersections all agree; the family carries its common intersection
and union signatures.  Terms and formulas are immutable trees; well-sortedness
is checked against a signature, not baked into the constructors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

SortId = str


class SignatureError(ValueError):
    """A signature or language family violates a structural constraint."""


class SortMismatchError(ValueError):
    """A term or formula is not well-sorted against its signature."""


# ---------------------------------------------------------------------------
# Signatures and language families


@dataclass(frozen=True)
class Signature:
    """Sorts plus sorted relation and function declarations.

    ``relations`` maps a relation name to its argument-sort tuple;
    ``functions`` maps a function name to ``(argument sorts, result sort)``.
    A constant is a function with an empty argument tuple.
    """

    sorts: tuple[SortId, ...]
    relations: Mapping[str, tuple[SortId, ...]] = field(default_factory=dict)
    functions: Mapping[str, tuple[tuple[SortId, ...], SortId]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.sorts)) != len(self.sorts):
            raise SignatureError(f"duplicate sort names in {self.sorts}")
        names = list(self.relations) + list(self.functions)
        if len(set(names)) != len(names):
            raise SignatureError("relation and function names must be pairwise distinct")
        known = set(self.sorts)
        for name, arg_sorts in self.relations.items():
            for s in arg_sorts:
                if s not in known:
                    raise SignatureError(f"relation {name} mentions undeclared sort {s}")
        for name, (arg_sorts, res) in self.functions.items():
            for s in (*arg_sorts, res):
                if s not in known:
                    raise SignatureError(f"function {name} mentions undeclared sort {s}")

    def symbols(self) -> frozenset[str]:
        return frozenset(self.relations) | frozenset(self.functions)

    def declaration(self, name: str):
        if name in self.relations:
            return ("rel", self.relations[name])
        if name in self.functions:
            return ("fun", self.functions[name])
        raise SignatureError(f"unknown symbol {name}")

    def restrict(self, symbols: Iterable[str]) -> "Signature":
        """Reduct signature keeping all sorts and the given symbols."""
        keep = set(symbols)
        missing = keep - self.symbols()
        if missing:
            raise SignatureError(f"cannot restrict to unknown symbols {sorted(missing)}")
        return Signature(
            self.sorts,
            {n: a for n, a in self.relations.items() if n in keep},
            {n: d for n, d in self.functions.items() if n in keep},
        )

    def is_reduct_of(self, other: "Signature") -> bool:
        """True when this signature keeps other's sorts and a subset of its symbols."""
        if tuple(self.sorts) != tuple(other.sorts):
            return False
        return all(
            n in other.relations and other.relations[n] == a for n, a in self.relations.items()
        ) and all(
            n in other.functions and other.functions[n] == d for n, d in self.functions.items()
        )


def _merge_declarations(sigs: Sequence[Signature]):
    """Union the declarations of compatible signatures; error on a clash."""
    sorts: list[SortId] = []
    for sig in sigs:
        for s in sig.sorts:
            if s not in sorts:
                sorts.append(s)
    relations: dict[str, tuple[SortId, ...]] = {}
    functions: dict[str, tuple[tuple[SortId, ...], SortId]] = {}
    for sig in sigs:
        for n, a in sig.relations.items():
            if n in functions or (n in relations and relations[n] != a):
                raise SignatureError(f"conflicting declarations for symbol {n}")
            relations[n] = a
        for n, d in sig.functions.items():
            if n in relations or (n in functions and functions[n] != d):
                raise SignatureError(f"conflicting declarations for symbol {n}")
            functions[n] = d
    return tuple(sorts), relations, functions


def signature_union(sigs: Sequence[Signature]) -> Signature:
    sorts, relations, functions = _merge_declarations(sigs)
    return Signature(sorts, relations, functions)


def signature_intersection(a: Signature, b: Signature) -> Signature:
    """Common reduct: shared sorts (in a's order) and shared identical declarations."""
    sorts = tuple(s for s in a.sorts if s in b.sorts)
    relations = {n: d for n, d in a.relations.items() if b.relations.get(n) == d}
    functions = {n: d for n, d in a.functions.items() if b.functions.get(n) == d}
    return Signature(sorts, relations, functions)


@dataclass(frozen=True)
class LanguageFamily:
    """Finitely many labelled signatures with a common pairwise intersection.

    The defining constraint: for every two distinct labels i, j the shared
    symbols of L_i and L_j are exactly the symbols of the intersection
    signature.  Build instances through :func:`validate_family`.
    """

    labels: tuple[str, ...]
    signatures: Mapping[str, Signature]
    intersection: Signature
    union: Signature

    def __getitem__(self, label: str) -> Signature:
        return self.signatures[label]

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)


def validate_family(members: Sequence[tuple[str, Signature]]) -> LanguageFamily:
    """Check the pairwise-intersection constraint and assemble the family.

    Raises SignatureError when two member signatures share a symbol that a
    third pair does not, when a shared symbol is declared differently, or
    when labels repeat.
    """
    labels = tuple(lbl for lbl, _ in members)
    if len(set(labels)) != len(labels):
        raise SignatureError(f"duplicate family labels in {labels}")
    if not members:
        raise SignatureError("a language family needs at least one member")
    sigs = dict(members)
    union = signature_union([sig for _, sig in members])
    inter = sigs[labels[0]]
    for lbl in labels[1:]:
        inter = signature_intersection(inter, sigs[lbl])
    for i, j in itertools.combinations(labels, 2):
        pair = signature_intersection(sigs[i], sigs[j])
        if pair.symbols() != inter.symbols():
            extra = sorted(pair.symbols() ^ inter.symbols())
            raise SignatureError(
                f"members {i} and {j} share symbols {extra} missing from some other pair"
            )
    return LanguageFamily(labels, sigs, inter, union)


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Var:
    """A sorted variable.  ``sort`` is None only transiently inside the parser."""

    name: str
    sort: Optional[SortId] = None


@dataclass(frozen=True)
class App:
    """Function application; a constant is an application with no arguments."""

    func: str
    args: tuple["Term", ...] = ()


Term = Union[Var, App]


def term_sort(t: Term, sig: Signature) -> SortId:
    if isinstance(t, Var):
        if t.sort is None:
            raise SortMismatchError(f"variable {t.name} has no sort")
        return t.sort
    decl = sig.functions.get(t.func)
    if decl is None:
        raise SignatureError(f"unknown function symbol {t.func}")
    return decl[1]


def term_vars(t: Term) -> tuple[Var, ...]:
    """Variables of a term in first-occurrence order."""
    out: list[Var] = []

    def walk(u: Term) -> None:
        if isinstance(u, Var):
            if u not in out:
                out.append(u)
        else:
            for a in u.args:
                walk(a)

    walk(t)
    return tuple(out)


def check_term(t: Term, sig: Signature) -> SortId:
    """Check well-sortedness of a term, returning its sort."""
    if isinstance(t, Var):
        if t.sort is None:
            raise SortMismatchError(f"variable {t.name} has no sort")
        if t.sort not in sig.sorts:
            raise SortMismatchError(f"variable {t.name} has undeclared sort {t.sort}")
        return t.sort
    decl = sig.functions.get(t.func)
    if decl is None:
        raise SignatureError(f"unknown function symbol {t.func}")
    arg_sorts, res = decl
    if len(t.args) != len(arg_sorts):
        raise SortMismatchError(f"{t.func} expects {len(arg_sorts)} arguments, got {len(t.args)}")
    for a, want in zip(t.args, arg_sorts):
        got = check_term(a, sig)
        if got != want:
            raise SortMismatchError(f"argument of {t.func} has sort {got}, expected {want}")
    return res


# ---------------------------------------------------------------------------
# Formulas

@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"


Formula = Union[Top, Bot, Eq, Rel, Not, And, Or, Implies, Exists, Forall]

_BINARY = {And: "&", Or: "|", Implies: "->"}


def conj(parts: Sequence[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ⊤."""
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Sequence[Formula]) -> Formula:
    """Left-nested disjunction; the empty disjunction is ⊥."""
    if not parts:
        return Bot()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def exists_many(vars_: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(vars_):
        body = Exists(v, body)
    return body


def forall_many(vars_: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(vars_):
        body = Forall(v, body)
    return body


def subformulas(phi: Formula) -> Iterator[Formula]:
    """All subformulas, preorder."""
    yield phi
    if isinstance(phi, Not):
        yield from subformulas(phi.sub)
    elif isinstance(phi, (And, Or, Implies)):
        yield from subformulas(phi.lhs)
        yield from subformulas(phi.rhs)
    elif isinstance(phi, (Exists, Forall)):
        yield from subformulas(phi.body)


def formula_size(phi: Formula) -> int:
    """Node count, with every term node included."""
    def tsize(t: Term) -> int:
        if isinstance(t, Var):
            return 1
        return 1 + sum(tsize(a) for a in t.args)

    if isinstance(phi, (Top, Bot)):
        return 1
    if isinstance(phi, Eq):
        return 1 + tsize(phi.lhs) + tsize(phi.rhs)
    if isinstance(phi, Rel):
        return 1 + sum(tsize(a) for a in phi.args)
    if isinstance(phi, Not):
        return 1 + formula_size(phi.sub)
    if isinstance(phi, (And, Or, Implies)):
        return 1 + formula_size(phi.lhs) + formula_size(phi.rhs)
    return 1 + formula_size(phi.body)


def free_vars(phi: Formula) -> tuple[Var, ...]:
    """Free variables in first-occurrence order."""
    out: list[Var] = []

    def walk(f: Formula, bound: frozenset[Var]) -> None:
        if isinstance(f, Eq):
            for t in (f.lhs, f.rhs):
                for v in term_vars(t):
                    if v not in bound and v not in out:
                        out.append(v)
        elif isinstance(f, Rel):
            for t in f.args:
                for v in term_vars(t):
                    if v not in bound and v not in out:
                        out.append(v)
        elif isinstance(f, Not):
            walk(f.sub, bound)
        elif isinstance(f, (And, Or, Implies)):
            walk(f.lhs, bound)
            walk(f.rhs, bound)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound | {f.var})

    walk(phi, frozenset())
    return tuple(out)


def formula_symbols(phi: Formula) -> frozenset[str]:
    """All relation and function symbols occurring in the formula."""
    out: set[str] = set()

    def twalk(t: Term) -> None:
        if isinstance(t, App):
            out.add(t.func)
            for a in t.args:
                twalk(a)

    for sub in subformulas(phi):
        if isinstance(sub, Eq):
            twalk(sub.lhs)
            twalk(sub.rhs)
        elif isinstance(sub, Rel):
            out.add(sub.name)
            for a in sub.args:
                twalk(a)
    return frozenset(out)


def quantifier_rank(phi: Formula) -> int:
    if isinstance(phi, (Top, Bot, Eq, Rel)):
        return 0
    if isinstance(phi, Not):
        return quantifier_rank(phi.sub)
    if isinstance(phi, (And, Or, Implies)):
        return max(quantifier_rank(phi.lhs), quantifier_rank(phi.rhs))
    return 1 + quantifier_rank(phi.body)


def check_formula(phi: Formula, sig: Signature) -> None:
    """Raise unless the formula is well-sorted against the signature."""
    if isinstance(phi, (Top, Bot)):
        return
    if isinstance(phi, Eq):
        ls = check_term(phi.lhs, sig)
        rs = check_term(phi.rhs, sig)
        if ls != rs:
            raise SortMismatchError(f"equality between sorts {ls} and {rs}")
        return
    if isinstance(phi, Rel):
        decl = sig.relations.get(phi.name)
        if decl is None:
            raise SignatureError(f"unknown relation symbol {phi.name}")
        if len(phi.args) != len(decl):
            raise SortMismatchError(
                f"{phi.name} expects {len(decl)} arguments, got {len(phi.args)}"
            )
        for a, want in zip(phi.args, decl):
            got = check_term(a, sig)
            if got != want:
                raise SortMismatchError(f"argument of {phi.name} has sort {got}, expected {want}")
        return
    if isinstance(phi, Not):
        check_formula(phi.sub, sig)
        return
    if isinstance(phi, (And, Or, Implies)):
        check_formula(phi.lhs, sig)
        check_formula(phi.rhs, sig)
        return
    if isinstance(phi, (Exists, Forall)):
        if phi.var.sort is None or phi.var.sort not in sig.sorts:
            raise SortMismatchError(f"binder {phi.var.name} has bad sort {phi.var.sort}")
        check_formula(phi.body, sig)
        return
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Substitution

def _fresh_like(v: Var, taken: set[str]) -> Var:
    name = v.name
    while name in taken:
        name += "'"
    return Var(name, v.sort)


def subst_term(t: Term, theta: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return theta.get(t, t)
    return App(t.func, tuple(subst_term(a, theta) for a in t.args))


def substitute(
    phi: Formula,
    theta: Mapping[Var, Term],
    sig: Optional[Signature] = None,
) -> Formula:
    """Capture-avoiding simultaneous substitution of terms for free variables.

    Binders whose variable would capture a substituted term are renamed with
    primes.  When a signature is supplied the substitution is checked to be
    sort-correct; variable-for-variable replacements are checked regardless.
    """
    for v, t in theta.items():
        if isinstance(t, Var):
            if v.sort is not None and t.sort is not None and v.sort != t.sort:
                raise SortMismatchError(f"cannot substitute {t.name}:{t.sort} for {v.name}:{v.sort}")
        elif sig is not None:
            got = check_term(t, sig)
            if v.sort is not None and got != v.sort:
                raise SortMismatchError(f"cannot substitute a {got}-term for {v.name}:{v.sort}")

    def walk(f: Formula, theta: Mapping[Var, Term]) -> Formula:
        if isinstance(f, (Top, Bot)):
            return f
        if isinstance(f, Eq):
            return Eq(subst_term(f.lhs, theta), subst_term(f.rhs, theta))
        if isinstance(f, Rel):
            return Rel(f.name, tuple(subst_term(a, theta) for a in f.args))
        if isinstance(f, Not):
            return Not(walk(f.sub, theta))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(walk(f.lhs, theta), walk(f.rhs, theta))
        if isinstance(f, (Exists, Forall)):
            inner = {v: t for v, t in theta.items() if v != f.var}
            if not inner:
                return type(f)(f.var, f.body)
            clash = {
                w.name
                for t in inner.values()
                for w in term_vars(t)
            }
            var, body = f.var, f.body
            if var.name in clash:
                taken = clash | {w.name for w in free_vars(body)} | {v.name for v in inner}
                renamed = _fresh_like(var, taken)
                body = walk(body, {var: renamed})
                var = renamed
            return type(f)(var, walk(body, inner))
        raise TypeError(f"not a formula: {f!r}")

    return walk(phi, dict(theta))


# ---------------------------------------------------------------------------
# Syntactic classification

@dataclass(frozen=True)
class SyntacticClass:
    """Shape flags for a formula; flags are monotone where inclusion holds

    (atomic flat implies flat literal implies flat; flat implies eflat-shaped;
    quantifier-free implies existential implies be-shaped).  ``witness_block``
    is the leading existential prefix when the formula is be-shaped.
    """

    atomic_flat: bool
    flat_literal: bool
    flat: bool
    eflat_shaped: bool
    quantifier_free: bool
    existential: bool
    be_shaped: bool
    witness_block: tuple[Var, ...] = ()


def is_atomic_flat(phi: Formula) -> bool:
    """x=y, R(x1..xn), or f(x1..xn)=y with every argument a bare variable."""
    if isinstance(phi, Eq):
        if isinstance(phi.lhs, Var) and isinstance(phi.rhs, Var):
            return True
        if isinstance(phi.lhs, App) and isinstance(phi.rhs, Var):
            return all(isinstance(a, Var) for a in phi.lhs.args)
        return False
    if isinstance(phi, Rel):
        return all(isinstance(a, Var) for a in phi.args)
    return False


def is_flat_literal(phi: Formula) -> bool:
    if isinstance(phi, Not):
        return is_atomic_flat(phi.sub)
    return is_atomic_flat(phi)


def flat_conjuncts(phi: Formula) -> Optional[tuple[Formula, ...]]:
    """The literal list of a flat formula, or None.

    A flat formula is a conjunction tree whose leaves are all flat literals;
    a bare ⊤ counts as the empty conjunction, but ⊤ under an ``&`` does not
    (it is not a literal).
    """
    if isinstance(phi, Top):
        return ()

    def walk(f: Formula) -> Optional[list[Formula]]:
        if isinstance(f, And):
            left = walk(f.lhs)
            right = walk(f.rhs)
            if left is None or right is None:
                return None
            return left + right
        if is_flat_literal(f):
            return [f]
        return None

    lits = walk(phi)
    return None if lits is None else tuple(lits)


def is_flat(phi: Formula) -> bool:
    return flat_conjuncts(phi) is not None


def _strip_exists(phi: Formula) -> tuple[tuple[Var, ...], Formula]:
    block: list[Var] = []
    while isinstance(phi, Exists):
        block.append(phi.var)
        phi = phi.body
    return tuple(block), phi


def is_quantifier_free(phi: Formula) -> bool:
    return not any(isinstance(s, (Exists, Forall)) for s in subformulas(phi))


def classify(phi: Formula) -> SyntacticClass:
    block, matrix = _strip_exists(phi)
    qf = is_quantifier_free(phi)
    existential = is_quantifier_free(matrix)
    return SyntacticClass(
        atomic_flat=is_atomic_flat(phi),
        flat_literal=is_flat_literal(phi),
        flat=is_flat(phi),
        eflat_shaped=is_flat(matrix),
        quantifier_free=qf,
        existential=existential,
        be_shaped=existential,
        witness_block=block if existential else (),
    )


# ---------------------------------------------------------------------------
# Printing.  Precedence, tightest first: ~ and quantifiers, &, |, ->.
# & and | associate left, -> associates right; parentheses are minimal.

PREC_IMPLIES = 1
PREC_OR = 2
PREC_AND = 3
PREC_UNARY = 4
PREC_ATOM = 5


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.func
    return f"{t.func}({','.join(print_term(a) for a in t.args)})"


def _print(phi: Formula, context: int) -> str:
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bot):
        return "false"
    if isinstance(phi, Eq):
        return f"{print_term(phi.lhs)}={print_term(phi.rhs)}"
    if isinstance(phi, Rel):
        if not phi.args:
            return phi.name
        return f"{phi.name}({','.join(print_term(a) for a in phi.args)})"
    if isinstance(phi, Not):
        return f"~{_print(phi.sub, PREC_UNARY)}"
    if isinstance(phi, (Exists, Forall)):
        word = "exists" if isinstance(phi, Exists) else "forall"
        s = f"{word} {phi.var.name}:{phi.var.sort}. {_print(phi.body, PREC_UNARY)}"
        return f"({s})" if context > PREC_UNARY else s
    if isinstance(phi, (And, Or)):
        prec = PREC_AND if isinstance(phi, And) else PREC_OR
        op = _BINARY[type(phi)]
        s = f"{_print(phi.lhs, prec)} {op} {_print(phi.rhs, prec + 1)}"
        return f"({s})" if context > prec else s
    if isinstance(phi, Implies):
        s = f"{_print(phi.lhs, PREC_IMPLIES + 1)} -> {_print(phi.rhs, PREC_IMPLIES)}"
        return f"({s})" if context > PREC_IMPLIES else s
    raise TypeError(f"not a formula: {phi!r}")


def print_formula(phi: Formula) -> str:
    """Canonical rendering with minimal parentheses.

    A quantifier binds as tightly as negation, so a conjunction directly
    under a binder is parenthesized: ``exists y:V. (f(x)=y & R(y))``.
    Free variables are printed without sort annotations.
    """
    return _print(phi, 0)


# ---------------------------------------------------------------------------
# Theories

@dataclass(frozen=True)
class Theory:
    """A named axiom list over a signature."""

    name: str
    signature: Signature
    axioms: tuple[Formula, ...] = ()

    def __post_init__(self) -> None:
        for ax in self.axioms:
            check_formula(ax, self.signature)
            if free_vars(ax):
                names = [v.name for v in free_vars(ax)]
                raise SortMismatchError(f"axiom of {self.name} has free variables {names}")
