"""Finite multi-sorted structures and definability.

The definable-set machinery is exact, not heuristic: for a definability
class with no size cap, two tuples satisfy the same class formulas iff they
have the same rank-k back-and-forth color (with the allowed parameters
adjoined as constants), so the class family is precisely the family of
unions of color blocks.  For capped classes the family is the extension set
of the finitely many formulas within the cap.  Enumeration streams formulas
in (size, print-string) order and deduplicates by extension, so "first" and
"exhaustive" have reproducible meanings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Collection, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .logic import (
    And,
    App,
    Bot,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Rel,
    Signature,
    SignatureError,
    SortId,
    SortMismatchError,
    Term,
    Top,
    Var,
    check_formula,
    conj,
    disj,
    formula_size,
    free_vars,
    print_formula,
)

Assignment = Mapping[Var, str]

# Materializing an uncapped class family is refused beyond this many sets.
FAMILY_LIMIT = 1 << 16


class EvaluationError(ValueError):
    """Evaluation hit an unassigned variable or an unknown symbol."""


# ---------------------------------------------------------------------------
# Structures


@dataclass(frozen=True)
class FiniteStructure:
    """A finite structure: universes per sort, relation sets, total functions.

    Empty universes are allowed; a function into an empty sort with a
    nonempty domain is rejected because it cannot be total.
    """

    name: str
    signature: Signature
    universes: Mapping[SortId, tuple[str, ...]]
    relations: Mapping[str, frozenset[tuple[str, ...]]] = field(default_factory=dict)
    functions: Mapping[str, Mapping[tuple[str, ...], str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sig = self.signature
        if set(self.universes) != set(sig.sorts):
            raise SignatureError(
                f"structure {self.name} must interpret exactly the sorts {sig.sorts}"
            )
        for s, elems in self.universes.items():
            if len(set(elems)) != len(elems):
                raise SignatureError(f"duplicate elements in sort {s} of {self.name}")
        if set(self.relations) != set(sig.relations):
            raise SignatureError(f"structure {self.name} must interpret every relation symbol")
        if set(self.functions) != set(sig.functions):
            raise SignatureError(f"structure {self.name} must interpret every function symbol")
        for r, tuples in self.relations.items():
            arg_sorts = sig.relations[r]
            for tup in tuples:
                if len(tup) != len(arg_sorts) or any(
                    e not in self.universes[s] for e, s in zip(tup, arg_sorts)
                ):
                    raise SignatureError(f"relation {r} of {self.name} holds bad tuple {tup}")
        for f, table in self.functions.items():
            arg_sorts, res = sig.functions[f]
            domain = set(itertools.product(*(self.universes[s] for s in arg_sorts)))
            if set(table) != domain:
                raise SignatureError(f"function {f} of {self.name} is not total")
            for tup, val in table.items():
                if val not in self.universes[res]:
                    raise SignatureError(f"function {f} of {self.name} maps {tup} outside {res}")

    def elements(self) -> Iterator[tuple[SortId, str]]:
        for s in self.signature.sorts:
            for e in self.universes[s]:
                yield (s, e)

    def tuples(self, sorts: Sequence[SortId]) -> Iterator[tuple[str, ...]]:
        return itertools.product(*(self.universes[s] for s in sorts))


def reduct(S: FiniteStructure, sig: Signature, name: Optional[str] = None) -> FiniteStructure:
    """Forget symbols (and possibly sorts); declarations must match exactly."""
    if not sig.is_reduct_of(S.signature):
        raise SignatureError(f"{sig.sorts}/{sorted(sig.symbols())} is not a reduct shape of {S.name}")
    return FiniteStructure(
        name or S.name,
        sig,
        {s: S.universes[s] for s in sig.sorts},
        {r: S.relations[r] for r in sig.relations},
        {f: S.functions[f] for f in sig.functions},
    )


def expand_with_constants(
    S: FiniteStructure, constants: Mapping[str, tuple[SortId, str]]
) -> FiniteStructure:
    """Adjoin fresh 0-ary functions naming the given elements."""
    sig = S.signature
    for c, (s, e) in constants.items():
        if c in sig.symbols():
            raise SignatureError(f"constant name {c} clashes with a signature symbol")
        if e not in S.universes[s]:
            raise SignatureError(f"constant {c} names absent element {e}:{s}")
    new_sig = Signature(
        sig.sorts,
        dict(sig.relations),
        {**sig.functions, **{c: ((), s) for c, (s, _) in constants.items()}},
    )
    return FiniteStructure(
        S.name,
        new_sig,
        dict(S.universes),
        dict(S.relations),
        {**S.functions, **{c: {(): e} for c, (_, e) in constants.items()}},
    )


# ---------------------------------------------------------------------------
# Evaluation


def eval_term(S: FiniteStructure, t: Term, a: Assignment) -> str:
    if isinstance(t, Var):
        if t in a:
            return a[t]
        raise EvaluationError(f"unassigned variable {t.name}:{t.sort}")
    table = S.functions.get(t.func)
    if table is None:
        raise EvaluationError(f"unknown function symbol {t.func}")
    return table[tuple(eval_term(S, arg, a) for arg in t.args)]


def evaluate(S: FiniteStructure, phi: Formula, a: Optional[Assignment] = None) -> bool:
    """Truth of a formula under an assignment of its free variables."""
    a = dict(a or {})

    def rec(f: Formula, a: dict[Var, str]) -> bool:
        if isinstance(f, Top):
            return True
        if isinstance(f, Bot):
            return False
        if isinstance(f, Eq):
            return eval_term(S, f.lhs, a) == eval_term(S, f.rhs, a)
        if isinstance(f, Rel):
            tuples = S.relations.get(f.name)
            if tuples is None:
                raise EvaluationError(f"unknown relation symbol {f.name}")
            return tuple(eval_term(S, arg, a) for arg in f.args) in tuples
        if isinstance(f, Not):
            return not rec(f.sub, a)
        if isinstance(f, And):
            return rec(f.lhs, a) and rec(f.rhs, a)
        if isinstance(f, Or):
            return rec(f.lhs, a) or rec(f.rhs, a)
        if isinstance(f, Implies):
            return (not rec(f.lhs, a)) or rec(f.rhs, a)
        if isinstance(f, (Exists, Forall)):
            if f.var.sort not in S.universes:
                raise EvaluationError(f"binder sort {f.var.sort} not in structure")
            saved = a.get(f.var)
            hit = f.var in a
            result = isinstance(f, Forall)
            for e in S.universes[f.var.sort]:
                a[f.var] = e
                holds = rec(f.body, a)
                if isinstance(f, Exists) and holds:
                    result = True
                    break
                if isinstance(f, Forall) and not holds:
                    result = False
                    break
            if hit:
                a[f.var] = saved  # type: ignore[assignment]
            else:
                a.pop(f.var, None)
            return result
        raise TypeError(f"not a formula: {f!r}")

    return rec(phi, a)


# ---------------------------------------------------------------------------
# Definable sets


@dataclass(frozen=True)
class DefinableSet:
    """A set carved out of a host structure by a formula and parameters.

    ``x`` are the tuple variables in order, ``params`` assigns the remaining
    free variables, ``extension`` is the realized set of element tuples.
    """

    host: FiniteStructure
    formula: Formula
    x: tuple[Var, ...]
    params: tuple[tuple[Var, str], ...]
    extension: frozenset[tuple[str, ...]]

    @property
    def sorts(self) -> tuple[SortId, ...]:
        return tuple(v.sort for v in self.x)  # type: ignore[misc]

    def verify(self) -> bool:
        """Recompute the extension from the formula; True when it matches."""
        return self.extension == _compute_extension(self.host, self.formula, self.x, dict(self.params))

    def describe(self) -> str:
        ps = ",".join(f"{v.name}={e}" for v, e in self.params)
        return f"{print_formula(self.formula)}" + (f" [{ps}]" if ps else "")


def _compute_extension(
    S: FiniteStructure, phi: Formula, x: Sequence[Var], params: Assignment
) -> frozenset[tuple[str, ...]]:
    out = []
    base = dict(params)
    for tup in S.tuples([v.sort for v in x]):  # type: ignore[list-item]
        base.update(zip(x, tup))
        if evaluate(S, phi, base):
            out.append(tup)
    return frozenset(out)


def extension(
    S: FiniteStructure,
    phi: Formula,
    params: Optional[Assignment] = None,
    x: Optional[Sequence[Var]] = None,
) -> DefinableSet:
    """Build the definable set of a formula; free variables not assigned by
    ``params`` become the tuple variables, in first-occurrence order."""
    params = dict(params or {})
    if x is None:
        x = tuple(v for v in free_vars(phi) if v not in params)
    else:
        x = tuple(x)
    missing = [v.name for v in free_vars(phi) if v not in params and v not in x]
    if missing:
        raise EvaluationError(f"free variables {missing} neither tuple variables nor parameters")
    for v, e in params.items():
        if v.sort not in S.universes or e not in S.universes[v.sort]:
            raise EvaluationError(f"parameter {v.name}={e} is not an element of sort {v.sort}")
    return DefinableSet(
        S, phi, x, tuple(sorted(params.items(), key=lambda p: p[0].name)),
        _compute_extension(S, phi, x, params),
    )


def from_extension(
    S: FiniteStructure, sorts: Sequence[SortId], ext: Iterable[tuple[str, ...]]
) -> DefinableSet:
    """Tabulate a set as a disjunction of point descriptions.

    The defining formula lists each tuple as a conjunction of equalities
    with parameters, so ``verify()`` holds by construction.
    """
    ext = sorted(set(ext))
    x = tuple(Var(f"_x{i}", s) for i, s in enumerate(sorts))
    params: dict[Var, str] = {}
    by_elem: dict[tuple[SortId, str], Var] = {}
    disjuncts = []
    for tup in ext:
        if len(tup) != len(sorts):
            raise EvaluationError(f"tuple {tup} does not match sorts {tuple(sorts)}")
        eqs = []
        for xi, s, e in zip(x, sorts, tup):
            key = (s, e)
            if key not in by_elem:
                p = Var(f"_p{len(by_elem)}", s)
                by_elem[key] = p
                params[p] = e
            eqs.append(Eq(xi, by_elem[key]))
        disjuncts.append(conj(eqs))
    phi = disj(disjuncts)
    return DefinableSet(
        S, phi, x, tuple(sorted(params.items(), key=lambda p: p[0].name)), frozenset(ext)
    )


# ---------------------------------------------------------------------------
# Definability classes


@dataclass(frozen=True)
class DefinabilityClass:
    """Formulas over a signature with bounded quantifier rank, an allowed
    parameter pool ("all", "none", or an explicit element-id set), and an
    optional formula-size cap.  Without a cap the class means *all* formulas
    of the given rank; with a cap it means exactly the formulas within it."""

    signature: Signature
    max_qrank: int = 0
    params: Union[str, frozenset[str]] = "none"
    size_cap: Optional[int] = None

    def __post_init__(self) -> None:
        if isinstance(self.params, str) and self.params not in ("all", "none"):
            raise ValueError(f"params must be 'all', 'none', or a set, got {self.params!r}")
        if self.max_qrank < 0:
            raise ValueError("max_qrank must be nonnegative")
        if self.size_cap is not None and self.size_cap < 1:
            raise ValueError("size_cap must be positive")

    def allowed_params(self, S: FiniteStructure, sort: SortId) -> tuple[str, ...]:
        universe = S.universes.get(sort, ())
        if self.params == "all":
            return tuple(universe)
        if self.params == "none":
            return ()
        return tuple(e for e in universe if e in self.params)


def _param_constants(
    S: FiniteStructure, cls: DefinabilityClass
) -> tuple[FiniteStructure, dict[str, tuple[SortId, str]]]:
    """Reduct to the class signature with allowed parameters as constants."""
    base = reduct(S, cls.signature)
    consts: dict[str, tuple[SortId, str]] = {}
    i = 0
    for s in cls.signature.sorts:
        for e in cls.allowed_params(S, s):
            consts[f"_k{i}"] = (s, e)
            i += 1
    return expand_with_constants(base, consts), consts


# ---------------------------------------------------------------------------
# Back-and-forth colors

def atomic_type(
    S: FiniteStructure, sorts: Sequence[SortId], elems: Sequence[str]
) -> tuple:
    """Canonical isomorphism type of the substructure generated by a tuple.

    Elements reachable by terms are indexed in a breadth-first, symbol-sorted
    order, so the result is independent of element identity and comparable
    across structures over the same signature.
    """
    index: dict[tuple[SortId, str], int] = {}
    order: list[tuple[SortId, str]] = []

    def reach(s: SortId, e: str) -> int:
        key = (s, e)
        if key not in index:
            index[key] = len(order)
            order.append(key)
        return index[key]

    pattern = tuple(reach(s, e) for s, e in zip(sorts, elems))
    fun_names = sorted(S.signature.functions)
    frontier = 0
    fun_facts: list[tuple] = []
    while frontier < len(order):
        frontier_end = len(order)
        for f in fun_names:
            arg_sorts, res = S.signature.functions[f]
            pools = []
            ok = True
            for s in arg_sorts:
                pool = [i for i, (si, _) in enumerate(order[:frontier_end]) if si == s]
                if not pool:
                    ok = False
                    break
                pools.append(pool)
            if not ok:
                continue
            for combo in itertools.product(*pools):
                args = tuple(order[i][1] for i in combo)
                val = S.functions[f][args]
                fact = (f, combo, reach(res, val))
                if fact not in fun_facts:
                    fun_facts.append(fact)
        frontier = frontier_end

    rel_facts = []
    for r in sorted(S.signature.relations):
        arg_sorts = S.signature.relations[r]
        pools = [[i for i, (si, _) in enumerate(order) if si == s] for s in arg_sorts]
        for combo in itertools.product(*pools):
            if tuple(order[i][1] for i in combo) in S.relations[r]:
                rel_facts.append((r, combo))

    sort_seq = tuple(s for s, _ in order)
    return (pattern, sort_seq, tuple(sorted(set(fun_facts))), tuple(sorted(rel_facts)))


def ef_color(
    S: FiniteStructure, sorts: Sequence[SortId], elems: Sequence[str], qrank: int
) -> tuple:
    """Rank-q back-and-forth color: two tuples get the same color iff they
    satisfy the same formulas of quantifier rank at most q."""
    if qrank == 0:
        return (0, atomic_type(S, sorts, elems))
    succ = set()
    for s in S.signature.sorts:
        for e in S.universes[s]:
            succ.add(ef_color(S, (*sorts, s), (*elems, e), qrank - 1))
    return (qrank, atomic_type(S, sorts, elems), frozenset(succ))


# ---------------------------------------------------------------------------
# Class families: atoms, extensions, formula streams


def definable_atoms(
    S: FiniteStructure, cls: DefinabilityClass, sorts: Sequence[SortId]
) -> list[frozenset[tuple[str, ...]]]:
    """Partition of the tuple space into class-indistinguishable blocks.

    Only meaningful for uncapped classes, where the class family is exactly
    the set of unions of these blocks.
    """
    expanded, _ = _param_constants(S, cls)
    blocks: dict[tuple, list[tuple[str, ...]]] = {}
    for tup in S.tuples(sorts):
        color = ef_color(expanded, sorts, tup, cls.max_qrank)
        blocks.setdefault(color, []).append(tup)
    ordered = sorted(blocks.values(), key=lambda b: b[0])
    return [frozenset(b) for b in ordered]


def formula_stream(
    sig: Signature, x: Sequence[Var], max_qrank: int, start_size: int = 1
) -> Iterator[tuple[int, Formula]]:
    """All formulas over ``sig`` with free variables among ``x``, streamed in
    (AST size, print string) order, quantifier rank at most ``max_qrank``.
    Bound variables are named ``_b0, _b1, ...`` by nesting depth.  The stream
    is infinite; callers stop it."""

    term_memo: dict[tuple, list[Term]] = {}

    def terms(size: int, sort: SortId, scope: tuple[Var, ...]) -> list[Term]:
        key = (size, sort, tuple((v.name, v.sort) for v in scope))
        if key in term_memo:
            return term_memo[key]
        out: list[Term] = []
        if size == 1:
            out.extend(v for v in scope if v.sort == sort)
            out.extend(
                App(f) for f, (args, res) in sig.functions.items() if not args and res == sort
            )
        else:
            for f, (arg_sorts, res) in sig.functions.items():
                if res != sort or not arg_sorts:
                    continue
                for split in _compositions(size - 1, len(arg_sorts)):
                    for combo in itertools.product(
                        *(terms(sz, s, scope) for sz, s in zip(split, arg_sorts))
                    ):
                        out.append(App(f, combo))
        term_memo[key] = out
        return out

    formula_memo: dict[tuple, list[Formula]] = {}

    def formulas(size: int, rank: int, scope: tuple[Var, ...]) -> list[Formula]:
        key = (size, rank, tuple((v.name, v.sort) for v in scope))
        if key in formula_memo:
            return formula_memo[key]
        out: list[Formula] = []
        if size == 1:
            out.append(Top())
            out.append(Bot())
            out.extend(Rel(r) for r, args in sig.relations.items() if not args)
        if size >= 3:
            for sort in sig.sorts:
                for s1 in range(1, size - 1):
                    for t1 in terms(s1, sort, scope):
                        for t2 in terms(size - 1 - s1, sort, scope):
                            out.append(Eq(t1, t2))
        for r, arg_sorts in sig.relations.items():
            if arg_sorts and size >= 1 + len(arg_sorts):
                for split in _compositions(size - 1, len(arg_sorts)):
                    for combo in itertools.product(
                        *(terms(sz, s, scope) for sz, s in zip(split, arg_sorts))
                    ):
                        out.append(Rel(r, combo))
        if size >= 2:
            out.extend(Not(f) for f in formulas(size - 1, rank, scope))
            for s1 in range(1, size - 1):
                lefts = formulas(s1, rank, scope)
                rights = formulas(size - 1 - s1, rank, scope)
                for a in lefts:
                    for b in rights:
                        out.append(And(a, b))
                        out.append(Or(a, b))
                        out.append(Implies(a, b))
            if rank >= 1:
                depth = sum(1 for v in scope if v.name.startswith("_b"))
                for sort in sig.sorts:
                    v = Var(f"_b{depth}", sort)
                    for body in formulas(size - 1, rank - 1, (*scope, v)):
                        out.append(Exists(v, body))
                        out.append(Forall(v, body))
        formula_memo[key] = out
        return out

    size = start_size
    while True:
        batch = sorted(formulas(size, max_qrank, tuple(x)), key=print_formula)
        for phi in batch:
            yield size, phi
        size += 1


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ways to write ``total`` as an ordered sum of ``parts`` positives."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def class_stream(
    S: FiniteStructure, cls: DefinabilityClass, sorts: Sequence[SortId]
) -> Iterator[tuple[int, Formula, FiniteStructure, dict[str, tuple[SortId, str]]]]:
    """The class's formula stream: formulas use parameter constants, and are
    paired with the expanded structure interpreting them."""
    expanded, consts = _param_constants(S, cls)
    x = tuple(Var(f"_x{i}", s) for i, s in enumerate(sorts))
    for size, phi in formula_stream(expanded.signature, x, cls.max_qrank):
        yield size, phi, expanded, consts


def _strip_param_constants(
    phi: Formula, consts: Mapping[str, tuple[SortId, str]]
) -> tuple[Formula, dict[Var, str]]:
    """Rewrite parameter constants into `_p` variables with an assignment."""
    mapping: dict[str, Var] = {}
    params: dict[Var, str] = {}

    def fix_term(t: Term) -> Term:
        if isinstance(t, Var):
            return t
        if t.func in consts and not t.args:
            if t.func not in mapping:
                s, e = consts[t.func]
                v = Var(f"_p{len(mapping)}", s)
                mapping[t.func] = v
                params[v] = e
            return mapping[t.func]
        return App(t.func, tuple(fix_term(a) for a in t.args))

    def walk(f: Formula) -> Formula:
        if isinstance(f, (Top, Bot)):
            return f
        if isinstance(f, Eq):
            return Eq(fix_term(f.lhs), fix_term(f.rhs))
        if isinstance(f, Rel):
            return Rel(f.name, tuple(fix_term(a) for a in f.args))
        if isinstance(f, Not):
            return Not(walk(f.sub))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(walk(f.lhs), walk(f.rhs))
        return type(f)(f.var, walk(f.body))

    return walk(phi), params


def definable_extensions(
    S: FiniteStructure, cls: DefinabilityClass, sorts: Sequence[SortId]
) -> list[frozenset[tuple[str, ...]]]:
    """The full class family as bare extensions, deterministically ordered.

    Uncapped: all unions of atom blocks, ordered by (size, sorted tuples).
    Capped: extensions of all in-cap formulas, in first-appearance order.
    """
    if cls.size_cap is None:
        blocks = definable_atoms(S, cls, sorts)
        if 2 ** len(blocks) > FAMILY_LIMIT:
            raise RuntimeError(
                f"class family has 2^{len(blocks)} sets; set a size cap to enumerate"
            )
        family = []
        for mask in range(2 ** len(blocks)):
            ext: set[tuple[str, ...]] = set()
            for i, b in enumerate(blocks):
                if mask >> i & 1:
                    ext |= b
            family.append(frozenset(ext))
        family = sorted(set(family), key=lambda e: (len(e), sorted(e)))
        return family
    seen: list[frozenset[tuple[str, ...]]] = []
    x = None
    for size, phi, expanded, _consts in class_stream(S, cls, sorts):
        if size > cls.size_cap:
            break
        if x is None:
            x = tuple(Var(f"_x{i}", s) for i, s in enumerate(sorts))
        ext = _compute_extension(expanded, phi, x, {})
        if ext not in seen:
            seen.append(ext)
    return seen


def enumerate_definable(
    S: FiniteStructure, cls: DefinabilityClass, sorts: Sequence[SortId]
) -> Iterator[DefinableSet]:
    """Yield each class-definable set exactly once, smallest formula first.

    The stream is complete: for uncapped classes it stops once every union
    of atom blocks has appeared; for capped classes it exhausts the cap.
    """
    if cls.size_cap is None:
        blocks = definable_atoms(S, cls, sorts)
        if 2 ** len(blocks) > FAMILY_LIMIT:
            raise RuntimeError(
                f"class family has 2^{len(blocks)} sets; set a size cap to enumerate"
            )
        target = 2 ** len(blocks)
    else:
        target = None
    x = tuple(Var(f"_x{i}", s) for i, s in enumerate(sorts))
    seen: set[frozenset[tuple[str, ...]]] = set()
    for size, phi, expanded, consts in class_stream(S, cls, sorts):
        if cls.size_cap is not None and size > cls.size_cap:
            return
        if target is not None and size > 60:
            raise RuntimeError("formula stream ran far past the class family; internal error")
        ext = _compute_extension(expanded, phi, x, {})
        if ext in seen:
            continue
        seen.add(ext)
        clean, params = _strip_param_constants(phi, consts)
        yield DefinableSet(
            S, clean, x, tuple(sorted(params.items(), key=lambda p: p[0].name)), ext
        )
        if target is not None and len(seen) == target:
            return


# ---------------------------------------------------------------------------
# Structure enumeration


def enumerate_structures(
    sig: Signature, max_size: int, name_prefix: str = "S"
) -> Iterator[FiniteStructure]:
    """All structures over ``sig`` with every sort of size at most
    ``max_size``, up to the canonical element naming ``<sort><index>``."""
    size_ranges = [range(max_size + 1) for _ in sig.sorts]
    count = 0
    for sizes in itertools.product(*size_ranges):
        universes = {
            s: tuple(f"{s}{i}" for i in range(n)) for s, n in zip(sig.sorts, sizes)
        }
        rel_options = []
        rel_names = sorted(sig.relations)
        for r in rel_names:
            tuples = list(itertools.product(*(universes[s] for s in sig.relations[r])))
            rel_options.append(
                [frozenset(c) for k in range(len(tuples) + 1) for c in itertools.combinations(tuples, k)]
            )
        fun_options = []
        fun_names = sorted(sig.functions)
        feasible = True
        for f in fun_names:
            arg_sorts, res = sig.functions[f]
            domain = list(itertools.product(*(universes[s] for s in arg_sorts)))
            codomain = universes[res]
            if domain and not codomain:
                feasible = False
                break
            fun_options.append(
                [dict(zip(domain, values)) for values in itertools.product(codomain, repeat=len(domain))]
            )
        if not feasible:
            continue
        for rels in itertools.product(*rel_options):
            for funs in itertools.product(*fun_options):
                yield FiniteStructure(
                    f"{name_prefix}{count}",
                    sig,
                    universes,
                    dict(zip(rel_names, rels)),
                    dict(zip(fun_names, funs)),
                )
                count += 1


# ---------------------------------------------------------------------------
# Automorphisms and closure operators


def is_automorphism(S: FiniteStructure, g: Mapping[SortId, Mapping[str, str]]) -> bool:
    for s in S.signature.sorts:
        m = g.get(s, {})
        if sorted(m) != sorted(S.universes[s]) or sorted(m.values()) != sorted(S.universes[s]):
            return False
    for r, arg_sorts in S.signature.relations.items():
        for tup in itertools.product(*(S.universes[s] for s in arg_sorts)):
            img = tuple(g[s][e] for s, e in zip(arg_sorts, tup))
            if (tup in S.relations[r]) != (img in S.relations[r]):
                return False
    for f, (arg_sorts, res) in S.signature.functions.items():
        for tup, val in S.functions[f].items():
            img = tuple(g[s][e] for s, e in zip(arg_sorts, tup))
            if S.functions[f][img] != g[res][val]:
                return False
    return True


def automorphisms(
    S: FiniteStructure, fix: Collection[tuple[SortId, str]] = ()
) -> list[dict[SortId, dict[str, str]]]:
    """All automorphisms, optionally fixing the given elements pointwise.

    Exhaustive over per-sort permutations; hosts are expected to be small.
    """
    fixed = set(fix)
    per_sort: list[list[dict[str, str]]] = []
    for s in S.signature.sorts:
        universe = S.universes[s]
        options = []
        for perm in itertools.permutations(universe):
            m = dict(zip(universe, perm))
            if all(m[e] == e for (si, e) in fixed if si == s):
                options.append(m)
        per_sort.append(options)
    out = []
    for combo in itertools.product(*per_sort):
        g = dict(zip(S.signature.sorts, combo))
        if is_automorphism(S, g):
            out.append(g)
    return out


def orbit_closure(
    S: FiniteStructure,
    A: Collection[tuple[SortId, str]],
    mode: str = "dcl",
    threshold: Optional[int] = None,
) -> frozenset[tuple[SortId, str]]:
    """Definable- or algebraic-closure proxy via the automorphism group.

    ``dcl``: elements fixed by every automorphism fixing A pointwise.
    ``acl``: elements whose orbit under that group has size at most the
    threshold; iterated until the result is closed, since enlarging the base
    can shrink the group.
    """
    if mode not in ("dcl", "acl"):
        raise ValueError(f"mode must be 'dcl' or 'acl', got {mode!r}")
    if mode == "acl":
        if threshold is None or threshold < 1:
            raise ValueError("acl mode needs a positive orbit-size threshold")
    for s, e in A:
        if e not in S.universes.get(s, ()):
            raise EvaluationError(f"base element {e}:{s} is not in the structure")
    autos = automorphisms(S)
    current = frozenset(A)
    while True:
        stab = [g for g in autos if all(g[s][e] == e for s, e in current)]
        new: set[tuple[SortId, str]] = set()
        for s in S.signature.sorts:
            for e in S.universes[s]:
                orbit = {g[s][e] for g in stab}
                if mode == "dcl":
                    if orbit == {e}:
                        new.add((s, e))
                elif len(orbit) <= threshold:  # type: ignore[operator]
                    new.add((s, e))
        new |= current
        if new == current:
            return current
        current = frozenset(new)


def ccl(
    S: FiniteStructure,
    fam,  # LanguageFamily; untyped to avoid an import cycle in type checkers
    A: Collection[tuple[SortId, str]],
    mode: str = "dcl",
    threshold: Optional[int] = None,
) -> frozenset[tuple[SortId, str]]:
    """Smallest superset of A closed under every member language's closure:
    alternate the per-index orbit closures until nothing grows."""
    current = frozenset(A)
    while True:
        nxt = current
        for label in fam.labels:
            nxt = orbit_closure(reduct(S, fam[label]), nxt, mode, threshold)
        if nxt == current:
            return current
        current = nxt


# ---------------------------------------------------------------------------
# Flat diagrams


def diagram_constants(S: FiniteStructure) -> dict[str, tuple[SortId, str]]:
    """Deterministic constant names for every element.

    An element id is reused as its own constant name when it is an
    identifier, unique across all sorts, and no signature symbol claims it;
    otherwise the element gets ``e_<sort>_<index>``.
    """
    import re as _re

    ident = _re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
    all_ids = [e for s in S.signature.sorts for e in S.universes[s]]
    taken = set(S.signature.symbols())
    out: dict[str, tuple[SortId, str]] = {}
    for s in S.signature.sorts:
        for i, e in enumerate(S.universes[s]):
            if ident.match(e) and all_ids.count(e) == 1 and e not in taken and e not in out:
                out[e] = (s, e)
            else:
                name = f"e_{s}_{i}"
                while name in taken or name in out:
                    name += "'"
                out[name] = (s, e)
    return out


def diagram_expansion(S: FiniteStructure) -> FiniteStructure:
    """The structure with every element named by its diagram constant."""
    return expand_with_constants(S, diagram_constants(S))


def flat_diagram(S: FiniteStructure) -> list[Formula]:
    """Every true flat literal sentence in the element-constant language.

    Covers equalities and disequalities over all ordered pairs within each
    sort, membership and non-membership for every relation tuple, and value
    and non-value facts for every function application.
    """
    consts = diagram_constants(S)
    name_of = {se: c for c, se in consts.items()}

    def cterm(s: SortId, e: str) -> Term:
        return App(name_of[(s, e)])

    out: list[Formula] = []
    for s in S.signature.sorts:
        for a in S.universes[s]:
            for b in S.universes[s]:
                atom = Eq(cterm(s, a), cterm(s, b))
                out.append(atom if a == b else Not(atom))
    for r in sorted(S.signature.relations):
        arg_sorts = S.signature.relations[r]
        for tup in itertools.product(*(S.universes[s] for s in arg_sorts)):
            atom = Rel(r, tuple(cterm(s, e) for s, e in zip(arg_sorts, tup)))
            out.append(atom if tup in S.relations[r] else Not(atom))
    for f in sorted(S.signature.functions):
        arg_sorts, res = S.signature.functions[f]
        for tup in itertools.product(*(S.universes[s] for s in arg_sorts)):
            val = S.functions[f][tup]
            lhs = App(f, tuple(cterm(s, e) for s, e in zip(arg_sorts, tup)))
            for b in S.universes[res]:
                atom = Eq(lhs, cterm(res, b))
                out.append(atom if b == val else Not(atom))
    return out


# ---------------------------------------------------------------------------
# Morphisms


def is_morphism(
    mapping: Mapping[SortId, Mapping[str, str]],
    S1: FiniteStructure,
    S2: FiniteStructure,
    mode: str = "embedding",
    qrank: int = 0,
) -> bool:
    """Check a sort-indexed partial map between same-signature structures.

    ``embedding``: injective, preserving and reflecting atomic facts whose
    arguments and values lie in the domain.  ``partial-elementary``: the
    domain tuple and its image satisfy the same formulas of quantifier rank
    at most ``qrank``, checked through back-and-forth colors.
    """
    if S1.signature != S2.signature:
        raise SignatureError("morphism endpoints must share a signature")
    if mode not in ("embedding", "partial-elementary"):
        raise ValueError(f"unknown morphism mode {mode!r}")
    dom: list[tuple[SortId, str]] = []
    for s in S1.signature.sorts:
        for e, img in mapping.get(s, {}).items():
            if e not in S1.universes[s]:
                raise EvaluationError(f"domain element {e}:{s} is not in {S1.name}")
            if img not in S2.universes[s]:
                raise EvaluationError(f"image element {img}:{s} is not in {S2.name}")
            dom.append((s, e))

    if mode == "partial-elementary":
        sorts = tuple(s for s, _ in dom)
        tup1 = tuple(e for _, e in dom)
        tup2 = tuple(mapping[s][e] for s, e in dom)
        return ef_color(S1, sorts, tup1, qrank) == ef_color(S2, sorts, tup2, qrank)

    for s in S1.signature.sorts:
        m = mapping.get(s, {})
        if len(set(m.values())) != len(m):
            return False
    for r, arg_sorts in S1.signature.relations.items():
        pools = [
            [e for e in S1.universes[s] if e in mapping.get(s, {})] for s in arg_sorts
        ]
        for tup in itertools.product(*pools):
            img = tuple(mapping[s][e] for s, e in zip(arg_sorts, tup))
            if (tup in S1.relations[r]) != (img in S2.relations[r]):
                return False
    for f, (arg_sorts, res) in S1.signature.functions.items():
        pools = [
            [e for e in S1.universes[s] if e in mapping.get(s, {})] for s in arg_sorts
        ]
        values = [e for e in S1.universes[res] if e in mapping.get(res, {})]
        for tup in itertools.product(*pools):
            img = tuple(mapping[s][e] for s, e in zip(arg_sorts, tup))
            for b in values:
                if (S1.functions[f][tup] == b) != (S2.functions[f][img] == mapping[res][b]):
                    return False
    return True
