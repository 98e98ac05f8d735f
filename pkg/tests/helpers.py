"""Shared structure builders, random generators, and evaluation oracles."""

from __future__ import annotations

import itertools
import random
from typing import Optional, Sequence

from fusionkit.logic import (
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
    Top,
    Var,
    conj,
    disj,
    exists_many,
)
from fusionkit.semantics import FiniteStructure, evaluate

# ---------------------------------------------------------------------------
# Fixed structures


def pure_set(n: int, name: Optional[str] = None, sort: str = "S") -> FiniteStructure:
    elems = tuple(chr(ord("a") + i) for i in range(n))
    return FiniteStructure(
        name or f"Set{n}", Signature((sort,), {}, {}), {sort: elems}, {}, {}
    )


def pred_host(n: int, p: Sequence[str], name: Optional[str] = None) -> FiniteStructure:
    """n-element one-sorted structure with unary P interpreted as p."""
    elems = tuple(chr(ord("a") + i) for i in range(n))
    assert set(p) <= set(elems)
    return FiniteStructure(
        name or f"M{n}",
        Signature(("S",), {"P": ("S",)}, {}),
        {"S": elems},
        {"P": frozenset((e,) for e in p)},
        {},
    )


def cycle_graph(n: int, name: Optional[str] = None) -> FiniteStructure:
    """Undirected n-cycle (symmetric edge relation)."""
    elems = tuple(f"v{i}" for i in range(n))
    edges = set()
    for i in range(n):
        j = (i + 1) % n
        if elems[i] != elems[j]:
            edges.add((elems[i], elems[j]))
            edges.add((elems[j], elems[i]))
    return FiniteStructure(
        name or f"C{n}",
        Signature(("V",), {"E": ("V", "V")}, {}),
        {"V": elems},
        {"E": frozenset(edges)},
        {},
    )


def pq_host() -> FiniteStructure:
    """Two elements, P holds of the first, Q of the second."""
    return FiniteStructure(
        "PQ",
        Signature(("V",), {"P": ("V",), "Q": ("V",)}, {}),
        {"V": ("a", "b")},
        {"P": frozenset({("a",)}), "Q": frozenset({("b",)})},
        {},
    )


# ---------------------------------------------------------------------------
# Random generation (seeded by the caller)


def random_structure(
    rng: random.Random, sig: Signature, max_size: int, min_size: int = 0
) -> FiniteStructure:
    universes = {
        s: tuple(f"{s.lower()}{i}" for i in range(rng.randint(min_size, max_size)))
        for s in sig.sorts
    }
    relations = {}
    for r, arg_sorts in sig.relations.items():
        pool = list(itertools.product(*(universes[s] for s in arg_sorts)))
        relations[r] = frozenset(t for t in pool if rng.random() < 0.5)
    functions = {}
    for f, (arg_sorts, res) in sig.functions.items():
        if not universes[res]:
            # a total function needs a value; retry with a nonempty result sort
            universes[res] = (f"{res.lower()}0",)
        functions[f] = {
            t: rng.choice(universes[res])
            for t in itertools.product(*(universes[s] for s in arg_sorts))
        }
    return FiniteStructure(f"R{rng.randrange(10**6)}", sig, universes, relations, functions)


def random_term(rng: random.Random, sig: Signature, sort: str, xs: Sequence[Var], depth: int):
    choices = [v for v in xs if v.sort == sort]
    builders = [
        (f, decl)
        for f, decl in sig.functions.items()
        if decl[1] == sort and (depth > 0 or not decl[0])
    ]
    if builders and (not choices or rng.random() < 0.4):
        f, (arg_sorts, _) = rng.choice(builders)
        return App(f, tuple(random_term(rng, sig, s, xs, depth - 1) for s in arg_sorts))
    if choices:
        return rng.choice(choices)
    return random_term(rng, sig, sort, xs, depth)  # only reachable with constants


def random_qf_formula(
    rng: random.Random, sig: Signature, xs: Sequence[Var], depth: int
) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        kind = rng.randrange(4)
        if kind == 0:
            return Top()
        if kind == 1:
            return Bot()
        if kind == 2 and sig.relations:
            r, arg_sorts = rng.choice(sorted(sig.relations.items()))
            return Rel(r, tuple(random_term(rng, sig, s, xs, 1) for s in arg_sorts))
        sort = rng.choice([v.sort for v in xs]) if xs else rng.choice(sig.sorts)
        return Eq(random_term(rng, sig, sort, xs, 1), random_term(rng, sig, sort, xs, 1))
    kind = rng.randrange(4)
    if kind == 0:
        return Not(random_qf_formula(rng, sig, xs, depth - 1))
    node = [And, Or, Implies][kind - 1]
    return node(
        random_qf_formula(rng, sig, xs, depth - 1),
        random_qf_formula(rng, sig, xs, depth - 1),
    )


def random_formula(
    rng: random.Random, sig: Signature, xs: Sequence[Var], depth: int, qdepth: int
) -> Formula:
    """Like random_qf_formula but may add quantifiers over fresh variables."""
    if qdepth > 0 and rng.random() < 0.4:
        sort = rng.choice(sig.sorts)
        v = Var(f"q{qdepth}", sort)
        body = random_formula(rng, sig, (*xs, v), depth, qdepth - 1)
        return (Exists if rng.random() < 0.5 else Forall)(v, body)
    return random_qf_formula(rng, sig, xs, depth)


# ---------------------------------------------------------------------------
# Evaluation oracles


def assignments(S: FiniteStructure, xs: Sequence[Var]):
    for combo in itertools.product(*(S.universes[v.sort] for v in xs)):
        yield dict(zip(xs, combo))


def equivalent_on(S: FiniteStructure, phi: Formula, psi: Formula, xs: Sequence[Var]) -> bool:
    return all(
        evaluate(S, phi, a) == evaluate(S, psi, a) for a in assignments(S, xs)
    )


def witness_counts(S: FiniteStructure, xs, ws, matrix):
    """Satisfying witness-tuple count per assignment of xs, by enumeration."""
    for a in assignments(S, xs):
        yield sum(
            1
            for b in assignments(S, ws)
            if evaluate(S, matrix, {**a, **b})
        )


# ---------------------------------------------------------------------------
# Cardinality sentences (one-sorted, equality only)


def at_least(k: int, sort: str = "V") -> Formula:
    if k <= 0:
        return Top()
    xs = [Var(f"c{i}", sort) for i in range(k)]
    distinct = [
        Not(Eq(xs[i], xs[j])) for i in range(k) for j in range(i + 1, k)
    ]
    return exists_many(xs, conj(distinct) if distinct else Top())


def size_window(sizes: Sequence[int], sort: str = "V") -> Formula:
    """True exactly when the universe size lies in ``sizes`` (bounded use)."""
    parts = []
    for k in sorted(sizes):
        parts.append(And(at_least(k, sort), Not(at_least(k + 1, sort))))
    return disj(parts)
