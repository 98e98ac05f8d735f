"""Concrete encoders that present familiar expansions as two-part unions.

Three constructions, each shipping an encoder, a decoder, and a recorded
round-trip correspondence:

* random-graph: a graph (V; E) becomes (V, S_V; pi, E_V) with S_V the
  unordered pairs of distinct vertices, pi the quotient relation, and E_V
  the image of the edge set;
* automorphism: (M, sigma) becomes (M, M; id, sigma) over two renamed
  copies of the language, decoded as f^-1 after g;
* Skolem: (M, f) with f a choice function for phi(x, y) becomes
  (M, E; px1..pxn, py, g) with E the graph of phi and g the section
  a -> (a, f(a)), decoded as f = py after g.

The infinite axioms behind the source theories are replaced by shape
constraints; these encoders target finite approximations.

Also here: the largeness test by fresh-element extension and the generic
predicate check (a large set must meet every product of P/non-P factors).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .logic import Formula, Signature, SortId, Var, free_vars, print_formula
from .semantics import (
    DefinabilityClass,
    DefinableSet,
    FiniteStructure,
    enumerate_definable,
    evaluate,
)

ElementMap = Mapping[SortId, Mapping[str, str]]


class EncodingError(ValueError):
    """Input violates the shape the encoder or decoder requires."""


@dataclass(frozen=True)
class EncodedPair:
    """An encoding together with the maps witnessing the round trip.

    ``forward`` sends each source element to its representative in the
    target (per sort); ``backward`` inverts it.  Decoding the target and
    pushing along ``backward`` recovers the source up to isomorphism.
    """

    source: FiniteStructure
    target: FiniteStructure
    forward: ElementMap
    backward: ElementMap

    def check_maps(self) -> bool:
        """The recorded maps are mutually inverse sort-indexed bijections."""
        for s, fwd in self.forward.items():
            bwd = self.backward.get(s, {})
            if len(set(fwd.values())) != len(fwd):
                return False
            if any(bwd.get(v) != e for e, v in fwd.items()):
                return False
        return True


def _identity_maps(S: FiniteStructure) -> ElementMap:
    return {s: {e: e for e in S.universes[s]} for s in S.signature.sorts}


# ---------------------------------------------------------------------------
# Random graph


def _graph_shape(G: FiniteStructure) -> tuple[SortId, str]:
    if len(G.signature.sorts) != 1 or G.signature.functions:
        raise EncodingError("expected a one-sorted relational graph structure")
    rels = [
        (name, sorts) for name, sorts in G.signature.relations.items() if len(sorts) == 2
    ]
    if len(rels) != 1 or len(G.signature.relations) != 1:
        raise EncodingError("expected exactly one binary edge relation")
    (sort,) = G.signature.sorts
    name, _ = rels[0]
    edges = G.relations[name]
    for v1, v2 in edges:
        if v1 == v2:
            raise EncodingError(f"edge relation has a loop at {v1}")
        if (v2, v1) not in edges:
            raise EncodingError(f"edge relation is not symmetric on ({v1}, {v2})")
    return sort, name


def _pair_name(v1: str, v2: str) -> str:
    a, b = sorted((v1, v2))
    return f"{a}__{b}"


def rg_encode(G: FiniteStructure) -> EncodedPair:
    """Encode a loopless undirected graph as (V, S_V; pi, E_V).

    The pair sort S_<V> holds one element per unordered pair of distinct
    vertices, named ``a__b``; ``pi`` relates each ordered distinct pair to
    its quotient element and ``E_<V>`` is the image of the edges.
    """
    sort, edge_name = _graph_shape(G)
    pair_sort = f"S_{sort}"
    image_name = f"{edge_name}_{sort}"
    universe = G.universes[sort]
    pairs = sorted(_pair_name(v1, v2) for v1, v2 in itertools.combinations(universe, 2))
    pi = frozenset(
        (v1, v2, _pair_name(v1, v2))
        for v1 in universe
        for v2 in universe
        if v1 != v2
    )
    ev = frozenset((_pair_name(v1, v2),) for v1, v2 in G.relations[edge_name])
    sig = Signature(
        sorts=(sort, pair_sort),
        relations={"pi": (sort, sort, pair_sort), image_name: (pair_sort,)},
        functions={},
    )
    target = FiniteStructure(
        name=f"{G.name}_pairs",
        signature=sig,
        universes={sort: universe, pair_sort: tuple(pairs)},
        relations={"pi": pi, image_name: ev},
        functions={},
    )
    return EncodedPair(G, target, _identity_maps(G), _identity_maps(G))


def rg_decode(P: FiniteStructure) -> FiniteStructure:
    """Recover the graph from a (V, S; pi, E_S) structure.

    ``pi`` must be the graph of a surjection identifying exactly the
    unordered-pair classes: defined on all ordered distinct pairs, nothing
    else, and constant precisely on {(v1,v2), (v2,v1)}.
    """
    sorts = P.signature.sorts
    if len(sorts) != 2 or "pi" not in P.signature.relations:
        raise EncodingError("expected two sorts and a pi relation")
    sort, pair_sort = P.signature.relations["pi"][0], P.signature.relations["pi"][2]
    if P.signature.relations["pi"] != (sort, sort, pair_sort):
        raise EncodingError("pi must relate two vertices to a pair element")
    edge_rel = [
        name
        for name, rs in P.signature.relations.items()
        if name != "pi" and rs == (pair_sort,)
    ]
    if len(edge_rel) != 1:
        raise EncodingError("expected exactly one unary edge-image relation on the pair sort")
    ev = P.relations[edge_rel[0]]
    edge_name = (
        _strip_suffix(edge_rel[0], f"_{sort}")
        if edge_rel[0].endswith(f"_{sort}")
        else "E"
    )
    cls_of: dict[tuple[str, str], str] = {}
    for v1, v2, s in P.relations["pi"]:
        if v1 == v2:
            raise EncodingError(f"pi is defined on the diagonal at {v1}")
        if (v1, v2) in cls_of:
            raise EncodingError(f"pi is multi-valued on ({v1}, {v2})")
        cls_of[(v1, v2)] = s
    universe = P.universes[sort]
    seen_classes: dict[str, frozenset] = {}
    for v1, v2 in itertools.permutations(universe, 2):
        if (v1, v2) not in cls_of:
            raise EncodingError(f"pi is undefined on ({v1}, {v2})")
        s = cls_of[(v1, v2)]
        key = frozenset((v1, v2))
        if cls_of[(v2, v1)] != s:
            raise EncodingError(f"pi splits the unordered pair {{{v1}, {v2}}}")
        if seen_classes.get(s, key) != key:
            raise EncodingError(f"pi merges distinct unordered pairs into {s}")
        seen_classes[s] = key
    unreached = set(P.universes[pair_sort]) - set(seen_classes)
    if unreached:
        raise EncodingError(
            f"pi is not onto the pair sort; {sorted(unreached)[0]} is unreached"
        )
    for (s,) in ev:
        if s not in seen_classes:
            raise EncodingError(f"edge image contains the non-pair element {s}")
    edges = frozenset(
        (v1, v2) for (v1, v2), s in cls_of.items() if (s,) in ev
    )
    sig = Signature(sorts=(sort,), relations={edge_name: (sort, sort)}, functions={})
    return FiniteStructure(
        name=f"{P.name}_graph",
        signature=sig,
        universes={sort: universe},
        relations={edge_name: edges},
        functions={},
    )


# ---------------------------------------------------------------------------
# Automorphisms


def _suffix_signature(sig: Signature, suffix: str) -> tuple[Signature, dict[str, str]]:
    sorts = tuple(f"{s}{suffix}" for s in sig.sorts)
    rename = {s: f"{s}{suffix}" for s in sig.sorts}
    relations = {
        f"{name}{suffix}": tuple(rename[s] for s in arg_sorts)
        for name, arg_sorts in sig.relations.items()
    }
    functions = {
        f"{name}{suffix}": (tuple(rename[s] for s in arg), rename[res])
        for name, (arg, res) in sig.functions.items()
    }
    return Signature(sorts=sorts, relations=relations, functions=functions), rename


def aut_encode(M: FiniteStructure, sigma: ElementMap) -> EncodedPair:
    """Encode (M, sigma) as (M, M; id, sigma) over two copies of the language.

    Sorts and symbols get ``_1``/``_2`` suffixes; ``emb_<sort>`` is the
    identity between the copies and ``tw_<sort>`` is the automorphism.
    """
    if not _is_renamed_isomorphism(M, M, sigma):
        raise EncodingError("sigma is not an automorphism of the structure")
    sig1, ren1 = _suffix_signature(M.signature, "_1")
    sig2, ren2 = _suffix_signature(M.signature, "_2")
    functions: dict[str, tuple[tuple[SortId, ...], SortId]] = {}
    functions.update(sig1.functions)
    functions.update(sig2.functions)
    for s in M.signature.sorts:
        functions[f"emb_{s}"] = ((ren1[s],), ren2[s])
        functions[f"tw_{s}"] = ((ren1[s],), ren2[s])
    sig = Signature(
        sorts=sig1.sorts + sig2.sorts,
        relations={**sig1.relations, **sig2.relations},
        functions=functions,
    )
    universes = {}
    for s in M.signature.sorts:
        universes[ren1[s]] = M.universes[s]
        universes[ren2[s]] = M.universes[s]
    relations = {}
    interp_functions = {}
    for suffix in ("_1", "_2"):
        for name, tuples in M.relations.items():
            relations[f"{name}{suffix}"] = tuples
        for name, table in M.functions.items():
            interp_functions[f"{name}{suffix}"] = table
    for s in M.signature.sorts:
        interp_functions[f"emb_{s}"] = {(e,): e for e in M.universes[s]}
        interp_functions[f"tw_{s}"] = {(e,): sigma[s][e] for e in M.universes[s]}
    target = FiniteStructure(
        name=f"{M.name}_aut",
        signature=sig,
        universes=universes,
        relations=relations,
        functions=interp_functions,
    )
    forward = {s: {e: e for e in M.universes[s]} for s in M.signature.sorts}
    return EncodedPair(M, target, forward, forward)


def _strip_suffix(name: str, suffix: str) -> str:
    if not name.endswith(suffix):
        raise EncodingError(f"symbol {name} lacks the expected {suffix} suffix")
    return name[: -len(suffix)]


def _is_renamed_isomorphism(
    M: FiniteStructure, N: FiniteStructure, fmap: ElementMap
) -> bool:
    """Is fmap an isomorphism M -> N, pairing symbols positionally?

    M and N must have signatures of the same shape (as produced by copy
    renaming); sorts, relations, and functions are matched in declaration
    order.
    """
    sort_pairs = list(zip(M.signature.sorts, N.signature.sorts))
    to_n = dict(sort_pairs)
    for sm, sn in sort_pairs:
        m = fmap.get(sm, {})
        if sorted(m) != sorted(M.universes[sm]):
            return False
        if sorted(m.values()) != sorted(N.universes[sn]):
            return False
    for (rm, sorts_m), (rn, sorts_n) in zip(
        sorted(M.signature.relations.items()), sorted(N.signature.relations.items())
    ):
        if tuple(to_n[s] for s in sorts_m) != tuple(sorts_n):
            return False
        image = {
            tuple(fmap[s][e] for s, e in zip(sorts_m, tup))
            for tup in M.relations[rm]
        }
        if image != set(N.relations[rn]):
            return False
    for (fm, (args_m, res_m)), (fn, (args_n, res_n)) in zip(
        sorted(M.signature.functions.items()), sorted(N.signature.functions.items())
    ):
        if tuple(to_n[s] for s in args_m) != tuple(args_n) or to_n[res_m] != res_n:
            return False
        for tup, val in M.functions[fm].items():
            mapped = tuple(fmap[s][e] for s, e in zip(args_m, tup))
            if N.functions[fn].get(mapped) != fmap[res_m][val]:
                return False
    return True


def aut_decode(P: FiniteStructure) -> tuple[FiniteStructure, ElementMap]:
    """Recover (M, f^-1 after g) from a two-copy structure (M, N; f, g).

    Both ``emb_*`` (f) and ``tw_*`` (g) must be isomorphisms between the
    copies; the result lives on the first copy with original symbol names.
    """
    firsts = [s for s in P.signature.sorts if s.endswith("_1")]
    seconds = [s for s in P.signature.sorts if s.endswith("_2")]
    if len(firsts) + len(seconds) != len(P.signature.sorts) or len(firsts) != len(seconds):
        raise EncodingError("expected sorts in matched _1/_2 copies")
    base_sorts = tuple(_strip_suffix(s, "_1") for s in firsts)
    if tuple(_strip_suffix(s, "_2") for s in seconds) != base_sorts:
        raise EncodingError("the _1 and _2 sort copies do not match")

    relations = {}
    functions = {}
    for name, arg_sorts in P.signature.relations.items():
        if name.endswith("_1"):
            relations[_strip_suffix(name, "_1")] = tuple(
                _strip_suffix(s, "_1") for s in arg_sorts
            )
    for name, (args, res) in P.signature.functions.items():
        if name.endswith("_1") and not name.startswith(("emb_", "tw_")):
            functions[_strip_suffix(name, "_1")] = (
                tuple(_strip_suffix(s, "_1") for s in args),
                _strip_suffix(res, "_1"),
            )
    sig = Signature(sorts=base_sorts, relations=relations, functions=functions)
    M = FiniteStructure(
        name=f"{P.name}_base",
        signature=sig,
        universes={s: P.universes[f"{s}_1"] for s in base_sorts},
        relations={name: P.relations[f"{name}_1"] for name in relations},
        functions={name: P.functions[f"{name}_1"] for name in functions},
    )
    N = FiniteStructure(
        name=f"{P.name}_second",
        signature=sig,
        universes={s: P.universes[f"{s}_2"] for s in base_sorts},
        relations={
            name: P.relations[f"{name}_2"] for name in relations
        },
        functions={name: P.functions[f"{name}_2"] for name in functions},
    )

    def read_map(prefix: str) -> ElementMap:
        out: dict[SortId, dict[str, str]] = {}
        for s in base_sorts:
            fname = f"{prefix}_{s}"
            if fname not in P.functions:
                raise EncodingError(f"missing copy function {fname}")
            out[s] = {e: v for (e,), v in P.functions[fname].items()}
        return out

    f, g = read_map("emb"), read_map("tw")
    for label, m in (("emb", f), ("tw", g)):
        if not _is_renamed_isomorphism(M, N, m):
            raise EncodingError(f"{label} functions are not a structure isomorphism")
    f_inv = {s: {v: e for e, v in f[s].items()} for s in base_sorts}
    sigma = {s: {e: f_inv[s][g[s][e]] for e in M.universes[s]} for s in base_sorts}
    return M, sigma


# ---------------------------------------------------------------------------
# Skolem functions


def skolem_encode(
    M: FiniteStructure,
    phi: Formula,
    x: Sequence[Var],
    y: Var,
    f: Mapping[tuple[str, ...], str],
) -> EncodedPair:
    """Encode (M, f) as (M, E; px1..pxn, py, g) for a choice function f.

    E is the graph of phi with elements named by joining components with
    ``__``; g sends a to (a, f(a)) and must land inside phi, so f(a) has to
    satisfy phi(a, f(a)) for every tuple a.
    """
    if len(M.signature.sorts) != 1:
        raise EncodingError("Skolem encoding expects a one-sorted structure")
    (sort,) = M.signature.sorts
    if sort == "E":
        raise EncodingError("the structure's sort is named E, which the encoding reserves")
    x = tuple(x)
    if not x or any(v.sort != sort for v in (*x, y)):
        raise EncodingError("phi's variables must range over the structure's sort")
    if not set(free_vars(phi)) <= set(x) | {y}:
        raise EncodingError("phi may only use the given x and y variables")
    reserved = {f"px{i}" for i in range(1, len(x) + 1)} | {"py", "g"}
    clash = reserved & set(M.signature.functions)
    if clash:
        raise EncodingError(f"function names {sorted(clash)} are reserved by the encoding")
    n = len(x)
    graph = []
    for tup in M.tuples([sort] * (n + 1)):
        if evaluate(M, phi, dict(zip((*x, y), tup))):
            graph.append(tup)
    missing = [a for a in M.tuples([sort] * n) if a not in f]
    if missing:
        raise EncodingError(f"the function table is undefined on {missing[0]}")
    for a in M.tuples([sort] * n):
        if (*a, f[a]) not in graph:
            raise EncodingError(
                f"f{a} = {f[a]} does not satisfy the defining formula"
            )
    e_name = {tup: "__".join(tup) for tup in graph}
    functions_sig: dict[str, tuple[tuple[SortId, ...], SortId]] = dict(
        M.signature.functions
    )
    for i in range(1, n + 1):
        functions_sig[f"px{i}"] = (("E",), sort)
    functions_sig["py"] = (("E",), sort)
    functions_sig["g"] = (tuple([sort] * n), "E")
    sig = Signature(
        sorts=(sort, "E"),
        relations=dict(M.signature.relations),
        functions=functions_sig,
    )
    functions = {name: dict(table) for name, table in M.functions.items()}
    for i in range(1, n + 1):
        functions[f"px{i}"] = {(e_name[tup],): tup[i - 1] for tup in graph}
    functions["py"] = {(e_name[tup],): tup[-1] for tup in graph}
    functions["g"] = {a: e_name[(*a, f[a])] for a in M.tuples([sort] * n)}
    target = FiniteStructure(
        name=f"{M.name}_skolem",
        signature=sig,
        universes={sort: M.universes[sort], "E": tuple(sorted(e_name.values()))},
        relations=dict(M.relations),
        functions=functions,
    )
    return EncodedPair(M, target, _identity_maps(M), _identity_maps(M))


def skolem_decode(
    P: FiniteStructure,
) -> tuple[FiniteStructure, dict[tuple[str, ...], str]]:
    """Recover (M, f) with f = py after g from a Skolemization structure.

    g must be a total section of the projection tuple (px applied to g(a)
    gives back a); the base structure keeps every original symbol.
    """
    if "E" not in P.signature.sorts or "g" not in P.signature.functions:
        raise EncodingError("expected a sort E and a section g")
    base_sorts = tuple(s for s in P.signature.sorts if s != "E")
    if len(base_sorts) != 1:
        raise EncodingError("expected exactly one base sort besides E")
    (sort,) = base_sorts
    args, res = P.signature.functions["g"]
    n = len(args)
    if res != "E" or set(args) != {sort}:
        raise EncodingError("g must map base tuples into E")
    proj_names = [f"px{i}" for i in range(1, n + 1)]
    for name in (*proj_names, "py"):
        if P.signature.functions.get(name) != (("E",), sort):
            raise EncodingError(f"missing or mis-typed projection {name}")
    for a in P.tuples([sort] * n):
        e = P.functions["g"][a]
        back = tuple(P.functions[p][(e,)] for p in proj_names)
        if back != a:
            raise EncodingError(f"g is not a section of the projections at {a}")
    seen: dict[tuple[str, ...], str] = {}
    for e in P.universes["E"]:
        point = tuple(P.functions[p][(e,)] for p in (*proj_names, "py"))
        if point in seen:
            raise EncodingError(f"E elements {seen[point]} and {e} project identically")
        seen[point] = e
    relations = {
        name: P.relations[name]
        for name, arg_sorts in P.signature.relations.items()
        if "E" not in arg_sorts
    }
    functions_sig = {
        name: spec
        for name, spec in P.signature.functions.items()
        if name not in (*proj_names, "py", "g")
    }
    sig = Signature(
        sorts=(sort,),
        relations={
            name: arg_sorts
            for name, arg_sorts in P.signature.relations.items()
            if "E" not in arg_sorts
        },
        functions=functions_sig,
    )
    M = FiniteStructure(
        name=f"{P.name}_base",
        signature=sig,
        universes={sort: P.universes[sort]},
        relations=relations,
        functions={name: P.functions[name] for name in functions_sig},
    )
    f = {
        a: P.functions["py"][(P.functions["g"][a],)]
        for a in P.tuples([sort] * n)
    }
    return M, f


# ---------------------------------------------------------------------------
# Largeness and generic predicates


def _fresh_elements(S: FiniteStructure, sort: SortId, k: int) -> list[str]:
    taken = {e for s in S.signature.sorts for e in S.universes[s]}
    out = []
    i = 0
    while len(out) < k:
        name = f"_f{i}"
        while name in taken:
            name += "'"
        taken.add(name)
        out.append(name)
        i += 1
    return out


def is_large(X: DefinableSet) -> bool:
    """Does a tuple of pairwise-distinct fresh elements satisfy X's formula?

    The host is extended by one fresh element per tuple position (fresh
    elements join no relations and stay outside every function graph), and
    the formula is evaluated at the distinct fresh tuple.  This matches the
    monster-model notion exactly when the signature is pure equality.
    """
    if X.host.signature.functions:
        raise EncodingError(
            "largeness by fresh extension needs a relation-only signature"
        )
    n = len(X.x)
    sorts_needed: dict[SortId, int] = {}
    position: list[tuple[SortId, int]] = []
    for v in X.x:
        idx = sorts_needed.get(v.sort, 0)
        position.append((v.sort, idx))
        sorts_needed[v.sort] = idx + 1
    universes = dict(X.host.universes)
    fresh_by_sort = {}
    for s, k in sorts_needed.items():
        fresh = _fresh_elements(X.host, s, k)
        fresh_by_sort[s] = fresh
        universes[s] = tuple(universes[s]) + tuple(fresh)
    extended = FiniteStructure(
        name=f"{X.host.name}+fresh",
        signature=X.host.signature,
        universes=universes,
        relations=dict(X.host.relations),
        functions={},
    )
    assignment = dict(X.params)
    for v, (s, idx) in zip(X.x, position):
        assignment[v] = fresh_by_sort[s][idx]
    return evaluate(extended, X.formula, assignment)


@dataclass(frozen=True)
class GenericPredicateViolation:
    arity: int
    witness: DefinableSet
    pattern: tuple[bool, ...]

    def line(self) -> str:
        pat = ",".join("P" if b else "~P" for b in self.pattern)
        return (
            f"VIOLATION arity={self.arity} set={self.witness.describe()} "
            f"pattern={pat} intersection=EMPTY"
        )

    def data(self) -> dict:
        return {
            "arity": self.arity,
            "set": print_formula(self.witness.formula),
            "params": {v.name: e for v, e in self.witness.params},
            "pattern": ["P" if b else "~P" for b in self.pattern],
            "intersection": "EMPTY",
        }


@dataclass(frozen=True)
class GenericPredicateReport:
    verdict: str
    violations: tuple[GenericPredicateViolation, ...]
    sets_checked: int
    approximate: bool

    def lines(self) -> list[str]:
        out = ["OK"] if not self.violations else [v.line() for v in self.violations]
        if self.approximate:
            out.append(
                "NOTE largeness by fresh extension is heuristic beyond pure equality"
            )
        return out

    def data(self) -> dict:
        return {
            "verdict": self.verdict,
            "violations": [v.data() for v in self.violations],
            "sets_checked": self.sets_checked,
            "approximate": self.approximate,
        }


def generic_predicate_check(
    M: FiniteStructure,
    P: Sequence[str],
    cls: DefinabilityClass,
    n_max: int = 2,
) -> GenericPredicateReport:
    """Must every large class-definable set meet every P-pattern box?

    For each arity n up to ``n_max`` and each class-definable X of that
    arity, largeness is decided by fresh-element extension; large X must
    intersect S_1 x ... x S_n for all sign patterns with S_i either P or
    its complement.  The report notes when the largeness rule is heuristic
    (any symbols beyond equality on the class signature).
    """
    if len(M.signature.sorts) != 1:
        raise EncodingError("generic predicates are defined over one-sorted hosts")
    (sort,) = M.signature.sorts
    pset = frozenset(P)
    unknown = pset - set(M.universes[sort])
    if unknown:
        raise EncodingError(f"predicate elements {sorted(unknown)} are not in the host")
    if "P" in M.signature.relations:
        raise EncodingError("the host language must not already contain the predicate")
    complement = frozenset(M.universes[sort]) - pset
    approximate = bool(cls.signature.relations or cls.signature.functions)
    violations = []
    checked = 0
    for n in range(1, n_max + 1):
        boxes = {}
        for pattern in itertools.product((True, False), repeat=n):
            factors = [pset if b else complement for b in pattern]
            boxes[pattern] = factors
        for X in enumerate_definable(M, cls, (sort,) * n):
            checked += 1
            if not is_large(X):
                continue
            for pattern, factors in boxes.items():
                if not any(
                    all(e in f for e, f in zip(tup, factors)) for tup in X.extension
                ):
                    violations.append(GenericPredicateViolation(n, X, pattern))
    verdict = "ok" if not violations else "violation"
    return GenericPredicateReport(verdict, tuple(violations), checked, approximate)
