"""Concrete formula syntax.

Grammar, loosest binding first: ``->`` (right associative), ``|``, ``&``
(both left associative), then ``~`` and quantifiers, then atoms.  A
quantifier body extends only over a unary formula, so compound bodies are
parenthesized: ``exists y:V. (f(x)=y & R(y))``.

``exists<=K x:S. body`` is sugar; the parser expands it to the universal
formula stating that at most K elements satisfy the body.

Bound variables are sorted at their binder.  Free-variable sorts are
inferred from symbol argument positions and equality links; a variable the
constraints leave open defaults to the signature's only sort when there is
exactly one, and otherwise must be annotated inline as ``x:SORT``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

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
    Term,
    Top,
    Var,
    check_formula,
    conj,
    disj,
    forall_many,
    free_vars,
    substitute,
)


class ParseError(ValueError):
    """Syntax or sort-inference failure, with a 1-based source position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"parse error at position {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    pos: int  # 0-based offset into the source text


_TOKEN_RE = re.compile(
    r"""
      (?P<WS>\s+)
    | (?P<EXISTSLE>exists<=\d+)
    | (?P<ARROW>->)
    | (?P<IDENT>[A-Za-z_][A-Za-z0-9_']*)
    | (?P<PUNCT>[~&|=,.():])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"true", "false", "forall", "exists"}


def tokenize(text: str) -> list[_Token]:
    out: list[_Token] = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", i + 1)
        kind = m.lastgroup or ""
        if kind != "WS":
            value = m.group()
            if kind == "IDENT" and value in _KEYWORDS:
                kind = value.upper()
            if kind == "PUNCT":
                kind = value
            out.append(_Token(kind, value, i))
        i = m.end()
    out.append(_Token("EOF", "", len(text)))
    return out


def _is_placeholder(sort: Optional[str]) -> bool:
    return sort is not None and sort.startswith("?")


class _SortSolver:
    """Union-find over inference keys, each root carrying a sort or None.

    Keys are free-variable names, or ``?bN`` placeholders for binders left
    unannotated (a bound variable's constraints all fall inside its scope,
    but a free variable unified with it may pin the sort later, so
    resolution happens once at the end).  ``shown`` maps keys to the names
    used in error messages.
    """

    def __init__(self) -> None:
        self.parent: dict[str, str] = {}
        self.sort: dict[str, Optional[str]] = {}
        self.shown: dict[str, str] = {}

    def add(self, key: str, shown: Optional[str] = None) -> None:
        if key not in self.parent:
            self.parent[key] = key
            self.sort[key] = None
            self.shown[key] = shown if shown is not None else key

    def find(self, key: str) -> str:
        while self.parent[key] != key:
            self.parent[key] = self.parent[self.parent[key]]
            key = self.parent[key]
        return key

    def assign(self, key: str, sort: str, pos: int) -> None:
        root = self.find(key)
        if self.sort[root] is None:
            self.sort[root] = sort
        elif self.sort[root] != sort:
            raise ParseError(
                f"variable {self.shown[key]} used at sorts {self.sort[root]} and {sort}",
                pos + 1,
            )

    def union(self, a: str, b: str, pos: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        sa, sb = self.sort[ra], self.sort[rb]
        if sa is not None and sb is not None and sa != sb:
            raise ParseError(
                f"equality links {self.shown[a]}:{sa} with {self.shown[b]}:{sb}", pos + 1
            )
        self.parent[rb] = ra
        self.sort[ra] = sa if sa is not None else sb


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.tokens = tokenize(text)
        self.i = 0
        self.scopes: list[dict[str, Var]] = []
        self.solver = _SortSolver()
        self.binder_count = 0

    # -- token plumbing

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {what}", tok.pos + 1)
        return self.next()

    def fail(self, message: str) -> ParseError:
        return ParseError(message, self.peek().pos + 1)

    # -- scoping

    def lookup_bound(self, name: str) -> Optional[Var]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    # -- grammar

    def parse(self) -> Formula:
        phi = self.formula()
        if self.peek().kind != "EOF":
            raise self.fail(f"unexpected {self.peek().value!r} after formula")
        return phi

    def formula(self) -> Formula:
        return self.implies()

    def implies(self) -> Formula:
        lhs = self.disjunction()
        if self.peek().kind == "ARROW":
            self.next()
            return Implies(lhs, self.implies())
        return lhs

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while self.peek().kind == "|":
            self.next()
            out = Or(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while self.peek().kind == "&":
            self.next()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "~":
            self.next()
            return Not(self.unary())
        if tok.kind in ("FORALL", "EXISTS"):
            self.next()
            var = self.binder_var()
            self.scopes.append({var.name: var})
            body = self.unary()
            self.scopes.pop()
            return (Forall if tok.kind == "FORALL" else Exists)(var, body)
        if tok.kind == "EXISTSLE":
            self.next()
            k = int(tok.value.split("<=", 1)[1])
            var = self.binder_var()
            self.scopes.append({var.name: var})
            body = self.unary()
            self.scopes.pop()
            return self.expand_count_bound(var, body, k)
        return self.atom()

    def binder_var(self) -> Var:
        name_tok = self.expect("IDENT", "a variable name")
        if self.peek().kind == ":":
            self.next()
            sort_tok = self.expect("IDENT", "a sort name")
            if sort_tok.value not in self.sig.sorts:
                raise ParseError(f"unknown sort {sort_tok.value}", sort_tok.pos + 1)
            self.expect(".", "'.' after the binder")
            return Var(name_tok.value, sort_tok.value)
        # Unannotated binder: carry a placeholder sort key through inference.
        key = f"?b{self.binder_count}"
        self.binder_count += 1
        self.solver.add(key, name_tok.value)
        self.expect(".", "'.' after the binder")
        return Var(name_tok.value, key)

    def expand_count_bound(self, var: Var, body: Formula, k: int) -> Formula:
        """Rewrite ∃^{≤k} v. body into its plain first-order form."""
        taken = {v.name for v in free_vars(body)}
        copies: list[Var] = []
        for idx in range(k + 1):
            name = f"{var.name}_{idx}"
            while name in taken:
                name += "'"
            taken.add(name)
            copies.append(Var(name, var.sort))
        instances = [substitute(body, {var: c}) for c in copies]
        pairs = [
            Eq(copies[a], copies[b])
            for a in range(len(copies))
            for b in range(a + 1, len(copies))
        ]
        return forall_many(copies, Implies(conj(instances), disj(pairs)))

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "TRUE":
            self.next()
            return Top()
        if tok.kind == "FALSE":
            self.next()
            return Bot()
        if tok.kind == "(":
            self.next()
            phi = self.formula()
            self.expect(")", "')'")
            return phi
        if tok.kind == "IDENT":
            if tok.value in self.sig.relations and self.lookup_bound(tok.value) is None:
                return self.relation_atom()
            lhs, lhs_sort = self.term()
            eq = self.expect("=", "'=' after a term")
            rhs, rhs_sort = self.term()
            self.unify_terms(lhs, lhs_sort, rhs, rhs_sort, eq.pos)
            return Eq(lhs, rhs)
        raise self.fail("expected a formula")

    def relation_atom(self) -> Formula:
        name_tok = self.next()
        arg_sorts = self.sig.relations[name_tok.value]
        args: list[Term] = []
        if self.peek().kind == "(":
            self.next()
            if self.peek().kind != ")":
                while True:
                    t, s = self.term()
                    pos = self.tokens[self.i - 1].pos
                    if len(args) < len(arg_sorts):
                        self.constrain(t, s, arg_sorts[len(args)], pos)
                    args.append(t)
                    if self.peek().kind != ",":
                        break
                    self.next()
            self.expect(")", "')'")
        if len(args) != len(arg_sorts):
            raise ParseError(
                f"{name_tok.value} expects {len(arg_sorts)} arguments, got {len(args)}",
                name_tok.pos + 1,
            )
        return Rel(name_tok.value, tuple(args))

    def term(self) -> tuple[Term, Optional[str]]:
        """Parse a term; return it with its sort when already determined."""
        tok = self.expect("IDENT", "a term")
        name = tok.value
        bound = self.lookup_bound(name)
        if bound is not None:
            return self.maybe_annotated(bound, tok.pos), bound.sort
        if name in self.sig.functions:
            arg_sorts, res = self.sig.functions[name]
            args: list[Term] = []
            if self.peek().kind == "(":
                self.next()
                if self.peek().kind != ")":
                    while True:
                        t, s = self.term()
                        pos = self.tokens[self.i - 1].pos
                        if len(args) < len(arg_sorts):
                            self.constrain(t, s, arg_sorts[len(args)], pos)
                        args.append(t)
                        if self.peek().kind != ",":
                            break
                        self.next()
                self.expect(")", "')'")
            if len(args) != len(arg_sorts):
                raise ParseError(
                    f"{name} expects {len(arg_sorts)} arguments, got {len(args)}", tok.pos + 1
                )
            return App(name, tuple(args)), res
        if name in self.sig.relations:
            raise ParseError(f"{name} is a relation symbol, not a term", tok.pos + 1)
        if self.peek().kind == "(":
            raise ParseError(f"unknown function or relation symbol {name}", tok.pos + 1)
        # Free variable: sort resolved after the whole formula is read.
        self.solver.add(name)
        var = Var(name, None)
        return self.maybe_annotated(var, tok.pos), self.solver.sort[self.solver.find(name)]

    def term_key(self, t: Term) -> Optional[str]:
        """The solver key tracking t's sort, when t is sort-underdetermined."""
        if isinstance(t, Var):
            if t.sort is None:
                return t.name
            if _is_placeholder(t.sort):
                return t.sort
        return None

    def maybe_annotated(self, var: Var, pos: int) -> Var:
        if self.peek().kind == ":":
            self.next()
            sort_tok = self.expect("IDENT", "a sort name")
            if sort_tok.value not in self.sig.sorts:
                raise ParseError(f"unknown sort {sort_tok.value}", sort_tok.pos + 1)
            key = self.term_key(var)
            if key is None:
                if var.sort != sort_tok.value:
                    raise ParseError(
                        f"{var.name} is bound at sort {var.sort}, annotated {sort_tok.value}",
                        sort_tok.pos + 1,
                    )
            else:
                self.solver.assign(key, sort_tok.value, sort_tok.pos)
        return var

    def constrain(self, t: Term, found: Optional[str], want: str, pos: int) -> None:
        """Require term t to have sort ``want``."""
        if found is not None and not _is_placeholder(found):
            if found != want:
                raise ParseError(f"argument has sort {found}, expected {want}", pos + 1)
            return
        key = self.term_key(t)
        if key is not None:
            self.solver.assign(key, want, pos)

    def unify_terms(
        self, lhs: Term, ls: Optional[str], rhs: Term, rs: Optional[str], pos: int
    ) -> None:
        lknown = ls is not None and not _is_placeholder(ls)
        rknown = rs is not None and not _is_placeholder(rs)
        lkey, rkey = self.term_key(lhs), self.term_key(rhs)
        if lknown and rknown:
            if ls != rs:
                raise ParseError(f"equality between sorts {ls} and {rs}", pos + 1)
        elif lknown:
            if rkey is not None:
                self.solver.assign(rkey, ls, pos)
        elif rknown:
            if lkey is not None:
                self.solver.assign(lkey, rs, pos)
        else:
            if lkey is not None and rkey is not None:
                self.solver.union(lkey, rkey, pos)

    # -- free-variable sort resolution

    def resolve(self, phi: Formula) -> Formula:
        assignments: dict[str, str] = {}
        unresolved: list[str] = []
        for key in self.solver.parent:
            sort = self.solver.sort[self.solver.find(key)]
            if sort is None:
                if len(self.sig.sorts) == 1:
                    sort = self.sig.sorts[0]
                else:
                    unresolved.append(self.solver.shown[key])
                    continue
            assignments[key] = sort
        if unresolved:
            names = ", ".join(sorted(set(unresolved)))
            raise ParseError(
                f"cannot infer the sort of {names}; annotate as name:SORT", len(self.text) + 1
            )
        return _apply_sorts(phi, assignments)


def _apply_sorts(phi: Formula, assignments: dict[str, str]) -> Formula:
    # Free variables carry sort None (keyed by name); unannotated bound
    # variables carry a ?bN placeholder (keyed by it); everything else is
    # already sorted and left alone.
    def fix_var(v: Var) -> Var:
        if v.sort is None:
            return Var(v.name, assignments[v.name])
        if _is_placeholder(v.sort):
            return Var(v.name, assignments[v.sort])
        return v

    def fix_term(t: Term) -> Term:
        if isinstance(t, Var):
            return fix_var(t)
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
        return type(f)(fix_var(f.var), walk(f.body))

    return walk(phi)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse and sort-check a formula against the signature.

    Raises :class:`ParseError` with a 1-based position on bad syntax, bad
    arity, unknown symbols, or underdetermined free-variable sorts.
    """
    parser = _Parser(text, sig)
    phi = parser.parse()
    phi = parser.resolve(phi)
    check_formula(phi, sig)
    return phi
