"""Line-oriented file formats: signatures, structures, rank tables.

Signature files::

    sort V
    rel E : V V
    fun f : V -> V
    fun c : -> V
    lang L1 uses E f
    lang L2 uses c

``lang`` lines define the members of a language family; each member keeps
every sort and the listed symbols.

Structure files::

    structure M
    sort V = {a, b, c}
    rel E : V V = {(a,b), (b,c)}
    fun f : V -> V = {a->b, b->c, c->a}
    fun c : -> V = {-> a}

Blank lines and ``#`` comments are ignored in both formats.  Unary relation
tuples may be written bare (``{a, b}``) or parenthesized (``{(a), (b)}``).

Rank table files map extensions to dimensions::

    dim {} = -inf
    dim {(a,), (b,)} = 0
    dim {(a,b)} = 1
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .logic import LanguageFamily, Signature, SignatureError, validate_family
from .semantics import FiniteStructure

_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"


class FileFormatError(ValueError):
    """A signature, structure, or rank-table file is malformed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _content_lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


@dataclass(frozen=True)
class SignatureFile:
    """A parsed signature file: the full signature plus any language family."""

    signature: Signature
    family: Optional[LanguageFamily]


def parse_signature_file(text: str) -> SignatureFile:
    sorts: list[str] = []
    relations: dict[str, tuple[str, ...]] = {}
    functions: dict[str, tuple[tuple[str, ...], str]] = {}
    langs: list[tuple[str, tuple[str, ...]]] = []

    for ln, line in _content_lines(text):
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "sort":
            if not re.fullmatch(_IDENT, rest):
                raise FileFormatError(f"bad sort name {rest!r}", ln)
            sorts.append(rest)
        elif head in ("rel", "fun"):
            m = re.fullmatch(rf"({_IDENT})\s*:\s*(.*)", rest)
            if not m:
                raise FileFormatError(f"expected 'NAME : ...' after {head}", ln)
            name, decl = m.group(1), m.group(2).strip()
            if head == "rel":
                args = tuple(decl.split()) if decl else ()
                relations[name] = args
            else:
                if "->" not in decl:
                    raise FileFormatError("function declaration needs '->'", ln)
                args_part, _, res = decl.rpartition("->")
                res = res.strip()
                args = tuple(args_part.split())
                if not re.fullmatch(_IDENT, res):
                    raise FileFormatError(f"bad result sort {res!r}", ln)
                functions[name] = (args, res)
        elif head == "lang":
            m = re.fullmatch(rf"({_IDENT})\s+uses\s*(.*)", rest)
            if not m:
                raise FileFormatError("expected 'lang LABEL uses SYM ...'", ln)
            langs.append((m.group(1), tuple(m.group(2).split())))
        else:
            raise FileFormatError(f"unknown directive {head!r}", ln)

    try:
        sig = Signature(tuple(sorts), relations, functions)
    except SignatureError as e:
        raise FileFormatError(str(e), 0) from e
    family = None
    if langs:
        members = []
        for label, symbols in langs:
            missing = [sym for sym in symbols if sym not in sig.symbols()]
            if missing:
                raise FileFormatError(f"lang {label} uses undeclared symbols {missing}", 0)
            members.append((label, sig.restrict(symbols)))
        family = validate_family(members)
    return SignatureFile(sig, family)


def render_signature_file(sig: Signature, family: Optional[LanguageFamily] = None) -> str:
    lines = [f"sort {s}" for s in sig.sorts]
    for r, args in sig.relations.items():
        lines.append(f"rel {r} : {' '.join(args)}".rstrip())
    for f, (args, res) in sig.functions.items():
        lines.append(f"fun {f} : {' '.join((*args, '->', res))}")
    if family is not None:
        for label in family.labels:
            lines.append(f"lang {label} uses {' '.join(sorted(family[label].symbols()))}".rstrip())
    return "\n".join(lines) + "\n"


def _parse_tuple_set(text: str, ln: int) -> list[tuple[str, ...]]:
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise FileFormatError(f"expected {{...}}, got {text!r}", ln)
    body = body[1:-1].strip()
    if not body:
        return []
    out: list[tuple[str, ...]] = []
    for chunk in re.findall(r"\(([^()]*)\)|([^,()\s][^,()]*)", body):
        inner, bare = chunk
        if bare:
            out.append((bare.strip(),))
        else:
            out.append(tuple(p.strip() for p in inner.split(",") if p.strip()))
    return out


def _parse_map(text: str, ln: int) -> list[tuple[tuple[str, ...], str]]:
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise FileFormatError(f"expected {{...}}, got {text!r}", ln)
    body = body[1:-1].strip()
    if not body:
        return []
    out: list[tuple[tuple[str, ...], str]] = []
    for entry in _split_top_level(body):
        if "->" not in entry:
            raise FileFormatError(f"map entry {entry!r} needs '->'", ln)
        lhs, _, rhs = entry.partition("->")
        lhs = lhs.strip()
        rhs = rhs.strip()
        if not rhs:
            raise FileFormatError(f"map entry {entry!r} has no value", ln)
        if not lhs:
            args: tuple[str, ...] = ()
        elif lhs.startswith("(") and lhs.endswith(")"):
            args = tuple(p.strip() for p in lhs[1:-1].split(",") if p.strip())
        else:
            args = (lhs,)
        out.append((args, rhs))
    return out


def _split_top_level(body: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur).strip())
    return [p for p in parts if p]


def parse_structure_file(text: str, sig: Optional[Signature] = None) -> FiniteStructure:
    """Parse a structure; with a signature given, declarations must match it,
    otherwise the signature is synthesized from the declarations."""
    name: Optional[str] = None
    universes: dict[str, tuple[str, ...]] = {}
    rel_decls: dict[str, tuple[str, ...]] = {}
    fun_decls: dict[str, tuple[tuple[str, ...], str]] = {}
    relations: dict[str, frozenset[tuple[str, ...]]] = {}
    functions: dict[str, dict[tuple[str, ...], str]] = {}

    for ln, line in _content_lines(text):
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "structure":
            if name is not None:
                raise FileFormatError("second 'structure' line", ln)
            name = rest
        elif head == "sort":
            m = re.fullmatch(rf"({_IDENT})\s*=\s*(.*)", rest)
            if not m:
                raise FileFormatError("expected 'sort NAME = {...}'", ln)
            elems = _parse_tuple_set(m.group(2), ln)
            flat = []
            for t in elems:
                if len(t) != 1:
                    raise FileFormatError(f"sort elements must be bare names, got {t}", ln)
                flat.append(t[0])
            universes[m.group(1)] = tuple(flat)
        elif head == "rel":
            m = re.fullmatch(rf"({_IDENT})\s*:\s*([^=]*)=\s*(.*)", rest)
            if not m:
                raise FileFormatError("expected 'rel NAME : SORTS = {...}'", ln)
            rname = m.group(1)
            rel_decls[rname] = tuple(m.group(2).split())
            relations[rname] = frozenset(_parse_tuple_set(m.group(3), ln))
        elif head == "fun":
            m = re.fullmatch(rf"({_IDENT})\s*:\s*([^=]*)=\s*(.*)", rest)
            if not m:
                raise FileFormatError("expected 'fun NAME : SORTS -> SORT = {...}'", ln)
            fname = m.group(1)
            decl = m.group(2).strip()
            if "->" not in decl:
                raise FileFormatError("function declaration needs '->'", ln)
            args_part, _, res = decl.rpartition("->")
            fun_decls[fname] = (tuple(args_part.split()), res.strip())
            functions[fname] = dict(_parse_map(m.group(3), ln))
        else:
            raise FileFormatError(f"unknown directive {head!r}", ln)

    if name is None:
        raise FileFormatError("missing 'structure NAME' line", 0)
    if sig is None:
        sig = Signature(tuple(universes), rel_decls, fun_decls)
    else:
        for s in universes:
            if s not in sig.sorts:
                raise FileFormatError(f"sort {s} not in the signature", 0)
        for s in sig.sorts:
            universes.setdefault(s, ())
        for rname, decl in rel_decls.items():
            if sig.relations.get(rname) != decl:
                raise FileFormatError(f"relation {rname} declared as {decl}, signature disagrees", 0)
        for fname, decl in fun_decls.items():
            if sig.functions.get(fname) != decl:
                raise FileFormatError(f"function {fname} declared as {decl}, signature disagrees", 0)
        for rname in sig.relations:
            relations.setdefault(rname, frozenset())
        for fname in sig.functions:
            functions.setdefault(fname, {})
    try:
        return FiniteStructure(name, sig, universes, relations, functions)
    except SignatureError as e:
        raise FileFormatError(str(e), 0) from e


def render_structure_file(S: FiniteStructure) -> str:
    lines = [f"structure {S.name}"]
    for s in S.signature.sorts:
        lines.append(f"sort {s} = {{{', '.join(S.universes[s])}}}")
    for r, arg_sorts in S.signature.relations.items():
        tuples = ", ".join(f"({','.join(t)})" for t in sorted(S.relations[r]))
        lines.append(f"rel {r} : {' '.join(arg_sorts)} = {{{tuples}}}")
    for f, (arg_sorts, res) in S.signature.functions.items():
        entries = ", ".join(
            f"({','.join(t)})->{v}" if t else f"->{v}"
            for t, v in sorted(S.functions[f].items())
        )
        decl = " ".join((*arg_sorts, "->", res))
        lines.append(f"fun {f} : {decl} = {{{entries}}}")
    return "\n".join(lines) + "\n"


def parse_rank_table(text: str) -> dict[frozenset, Union[int, float]]:
    """Parse ``dim { tuples } = VALUE`` lines; VALUE is a natural or -inf."""
    out: dict[frozenset, Union[int, float]] = {}
    for ln, line in _content_lines(text):
        m = re.fullmatch(r"dim\s*(\{.*\})\s*=\s*(-inf|\d+)", line)
        if not m:
            raise FileFormatError("expected 'dim { ... } = NAT|-inf'", ln)
        ext = frozenset(_parse_tuple_set(m.group(1), ln))
        value: Union[int, float] = float("-inf") if m.group(2) == "-inf" else int(m.group(2))
        if ext in out and out[ext] != value:
            raise FileFormatError(f"conflicting dimensions for {sorted(ext)}", ln)
        out[ext] = value
    return out
