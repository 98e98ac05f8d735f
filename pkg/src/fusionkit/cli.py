"""Command-line surface: file plumbing, subcommand dispatch, rendering.

Verdict-producing subcommands exit 0 on a pass and 1 on a violation;
usage and input problems (unreadable file, malformed content, unknown
name, unmet precondition) exit 2 with a positioned diagnostic.  Text
reports are byte-identical across runs on the same inputs; JSON reports
carry a ``"schema": 1`` version field.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .encodings import (
    aut_decode,
    aut_encode,
    generic_predicate_check,
    rg_decode,
    rg_encode,
    skolem_decode,
    skolem_encode,
)
from .files import (
    SignatureFile,
    parse_rank_table,
    parse_signature_file,
    parse_structure_file,
    render_signature_file,
    render_structure_file,
    _parse_map,
)
from .fusion import (
    InterpolationError,
    JointConsistencyError,
    bruteforce_oracle,
    check_interpolative,
    check_jcp,
    nary_interpolants,
)
from .logic import (
    And,
    Bot,
    Formula,
    LanguageFamily,
    Signature,
    Theory,
    Var,
    formula_size,
    free_vars,
    print_formula,
    quantifier_rank,
)
from .normal_forms import (
    eflat_conjoin,
    literal_to_eflat,
    morleyize,
    qf_to_dnf,
    qf_to_eflat_disjunction,
    relationalize,
)
from .parser import parse_formula
from .pseudotopology import (
    Dim,
    RankFunction,
    check_approx_interpolative,
    check_dim_compatible,
    emit_pt_axioms,
    growth_rank,
    table_rank,
    threshold_rank,
    topology_basis,
)
from .semantics import DefinabilityClass, FiniteStructure


class CliError(ValueError):
    """Usage or input problem; rendered as a diagnostic with exit code 2."""


# ---------------------------------------------------------------------------
# Workspace: named artifacts resolved from files


@dataclass
class Workspace:
    """Signatures, families, structures, and rank tables loaded from files.

    Names are unique per kind (signatures and rank tables go by file stem,
    structures by their declared name) and every structure is validated
    against its signature as part of parsing.
    """

    signatures: dict[str, SignatureFile] = field(default_factory=dict)
    structures: dict[str, FiniteStructure] = field(default_factory=dict)
    rank_tables: dict[str, dict[frozenset, Dim]] = field(default_factory=dict)

    def load_signature(self, path: str) -> SignatureFile:
        sf = _parse_file(path, parse_signature_file)
        return self._register(self.signatures, Path(path).stem, sf, "signature")

    def load_family(self, path: str) -> tuple[SignatureFile, LanguageFamily]:
        sf = self.load_signature(path)
        if sf.family is None:
            raise CliError(f"{path}: no 'lang' lines, so no language family")
        return sf, sf.family

    def load_structure(self, path: str, sig: Optional[Signature] = None) -> FiniteStructure:
        S = _parse_file(path, lambda text: parse_structure_file(text, sig))
        return self._register(self.structures, S.name, S, "structure")

    def load_rank_table(self, path: str) -> dict[frozenset, Dim]:
        table = _parse_file(path, parse_rank_table)
        return self._register(self.rank_tables, Path(path).stem, table, "rank table")

    def _register(self, pool: dict, name: str, value, kind: str):
        if name in pool:
            raise CliError(f"duplicate {kind} name {name!r}")
        pool[name] = value
        return value


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}") from e


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror or e}") from e


def _parse_file(path: str, parse):
    try:
        return parse(_read(path))
    except ValueError as e:
        if isinstance(e, CliError):
            raise
        raise CliError(f"{path}: {e}") from e


# ---------------------------------------------------------------------------
# Report rendering


@dataclass(frozen=True)
class ValueReport:
    """Adapter giving value-producing subcommands the report surface."""

    body: tuple[str, ...]
    payload: Mapping[str, object]

    def lines(self) -> list[str]:
        return list(self.body)

    def data(self) -> dict:
        return dict(self.payload)


def render_report(report, mode: str = "text") -> str:
    """Deterministic rendering: text mode is the report's lines, JSON mode
    its data dict under a versioned schema."""
    if mode == "json":
        return json.dumps({"schema": 1, **report.data()}, sort_keys=True, indent=2) + "\n"
    return "\n".join(report.lines()) + "\n"


def _verdict_code(report) -> int:
    return 0 if report.verdict == "ok" else 1


# ---------------------------------------------------------------------------
# Shared option parsing


def _parse_params(text: str) -> Union[str, frozenset]:
    if text in ("all", "none"):
        return text
    return frozenset(_names(text))


def _names(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _definability_class(sig: Signature, args) -> DefinabilityClass:
    return DefinabilityClass(sig, args.qrank, _parse_params(args.params), args.max_size)


def _rank_from_spec(spec: str, scope: DefinabilityClass, ws: Workspace) -> RankFunction:
    """--rank values: ``threshold:T``, ``growth``, or ``table:FILE``."""
    kind, _, arg = spec.partition(":")
    if kind == "threshold":
        if not arg.isdigit() or int(arg) < 1:
            raise CliError(f"threshold rank needs a positive size, got {arg!r}")
        return threshold_rank(int(arg), scope)
    if kind == "growth" and not arg:
        return growth_rank(scope)
    if kind == "table" and arg:
        return table_rank(ws.load_rank_table(arg), scope)
    raise CliError(f"unknown rank {spec!r} (expected threshold:T, growth, or table:FILE)")


def _resolve_vars(names: Sequence[str], pool: Mapping[str, Var], where: str) -> tuple[Var, ...]:
    out = []
    for n in names:
        if n not in pool:
            raise CliError(f"variable {n!r} does not occur in {where}")
        out.append(pool[n])
    return tuple(out)


def _var_pool(*formulas: Formula) -> dict[str, Var]:
    pool: dict[str, Var] = {}
    for phi in formulas:
        for v in free_vars(phi):
            if pool.get(v.name, v) != v:
                raise CliError(f"variable {v.name!r} used at two sorts across the formulas")
            pool[v.name] = v
    return pool


def _parse_element_map(text: str) -> list[tuple[tuple[str, ...], str]]:
    try:
        return _parse_map(f"{{{text}}}", 0)
    except ValueError as e:
        raise CliError(f"bad --map value: {e}") from e


def _sentence(text: str, sig: Signature, what: str) -> Formula:
    phi = parse_formula(text, sig)
    if free_vars(phi):
        names = [v.name for v in free_vars(phi)]
        raise CliError(f"{what} must be a sentence, has free variables {names}")
    return phi


# ---------------------------------------------------------------------------
# Subcommand handlers: each returns (report, exit code)


def _cmd_parse(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    sf = ws.load_signature(args.sig)
    phi = parse_formula(args.formula, sf.signature)
    text = print_formula(phi)
    payload = {
        "verdict": "ok",
        "formula": text,
        "free_vars": [[v.name, v.sort] for v in free_vars(phi)],
        "size": formula_size(phi),
        "qrank": quantifier_rank(phi),
    }
    return ValueReport((text,), payload), 0


def _cmd_fmt(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    if args.struct and args.formula:
        raise CliError("--struct and --formula cannot be combined")
    if args.formula:
        if not args.sig:
            raise CliError("--formula needs --sig for sort context")
        sf = ws.load_signature(args.sig)
        text = print_formula(parse_formula(args.formula, sf.signature))
    elif args.struct:
        text = render_structure_file(ws.load_structure(args.struct)).rstrip("\n")
    elif args.sig:
        sf = ws.load_signature(args.sig)
        text = render_signature_file(sf.signature, sf.family).rstrip("\n")
    else:
        raise CliError("nothing to format: give --sig, --struct, or --formula with --sig")
    return ValueReport(tuple(text.split("\n")), {"verdict": "ok", "text": text}), 0


def _conjuncts(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return _conjuncts(phi.lhs) + _conjuncts(phi.rhs)
    return [phi]


def _cmd_normalize(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    sf = ws.load_signature(args.sig)
    if args.normal_pass == "morleyize":
        if sf.family is None:
            raise CliError(f"{args.sig}: morleyize needs 'lang' lines (a language family)")
        size_cap = args.max_size if args.max_size is not None else 7
        exp = morleyize(sf.family, {}, args.qrank, args.max_arity, size_cap)
        body = []
        defs = {}
        for label in exp.family.labels:
            defs[label] = {}
            for sym, phi in exp.definitions[label].items():
                body.append(f"{label}: {sym} := {print_formula(phi)}")
                defs[label][sym] = print_formula(phi)
        return ValueReport(tuple(body), {"verdict": "ok", "definitions": defs}), 0

    if not args.formula:
        raise CliError(f"--pass {args.normal_pass} needs --formula")
    phi = parse_formula(args.formula, sf.signature)
    if args.normal_pass == "eflat":
        efs = qf_to_eflat_disjunction(phi, sf.signature, args.max_size)
        printed = [print_formula(ef.to_formula()) for ef in efs]
        body = tuple(printed) if printed else (print_formula(Bot()),)
        return ValueReport(body, {"verdict": "ok", "disjuncts": printed}), 0
    if args.normal_pass == "dnf":
        text = print_formula(qf_to_dnf(phi))
        return ValueReport((text,), {"verdict": "ok", "formula": text}), 0
    if args.normal_pass == "flatten":
        ef = eflat_conjoin([literal_to_eflat(l, sf.signature) for l in _conjuncts(phi)])
        text = print_formula(ef.to_formula())
        return ValueReport((text,), {"verdict": "ok", "formula": text}), 0
    # relationalize: translate the formula into the graph language
    _, tr = relationalize(Theory("cli", sf.signature))
    text = print_formula(tr(phi))
    target = render_signature_file(tr.target).rstrip("\n")
    return ValueReport((text,), {"verdict": "ok", "formula": text, "target": target}), 0


def _cmd_check_interpolative(args) -> tuple[object, int]:
    ws = Workspace()
    sf, fam = ws.load_family(args.family)
    S = ws.load_structure(args.struct, sf.signature)
    cap = _definability_class(fam.intersection, args)
    members = {lbl: _definability_class(fam[lbl], args) for lbl in fam.labels}
    rep = check_interpolative(S, fam, cap, members, args.max_family, args.max_arity)
    return rep, _verdict_code(rep)


def _cmd_check_approx(args) -> tuple[object, int]:
    ws = Workspace()
    sf, fam = ws.load_family(args.family)
    S = ws.load_structure(args.struct, sf.signature)
    cap = _definability_class(fam.intersection, args)
    members = {lbl: _definability_class(fam[lbl], args) for lbl in fam.labels}
    r = _rank_from_spec(args.rank, cap, ws)
    rep = check_approx_interpolative(S, fam, r, cap, members, args.max_family, args.max_arity)
    return rep, _verdict_code(rep)


def _cmd_check_jcp(args) -> tuple[object, int]:
    ws = Workspace()
    sf, fam = ws.load_family(args.family)
    S = ws.load_structure(args.struct, sf.signature)
    rep = check_jcp(S, fam, args.b_bound, args.qrank, args.closure, args.closure_threshold)
    return rep, _verdict_code(rep)


def _cmd_check_generic_predicate(args) -> tuple[object, int]:
    ws = Workspace()
    M = ws.load_structure(args.struct)
    cls = _definability_class(M.signature, args)
    rep = generic_predicate_check(M, _names(args.pred), cls, args.n_max)
    return rep, _verdict_code(rep)


def _cmd_check_dim_compatible(args) -> tuple[object, int]:
    ws = Workspace()
    S = ws.load_structure(args.struct)
    phi = parse_formula(args.basis, S.signature)
    pool = _var_pool(phi)
    xs = _resolve_vars(_names(args.x), pool, "the basis formula")
    ys = _resolve_vars(_names(args.y), pool, "the basis formula")
    basis = topology_basis(S, phi, xs, ys)
    cls = _definability_class(S.signature, args)
    r = _rank_from_spec(args.rank, cls, ws)
    rep = check_dim_compatible(S, basis, r, cls, args.samples, args.seed)
    return rep, _verdict_code(rep)


def _cmd_emit_axioms(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    sf = ws.load_signature(args.sig)
    sig = sf.signature
    phi_cap = parse_formula(args.cap, sig)
    phis = [parse_formula(t, sig) for t in args.member]
    deltas = [parse_formula(t, sig) for t in args.delta or []]
    if not deltas:
        raise CliError("need one --delta per --member")
    gamma = parse_formula(args.gamma, sig) if args.gamma else None
    pool = _var_pool(phi_cap, *phis, *deltas, *([gamma] if gamma else []))
    xs = _resolve_vars(_names(args.x), pool, "the given formulas")
    ys = _resolve_vars(_names(args.y), pool, "the given formulas")
    if len(args.z or []) != len(phis):
        raise CliError("need one --z block per --member")
    zs = [_resolve_vars(_names(block), pool, "the given formulas") for block in args.z]
    inst = emit_pt_axioms(phi_cap, phis, deltas, xs, ys, zs, gamma)
    text = print_formula(inst.sentence)
    return ValueReport((text,), {"verdict": "ok", "sentence": text}), 0


def _sigma_from_entries(
    M: FiniteStructure, entries: Sequence[tuple[tuple[str, ...], str]]
) -> dict[str, dict[str, str]]:
    """Per-sort map from flat a->b entries; unmentioned elements stay fixed."""
    sigma = {s: {e: e for e in M.universes[s]} for s in M.signature.sorts}
    for lhs, rhs in entries:
        if len(lhs) != 1:
            raise CliError(f"map entries must be single elements, got {lhs}")
        a = lhs[0]
        hit = [s for s in M.signature.sorts if a in M.universes[s]]
        if not hit:
            raise CliError(f"element {a!r} is in no sort of {M.name}")
        for s in hit:
            if rhs not in M.universes[s]:
                raise CliError(f"element {rhs!r} is not in sort {s}")
            sigma[s][a] = rhs
    return sigma


def _cmd_encode(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    S = ws.load_structure(args.infile)
    if args.kind == "random-graph":
        pair = rg_encode(S)
    elif args.kind == "automorphism":
        if args.map is None:
            raise CliError("encode automorphism needs --map a->b,...")
        pair = aut_encode(S, _sigma_from_entries(S, _parse_element_map(args.map)))
    else:  # skolem
        if not (args.formula and args.x and args.y and args.map is not None):
            raise CliError("encode skolem needs --formula, --x, --y, and --map")
        phi = parse_formula(args.formula, S.signature)
        pool = _var_pool(phi)
        xs = _resolve_vars(_names(args.x), pool, "the formula")
        (yv,) = _resolve_vars(_names(args.y), pool, "the formula")
        f = {tuple(lhs): rhs for lhs, rhs in _parse_element_map(args.map)}
        pair = skolem_encode(S, phi, xs, yv, f)
    _write(args.outfile, render_structure_file(pair.target))
    body = (f"encoded {S.name} as {pair.target.name}, wrote {args.outfile}",)
    payload = {"verdict": "ok", "source": S.name, "target": pair.target.name}
    return ValueReport(body, payload), 0


def _cmd_decode(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    P = ws.load_structure(args.infile)
    extra: list[str] = []
    payload: dict[str, object] = {"verdict": "ok", "source": P.name}
    if args.kind == "random-graph":
        M = rg_decode(P)
    elif args.kind == "automorphism":
        M, sigma = aut_decode(P)
        for s in M.signature.sorts:
            for a in M.universes[s]:
                extra.append(f"tw {s}: {a} -> {sigma[s][a]}")
        payload["tw"] = {s: dict(sigma[s]) for s in M.signature.sorts}
    else:  # skolem
        M, f = skolem_decode(P)
        for tup, v in sorted(f.items()):
            extra.append(f"f({','.join(tup)}) = {v}")
        payload["f"] = [[list(tup), v] for tup, v in sorted(f.items())]
    _write(args.outfile, render_structure_file(M))
    payload["target"] = M.name
    body = (f"decoded {P.name} as {M.name}, wrote {args.outfile}", *extra)
    return ValueReport(body, payload), 0


def _cmd_interpolate(args) -> tuple[ValueReport, int]:
    ws = Workspace()
    _, fam = ws.load_family(args.family)
    if len(args.formula) != len(fam.labels):
        raise CliError(
            f"need one --formula per family member "
            f"({len(fam.labels)} members, got {len(args.formula)})"
        )
    items = [
        (_sentence(text, fam[label], f"formula for {label}"), fam[label])
        for text, label in zip(args.formula, fam.labels)
    ]
    cap = DefinabilityClass(fam.intersection, args.qrank, "none")
    max_size = args.max_size if args.max_size is not None else 2
    oracle = bruteforce_oracle(max_size, cap, args.budget)
    try:
        result = nary_interpolants(items, oracle)
    except JointConsistencyError as e:
        body = (f"VIOLATION {e}", *render_structure_file(e.model).rstrip("\n").split("\n"))
        payload = {
            "verdict": "violation",
            "reason": str(e),
            "model": render_structure_file(e.model),
        }
        return ValueReport(body, payload), 1
    except InterpolationError as e:
        return ValueReport((f"VIOLATION {e}",), {"verdict": "violation", "reason": str(e)}), 1
    printed = [print_formula(f) for f in result.formulas]
    return ValueReport(tuple(printed), {"verdict": "ok", "interpolants": printed}), 0


# ---------------------------------------------------------------------------
# Argument parser


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # keep run() returning instead of exiting
        raise CliError(message)


def _build_parser() -> _ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="render the report as JSON")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--max-size", type=int, default=None, metavar="N",
                        help="enumeration cap (formula size, disjunct count, or model size)")

    top = _ArgumentParser(prog="fusionkit", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def command(name: str, handler, **kw) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], **kw)
        p.set_defaults(handler=handler)
        return p

    def class_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--qrank", type=int, default=0, help="quantifier rank bound")
        p.add_argument("--params", default="none",
                       help="parameter pool: all, none, or element names a,b,...")

    p = command("parse", _cmd_parse, help="parse a formula and print its canonical form")
    p.add_argument("--formula", required=True)
    p.add_argument("--sig", required=True, metavar="FILE")

    p = command("fmt", _cmd_fmt, help="re-render a signature, structure, or formula")
    p.add_argument("--sig", metavar="FILE")
    p.add_argument("--struct", metavar="FILE")
    p.add_argument("--formula")

    p = command("normalize", _cmd_normalize, help="run a normal-form pass on a formula")
    p.add_argument("--pass", dest="normal_pass", required=True,
                   choices=["eflat", "dnf", "flatten", "relationalize", "morleyize"])
    p.add_argument("--formula")
    p.add_argument("--sig", required=True, metavar="FILE")
    p.add_argument("--qrank", type=int, default=0, help="definition rank for morleyize")
    p.add_argument("--max-arity", type=int, default=1)

    check = sub.add_parser("check", help="run a verdict-producing check")
    checks = check.add_subparsers(dest="check_kind", required=True,
                                  parser_class=_ArgumentParser)

    def check_command(name: str, handler) -> argparse.ArgumentParser:
        p = checks.add_parser(name, parents=[common])
        p.set_defaults(handler=handler)
        p.add_argument("--struct", required=True, metavar="FILE")
        return p

    p = check_command("interpolative", _cmd_check_interpolative)
    p.add_argument("--family", required=True, metavar="FILE")
    class_flags(p)
    p.add_argument("--max-family", type=int, default=None)
    p.add_argument("--max-arity", type=int, default=1)

    p = check_command("approx", _cmd_check_approx)
    p.add_argument("--family", required=True, metavar="FILE")
    class_flags(p)
    p.add_argument("--max-family", type=int, default=None)
    p.add_argument("--max-arity", type=int, default=1)
    p.add_argument("--rank", required=True, help="threshold:T, growth, or table:FILE")

    p = check_command("jcp", _cmd_check_jcp)
    p.add_argument("--family", required=True, metavar="FILE")
    p.add_argument("--qrank", type=int, default=0)
    p.add_argument("--b-bound", type=int, default=1, help="largest base size")
    p.add_argument("--closure", choices=["dcl", "acl"], default=None)
    p.add_argument("--closure-threshold", type=int, default=None)

    p = check_command("generic-predicate", _cmd_check_generic_predicate)
    p.add_argument("--pred", required=True, help="predicate elements a,b,...")
    class_flags(p)
    p.add_argument("--n-max", type=int, default=2, help="largest tuple arity")

    p = check_command("dim-compatible", _cmd_check_dim_compatible)
    p.add_argument("--basis", required=True, help="basis formula over x and y")
    p.add_argument("--x", required=True, help="point variables x1,x2,...")
    p.add_argument("--y", required=True, help="index variables y1,y2,...")
    class_flags(p)
    p.add_argument("--rank", required=True, help="threshold:T, growth, or table:FILE")
    p.add_argument("--samples", type=int, default=100)

    p = command("emit-axioms", _cmd_emit_axioms,
                help="emit one pseudo-density axiom sentence")
    p.add_argument("--sig", required=True, metavar="FILE")
    p.add_argument("--cap", required=True, help="intersection-language formula")
    p.add_argument("--member", action="append", required=True,
                   help="member formula (repeat per member)")
    p.add_argument("--delta", action="append", help="guard formula (repeat per member)")
    p.add_argument("--gamma", help="parameter guard formula")
    p.add_argument("--x", required=True, help="shared point variables")
    p.add_argument("--y", required=True, help="intersection parameter variables")
    p.add_argument("--z", action="append", help="member parameter block (repeat per member)")

    for name, handler in (("encode", _cmd_encode), ("decode", _cmd_decode)):
        p = command(name, handler, help=f"{name} a structure file")
        p.add_argument("kind", choices=["random-graph", "automorphism", "skolem"])
        p.add_argument("infile", metavar="IN")
        p.add_argument("outfile", metavar="OUT")
        if name == "encode":
            p.add_argument("--map", help="element map a->b,... (automorphism, skolem)")
            p.add_argument("--formula", help="defining formula (skolem)")
            p.add_argument("--x", help="argument variables (skolem)")
            p.add_argument("--y", help="value variable (skolem)")

    p = command("interpolate", _cmd_interpolate,
                help="interpolants for jointly inconsistent member sentences")
    p.add_argument("--family", required=True, metavar="FILE")
    p.add_argument("--formula", action="append", required=True,
                   help="member sentence (one per family member, in order)")
    p.add_argument("--qrank", type=int, default=1, help="interpolant rank bound")
    p.add_argument("--budget", type=int, default=12, help="interpolant size budget")

    return top


# ---------------------------------------------------------------------------
# Entry points


def run(argv: Sequence[str]) -> tuple[int, str]:
    """Execute one subcommand; exit code plus the rendered report."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except CliError as e:
        return 2, f"error: {e}\n"
    except SystemExit as e:  # --help prints directly and requests an exit
        return int(e.code or 0), ""
    try:
        report, code = args.handler(args)
    except (ValueError, OSError) as e:
        return 2, f"error: {e}\n"
    return code, render_report(report, "json" if args.json else "text")


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, text = run(sys.argv[1:] if argv is None else list(argv))
    (sys.stderr if code == 2 else sys.stdout).write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
