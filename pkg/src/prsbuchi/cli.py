"""Command-line entry point.

Exit codes: 0 holds / exists, 1 fails / does not exist, 2 unknown, 3 usage
or parse error.
"""
from __future__ import annotations

import argparse
import sys

from .altl import FormulaError, check_disjuncts, disjunct_to_query, parse_formula
from .decide import accepts
from .normalize import normalize
from .oracle import ORACLE_BUDGET, oracle_accepting, oracle_holds_inf
from .syntax import ParseError, format_system, parse_components, parse_system, parse_term
from .system import fmt_set
from .verdict import SearchBudget

EXIT_YES, EXIT_NO, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _budget_flags(p):
    p.add_argument("--node-bound", type=int, default=ORACLE_BUDGET.node_bound)
    p.add_argument("--depth-bound", type=int, default=ORACLE_BUDGET.depth_bound)
    p.add_argument("--size-bound", type=int, default=ORACLE_BUDGET.marking_bound,
                   help="max term size (oracle) / token count (parallel engines)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="prsbuchi", description="Buchi acceptance and ALTL checking for process rewrite systems")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="model-check a fragment formula over infinite runs")
    p.add_argument("system")
    p.add_argument("--term")
    p.add_argument("--formula", required=True)
    p.add_argument("--jobs", type=int, default=1)
    _budget_flags(p)

    p = sub.add_parser("accept", help="decide existence of a (K,Kw)-accepting infinite derivation")
    p.add_argument("system")
    p.add_argument("--term")
    p.add_argument("--K", dest="k", default="")
    p.add_argument("--Kw", dest="kw", default="")
    _budget_flags(p)

    p = sub.add_parser("normalize", help="print the normal-form system with the extra component")
    p.add_argument("system")

    p = sub.add_parser("oracle", help="bounded brute-force answer for accept/check queries")
    p.add_argument("system")
    p.add_argument("--term")
    p.add_argument("--formula")
    p.add_argument("--K", dest="k", default="")
    p.add_argument("--Kw", dest="kw", default="")
    _budget_flags(p)
    return ap


def _load(args):
    try:
        with open(args.system, encoding="utf-8") as fh:
            sf = parse_system(fh.read())
    except OSError as e:
        raise UsageError(f"cannot read {args.system}: {e.strerror}") from None
    term = None
    if getattr(args, "term", None):
        term = parse_term(args.term, {v.name for v in sf.mbrs.vars})
    elif sf.init is not None:
        term = sf.init
    return sf, term


def _need_term(term):
    if term is None:
        raise UsageError("no start term: pass --term or add an 'init' line")
    if str(term) == "eps":
        raise UsageError("the start term must not be eps")
    return term


def _budget(args) -> SearchBudget:
    try:
        return SearchBudget(args.size_bound, args.depth_bound, args.node_bound)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _query_sets(args, n):
    k, kw = parse_components(args.k), parse_components(args.kw)
    bad = sorted(i for i in k | kw if i < 1 or i > n)
    if bad:
        raise UsageError(f"component {bad[0]} out of range 1..{n}")
    return k, kw


def _code(answer: str) -> int:
    return {"yes": EXIT_YES, "no": EXIT_NO}.get(answer, EXIT_UNKNOWN)


def cmd_check(args, out) -> int:
    sf, term = _load(args)
    term = _need_term(term)
    phi = parse_formula(args.formula)
    budget = _budget(args)
    results = check_disjuncts(sf.mbrs, term, phi, budget, jobs=max(1, args.jobs))
    print(f"formula: {phi}", file=out)
    print(f"term: {term}", file=out)
    print("negation as disjuncts:" if results else "negation is unsatisfiable", file=out)
    for i, (d, v) in enumerate(results, 1):
        print(f"  [{i}] {d} : {v.answer}", file=out)
    failing = next((d for d, v in results if v.is_yes), None)
    if failing is not None:
        print(f"verdict: fails (violating runs satisfy {failing})", file=out)
        q = disjunct_to_query(sf.mbrs, failing)
        w = oracle_accepting(q.mbrs, term, q.k, q.kw, budget)
        if w.is_yes:
            print(f"witness: {w.witness.lasso}", file=out)
        return EXIT_NO
    if all(v.is_no for _, v in results):
        print("verdict: holds", file=out)
        return EXIT_YES
    print("verdict: unknown", file=out)
    return EXIT_UNKNOWN


def cmd_accept(args, out) -> int:
    sf, term = _load(args)
    term = _need_term(term)
    k, kw = _query_sets(args, sf.mbrs.n)
    print(f"query: term {term}, K = {fmt_set(k)}, Kw = {fmt_set(kw)}", file=out)
    if not kw <= k:
        print("verdict: does not exist (maximalInf ⊆ maximal always holds, but Kw ⊄ K)", file=out)
        return EXIT_NO
    v = accepts(sf.mbrs, term, k, kw, _budget(args))
    text = {"yes": "exists", "no": "does not exist"}.get(v.answer, "unknown")
    print(f"verdict: {text}" + (f" ({v.reason})" if v.reason else ""), file=out)
    return _code(v.answer)


def cmd_normalize(args, out) -> int:
    sf, _ = _load(args)
    res = normalize(sf.mbrs)
    comments = [f"normal form with extra component {res.mf.n}",
                "aux rules: " + (" ".join(sorted(res.aux_rules)) or "(none)")]
    out.write(format_system(res.mf, sf.init, comments))
    return EXIT_YES


def cmd_oracle(args, out) -> int:
    sf, term = _load(args)
    term = _need_term(term)
    budget = _budget(args)
    if args.formula:
        phi = parse_formula(args.formula)
        v = oracle_holds_inf(sf.mbrs, term, phi, budget)
        text = {"yes": "holds", "no": "fails"}.get(v.answer, "unknown")
        print(f"oracle verdict: {text}" + (f" ({v.reason})" if v.reason else ""), file=out)
        return _code(v.answer)
    k, kw = _query_sets(args, sf.mbrs.n)
    v = oracle_accepting(sf.mbrs, term, k, kw, budget)
    text = {"yes": "exists", "no": "does not exist"}.get(v.answer, "unknown")
    print(f"oracle verdict: {text}", file=out)
    if v.is_yes:
        print(f"witness ({v.witness.kind}): {v.witness.lasso}", file=out)
    return _code(v.answer)


COMMANDS = {"check": cmd_check, "accept": cmd_accept, "normalize": cmd_normalize, "oracle": cmd_oracle}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except (ParseError, FormulaError, UsageError, ValueError) as e:
        print(f"prsbuchi: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
