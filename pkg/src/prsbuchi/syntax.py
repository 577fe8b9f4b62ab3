"""Text formats for terms and system files.

A system file::

    # comment
    actions a b
    vars X Y
    components 2
    init X
    rule r1: X -a-> X || Y @ {1}
    rule r2: Y -b-> eps @ {2}

Terms use ``eps``, identifiers, ``||`` (lowest precedence), ``.``
(right-associative, binds tighter) and parentheses.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .system import Mbrs, Rule, fmt_set
from .terms import EPS, Term, Var, par, seq

IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
RULE_ID = r"[A-Za-z0-9_][A-Za-z0-9_~']*"


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(msg if line is None else f"line {line}: {msg}")
        self.line = line


_TERM_TOKEN = re.compile(r"\s*(\|\||[.()]|" + IDENT + r")")


def _term_tokens(text: str) -> list:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TERM_TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected {text[pos:].strip()[:10]!r} in term")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_term(text: str, declared=None) -> Term:
    """Parse a term; with ``declared`` (variable names) unknown names are rejected."""
    toks = _term_tokens(text)
    i = 0

    def peek():
        return toks[i] if i < len(toks) else None

    def take(want=None):
        nonlocal i
        tok = peek()
        if tok is None or (want is not None and tok != want):
            raise ParseError(f"expected {want or 'a term'}, found {tok or 'end of input'!r}")
        i += 1
        return tok

    def parallel():
        parts = [sequential()]
        while peek() == "||":
            take()
            parts.append(sequential())
        return par(*parts)

    def sequential():
        head = atom()
        if peek() == ".":
            take()
            return seq(head, sequential())
        return head

    def atom():
        tok = take()
        if tok == "(":
            inner = parallel()
            take(")")
            return inner
        if tok == "eps":
            return EPS
        if tok in ("||", ".", ")"):
            raise ParseError(f"unexpected {tok!r} in term")
        if declared is not None and tok not in declared:
            raise ParseError(f"undeclared variable {tok}")
        return Var(tok)

    if not toks:
        raise ParseError("empty term")
    out = parallel()
    if peek() is not None:
        raise ParseError(f"unexpected {peek()!r} after term")
    return out


def parse_components(text: str) -> frozenset:
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    body = body.strip()
    if not body:
        return frozenset()
    try:
        return frozenset(int(x) for x in body.split(","))
    except ValueError:
        raise ParseError(f"bad component set {text!r}") from None


@dataclass(frozen=True)
class SystemFile:
    mbrs: Mbrs
    init: Term | None = None


_RULE = re.compile(r"rule\s+(" + RULE_ID + r")\s*:\s*(.*?)\s+-(" + IDENT + r")->\s*(.*?)\s*@\s*(\{[^}]*\})\s*$")


def parse_system(text: str) -> SystemFile:
    actions = None
    variables = None
    n = None
    init_text = None
    raw_rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word = line.split(None, 1)[0]
        rest = line[len(word):].strip()
        if word == "actions":
            actions = rest.split()
            bad = [a for a in actions if not re.fullmatch(IDENT, a)]
            if bad:
                raise ParseError(f"bad action name {bad[0]!r}", lineno)
        elif word == "vars":
            variables = rest.split()
            bad = [v for v in variables if not re.fullmatch(IDENT, v) or v == "eps"]
            if bad:
                raise ParseError(f"bad variable name {bad[0]!r}", lineno)
        elif word == "components":
            if not rest.isdigit():
                raise ParseError("components needs a non-negative integer", lineno)
            n = int(rest)
        elif word == "init":
            init_text = (rest, lineno)
        elif word == "rule":
            m = _RULE.match(line)
            if not m:
                raise ParseError("malformed rule; expected 'rule <id>: <term> -<action>-> <term> @ {i,...}'",
                                 lineno)
            raw_rules.append((lineno, m.groups()))
        else:
            raise ParseError(f"unknown directive {word!r}", lineno)
    if actions is None or variables is None:
        raise ParseError("missing 'actions' or 'vars' header")
    declared = set(variables)
    rules = []
    for lineno, (rid, lhs, act, rhs, cs) in raw_rules:
        if act not in actions:
            raise ParseError(f"undeclared action {act}", lineno)
        try:
            rules.append(Rule(rid, parse_term(lhs, declared), act, parse_term(rhs, declared),
                              parse_components(cs)))
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
    if n is None:
        n = max((max(r.components) for r in rules if r.components), default=0)
    try:
        mbrs = Mbrs(frozenset(actions), frozenset(Var(v) for v in variables), n, tuple(rules))
    except ValueError as e:
        raise ParseError(str(e)) from None
    init = None
    if init_text is not None:
        try:
            init = parse_term(init_text[0], declared)
        except ParseError as e:
            raise ParseError(str(e), init_text[1]) from None
    return SystemFile(mbrs, init)


def format_term(t: Term) -> str:
    return str(t)


def format_system(mbrs: Mbrs, init: Term | None = None, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append("actions " + " ".join(sorted(map(str, mbrs.sigma))))
    lines.append("vars " + " ".join(sorted(v.name for v in mbrs.vars)))
    lines.append(f"components {mbrs.n}")
    if init is not None:
        lines.append(f"init {init}")
    for r in mbrs.rules:
        lines.append(f"rule {r.id}: {r.lhs} -{r.action}-> {r.rhs} @ {fmt_set(r.components)}")
    return "\n".join(lines) + "\n"
