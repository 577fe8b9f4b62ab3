"""Action-based LTL fragment: boolean combinations of ``F psi`` and ``GF psi``.

A formula holds from a term when every infinite run satisfies it. The check
negates the formula, rewrites the negation into a disjunction of conjunctions
``F+ psi_1 & ... & GF eta_1 & ... & G zeta`` and asks, for each disjunct,
whether an accepting derivation exists in a system whose accepting
components are the rule sets enabled by the ``psi``/``eta``/``not zeta``.
"""
from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

from .decide import accepts
from .system import Mbrs, Rule
from .terms import Term
from .verdict import DEFAULT_BUDGET, SearchBudget, Verdict


# -- syntax trees -------------------------------------------------------------

@dataclass(frozen=True)
class TrueProp:
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Act:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class PNot:
    arg: object

    def __str__(self):
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class PAnd:
    left: object
    right: object

    def __str__(self):
        return f"{self.left} & {self.right}"


@dataclass(frozen=True)
class F:
    arg: object

    def __str__(self):
        return f"F {_wrap(self.arg)}"


@dataclass(frozen=True)
class GF:
    arg: object

    def __str__(self):
        return f"GF {_wrap(self.arg)}"


@dataclass(frozen=True)
class Not:
    arg: object

    def __str__(self):
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} & {_wrap(self.right)}"


def _wrap(x) -> str:
    return f"({x})" if isinstance(x, (PAnd, And)) else str(x)


PROP_TYPES = (TrueProp, Act, PNot, PAnd)
TRUE = TrueProp()


def pneg(psi):
    """Negation with double-negation elimination."""
    return psi.arg if isinstance(psi, PNot) else PNot(psi)


def pand(*parts):
    parts = [p for p in parts if not isinstance(p, TrueProp)]
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = PAnd(out, p)
    return out


# -- parsing ------------------------------------------------------------------

class FormulaError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        super().__init__(msg if pos is None else f"{msg} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(?P<op>[!&|()<>])|(?P<id>[A-Za-z_][A-Za-z0-9_']*))")
_TEMPORAL = {"F", "GF", "G", "U", "X", "R", "W"}


def _tokenize(text: str) -> list:
    out, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        start = m.start("op") if m.group("op") else m.start("id")
        out.append((m.group("op") or m.group("id"), start))
        pos = m.end()
    out.append(("<end>", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        for tok, pos in self.toks:
            if tok in ("U", "R", "W", "X"):
                raise FormulaError(f"operator {tok} is outside the supported fragment", pos)

    def peek(self):
        return self.toks[self.i][0]

    def pos(self):
        return self.toks[self.i][1]

    def take(self, want=None):
        tok, pos = self.toks[self.i]
        if want is not None and tok != want:
            raise FormulaError(f"expected {want!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def done(self):
        if self.peek() == "<end>":
            return
        tok = self.peek()
        if tok in ("U", "R", "W"):
            raise FormulaError(f"operator {tok} is outside the supported fragment", self.pos())
        if tok == "|":
            raise FormulaError("'|' is not part of the input syntax; use ! and &", self.pos())
        raise FormulaError(f"unexpected {tok!r}", self.pos())

    # fragment level
    def phi(self):
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "F":
            self.take()
            return F(self.patom())
        if tok == "GF":
            self.take()
            return GF(self.patom())
        if tok == "(":
            self.take()
            inner = self.phi()
            self.take(")")
            return inner
        if tok in _TEMPORAL:
            raise FormulaError(f"operator {tok} is outside the supported fragment", self.pos())
        if tok == "<end>":
            raise FormulaError("unexpected end of formula", self.pos())
        raise FormulaError("propositional formula outside F/GF is outside the fragment", self.pos())

    # propositional level
    def prop(self):
        left = self.patom()
        while self.peek() == "&":
            self.take()
            left = PAnd(left, self.patom())
        return left

    def patom(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return PNot(self.patom())
        if tok == "(":
            self.take()
            inner = self.prop()
            self.take(")")
            return inner
        if tok == "<":
            self.take()
            name = self.take()
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name) or name in _TEMPORAL:
                raise FormulaError("expected an action name", self.toks[self.i - 1][1])
            self.take(">")
            self.take("true")
            return Act(name)
        if tok == "true":
            self.take()
            return TRUE
        if tok in _TEMPORAL:
            raise FormulaError(f"temporal operator {tok} nested inside a propositional formula "
                               "is outside the fragment", self.pos())
        if tok == "<end>" or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok):
            raise FormulaError(f"expected an action formula, found {tok!r}", self.pos())
        self.take()
        return Act(tok)


def parse_formula(text: str):
    p = _Parser(text)
    out = p.phi()
    p.done()
    return out


def parse_prop(text: str):
    p = _Parser(text)
    out = p.prop()
    p.done()
    return out


# -- denotations --------------------------------------------------------------

def prop_actions(psi) -> frozenset:
    if isinstance(psi, Act):
        return frozenset((psi.name,))
    if isinstance(psi, TrueProp):
        return frozenset()
    if isinstance(psi, PNot):
        return prop_actions(psi.arg)
    if isinstance(psi, PAnd):
        return prop_actions(psi.left) | prop_actions(psi.right)
    raise TypeError(f"not a propositional formula: {psi!r}")


def formula_actions(phi) -> frozenset:
    if isinstance(phi, (F, GF, Not)):
        return formula_actions(phi.arg) if isinstance(phi, Not) else prop_actions(phi.arg)
    if isinstance(phi, And):
        return formula_actions(phi.left) | formula_actions(phi.right)
    raise TypeError(f"not a fragment formula: {phi!r}")


def prop_denotation(psi, sigma) -> frozenset:
    sigma = frozenset(sigma)
    if isinstance(psi, TrueProp):
        return sigma
    if isinstance(psi, Act):
        if psi.name not in sigma:
            raise ValueError(f"unknown action {psi.name}")
        return frozenset((psi.name,))
    if isinstance(psi, PNot):
        return sigma - prop_denotation(psi.arg, sigma)
    if isinstance(psi, PAnd):
        return prop_denotation(psi.left, sigma) & prop_denotation(psi.right, sigma)
    raise TypeError(f"not a propositional formula: {psi!r}")


def ac_rules(mbrs: Mbrs, psi) -> frozenset:
    """Ids of the rules whose action satisfies ``psi``."""
    den = prop_denotation(psi, mbrs.sigma)
    return frozenset(r.id for r in mbrs.rules if r.action in den)


# -- negation to disjunctive normal form --------------------------------------

@dataclass(frozen=True)
class Disjunct:
    """``F+ fplus[0] & ... & GF gf[0] & ... & G g``."""

    fplus: tuple = ()
    gf: tuple = ()
    g: object = field(default=TRUE)

    def __str__(self):
        parts = [f"F+ {_wrap(p)}" for p in self.fplus] + [f"GF {_wrap(p)}" for p in self.gf]
        if not isinstance(self.g, TrueProp) or not parts:
            parts.append(f"G {_wrap(self.g)}")
        return " & ".join(parts)


def _literal_dnf(phi, positive: bool) -> list:
    """DNF of ``phi`` (or its negation) over literals F/GF/G/FG of propositions."""
    if isinstance(phi, Not):
        return _literal_dnf(phi.arg, not positive)
    if isinstance(phi, F):
        return [frozenset({("F", phi.arg)})] if positive else [frozenset({("G", pneg(phi.arg))})]
    if isinstance(phi, GF):
        return [frozenset({("GF", phi.arg)})] if positive else [frozenset({("FG", pneg(phi.arg))})]
    if isinstance(phi, And):
        left = _literal_dnf(phi.left, positive)
        right = _literal_dnf(phi.right, positive)
        if positive:
            return [a | b for a in left for b in right]
        return left + right
    raise TypeError(f"not a fragment formula: {phi!r}")


def _atoms(phi, out: list):
    if isinstance(phi, Not):
        _atoms(phi.arg, out)
    elif isinstance(phi, And):
        _atoms(phi.left, out)
        _atoms(phi.right, out)
    elif phi not in out:
        out.append(phi)


def _boolean(phi, val: dict) -> bool:
    if isinstance(phi, Not):
        return not _boolean(phi.arg, val)
    if isinstance(phi, And):
        return _boolean(phi.left, val) and _boolean(phi.right, val)
    return val[phi]


def _prop_key(p) -> str:
    return str(p)


def negate_to_dnf(phi) -> list:
    """Disjuncts whose union is the set of infinite runs violating ``phi``."""
    atoms = []
    _atoms(phi, atoms)
    values = [not _boolean(phi, dict(zip(atoms, bits))) for bits in product((False, True), repeat=len(atoms))]
    if all(values):
        return [Disjunct()]
    if not any(values):
        return []
    expanded = set()
    for conj in _literal_dnf(phi, False):
        options = []
        for kind, psi in sorted(conj, key=lambda lit: (lit[0], _prop_key(lit[1]))):
            if kind == "F":
                options.append([("F+", psi), ("GF", psi)])
            elif kind == "FG":
                options.append([("F+", pneg(psi)), ("G", psi)])
            else:
                options.append([(kind, psi)])
        for choice in product(*options):
            expanded.add(frozenset(choice))
    out = set()
    for conj in expanded:
        fplus = tuple(sorted({p for kind, p in conj if kind == "F+"}, key=_prop_key))
        gf = tuple(sorted({p for kind, p in conj if kind == "GF"}, key=_prop_key))
        gs = sorted({p for kind, p in conj if kind == "G"}, key=_prop_key)
        out.add(Disjunct(fplus, gf, pand(*gs)))
    return sorted(out, key=lambda d: (len(d.fplus) + len(d.gf), str(d)))


# -- reduction to acceptance queries ------------------------------------------

@dataclass(frozen=True)
class McQuery:
    mbrs: Mbrs
    k: frozenset
    kw: frozenset


def disjunct_to_query(mbrs: Mbrs, d: Disjunct) -> McQuery:
    m1, m2 = len(d.fplus), len(d.gf)
    n = m1 + m2 + 1
    comps = {r.id: set() for r in mbrs.rules}
    sets = [ac_rules(mbrs, p) for p in d.fplus] + [ac_rules(mbrs, p) for p in d.gf]
    sets.append(ac_rules(mbrs, pneg(d.g)))
    for i, ids in enumerate(sets, start=1):
        for rid in ids:
            comps[rid].add(i)
    rules = [Rule(r.id, r.lhs, r.action, r.rhs, frozenset(comps[r.id])) for r in mbrs.rules]
    system = Mbrs(mbrs.sigma, mbrs.vars, n, tuple(rules))
    return McQuery(system, frozenset(range(1, m1 + m2 + 1)), frozenset(range(m1 + 1, m1 + m2 + 1)))


def _decide_disjunct(args):
    mbrs, t, d, budget = args
    q = disjunct_to_query(mbrs, d)
    return accepts(q.mbrs, t, q.k, q.kw, budget)


def check_disjuncts(mbrs: Mbrs, t: Term, phi, budget: SearchBudget = DEFAULT_BUDGET, jobs: int = 1) -> list:
    """``(disjunct, verdict)`` for every disjunct of the negation of ``phi``."""
    unknown = formula_actions(phi) - frozenset(mbrs.sigma)
    if unknown:
        raise ValueError(f"unknown action(s) in formula: {', '.join(sorted(unknown))}")
    ds = negate_to_dnf(phi)
    work = [(mbrs, t, d, budget) for d in ds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(_decide_disjunct, work))
    else:
        verdicts = [_decide_disjunct(w) for w in work]
    return list(zip(ds, verdicts))


def model_check_inf(mbrs: Mbrs, t: Term, phi, budget: SearchBudget = DEFAULT_BUDGET, jobs: int = 1) -> Verdict:
    """Yes when every infinite run from ``t`` satisfies ``phi``.

    No carries ``(disjunct, verdict)`` for a satisfiable disjunct of the
    negation, i.e. a class of violating runs.
    """
    results = check_disjuncts(mbrs, t, phi, budget, jobs)
    for d, v in results:
        if v.is_yes:
            return Verdict("no", (d, v), f"violated by runs satisfying {d}")
    if all(v.is_no for _, v in results):
        return Verdict.yes(None, "no infinite run violates the formula")
    return Verdict.unknown("some disjunct is undecided within budget")
