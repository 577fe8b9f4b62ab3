"""Rewrite rules, multi-Buchi rewrite systems and their step semantics."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain, combinations
from typing import Iterable

from .terms import (
    EPS, Empty, Par, Seq, Term, Var, Z_F, Z_INF, is_var, is_var_par,
    multiset_minus, par, seq, sub_multisets, sub_multisets_of_size,
)

ComponentSet = frozenset


def comps(*members: int) -> frozenset:
    return frozenset(members)


def subsets(s: Iterable[int]) -> list:
    """All subsets of ``s`` as frozensets, smallest first."""
    items = sorted(s)
    return [frozenset(c) for n in range(len(items) + 1) for c in combinations(items, n)]


def fmt_set(s: Iterable[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(s)) + "}"


@dataclass(frozen=True)
class Label:
    """Structured action ``[K']`` or ``[K', Kw']`` of a derived rule."""

    k: frozenset
    kw: frozenset | None = None

    def __str__(self):
        if self.kw is None:
            return f"[{fmt_set(self.k)}]"
        return f"[{fmt_set(self.k)},{fmt_set(self.kw)}]"


@dataclass(frozen=True)
class Rule:
    id: str
    lhs: Term
    action: object
    rhs: Term
    components: frozenset = frozenset()

    def __post_init__(self):
        if isinstance(self.lhs, Empty):
            raise ValueError(f"rule {self.id}: left-hand side must not be eps")

    def __str__(self):
        return f"rule {self.id}: {self.lhs} -{self.action}-> {self.rhs} @ {fmt_set(self.components)}"


@dataclass(frozen=True)
class Lasso:
    """The ultimately periodic rule sequence ``prefix . cycle^omega``."""

    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("lasso cycle must be non-empty")

    def __str__(self):
        pre = " ".join(self.prefix) or "-"
        return f"{pre} ( {' '.join(self.cycle)} )^w"


@dataclass(frozen=True)
class Mbrs:
    """A process rewrite system with ``n`` accepting components."""

    sigma: frozenset
    vars: frozenset
    n: int
    rules: tuple = field(default=())

    def __post_init__(self):
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate rule ids")
        allowed = set(self.vars) | {Z_F, Z_INF}
        for r in self.rules:
            if r.action not in self.sigma:
                raise ValueError(f"rule {r.id}: action {r.action} not in alphabet")
            bad = (r.lhs.variables() | r.rhs.variables()) - allowed
            if bad:
                names = ", ".join(sorted(str(v) for v in bad))
                raise ValueError(f"rule {r.id}: undeclared variables {names}")
            if any(i < 1 or i > self.n for i in r.components):
                raise ValueError(f"rule {r.id}: component index out of 1..{self.n}")

    @cached_property
    def rule_index(self) -> "_RuleIndex":
        return _RuleIndex(self.rules)

    @cached_property
    def by_id(self) -> dict:
        return {r.id: r for r in self.rules}

    def rule(self, rid: str) -> Rule:
        try:
            return self.by_id[rid]
        except KeyError:
            raise KeyError(f"unknown rule id {rid!r}") from None

    def with_rules(self, rules, n: int | None = None, sigma=None, vars=None) -> "Mbrs":
        rules = tuple(rules)
        if sigma is None:
            sigma = self.sigma | {r.action for r in rules}
        if vars is None:
            vars = self.vars
        return Mbrs(frozenset(sigma), frozenset(vars), self.n if n is None else n, rules)

    def __str__(self):
        return "\n".join(str(r) for r in self.rules)


# -- step semantics ---------------------------------------------------------

def _rewrite(t: Term, lhs: Term, rhs: Term, out: set) -> None:
    if t == lhs:
        out.add(rhs)
    if isinstance(t, Par):
        if isinstance(lhs, Par) and len(lhs.children) < len(t.children):
            rest = multiset_minus(t.children, lhs.children)
            if rest is not None:
                out.add(par(rhs, *rest))
        seen = set()
        for i, c in enumerate(t.children):
            if c in seen:
                continue
            seen.add(c)
            inner: set = set()
            _rewrite(c, lhs, rhs, inner)
            if inner:
                others = t.children[:i] + t.children[i + 1:]
                for c2 in inner:
                    out.add(par(c2, *others))
    elif isinstance(t, Seq):
        inner = set()
        _rewrite(t.tail, lhs, rhs, inner)
        for u in inner:
            out.add(seq(t.head, u))


def rewrite(t: Term, rule: Rule) -> set:
    """Terms reachable from ``t`` in one step of ``rule``."""
    out: set = set()
    _rewrite(t, rule.lhs, rule.rhs, out)
    return out


class _RuleIndex:
    """Rules keyed by canonical left-hand side, plus the sizes of parallel ones."""

    def __init__(self, rules):
        self.by_lhs = {}
        sizes = set()
        for r in rules:
            self.by_lhs.setdefault(r.lhs.key, []).append(r)
            if isinstance(r.lhs, Par):
                sizes.add(len(r.lhs.children))
        self.par_sizes = sorted(sizes)


def _successors(t: Term, idx: _RuleIndex, out: set) -> None:
    for r in idx.by_lhs.get(t.key, ()):
        out.add((r.id, r.rhs))
    if isinstance(t, Par):
        kids = t.children
        for size in idx.par_sizes:
            if size >= len(kids):
                break
            for combo in sub_multisets_of_size(kids, size):
                rules = idx.by_lhs.get("(" + "||".join(c.key for c in combo) + ")")
                if rules:
                    rest = multiset_minus(kids, combo)
                    for r in rules:
                        out.add((r.id, par(r.rhs, *rest)))
        seen = set()
        for i, c in enumerate(kids):
            if c in seen:
                continue
            seen.add(c)
            inner: set = set()
            _successors(c, idx, inner)
            if inner:
                others = kids[:i] + kids[i + 1:]
                for rid, c2 in inner:
                    out.add((rid, par(c2, *others)))
    elif isinstance(t, Seq):
        inner = set()
        _successors(t.tail, idx, inner)
        for rid, u in inner:
            out.add((rid, seq(t.head, u)))


def step(mbrs: Mbrs, t: Term) -> set:
    """One-step successors of ``t`` as a set of ``(rule_id, term)`` pairs."""
    out: set = set()
    _successors(t, mbrs.rule_index, out)
    return out


def replay(mbrs: Mbrs, t: Term, rule_ids: Iterable[str], cap: int = 5000) -> set:
    """Terms reachable from ``t`` through the given rule sequence.

    Each rule may apply at several positions, so the result is a set; an empty
    set means the sequence is not executable from ``t``.
    """
    current = {t}
    for rid in rule_ids:
        r = mbrs.rule(rid)
        nxt = set()
        for u in current:
            nxt |= rewrite(u, r)
            if len(nxt) > cap:
                break
        current = nxt
        if not current:
            break
    return current


# -- maximal sets -------------------------------------------------------------

def maximal(mbrs: Mbrs, rule_ids: Iterable[str]) -> frozenset:
    out = set()
    for rid in rule_ids:
        out |= mbrs.rule(rid).components
    return frozenset(out)


def maximal_inf(mbrs: Mbrs, seq_or_lasso) -> frozenset:
    """Components hit infinitely often; empty for finite sequences."""
    if isinstance(seq_or_lasso, Lasso):
        return maximal(mbrs, seq_or_lasso.cycle)
    maximal(mbrs, seq_or_lasso)  # validates ids
    return frozenset()


def maximal_of_lasso(mbrs: Mbrs, lasso: Lasso) -> frozenset:
    return maximal(mbrs, lasso.prefix) | maximal(mbrs, lasso.cycle)


# -- rule shapes --------------------------------------------------------------

PAR = "PAR"
SEQ = "SEQ"


def is_par_rule(rule: Rule) -> bool:
    """X1||...||Xp -> Y1||...||Yq with p >= 1, q >= 0."""
    return is_var_par(rule.lhs) and (isinstance(rule.rhs, Empty) or is_var_par(rule.rhs))


def is_seq_rule(rule: Rule) -> bool:
    """X -> Y.Z, X.Y -> Z, X -> Y or X -> eps."""
    l, r = rule.lhs, rule.rhs
    if is_var(l):
        if isinstance(r, Empty) or is_var(r):
            return True
        return isinstance(r, Seq) and is_var(r.head) and is_var(r.tail)
    return isinstance(l, Seq) and is_var(l.head) and is_var(l.tail) and is_var(r)


def classify_rule(rule: Rule):
    """``"PAR"``, ``"SEQ"`` or the bad-rule case number (1..6).

    Cases 1-5 follow the classic bad-rule taxonomy under right-associative
    reading of ``.``. Case 6 covers the remaining shapes that none of them
    match (``X||Y -> A.B``, ``X.Y -> A.B``, ``X.Y -> eps``).
    """
    if is_par_rule(rule):
        return PAR
    if is_seq_rule(rule):
        return SEQ
    l, r = rule.lhs, rule.rhs
    if isinstance(r, Par):
        return 1
    if isinstance(l, Par) and any(isinstance(c, Seq) for c in l.children):
        return 2
    if (isinstance(r, Seq) and not is_var(r.head)) or (isinstance(l, Seq) and not is_var(l.head)):
        return 3
    if isinstance(r, Seq) and not is_var(r.tail):
        return 4
    if isinstance(l, Seq) and not is_var(l.tail):
        return 5
    return 6


def is_normal_form(mbrs: Mbrs) -> bool:
    return all(classify_rule(r) in (PAR, SEQ) for r in mbrs.rules)


def interleavings(*sequences) -> set:
    """Every merge of the given finite sequences preserving each one's order."""
    seqs = [tuple(s) for s in sequences]
    out = set()

    def go(idx: tuple, acc: tuple):
        done = True
        for h, s in enumerate(seqs):
            if idx[h] < len(s):
                done = False
                nxt = idx[:h] + (idx[h] + 1,) + idx[h + 1:]
                go(nxt, acc + (s[idx[h]],))
        if done:
            out.add(acc)

    go(tuple(0 for _ in seqs), ())
    return out


def rule_vars(rules: Iterable[Rule]) -> frozenset:
    return frozenset(chain.from_iterable(
        (r.lhs.variables() | r.rhs.variables()) for r in rules))


def marking_of(t: Term) -> Counter:
    """Top-level variable multiset of a parallel term."""
    if isinstance(t, Empty):
        return Counter()
    if isinstance(t, Var):
        return Counter((t,))
    if isinstance(t, Par) and all(isinstance(c, Var) for c in t.children):
        return Counter(t.children)
    raise ValueError(f"not a parallel term: {t}")
