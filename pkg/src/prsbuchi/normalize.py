"""Normal-form transformation of arbitrary systems.

Bad rules are split one at a time; the piece that stands for the original
step keeps the rule id, action and components, every helper piece is silent
(action ``_tau``, no components) and is recorded as auxiliary. The result gets
one extra component made of all non-auxiliary rules, so that a lifted query
forces infinitely many simulated original steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .system import Mbrs, Rule, classify_rule, PAR, SEQ
from .terms import Empty, Par, Seq, Term, Var, par, seq

AUX_ACTION = "_tau"


@dataclass(frozen=True)
class TraceStep:
    case: int
    removed: tuple
    added: tuple
    rewritten: tuple = ()


@dataclass(frozen=True)
class NormalizationResult:
    mf: Mbrs
    aux_rules: frozenset
    fresh_vars: frozenset
    trace: tuple = field(default=())


def ops(t: Term) -> int:
    """Number of binary composition operators in ``t``."""
    if isinstance(t, Par):
        return len(t.children) - 1 + sum(ops(c) for c in t.children)
    if isinstance(t, Seq):
        return 1 + ops(t.head) + ops(t.tail)
    return 0


def badness(rules) -> tuple:
    """Multiset of operator counts of bad rules, sorted descending.

    Tuple comparison on these values is the multiset ordering, which every
    transformation step strictly decreases.
    """
    return tuple(sorted((ops(r.lhs) + ops(r.rhs) for r in rules
                         if classify_rule(r) not in (PAR, SEQ)), reverse=True))


def replace_node(t: Term, old: Term, new: Term) -> Term:
    if t == old:
        return new
    if isinstance(t, Par):
        return par(*(replace_node(c, old, new) for c in t.children))
    if isinstance(t, Seq):
        return seq(replace_node(t.head, old, new), replace_node(t.tail, old, new))
    return t


class _Fresh:
    def __init__(self, taken):
        self.taken = {str(v) for v in taken}
        self.count = 0
        self.made = []

    def var(self, tag: str) -> Var:
        while True:
            self.count += 1
            name = f"_{tag}{self.count}"
            if name not in self.taken:
                self.taken.add(name)
                v = Var(name)
                self.made.append(v)
                return v


class _Ids:
    def __init__(self, taken):
        self.taken = set(taken)

    def __call__(self, base: str) -> str:
        j = 1
        while f"{base}~{j}" in self.taken:
            j += 1
        rid = f"{base}~{j}"
        self.taken.add(rid)
        return rid


def _split(r: Rule, case: int, fresh: _Fresh, ids: _Ids):
    """Replacement rules for bad rule ``r``: (label-carrying rule, helpers)."""
    l, rhs = r.lhs, r.rhs

    def aux(lhs, out):
        return Rule(ids(r.id), lhs, AUX_ACTION, out, frozenset())

    def main(lhs, out):
        return Rule(r.id, lhs, r.action, out, r.components)

    if case == 1:
        u1, u2 = rhs.children[0], par(*rhs.children[1:])
        w, z1, z2 = fresh.var("W"), fresh.var("Z"), fresh.var("Z")
        return main(l, w), [aux(w, par(z1, z2)), aux(z1, u1), aux(z2, u2)]
    if case == 2:
        i = next(i for i, c in enumerate(l.children) if isinstance(c, Seq))
        s = l.children[i]
        u1 = par(*(l.children[:i] + l.children[i + 1:]))
        z1, z2 = fresh.var("Z"), fresh.var("Z")
        return main(par(z1, z2), rhs), [aux(u1, z1), aux(s, z2)]
    if case == 4:
        z, w = fresh.var("Z"), fresh.var("W")
        return main(l, w), [aux(w, seq(rhs.head, z)), aux(z, rhs.tail)]
    if case == 5:
        z = fresh.var("Z")
        return main(seq(l.head, z), rhs), [aux(l.tail, z)]
    if case == 6:
        w = fresh.var("W")
        return main(l, w), [aux(w, rhs)]
    raise ValueError(f"case {case} is not a split")


def normalize(mbrs: Mbrs) -> NormalizationResult:
    """Normal form with auxiliary-rule tracking and the extra component."""
    rules = list(mbrs.rules)
    aux: set = set()
    fresh = _Fresh(mbrs.vars)
    ids = _Ids(r.id for r in rules)
    trace = []
    while True:
        pos = next((i for i, r in enumerate(rules) if classify_rule(r) not in (PAR, SEQ)), None)
        if pos is None:
            break
        r = rules[pos]
        case = classify_rule(r)
        if case == 3:
            if isinstance(r.rhs, Seq) and not isinstance(r.rhs.head, Var):
                u1 = r.rhs.head
            else:
                u1 = r.lhs.head
            z = fresh.var("Z")
            rewritten = []
            for i, q in enumerate(rules):
                q2 = Rule(q.id, replace_node(q.lhs, u1, z), q.action,
                          replace_node(q.rhs, u1, z), q.components)
                if q2 != q:
                    rules[i] = q2
                    if i != pos:
                        rewritten.append((q, q2))
            r1 = Rule(ids(r.id), z, AUX_ACTION, u1, frozenset())
            r2 = Rule(ids(r.id), u1, AUX_ACTION, z, frozenset())
            rules[pos + 1:pos + 1] = [r1, r2]
            aux |= {r1.id, r2.id}
            trace.append(TraceStep(3, (r,), (rules[pos], r1, r2), tuple(rewritten)))
            continue
        carrier, helpers = _split(r, case, fresh, ids)
        rules[pos:pos + 1] = [carrier, *helpers]
        aux |= {h.id for h in helpers}
        if r.id not in aux:
            aux.discard(carrier.id)
        trace.append(TraceStep(case, (r,), (carrier, *helpers)))

    n = mbrs.n + 1
    lifted = [
        Rule(r.id, r.lhs, r.action, r.rhs,
             r.components if r.id in aux else r.components | {n})
        for r in rules
    ]
    sigma = mbrs.sigma | ({AUX_ACTION} if aux else set())
    mf = Mbrs(frozenset(sigma), frozenset(mbrs.vars) | set(fresh.made), n, tuple(lifted))
    return NormalizationResult(mf, frozenset(aux), frozenset(fresh.made), tuple(trace))


def lift_query(k, kw, n: int) -> tuple:
    return frozenset(k) | {n + 1}, frozenset(kw) | {n + 1}


def add_entry_rule(mbrs: Mbrs, t: Term) -> tuple:
    """Make the start term a variable by adding ``X0 -> t`` with no components."""
    if isinstance(t, Empty):
        raise ValueError("the start term must not be eps")
    if isinstance(t, Var):
        return mbrs, t
    fresh = _Fresh(mbrs.vars)
    x0 = fresh.var("X")
    rid = _Ids(r.id for r in mbrs.rules)("entry")
    entry = Rule(rid, x0, AUX_ACTION, t, frozenset())
    extended = Mbrs(mbrs.sigma | {AUX_ACTION}, mbrs.vars | {x0}, mbrs.n, (entry,) + mbrs.rules)
    return extended, x0
