"""Generalized Buchi acceptance for systems in normal form.

For a query ``(x, K, Kw)`` three derived systems are built:

* ``par_k``: the parallel rules plus rules ``X -[K']-> Z_F`` / ``X -[K']-> Y`` /
  ``X -[K']-> W'`` summarising finite sequential sub-derivations (fixpoint);
* ``par_kkw``: ``par_k`` plus ``X -[K', I]-> Z_inf`` summarising infinite
  sub-derivations whose (finite, infinite) maximal pair is strictly smaller,
  settled by recursive calls;
* ``seq_k``: the push rules plus labelled renames ``X -[K']-> Y`` whenever
  ``X`` covers ``Y`` in ``par_k``.

The answer combines a parallel search on ``par_kkw`` from every variable
sequentially reachable in ``seq_k`` with, when ``K == Kw``, a Buchi check on
``seq_k`` itself.

Bounded sub-queries may be inconclusive. Each construction is therefore run
in two modes: ``low`` keeps only rules backed by a definite Yes, ``high``
keeps every rule not refuted. The verdict is monotone in the derived rule
sets, so Yes under ``low`` and No under ``high`` are both definite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .normalize import add_entry_rule, lift_query, normalize
from .parallel import ANY, EMPTY, Covers, ExactVar, ReachProfile, par_inf_exists
from .sequential import saturate, seq_buchi
from .system import Label, Mbrs, Rule, is_normal_form, is_par_rule, subsets
from .terms import Seq, Term, Var, Z_F, Z_INF
from .verdict import DEFAULT_BUDGET, NO, UNKNOWN, YES, SearchBudget, Verdict

LOW = "low"
HIGH = "high"


def _accept(ans: str, mode: str) -> bool:
    return ans == YES or (ans == UNKNOWN and mode == HIGH)


@dataclass
class Built:
    """A derived construction plus whether an inconclusive sub-query shaped it."""

    value: object
    uncertain: bool = False


@dataclass
class DecisionSession:
    mbrs: Mbrs
    budget: SearchBudget = DEFAULT_BUDGET
    memo: dict = field(default_factory=dict)

    def __post_init__(self):
        if not is_normal_form(self.mbrs):
            raise ValueError("decision procedure needs a system in normal form")
        self.pushes = [r for r in self.mbrs.rules
                       if isinstance(r.rhs, Seq) and not isinstance(r.lhs, Seq)]
        self.pairs = [r for r in self.mbrs.rules if isinstance(r.lhs, Seq)]
        self.par_rules = [r for r in self.mbrs.rules if is_par_rule(r)]
        self.variables = sorted(self.mbrs.vars, key=lambda v: v.key)
        self._cache = {}
        self.calls = []  # (outer (k, kw), inner (f, i)) for every nested decide

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def _system(self, rules) -> Mbrs:
        return self.mbrs.with_rules(rules, sigma=self.mbrs.sigma | {r.action for r in rules})

    # -- derived systems --------------------------------------------------

    def par_k(self, k, mode=LOW) -> Built:
        k = frozenset(k)
        return self._cached(("par_k", k, mode), lambda: self._build_par_k(k, mode))

    def _build_par_k(self, k, mode) -> Built:
        rules = list(self.par_rules)
        added = set()
        uncertain = False
        while True:
            mp = self._system(rules)
            new = []
            profiles = {}
            for r in self.pushes:
                if not r.components <= k:
                    continue
                x, y, z = r.lhs, r.rhs.head, r.rhs.tail
                if z not in profiles:
                    profiles[z] = ReachProfile(mp, z, k, self.budget)
                prof = profiles[z]
                for k1 in subsets(k):
                    kp = k1 | r.components
                    candidates = [(prof.query(ANY, k1), Z_F, kp), (prof.query(EMPTY, k1), y, kp)]
                    for r2 in self.pairs:
                        if r2.lhs.head == y and r2.components <= k:
                            candidates.append((prof.query(ExactVar(r2.lhs.tail), k1), r2.rhs,
                                               kp | r2.components))
                    for ans, target, label in candidates:
                        uncertain |= ans == UNKNOWN
                        key = (x, target, label)
                        if _accept(ans, mode) and key not in added:
                            added.add(key)
                            new.append(derived_rule(x, target, Label(label), label))
            if not new:
                return Built(mp, uncertain)
            rules.extend(new)

    def par_kkw(self, k, kw, mode=LOW) -> Built:
        k, kw = frozenset(k), frozenset(kw)
        return self._cached(("par_kkw", k, kw, mode), lambda: self._build_par_kkw(k, kw, mode))

    def _build_par_kkw(self, k, kw, mode) -> Built:
        base = self.par_k(k, mode)
        uncertain = base.uncertain
        extra = {}
        size = len(k) + len(kw)
        for r in self.pushes:
            if not r.components <= k:
                continue
            for f in subsets(k):
                for i in subsets(kw & f):
                    if len(f) + len(i) >= size:
                        continue
                    self.calls.append(((k, kw), (f, i)))
                    v = self.decide(r.rhs.tail, f, i)
                    uncertain |= v.is_unknown
                    if _accept(v.answer, mode):
                        kbar = f | r.components
                        extra.setdefault((r.lhs, kbar, i), derived_rule(r.lhs, Z_INF, Label(kbar, i), kbar))
        inf_rules = [extra[key] for key in sorted(extra, key=lambda t: (t[0].key, sorted(t[1]), sorted(t[2])))]
        mp1 = self._system(list(base.value.rules) + inf_rules)
        mp2 = self._system([Rule(q.id, q.lhs, q.action, q.rhs, frozenset()) for q in base.value.rules]
                           + [Rule(q.id, q.lhs, q.action, q.rhs, q.action.kw) for q in inf_rules])
        return Built((mp1, mp2), uncertain)

    def seq_k(self, k, mode=LOW) -> Built:
        k = frozenset(k)
        return self._cached(("seq_k", k, mode), lambda: self._build_seq_k(k, mode))

    def _build_seq_k(self, k, mode) -> Built:
        pk = self.par_k(k, mode)
        uncertain = pk.uncertain
        rules = list(self.pushes)
        for x in self.variables:
            prof = ReachProfile(pk.value, x, k, self.budget)
            for y in self.variables:
                for kp in subsets(k):
                    ans = prof.query(Covers(y), kp)
                    uncertain |= ans == UNKNOWN
                    if _accept(ans, mode):
                        rules.append(derived_rule(x, y, Label(kp), kp))
        return Built(self._system(rules), uncertain)

    # -- the decision -----------------------------------------------------

    def _evaluate(self, x: Var, k, kw, mode):
        pk = self.par_k(k, mode)
        kkw = self.par_kkw(k, kw, mode)
        sk = self.seq_k(k, mode)
        uncertain = pk.uncertain or kkw.uncertain or sk.uncertain
        rel = self._cached(("sat", k, mode), lambda: saturate(sk.value))
        starts = sorted({y for a, y, kp in rel.headreach if a == x and kp <= k and y in self.mbrs.vars},
                        key=lambda v: v.key)
        rstar = frozenset(r.id for r in pk.value.rules)
        mp1, mp2 = kkw.value
        for y in starts:
            v = par_inf_exists(mp1, mp2, y, k, kw, rstar, self.budget, want_witness=False)
            if v.is_yes:
                return True, uncertain, f"parallel derivation from {y}"
            if v.is_unknown:
                uncertain = True
                if mode == HIGH:
                    return True, uncertain, ""
        if k == kw and seq_buchi(sk.value, x, k, kw, rel):
            return True, uncertain, "sequential head pump"
        return False, uncertain, ""

    def decide(self, x: Var, k, kw) -> Verdict:
        k, kw = frozenset(k), frozenset(kw)
        key = (x, k, kw)
        if key in self.memo:
            return self.memo[key]
        if x not in self.mbrs.vars:
            raise ValueError(f"unknown variable {x}")
        if not kw <= k:
            v = Verdict.no("maximalInf must be a subset of maximal")
        else:
            low, uncertain, why = self._evaluate(x, k, kw, LOW)
            if low:
                v = Verdict.yes(None, why)
            elif not uncertain:
                v = Verdict.no()
            else:
                high, _, _ = self._evaluate(x, k, kw, HIGH)
                v = Verdict.unknown("bounded sub-query inconclusive") if high else Verdict.no()
        self.memo[key] = v
        return v


def derived_rule(x: Var, target: Term, label: Label, components) -> Rule:
    return Rule(f"{x}>{target}{label}", x, label, target, frozenset(components))


def build_par_k(session: DecisionSession, k) -> Mbrs:
    return session.par_k(k).value


def build_par_kkw(session: DecisionSession, k, kw) -> tuple:
    return session.par_kkw(k, kw).value


def build_seq_k(session: DecisionSession, k) -> Mbrs:
    return session.seq_k(k).value


def decide_accepting(session: DecisionSession, x: Var, k, kw) -> Verdict:
    return session.decide(x, k, kw)


def accepts(mbrs: Mbrs, t: Term, k, kw, budget: SearchBudget = DEFAULT_BUDGET) -> Verdict:
    """Full pipeline for an arbitrary system and start term.

    The start term is turned into a variable, the system is normalised when
    needed, and the lifted query is decided. Systems already in normal form
    skip normalisation: there the extra component holds every rule, which an
    infinite derivation uses infinitely often anyway.
    """
    k, kw = frozenset(k), frozenset(kw)
    if not kw <= k:
        return Verdict.no("maximalInf must be a subset of maximal")
    ext, x = add_entry_rule(mbrs, t)
    if is_normal_form(ext):
        return DecisionSession(ext, budget).decide(x, k, kw)
    res = normalize(ext)
    lk, lkw = lift_query(k, kw, ext.n)
    return DecisionSession(res.mf, budget).decide(x, lk, lkw)
