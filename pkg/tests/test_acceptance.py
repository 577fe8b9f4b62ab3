"""Acceptance criteria, one test per criterion.

Every test records a PASS/FAIL line (shown in the terminal summary) and then
asserts it. Thresholds are pinned below. Seeds are fixed, so results are
reproducible.
"""
import random
import time

import pytest

from bruteforce import ParReachOracle, lasso_ok, matches_target, seq_summaries
from fixpoint_cases import CASES, HEADER
from generators import (
    FORMULA_POOL, closed_instances, random_bad_system, random_normal_system, random_par_system,
    random_seq_system, random_term,
)
from prsbuchi.altl import model_check_inf, parse_formula
from prsbuchi.decide import DecisionSession, build_par_k
from prsbuchi.normalize import lift_query, normalize
from prsbuchi.oracle import oracle_accepting_many, oracle_holds_inf
from prsbuchi.parallel import ANY, EMPTY, Covers, ExactVar, par_inf_exists, par_reach_exists
from prsbuchi.sequential import saturate
from prsbuchi.syntax import parse_system
from prsbuchi.system import (
    Lasso, Mbrs, Rule, interleavings, maximal, maximal_inf, replay, subsets,
)
from prsbuchi.terms import EPS, Var, canonicalize, par, seq

pytestmark = pytest.mark.acceptance

C1_SYSTEMS, C1_MIN_DEFINITE, C1_MIN_AGREE = 500, 0.80, 1.0
C2_SYSTEMS, C2_MIN_AGREE = 200, 1.0
C3_MIN_CASES = 10
C4_SYSTEMS, C4_SIZE_BOUND = 300, 7
C5_SYSTEMS = 300
C6_INSTANCES, C6_POOL_SIZE = 100, 20
C7_MIN_CASES = 10_000


def _vars(m):
    return sorted(m.vars, key=lambda v: v.key)


def test_c1_oracle_equivalence(report):
    rng = random.Random(7)
    total = definite = agree = 0
    t0 = time.time()
    for _ in range(C1_SYSTEMS):
        m = random_normal_system(rng)
        session = DecisionSession(m)
        for x in _vars(m):
            for k in subsets(range(1, m.n + 1)):
                kws = subsets(k)
                oracle = oracle_accepting_many(m, x, k, kws)
                for kw in kws:
                    d, o = session.decide(x, k, kw), oracle[frozenset(kw)]
                    total += 1
                    if "unknown" not in (d.answer, o.answer):
                        definite += 1
                        agree += d.answer == o.answer
    share, rate = definite / total, agree / max(definite, 1)
    ok = share >= C1_MIN_DEFINITE and rate >= C1_MIN_AGREE
    assert report("C1 oracle equivalence", ok,
                  f"{C1_SYSTEMS} systems, {total} queries, definite {share:.1%} (>= {C1_MIN_DEFINITE:.0%}), "
                  f"agreement {agree}/{definite} ({time.time() - t0:.0f}s)")


def test_c2_normalization_equivalence(report):
    rng = random.Random(8)
    total = definite = agree = 0
    for _ in range(C2_SYSTEMS):
        m = random_bad_system(rng)
        mf = normalize(m).mf
        for x in _vars(m):
            for k in subsets(range(1, m.n + 1)):
                kws = subsets(k)
                before = oracle_accepting_many(m, x, k, kws)
                lk = lift_query(k, set(), m.n)[0]
                after = oracle_accepting_many(mf, x, lk, [lift_query(k, kw, m.n)[1] for kw in kws])
                for kw in kws:
                    a, b = before[frozenset(kw)], after[lift_query(k, kw, m.n)[1]]
                    total += 1
                    if "unknown" not in (a.answer, b.answer):
                        definite += 1
                        agree += a.answer == b.answer
    ok = definite > 0 and agree / definite >= C2_MIN_AGREE
    assert report("C2 normalization equivalence", ok,
                  f"{C2_SYSTEMS} systems, {total} pairs, agreement {agree}/{definite} definite")


def test_c3_fixpoint_hand_runs(report):
    matched = 0
    for rules_text, k, expected in CASES:
        m = parse_system(HEADER + "rule " + rules_text).mbrs
        orig = {r.id for r in m.rules}
        got = {(str(r.lhs), str(r.rhs), tuple(sorted(r.components)))
               for r in build_par_k(DecisionSession(m), k).rules if r.id not in orig}
        matched += got == expected
    ok = len(CASES) >= C3_MIN_CASES and matched == len(CASES)
    assert report("C3 fixpoint hand runs", ok, f"{matched}/{len(CASES)} exact rule-set matches")


def test_c4_sequential_saturation(report):
    rng = random.Random(4)
    checked = equal = 0
    for _ in range(C4_SYSTEMS):
        m = random_seq_system(rng)
        rel = saturate(m)
        for x in _vars(m):
            head, pop, _ = seq_summaries(m, x, C4_SIZE_BOUND)
            checked += 1
            equal += head == {t for t in rel.headreach if t[0] == x} and \
                pop == {t for t in rel.pop if t[0] == x} | {(x, x, frozenset())}
    assert report("C4 sequential saturation", equal == checked,
                  f"{C4_SYSTEMS} systems, {equal}/{checked} start variables equal at size bound {C4_SIZE_BOUND}")


def test_c5_parallel_engines(report):
    rng = random.Random(6)
    reach = [0, 0, 0]
    inf = [0, 0, 0]
    bad_witness = 0
    for _ in range(C5_SYSTEMS):
        m = random_par_system(rng)
        vs = _vars(m)
        free = m.with_rules([Rule(r.id, r.lhs, r.action, r.rhs, frozenset()) for r in m.rules])
        ids = frozenset(r.id for r in m.rules)
        for x in vs:
            for k in subsets(range(1, m.n + 1)):
                oracle = ParReachOracle(m, x, k)
                for tg in [ANY, EMPTY] + [ExactVar(v) for v in vs] + [Covers(v) for v in vs]:
                    d, o = par_reach_exists(m, x, k, tg), oracle.query(tg, k)
                    reach[0] += 1
                    if "unknown" not in (d.answer, o):
                        reach[1] += 1
                        reach[2] += d.answer == o
                    if d.is_yes and d.witness:
                        ends = replay(m, x, d.witness)
                        if maximal(m, d.witness) != k or \
                                not any(matches_target(t, tg, True) for t in ends):
                            bad_witness += 1
                kws = subsets(k)
                om = oracle_accepting_many(m, x, k, kws)
                for kw in kws:
                    d, o = par_inf_exists(m, free, x, k, kw, ids), om[frozenset(kw)]
                    inf[0] += 1
                    if "unknown" not in (d.answer, o.answer):
                        inf[1] += 1
                        inf[2] += d.answer == o.answer
                    if d.is_yes and isinstance(d.witness, Lasso) and not lasso_ok(m, x, d.witness, k, kw):
                        bad_witness += 1
    ok = reach[1] == reach[2] and inf[1] == inf[2] and bad_witness == 0
    assert report("C5 parallel engines", ok,
                  f"{C5_SYSTEMS} systems, reach agree {reach[2]}/{reach[1]} definite of {reach[0]}, "
                  f"inf agree {inf[2]}/{inf[1]} definite of {inf[0]}, bad witnesses {bad_witness}")


def test_c6_altl_end_to_end(report):
    x, y = Var("X"), Var("Y")
    s1 = Mbrs(frozenset({"a", "b"}), frozenset({x, y}), 1, (Rule("r1", x, "a", par(x, y)), Rule("r2", y, "b", EPS)))
    s2 = Mbrs(frozenset({"a", "b"}), frozenset({x, y}), 1, (Rule("r1", x, "a", seq(y, x), frozenset({1})),))
    regressions = [(s1, "GF a", "yes"), (s1, "F b", "no"), (s1, "F a", "yes"),
                   (s2, "GF a", "yes"), (s2, "F b", "no"), (s2, "!GF a", "no")]
    reg_ok = sum(model_check_inf(m, x, parse_formula(f)).answer == want for m, f, want in regressions)
    pool = [parse_formula(f) for f in FORMULA_POOL]
    total = definite = agree = 0
    for m, t in closed_instances(random.Random(11), C6_INSTANCES):
        for phi in pool:
            d, o = model_check_inf(m, t, phi), oracle_holds_inf(m, t, phi)
            total += 1
            if "unknown" not in (d.answer, o.answer):
                definite += 1
                agree += d.answer == o.answer
    ok = reg_ok == len(regressions) and len(pool) == C6_POOL_SIZE and agree == total
    assert report("C6 ALTL end to end", ok,
                  f"regressions {reg_ok}/{len(regressions)}, {C6_INSTANCES} closed instances x {len(pool)} formulas: "
                  f"agree {agree}/{total} ({definite} definite)")


def _raw(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(("X", "Y", "Z", "eps"))
    return (rng.choice(("par", "seq")), _raw(rng, depth - 1), _raw(rng, depth - 1))


def test_c7_invariant_suites(report):
    rng = random.Random(12)
    counts, bad = {}, {}

    def tally(name, ok):
        counts[name] = counts.get(name, 0) + 1
        bad[name] = bad.get(name, 0) + (not ok)

    for _ in range(C7_MIN_CASES):
        t = canonicalize(_raw(rng, 4))
        tally("canonicalize idempotence", canonicalize(t) == t)

    while counts.get("maximal homomorphism", 0) < C7_MIN_CASES:
        m = random_normal_system(rng, max_n=3)
        ids = [r.id for r in m.rules]
        for _ in range(50):
            a = rng.choices(ids, k=rng.randint(0, 5))
            b = rng.choices(ids, k=rng.randint(0, 5))
            tally("maximal homomorphism", maximal(m, a + b) == maximal(m, a) | maximal(m, b))
            cyc = tuple(rng.choices(ids, k=rng.randint(1, 4)))
            lasso = Lasso(tuple(a), cyc)
            tally("maximal homomorphism", maximal_inf(m, lasso) == maximal(m, cyc))

    while counts.get("interleaving", 0) < C7_MIN_CASES:
        m = random_normal_system(rng, max_n=3)
        ids = [r.id for r in m.rules]
        parts = [rng.choices(ids, k=rng.randint(0, 2)) for _ in range(rng.randint(1, 3))]
        union = frozenset().union(*(maximal(m, p) for p in parts))
        for pi in interleavings(*parts):
            tally("interleaving", maximal(m, pi) == union)

    while counts.get("recursion measure", 0) < C7_MIN_CASES:
        m = random_normal_system(rng, max_n=3)
        s = DecisionSession(m)
        for x in _vars(m):
            for k in subsets(range(1, m.n + 1)):
                for kw in subsets(k):
                    s.decide(x, k, kw)
        for (k, kw), (f, i) in s.calls:
            tally("recursion measure", len(f) + len(i) < len(k) + len(kw))

    while counts.get("saturation bound", 0) < C7_MIN_CASES:
        m = random_seq_system(rng, max_n=3)
        rel = saturate(m)
        nv, n = len(m.vars), m.n
        tally("saturation bound", len(rel.pop) <= nv * (nv + 1) * 2 ** n and len(rel.headreach) <= nv * nv * 2 ** n)

    ok = all(counts[k] >= C7_MIN_CASES and bad[k] == 0 for k in counts)
    detail = ", ".join(f"{k} {counts[k]} cases/{bad[k]} violations" for k in counts)
    assert report("C7 invariant suites", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
