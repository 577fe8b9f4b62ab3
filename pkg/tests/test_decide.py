import random

import pytest

from fixpoint_cases import CASES, HEADER
from generators import random_normal_system
from prsbuchi.decide import (
    DecisionSession, accepts, build_par_k, build_par_kkw, build_seq_k, decide_accepting,
)
from prsbuchi.syntax import parse_system
from prsbuchi.system import Label, Mbrs, Rule, is_par_rule, subsets
from prsbuchi.terms import EPS, Var, Z_INF, par, seq

X, Y, Z = Var("X"), Var("Y"), Var("Z")

S1 = Mbrs(frozenset({"a", "b"}), frozenset({X, Y}), 2, (
    Rule("r1", X, "a", par(X, Y), frozenset({1})),
    Rule("r2", Y, "b", EPS, frozenset({2})),
))
S2 = Mbrs(frozenset({"a"}), frozenset({X, Y}), 1, (Rule("r1", X, "a", seq(Y, X), frozenset({1})),))


def added_rules(rules_text, k):
    m = parse_system(HEADER + "rule " + rules_text).mbrs
    pk = build_par_k(DecisionSession(m), k)
    orig = {r.id for r in m.rules}
    assert [r for r in pk.rules if r.id in orig] == [r for r in m.rules if is_par_rule(r)]
    new = [r for r in pk.rules if r.id not in orig]
    for r in new:
        assert r.action == Label(r.components)
    return {(str(r.lhs), str(r.rhs), tuple(sorted(r.components))) for r in new}


@pytest.mark.parametrize("rules_text,k,expected", CASES)
def test_par_k_hand_runs(rules_text, k, expected):
    assert added_rules(rules_text, k) == expected


def test_par_kkw_empty_pair_adds_nothing():
    m = parse_system(HEADER + "rule r1: X -a-> Y.Z @ {}\nrule r2: Z -c-> Z @ {1}").mbrs
    mp1, mp2 = build_par_kkw(DecisionSession(m), set(), set())
    assert not any(r.rhs == Z_INF for r in mp1.rules)


def test_par_kkw_no_strictly_smaller_pair():
    m = parse_system(HEADER + "rule r1: X -a-> Y.Z @ {}\nrule r2: Z -c-> Z @ {1}").mbrs
    mp1, _ = build_par_kkw(DecisionSession(m), {1}, {1})
    assert not any(r.rhs == Z_INF for r in mp1.rules)


def test_par_kkw_adds_infinite_summary():
    m = parse_system(HEADER + "rule r1: X -a-> Y.Z @ {}\nrule r2: Z -c-> Z @ {1}").mbrs
    mp1, mp2 = build_par_kkw(DecisionSession(m), {1, 2}, {1})
    inf1 = [r for r in mp1.rules if r.rhs == Z_INF]
    inf2 = [r for r in mp2.rules if r.rhs == Z_INF]
    assert [(r.lhs, r.action, r.components) for r in inf1] == [(X, Label(frozenset({1}), frozenset({1})),
                                                                 frozenset({1}))]
    assert [r.components for r in inf2] == [frozenset({1})]
    assert all(not r.components for r in mp2.rules if r.rhs != Z_INF)


def test_seq_k_coverings():
    m = parse_system(HEADER + "rule r: X -a-> X || Y @ {1}").mbrs
    sk = build_seq_k(DecisionSession(m), {1})
    got = {(str(r.lhs), str(r.rhs), r.components) for r in sk.rules}
    assert got == {("X", "Y", frozenset({1})), ("X", "X", frozenset({1}))}


def test_seq_k_push_rules_only():
    m = parse_system(HEADER + "rule r: X -a-> Y.Z @ {1}").mbrs
    sk = build_seq_k(DecisionSession(m), {1})
    assert [r.id for r in sk.rules] == ["r"]


def test_decide_s1():
    s = DecisionSession(S1)
    assert decide_accepting(s, X, {1}, {1}).is_yes
    assert decide_accepting(s, X, {2}, {2}).is_no


def test_decide_s2_head_pump():
    v = decide_accepting(DecisionSession(S2), X, {1}, {1})
    assert v.is_yes and "sequential" in v.reason


def test_decide_kw_not_subset():
    s = DecisionSession(S1)
    assert decide_accepting(s, X, {1}, {1, 2}).is_no
    assert s.calls == []


def test_decide_needs_normal_form():
    m = parse_system(HEADER + "rule r: X -a-> Y.Z.W @ {1}").mbrs
    with pytest.raises(ValueError):
        DecisionSession(m)


def test_decide_unknown_variable():
    with pytest.raises(ValueError):
        decide_accepting(DecisionSession(S1), Z, set(), set())


def test_accepts_pipeline_on_term_and_bad_system():
    assert accepts(S1, par(X, Y), {1, 2}, {1, 2}).is_yes
    assert accepts(S1, Y, {2}, {2}).is_no
    bad = parse_system(HEADER + "rule r1: X -a-> Y.(X || X) @ {1}").mbrs
    assert accepts(bad, X, {1}, {1}).is_yes
    assert accepts(bad, X, set(), set()).is_no


def test_recursion_measure_and_fixpoint_bound():
    rng = random.Random(60)
    for _ in range(60):
        m = random_normal_system(rng)
        s = DecisionSession(m)
        for x in sorted(m.vars, key=lambda v: v.key):
            for k in subsets(range(1, m.n + 1)):
                for kw in subsets(k):
                    s.decide(x, k, kw)
        for (k, kw), (f, i) in s.calls:
            assert len(f) + len(i) < len(k) + len(kw)
        nv = len(m.vars)
        for k in subsets(range(1, m.n + 1)):
            pk = s.par_k(k).value
            orig = {r.id for r in m.rules}
            keys = [(r.lhs, r.rhs, r.components) for r in pk.rules if r.id not in orig]
            assert len(keys) == len(set(keys))
            assert len(keys) <= nv * (nv + 2) * 2 ** m.n
