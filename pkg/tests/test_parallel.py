import random

import pytest

from bruteforce import ParReachOracle, lasso_ok
from generators import random_par_system
from prsbuchi.parallel import (
    ANY, EMPTY, Covers, ExactVar, ReachProfile, par_inf_exists, par_reach_exists,
)
from prsbuchi.system import Lasso, Mbrs, Rule, maximal, replay, subsets
from prsbuchi.terms import EPS, Var, par

X, Y, Z = Var("X"), Var("Y"), Var("Z")

S1 = Mbrs(frozenset({"a", "b"}), frozenset({X, Y}), 2, (
    Rule("r1", X, "a", par(X, Y), frozenset({1})),
    Rule("r2", Y, "b", EPS, frozenset({2})),
))
S1_FREE = S1.with_rules([Rule(r.id, r.lhs, r.action, r.rhs, frozenset()) for r in S1.rules])
ALL = frozenset({"r1", "r2"})


def test_reach_covers():
    v = par_reach_exists(S1, X, {1}, Covers(Y))
    assert v.is_yes and v.witness == ("r1",)


def test_reach_empty():
    v = par_reach_exists(S1, Y, {2}, EMPTY)
    assert v.is_yes and v.witness == ("r2",)


def test_reach_exact_needs_component():
    assert par_reach_exists(S1, X, set(), ExactVar(Y)).is_no


def test_reach_any_null_derivation():
    v = par_reach_exists(S1, X, set(), ANY)
    assert v.is_yes


def test_reach_unknown_variable():
    with pytest.raises(ValueError):
        par_reach_exists(S1, Z, set(), ANY)


def test_inf_single_pump():
    v = par_inf_exists(S1, S1_FREE, X, {1}, {1}, ALL)
    assert v.is_yes
    assert v.witness == Lasso((), ("r1",))


def test_inf_two_component_pump():
    v = par_inf_exists(S1, S1_FREE, X, {1, 2}, {1, 2}, ALL)
    assert v.is_yes and isinstance(v.witness, Lasso)
    assert lasso_ok(S1, X, v.witness, {1, 2}, {1, 2})


def test_inf_pruned_to_nothing():
    assert par_inf_exists(S1, S1_FREE, X, {2}, {2}, ALL).is_no


def test_inf_finite_escape():
    # r2 lies outside rstar, so the finite derivation r1 r2 qualifies
    v = par_inf_exists(S1, S1_FREE, X, {1, 2}, set(), frozenset({"r1"}))
    assert v.is_yes and v.witness == ("r1", "r2")


def test_inf_second_system_counts_towards_kw():
    mp2 = S1.with_rules([Rule("r1", X, "a", par(X, Y), frozenset()),
                         Rule("r2", Y, "b", EPS, frozenset({2}))])
    v = par_inf_exists(S1, mp2, X, {1, 2}, {2}, frozenset({"r1"}))
    assert v.is_yes
    assert par_inf_exists(S1, mp2, X, {1, 2}, set(), frozenset({"r1"})).is_no


def test_inf_support_mismatch():
    other = S1.with_rules([S1.rules[0]])
    with pytest.raises(ValueError):
        par_inf_exists(S1, other, X, {1}, {1}, ALL)


def test_exact_target_in_unbounded_net():
    # X -> X||Y grows without bound; reaching exactly eps needs X consumed
    m = Mbrs(frozenset({"a", "b"}), frozenset({X, Y}), 1, (
        Rule("r1", X, "a", par(X, Y)), Rule("r2", Y, "b", EPS), Rule("r3", X, "b", EPS, frozenset({1}))))
    prof = ReachProfile(m, X, {1})
    assert prof.query(EMPTY, {1}) == "yes"
    assert prof.query(EMPTY, set()) == "no"
    assert prof.query(ExactVar(Y), {1}) == "yes"
    assert prof.query(ExactVar(Y), set()) == "no"


def test_engines_agree_with_brute_force_small_corpus():
    rng = random.Random(40)
    for _ in range(40):
        m = random_par_system(rng)
        vs = sorted(m.vars, key=lambda v: v.key)
        free = m.with_rules([Rule(r.id, r.lhs, r.action, r.rhs, frozenset()) for r in m.rules])
        ids = frozenset(r.id for r in m.rules)
        for x in vs:
            for k in subsets(range(1, m.n + 1)):
                oracle = ParReachOracle(m, x, k)
                for tg in [ANY, EMPTY] + [ExactVar(v) for v in vs] + [Covers(v) for v in vs]:
                    v = par_reach_exists(m, x, k, tg)
                    o = oracle.query(tg, k)
                    if "unknown" not in (v.answer, o):
                        assert v.answer == o, (m, x, k, tg)
                    if v.is_yes and v.witness:
                        assert replay(m, x, v.witness) and maximal(m, v.witness) == k
                for kw in subsets(k):
                    v = par_inf_exists(m, free, x, k, kw, ids)
                    if v.is_yes and isinstance(v.witness, Lasso):
                        assert lasso_ok(m, x, v.witness, k, kw)
