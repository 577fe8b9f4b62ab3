"""Independent brute-force references used as test oracles.

Nothing here calls the engines under test; everything is explicit enumeration
over canonical terms.
"""
from __future__ import annotations

from collections import Counter, deque

from prsbuchi.system import Lasso, Mbrs, maximal, maximal_inf, replay
from prsbuchi.terms import EPS, Empty, Par, Seq, Term, Var, par, seq, seq_cells, sub_multisets


def bf_rewrite(t: Term, lhs: Term, rhs: Term) -> set:
    """One-step rewrites of ``t`` by ``lhs -> rhs`` over every decomposition."""
    out = set()
    if t == lhs:
        out.add(rhs)
    if isinstance(t, Par):
        for part in sub_multisets(t.children):
            rest = list(t.children)
            for c in part:
                rest.remove(c)
            for u in bf_rewrite(par(*part), lhs, rhs):
                out.add(par(u, *rest))
    elif isinstance(t, Seq):
        cells = seq_cells(t)
        for j in range(1, len(cells)):
            for u in bf_rewrite(seq(*cells[j:]), lhs, rhs):
                out.add(seq(*cells[:j], u))
    return out


def bf_step(mbrs: Mbrs, t: Term) -> set:
    return {(r.id, u) for r in mbrs.rules for u in bf_rewrite(t, r.lhs, r.rhs)}


def annotated_closure(mbrs: Mbrs, x: Term, k, size_bound=10, node_bound=30000):
    """Reachable ``(term, used)`` pairs with rules inside ``k``; also returns closedness."""
    k = frozenset(k)
    rules = [r for r in mbrs.rules if r.components <= k]
    start = (x, frozenset())
    seen = {start}
    queue = deque([start])
    closed = True
    while queue:
        t, used = queue.popleft()
        if t.size > size_bound:
            closed = False
            continue
        for r in rules:
            for u in bf_rewrite(t, r.lhs, r.rhs):
                s = (u, used | r.components)
                if s not in seen:
                    if len(seen) >= node_bound:
                        closed = False
                        continue
                    seen.add(s)
                    queue.append(s)
    return seen, closed


def seq_summaries(ms: Mbrs, x: Var, size_bound=8) -> tuple:
    """Headreach and pop triples from ``x`` found by bounded enumeration."""
    k = frozenset().union(*(r.components for r in ms.rules)) if ms.rules else frozenset()
    states, closed = annotated_closure(ms, x, k, size_bound)
    head, pop = set(), set()
    for t, used in states:
        if isinstance(t, Empty):
            pop.add((x, EPS, used))
            continue
        head.add((x, seq_cells(t)[-1], used))
        if isinstance(t, Var):
            pop.add((x, t, used))
    return head, pop, closed


def matches_target(t: Term, target, nonempty: bool) -> bool:
    from prsbuchi.parallel import AnyTarget, Covers, EmptyTarget, ExactVar
    if isinstance(target, AnyTarget):
        return True
    if isinstance(target, EmptyTarget):
        return isinstance(t, Empty)
    if isinstance(target, ExactVar):
        return t == target.var
    if isinstance(target, Covers):
        kids = t.children if isinstance(t, Par) else (t,)
        return nonempty and target.var in kids
    raise TypeError(target)


class ParReachOracle:
    """Brute-force answers for finite-reachability queries from ``x`` within ``k``.

    Works on markings (sorted tuples of variables) of a parallel system. A
    state is ``(marking, used, nonempty)``; ``nonempty`` records that at least
    one step was taken, which ``Covers`` targets require.
    """

    def __init__(self, mp: Mbrs, x: Var, k, token_bound=10, node_bound=30000):
        k = frozenset(k)
        rules = [(Counter(_tokens(r.lhs)), _tokens(r.rhs), r.components)
                 for r in mp.rules if r.components <= k]
        start = ((x,), frozenset(), False)
        seen = {start}
        queue = deque([start])
        self.closed = True
        while queue:
            m, used, _ = queue.popleft()
            if len(m) > token_bound:
                self.closed = False
                continue
            have = Counter(m)
            for need, out, c in rules:
                if any(have[v] < n for v, n in need.items()):
                    continue
                rest = have - need
                m2 = tuple(sorted(list(rest.elements()) + list(out), key=lambda v: v.key))
                s = (m2, used | c, True)
                if s not in seen:
                    if len(seen) >= node_bound:
                        self.closed = False
                        continue
                    seen.add(s)
                    queue.append(s)
        self.states = seen

    def query(self, target, k1) -> str:
        k1 = frozenset(k1)
        if any(used == k1 and matches_target(par(*m), target, ne) for m, used, ne in self.states):
            return "yes"
        return "no" if self.closed else "unknown"


def _tokens(t: Term) -> tuple:
    if isinstance(t, Empty):
        return ()
    if isinstance(t, Var):
        return (t,)
    if isinstance(t, Par) and all(isinstance(c, Var) for c in t.children):
        return t.children
    raise ValueError(f"not a parallel term: {t}")


def replays_to(mbrs: Mbrs, t: Term, ids) -> set:
    return replay(mbrs, t, ids)


def lasso_ok(mbrs: Mbrs, t0: Term, lasso: Lasso, k, kw, rounds=3) -> bool:
    """The lasso replays from ``t0`` (cycle repeated) with the exact component sets."""
    ids = list(lasso.prefix) + list(lasso.cycle) * rounds
    if not replay(mbrs, t0, ids):
        return False
    return (maximal(mbrs, lasso.prefix) | maximal(mbrs, lasso.cycle)) == frozenset(k) \
        and maximal_inf(mbrs, lasso) == frozenset(kw)
