"""Sequential systems in normal form: annotated saturation and Buchi detection.

A sequential term ``X1.X2. ... .Xm`` behaves like a stack whose top is the last
cell. Two summaries are computed as least fixpoints over the finite lattice
Var x Var x P_n:

* ``pop(A, B, c)``: ``A`` derives the complete term ``B`` (or eps) using
  exactly the components ``c``;
* ``headreach(A, B, c)``: ``A`` derives some ``s.B`` (``s`` possibly empty)
  using exactly ``c``.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass

import networkx as nx

from .system import Mbrs, is_seq_rule
from .terms import EPS, Empty, Seq, Var


@dataclass(frozen=True)
class AnnotatedRelations:
    pop: frozenset
    headreach: frozenset
    head_plus: frozenset
    vars: frozenset

    def pops_from(self, a):
        return {(b, c) for x, b, c in self.pop if x == a}

    def heads_from(self, a):
        return {(b, c) for x, b, c in self.headreach if x == a}


def _shapes(ms: Mbrs):
    bad = [r.id for r in ms.rules if not is_seq_rule(r)]
    if bad:
        raise ValueError(f"not a sequential normal-form system; offending rules: {', '.join(bad)}")
    renames, pops, pushes, pairs = [], [], [], defaultdict(list)
    for r in ms.rules:
        if isinstance(r.lhs, Seq):
            pairs[(r.lhs.head, r.lhs.tail)].append((r.rhs, r.components))
        elif isinstance(r.rhs, Empty):
            pops.append((r.lhs, r.components))
        elif isinstance(r.rhs, Seq):
            pushes.append((r.lhs, r.rhs.head, r.rhs.tail, r.components))
        else:
            renames.append((r.lhs, r.rhs, r.components))
    return renames, pops, pushes, pairs


def _close(base: set, start_vars) -> set:
    """Reflexive-transitive closure of annotated edges ``(A, B, c)`` over variables."""
    succ = defaultdict(set)
    for a, b, c in base:
        succ[a].add((b, c))
    out = set()
    for a in start_vars:
        seen = {(a, frozenset())}
        queue = deque(seen)
        while queue:
            b, c = queue.popleft()
            for b2, d in succ.get(b, ()):
                s = (b2, c | d)
                if s not in seen:
                    seen.add(s)
                    queue.append(s)
        out |= {(a, b, c) for b, c in seen}
    return out


def saturate(ms: Mbrs) -> AnnotatedRelations:
    renames, pops, pushes, pairs = _shapes(ms)
    all_vars = set(ms.vars)
    for r in ms.rules:
        all_vars |= r.lhs.variables() | r.rhs.variables()

    pop = {(x, y, c) for x, y, c in renames} | {(x, EPS, c) for x, c in pops}
    by_src = defaultdict(set)
    for a, b, c in pop:
        by_src[a].add((b, c))
    work = deque(pop)

    def add(t):
        if t not in pop:
            pop.add(t)
            by_src[t[0]].add((t[1], t[2]))
            work.append(t)

    # pop facts are derived from a new fact about the sub-derivation of Z
    # (push rules) or by left/right transitive composition.
    push_by_z = defaultdict(list)
    for x, y, z, c in pushes:
        push_by_z[z].append((x, y, c))
        # the pushed Z may be consumed right away (zero-step pop of Z)
        for v, e in pairs.get((y, z), ()):
            add((x, v, c | e))
    while work:
        a, b, c = work.popleft()
        for x, y, pc in push_by_z.get(a, ()):
            if isinstance(b, Empty):
                add((x, y, pc | c))
            else:
                for v, e in pairs.get((y, b), ()):
                    add((x, v, pc | c | e))
        if not isinstance(b, Empty):
            for b2, d in list(by_src.get(b, ())):
                add((a, b2, c | d))
        for a0, b0, c0 in [t for t in pop if t[1] == a]:
            add((a0, b, c0 | c))

    step_edges = {(a, b, c) for a, b, c in pop if not isinstance(b, Empty)}
    step_edges |= {(x, z, c) for x, _, z, c in pushes}
    head = _close(step_edges, all_vars)
    # non-empty head derivations: a first summarised step then anything
    head_by_src = defaultdict(set)
    for a, b, c in head:
        head_by_src[a].add((b, c))
    plus = set()
    for a, b, c in step_edges:
        for b2, d in head_by_src[b]:
            plus.add((a, b2, c | d))
    return AnnotatedRelations(frozenset(pop), frozenset(head), frozenset(plus), frozenset(all_vars))


def _check_var(rel: AnnotatedRelations, v: Var):
    if v not in rel.vars:
        raise ValueError(f"unknown variable {v}")


def seq_reachable(ms: Mbrs, x: Var, y: Var, k, rel: AnnotatedRelations | None = None) -> bool:
    """Is there a derivation ``x ->* s.y`` with maximal exactly ``k``?"""
    rel = rel or saturate(ms)
    _check_var(rel, x)
    _check_var(rel, y)
    return (x, y, frozenset(k)) in rel.headreach


def seq_buchi(ms: Mbrs, x: Var, k, kw, rel: AnnotatedRelations | None = None) -> bool:
    """Infinite derivation from ``x`` with maximal ``k`` and maximalInf ``kw``.

    Every infinite sequential derivation eventually freezes a prefix of the
    stack forever and then moves between top variables through non-empty head
    derivations, so acceptance is a lasso over head-reach summaries.
    """
    k, kw = frozenset(k), frozenset(kw)
    rel = rel or saturate(ms)
    _check_var(rel, x)
    if not kw <= k:
        return False
    g = nx.DiGraph()
    labels = defaultdict(frozenset)
    for a, b, c in rel.head_plus:
        if c <= kw:
            g.add_edge(a, b)
            labels[(a, b)] |= c
    cycle_union = {}
    for scc in nx.strongly_connected_components(g):
        internal = [(a, b) for a in scc for b in g.successors(a) if b in scc]
        if not internal:
            continue
        u = frozenset().union(*(labels[e] for e in internal))
        for v in scc:
            cycle_union[v] = u
    for a, c_var, p in rel.headreach:
        if a == x and cycle_union.get(c_var) == kw and p | kw == k:
            return True
    return False
