"""Brute-force ground truth by bounded exploration of the term graph.

Nothing here reuses the decision procedures: the oracle walks canonical terms
with :func:`step`, detects accepting lassos by SCC analysis and unbounded
runs by pumping, and evaluates fragment formulas on the action sets of
ultimately periodic runs.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations

import networkx as nx

from . import altl
from .system import Lasso, Mbrs, replay, step
from .terms import Seq, Term, is_subterm, small_subterms
from .verdict import SearchBudget, Verdict

ORACLE_BUDGET = SearchBudget(marking_bound=12, depth_bound=64, node_bound=20000)


@dataclass
class TermGraph:
    nodes: list
    index: dict
    edges: list          # per node: list of (rule_id, node)
    parent: list         # per node: (node, rule_id) or None
    closed: bool

    def path(self, i: int) -> list:
        out = []
        while self.parent[i] is not None:
            i, rid = self.parent[i]
            out.append(rid)
        return out[::-1]

    def edge_list(self):
        return [(i, rid, j) for i, succ in enumerate(self.edges) for rid, j in succ]


def _search(start, successors, budget: SearchBudget, size_of, on_edge=None):
    nodes, index, edges, parent, depth = [start], {start: 0}, [[]], [None], [0]
    closed = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        if depth[i] >= budget.depth_bound or size_of(nodes[i]) > budget.marking_bound:
            closed = False
            continue
        for rid, s in successors(nodes[i]):
            j = index.get(s)
            if j is None:
                if len(nodes) >= budget.node_bound:
                    closed = False
                    continue
                j = len(nodes)
                nodes.append(s)
                index[s] = j
                edges.append([])
                parent.append((i, rid))
                depth.append(depth[i] + 1)
                queue.append(j)
            edges[i].append((rid, j))
            if on_edge is not None:
                hit = on_edge(nodes, parent, i, rid, j)
                if hit is not None:
                    return TermGraph(nodes, index, edges, parent, False), hit
    return TermGraph(nodes, index, edges, parent, closed), None


def _sorted_steps(prs: Mbrs, t: Term):
    return sorted(step(prs, t), key=lambda e: (e[0], e[1].key))


def explore(prs: Mbrs, t0: Term, budget: SearchBudget = ORACLE_BUDGET) -> TermGraph:
    """Breadth-first closure of ``step`` from ``t0`` within the budget.

    ``marking_bound`` is read as the maximal term size that is still expanded.
    """
    g, _ = _search(t0, lambda t: _sorted_steps(prs, t), budget, lambda t: t.size)
    return g


@dataclass(frozen=True)
class OracleWitness:
    """``kind`` is ``"lasso"``, ``"par-pump"`` or ``"head-pump"``.

    For pumps, ``base`` derives ``grown`` through ``cycle`` and ``grown``
    contains ``base`` at an active position, so the cycle repeats forever.
    """

    kind: str
    prefix: tuple
    cycle: tuple
    base: Term | None = None
    grown: Term | None = None

    @property
    def lasso(self) -> Lasso:
        return Lasso(self.prefix, self.cycle)


def _pump_kind(base: Term, grown: Term) -> str:
    if base == grown:
        return "lasso"
    return "head-pump" if isinstance(grown, Seq) and grown.key.endswith("." + base.key) else "par-pump"


def _small_cores(t: Term, limit: int = 3) -> list:
    cores = small_subterms(t, 1 if t.size > 8 else limit)
    cores.discard(t)
    return sorted(cores, key=lambda u: (u.size, u.key))


CORE_REPLAY_DEPTH = 12


def oracle_accepting(mbrs: Mbrs, t0: Term, k, kw, budget: SearchBudget = ORACLE_BUDGET) -> Verdict:
    """Search for a derivation from ``t0`` with maximal ``k`` and maximalInf ``kw``."""
    k, kw = frozenset(k), frozenset(kw)
    if not kw <= k:
        return Verdict.no("maximalInf must be a subset of maximal")
    return oracle_accepting_many(mbrs, t0, k, [kw], budget)[kw]


def oracle_accepting_many(mbrs: Mbrs, t0: Term, k, kws, budget: SearchBudget = ORACLE_BUDGET) -> dict:
    """Answer every ``(k, kw)`` query for ``kw`` in ``kws`` from one exploration.

    The explored graph depends on ``k`` only; the search stops early once a
    pump has been found for every ``kw``.
    """
    k = frozenset(k)
    kws = {frozenset(kw) for kw in kws}
    out = {kw: Verdict.no("maximalInf must be a subset of maximal") for kw in kws if not kw <= k}
    pending = {kw for kw in kws if kw <= k}
    if not pending:
        return out
    usable = mbrs.with_rules([r for r in mbrs.rules if r.components <= k])
    comp = {r.id: r.components for r in usable.rules}
    cover = frozenset().union(*pending)
    memo: dict = {}

    def successors(state):
        t, used = state
        return [(rid, (u, used | comp[rid])) for rid, u in _sorted_steps(usable, t)]

    def path_to(parent, a):
        ids = []
        while parent[a] is not None:
            a, rid = parent[a]
            ids.append(rid)
        return tuple(ids[::-1])

    def on_edge(nodes, parent, i, rid, j):
        nonlocal cover
        t_j, used_j = nodes[j]
        if used_j != k or parent[j] != (i, rid) or not comp[rid] <= cover:
            return None
        seg = comp[rid]
        ids = [rid]
        a = i
        while True:
            if seg in pending:
                t_a = nodes[a][0]
                cyc = tuple(ids[::-1])
                hit = None
                if is_subterm(t_a, t_j):
                    hit = (t_a, t_j)
                elif len(ids) <= CORE_REPLAY_DEPTH:
                    hit = _core_pump(usable, t_a, cyc, memo)
                if hit is not None:
                    base, grown = hit
                    out[seg] = Verdict.yes(OracleWitness(_pump_kind(base, grown), path_to(parent, a),
                                                         cyc, base, grown))
                    pending.discard(seg)
                    if not pending:
                        return True
                    cover = frozenset().union(*pending)
            if parent[a] is None:
                return None
            a, r2 = parent[a]
            seg = seg | comp[r2]
            if not seg <= cover:
                return None
            ids.append(r2)

    g, _ = _search((t0, frozenset()), successors, budget, lambda s: s[0].size, on_edge)
    for kw in sorted(pending, key=sorted):
        lasso = _exact_lasso(g, comp, k, kw)
        if lasso is not None:
            out[kw] = Verdict.yes(lasso)
        elif g.closed:
            out[kw] = Verdict.no()
        else:
            out[kw] = Verdict.unknown("term graph not closed within budget")
    return out


def _core_pump(usable: Mbrs, t_a: Term, cyc: tuple, memo: dict):
    for core in _small_cores(t_a):
        key = (core, cyc)
        if key not in memo:
            memo[key] = next((grown for grown in replay(usable, core, cyc, cap=200)
                              if is_subterm(core, grown)), None)
        if memo[key] is not None:
            return core, memo[key]
    return None


def _exact_lasso(g: TermGraph, comp: dict, k, kw):
    dg = nx.DiGraph()
    internal = {}
    for i, rid, j in g.edge_list():
        if g.nodes[i][1] == k and g.nodes[j][1] == k and comp[rid] <= kw:
            dg.add_edge(i, j)
            internal.setdefault((i, j), []).append(rid)
    comp_of = {}
    sccs = sorted(nx.strongly_connected_components(dg), key=min)
    for c, scc in enumerate(sccs):
        for v in scc:
            comp_of[v] = c
    inside = [[] for _ in sccs]
    for (i, j), rids in internal.items():
        if comp_of[i] == comp_of[j]:
            inside[comp_of[i]].extend((i, j, rid) for rid in rids)
    for scc, edges in zip(sccs, inside):
        if not edges:
            continue
        if frozenset().union(*(comp[rid] for _, _, rid in edges)) != kw:
            continue
        # one edge per needed component is enough to cover kw
        chosen, covered = [], frozenset()
        for e in sorted(edges, key=lambda e: (e[0], e[1], e[2])):
            if not comp[e[2]] <= covered or not chosen:
                chosen.append(e)
                covered |= comp[e[2]]
        start = min(scc)
        sub = dg.subgraph(scc)
        walk = []
        for i, j, rid in chosen:
            walk += _route(sub, internal, start, i) + [rid] + _route(sub, internal, j, start)
        return OracleWitness("lasso", tuple(g.path(start)), tuple(walk))
    return None


def _route(sub, internal, a, b) -> list:
    if a == b:
        return []
    nodes = nx.shortest_path(sub, a, b)
    return [internal[(u, v)][0] for u, v in zip(nodes, nodes[1:])]


# -- fragment formulas on closed graphs --------------------------------------

def _holds_prop(psi, action) -> bool:
    if isinstance(psi, altl.TrueProp):
        return True
    if isinstance(psi, altl.Act):
        return psi.name == action
    if isinstance(psi, altl.PNot):
        return not _holds_prop(psi.arg, action)
    if isinstance(psi, altl.PAnd):
        return _holds_prop(psi.left, action) and _holds_prop(psi.right, action)
    raise TypeError(f"not a propositional formula: {psi!r}")


def _holds_on(phi, occ: frozenset, inf: frozenset) -> bool:
    if isinstance(phi, altl.F):
        return any(_holds_prop(phi.arg, a) for a in occ)
    if isinstance(phi, altl.GF):
        return any(_holds_prop(phi.arg, a) for a in inf)
    if isinstance(phi, altl.Not):
        return not _holds_on(phi.arg, occ, inf)
    if isinstance(phi, altl.And):
        return _holds_on(phi.left, occ, inf) and _holds_on(phi.right, occ, inf)
    raise TypeError(f"not a fragment formula: {phi!r}")


def run_action_profiles(prs: Mbrs, g: TermGraph) -> set:
    """All (occurring, infinitely occurring) action-set pairs of infinite runs of ``g``."""
    act = {r.id: r.action for r in prs.rules}
    reach = {(0, frozenset())}
    queue = deque(reach)
    while queue:
        i, occ = queue.popleft()
        for rid, j in g.edges[i]:
            s = (j, occ | {act[rid]})
            if s not in reach:
                reach.add(s)
                queue.append(s)
    occ_at = {}
    for i, occ in reach:
        occ_at.setdefault(i, set()).add(occ)
    alphabet = sorted({act[rid] for _, rid, _ in g.edge_list()}, key=str)
    out = set()
    for n in range(1, len(alphabet) + 1):
        for combo in combinations(alphabet, n):
            s = frozenset(combo)
            dg = nx.DiGraph()
            acts = {}
            for i, rid, j in g.edge_list():
                if act[rid] in s:
                    dg.add_edge(i, j)
                    acts.setdefault((i, j), set()).add(act[rid])
            for scc in nx.strongly_connected_components(dg):
                used = set()
                for i in scc:
                    for j in dg.successors(i):
                        if j in scc:
                            used |= acts[(i, j)]
                if used != s:
                    continue
                for i in scc:
                    for occ in occ_at.get(i, ()):
                        out.add((occ | s, s))
    return out


def oracle_holds_inf(prs: Mbrs, t0: Term, phi, budget: SearchBudget = ORACLE_BUDGET) -> Verdict:
    """Do all infinite runs from ``t0`` satisfy ``phi``? Needs a closed graph.

    Yes means the formula holds; No carries the violating (occurring,
    infinitely occurring) action sets as witness.
    """
    g = explore(prs, t0, budget)
    if not g.closed:
        return Verdict.unknown("term graph not closed within budget")
    for occ, inf in sorted(run_action_profiles(prs, g), key=lambda p: (sorted(map(str, p[0])), sorted(map(str, p[1])))):
        if not _holds_on(phi, occ, inf):
            return Verdict("no", (occ, inf), "run violating the formula")
    return Verdict.yes()
