"""Decision procedures for parallel systems (Petri-net markings over variables).

Two questions are answered over markings annotated with the components used
so far:

* finite reachability with an exact component set (:func:`par_reach_exists`),
* existence of a derivation that is infinite or escapes a rule subset, with
  exact finite/infinite component sets (:func:`par_inf_exists`).

Coverability-type questions are settled exactly by a Karp-Miller graph over
(marking, annotation) pairs. Exact reachability targets fall back on a
breadth-first search pruned by the LP relaxation of the state equation, and
infinite derivations are witnessed by self-covering lassos.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from .system import Lasso, Mbrs, is_par_rule, marking_of
from .terms import Var, Z_F, Z_INF
from .verdict import DEFAULT_BUDGET, NO, UNKNOWN, YES, SearchBudget, Verdict

OMEGA = math.inf


@dataclass(frozen=True)
class AnyTarget:
    def __str__(self):
        return "any"


@dataclass(frozen=True)
class EmptyTarget:
    def __str__(self):
        return "eps"


@dataclass(frozen=True)
class ExactVar:
    var: Var

    def __str__(self):
        return f"exactly {self.var}"


@dataclass(frozen=True)
class Covers:
    var: Var
    min_len: int = 1

    def __post_init__(self):
        if self.min_len < 1:
            raise ValueError("Covers needs min_len >= 1")

    def __str__(self):
        return f"covers {self.var}"


ANY = AnyTarget()
EMPTY = EmptyTarget()


@dataclass(frozen=True)
class Transition:
    rid: str
    pre: tuple      # ((place, count), ...)
    delta: tuple    # ((place, change), ...)
    c1: frozenset
    c2: frozenset = frozenset()
    escape: bool = False

    def fire(self, m: tuple):
        for p, n in self.pre:
            if m[p] < n:
                return None
        out = list(m)
        for p, d in self.delta:
            out[p] += d
        return tuple(out)


class ParNet:
    """Vector view of a parallel system."""

    def __init__(self, mp: Mbrs):
        bad = [r.id for r in mp.rules if not is_par_rule(r)]
        if bad:
            raise ValueError(f"not a parallel system; offending rules: {', '.join(bad)}")
        places = set(mp.vars)
        for r in mp.rules:
            places |= r.lhs.variables() | r.rhs.variables()
        self.places = sorted(places, key=lambda v: v.key)
        self.index = {v: i for i, v in enumerate(self.places)}
        self.mp = mp
        self.vectors = {}
        for r in mp.rules:
            pre = marking_of(r.lhs)
            post = marking_of(r.rhs)
            d = {}
            for v, c in post.items():
                d[self.index[v]] = d.get(self.index[v], 0) + c
            for v, c in pre.items():
                d[self.index[v]] = d.get(self.index[v], 0) - c
            self.vectors[r.id] = (
                tuple(sorted((self.index[v], c) for v, c in pre.items())),
                tuple(sorted((p, c) for p, c in d.items() if c)),
            )

    def transitions(self, second: Mbrs | None = None, rstar=None) -> list:
        out = []
        for r in self.mp.rules:
            pre, delta = self.vectors[r.id]
            c2 = second.rule(r.id).components if second is not None else frozenset()
            esc = rstar is not None and r.id not in rstar
            out.append(Transition(r.id, pre, delta, r.components, c2, esc))
        return out

    def unit(self, v: Var) -> tuple:
        m = [0] * len(self.places)
        m[self.index[v]] = 1
        return tuple(m)

    def zero(self) -> tuple:
        return (0,) * len(self.places)

    def render(self, m: tuple) -> str:
        parts = []
        for v, c in zip(self.places, m):
            if c == OMEGA:
                parts.append(f"{v}^w")
            else:
                parts.extend([str(v)] * c)
        return " || ".join(parts) or "eps"


# -- explicit and Karp-Miller graphs ----------------------------------------

class StateGraph:
    """Explored (marking, annotation) states with a spanning tree."""

    def __init__(self):
        self.states = []
        self.index = {}
        self.parent = []
        self.depth = []
        self.edges = []
        self.complete = True

    def add(self, m, a, parent=None, depth=0) -> int:
        i = len(self.states)
        self.states.append((m, a))
        self.index[(m, a)] = i
        self.parent.append(parent)
        self.depth.append(depth)
        self.edges.append([])
        return i

    def path(self, i: int) -> list:
        out = []
        while self.parent[i] is not None:
            j, tr = self.parent[i]
            out.append(tr.rid)
            i = j
        out.reverse()
        return out


def _bfs(m0, a0, trs, update, budget: SearchBudget, on_new=None, on_edge=None, prune=None):
    g = StateGraph()
    g.add(m0, a0)
    if on_new is not None:
        hit = on_new(g, 0)
        if hit is not None:
            return g, hit
    queue = deque([0])
    while queue:
        i = queue.popleft()
        m, a = g.states[i]
        if g.depth[i] >= budget.depth_bound or sum(m) > budget.marking_bound:
            g.complete = False
            continue
        for tr in trs:
            m2 = tr.fire(m)
            if m2 is None:
                continue
            a2 = update(a, tr)
            j = g.index.get((m2, a2))
            if j is None:
                if prune is not None and prune(m2, a2):
                    continue
                if len(g.states) >= budget.node_bound:
                    g.complete = False
                    continue
                j = g.add(m2, a2, (i, tr), g.depth[i] + 1)
                queue.append(j)
                if on_new is not None:
                    hit = on_new(g, j)
                    if hit is not None:
                        return g, hit
            g.edges[i].append((tr, j))
            if on_edge is not None:
                hit = on_edge(g, i, tr, j)
                if hit is not None:
                    return g, hit
    return g, None


def _karp_miller(m0, a0, trs, update, limit: int) -> StateGraph:
    g = StateGraph()
    g.add(m0, a0)
    queue = deque([0])
    while queue:
        i = queue.popleft()
        m, a = g.states[i]
        for tr in trs:
            m2 = tr.fire(m)
            if m2 is None:
                continue
            a2 = update(a, tr)
            acc = list(m2)
            j = i
            while j is not None:
                mj, aj = g.states[j]
                if aj == a2 and all(x <= y for x, y in zip(mj, acc)):
                    for p, (x, y) in enumerate(zip(mj, acc)):
                        if x < y:
                            acc[p] = OMEGA
                j = g.parent[j][0] if g.parent[j] is not None else None
            key = (tuple(acc), a2)
            j = g.index.get(key)
            if j is None:
                if len(g.states) >= limit:
                    g.complete = False
                    return g
                j = g.add(key[0], a2, (i, tr), g.depth[i] + 1)
                queue.append(j)
            g.edges[i].append((tr, j))
    return g


def _leq(m1, m2) -> bool:
    return all(x <= y for x, y in zip(m1, m2))


# -- lasso search on an annotated graph -------------------------------------

def _cycle_sccs(g: StateGraph, k, kw, node_ok=None):
    """Strongly connected sets of states that can host the cycle of a lasso.

    Annotations are ``(used1, used2, ...)``; a state qualifies when
    ``used1 == k``; an edge inside a cycle must keep the annotation and have
    first components within ``kw``. Yields ``(scc, internal_edges)`` whose
    edge components together with ``used2`` give exactly ``kw``.
    """
    dg = nx.DiGraph()
    internal = {}
    for i, (m, a) in enumerate(g.states):
        if a[0] != k or (node_ok is not None and not node_ok(i)):
            continue
        for tr, j in g.edges[i]:
            if g.states[j][1] == a and tr.c1 <= kw and (node_ok is None or node_ok(j)):
                dg.add_edge(i, j)
                internal.setdefault(i, []).append((tr, j))
    for scc in nx.strongly_connected_components(dg):
        edges = [(i, tr, j) for i in scc for tr, j in internal.get(i, ()) if j in scc]
        if not edges:
            continue
        used2 = g.states[next(iter(scc))][1][1]
        union = frozenset().union(*(tr.c1 for _, tr, _ in edges))
        if union | used2 == kw:
            yield scc, edges


def _closed_walk(scc, edges, start: int, need: frozenset) -> list:
    """Rule ids of a closed walk from ``start`` inside ``scc`` covering ``need``."""
    adj = {}
    for i, tr, j in edges:
        adj.setdefault(i, []).append((tr, j))

    def route(src, dst):
        prev = {src: None}
        q = deque([src])
        while q:
            u = q.popleft()
            if u == dst and u != src:
                break
            for tr, v in adj.get(u, ()):
                if v not in prev:
                    prev[v] = (u, tr)
                    q.append(v)
        out = []
        node = dst
        while prev[node] is not None:
            u, tr = prev[node]
            out.append(tr.rid)
            node = u
        return out[::-1]

    walk = []
    covered = frozenset()
    chosen = [e for e in edges if not e[1].c1 <= covered] or edges[:1]
    for i, tr, j in chosen:
        if tr.c1 <= covered and walk:
            continue
        walk += route(start, i) if i != start else []
        walk.append(tr.rid)
        walk += route(j, start) if j != start else []
        covered |= tr.c1
        if need <= covered and walk:
            break
    return walk


# -- LP relaxation of the state equation ------------------------------------

class _StateEquation:
    def __init__(self, nplaces: int, trs, target: tuple, k1: frozenset):
        self.trs = trs
        self.target = np.array(target, dtype=float)
        self.k1 = k1
        self.cache = {}
        self.C = np.zeros((nplaces, len(trs)))
        for col, tr in enumerate(trs):
            for p, d in tr.delta:
                self.C[p, col] = d

    def feasible(self, m: tuple, used: frozenset) -> bool:
        key = (m, used)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        rhs = self.target - np.array(m, dtype=float)
        missing = sorted(self.k1 - used)
        if not self.trs:
            ok = not rhs.any() and not missing
        else:
            a_ub = b_ub = None
            if missing:
                a_ub = np.array([[-1.0 if i in tr.c1 else 0.0 for tr in self.trs] for i in missing])
                b_ub = -np.ones(len(missing))
            res = linprog(np.zeros(len(self.trs)), A_ub=a_ub, b_ub=b_ub, A_eq=self.C,
                          b_eq=rhs, bounds=(0, None), method="highs")
            ok = res.status != 2
        self.cache[key] = ok
        return ok


# -- finite reachability ----------------------------------------------------

def _used_update(a, tr):
    return (a[0] | tr.c1, True)


class ReachProfile:
    """All finite-reachability facts from ``{x}`` using rules within ``k``.

    ``query(target, k1)`` answers whether some derivation with maximal exactly
    ``k1`` (a subset of ``k``) reaches ``target``; answers are ``"yes"``,
    ``"no"`` or ``"unknown"``.
    """

    def __init__(self, mp: Mbrs, x: Var, k: frozenset, budget: SearchBudget = DEFAULT_BUDGET,
                 net: ParNet | None = None):
        self.net = net or ParNet(mp)
        if x not in self.net.index:
            raise ValueError(f"unknown variable {x}")
        self.x = x
        self.k = frozenset(k)
        self.budget = budget
        self.trs = [t for t in self.net.transitions() if t.c1 <= self.k]
        self.m0 = self.net.unit(x)
        self.km = _karp_miller(self.m0, (frozenset(), False), self.trs, _used_update, budget.node_bound)
        self.finite = self.km.complete and all(OMEGA not in m for m, _ in self.km.states)
        self.facts = set()
        for m, (used, nonempty) in self.km.states:
            self.facts.add(("any", used))
            for p, c in enumerate(m):
                if c >= 1:
                    self.facts.add(("cov0", p, used))
                    if nonempty:
                        self.facts.add(("covers", p, used))
            if not any(m):
                self.facts.add(("empty", used))
            elif sum(m) == 1:
                self.facts.add(("exact", m.index(1), used))
        self._exact_cache = {}

    def _key(self, target, k1):
        if isinstance(target, AnyTarget):
            return ("any", k1)
        if isinstance(target, Covers):
            return ("covers", self.net.index[target.var], k1)
        if isinstance(target, EmptyTarget):
            return ("empty", k1)
        if isinstance(target, ExactVar):
            return ("exact", self.net.index[target.var], k1)
        raise ValueError(f"malformed target {target!r}")

    def query(self, target, k1) -> str:
        k1 = frozenset(k1)
        key = self._key(target, k1)
        if not k1 <= self.k:
            return NO
        if not self.km.complete:
            return UNKNOWN
        if key[0] in ("any", "covers") or self.finite:
            return YES if key in self.facts else NO
        # exact reachability in an unbounded net
        if key[0] == "empty" and ("any", k1) not in self.facts:
            return NO
        if key[0] == "exact" and ("cov0", key[1], k1) not in self.facts:
            return NO
        return self._exact_search(target, k1)[0]

    def _exact_search(self, target, k1):
        key = (target, k1)
        if key in self._exact_cache:
            return self._exact_cache[key]
        goal = self.net.zero() if isinstance(target, EmptyTarget) else self.net.unit(target.var)
        trs = [t for t in self.trs if t.c1 <= k1]
        se = _StateEquation(len(self.net.places), trs, goal, k1)

        def on_new(g, i):
            m, (used, _) = g.states[i]
            if m == goal and used == k1:
                return i

        if not se.feasible(self.m0, frozenset()):
            out = (NO, None)
        else:
            g, hit = _bfs(self.m0, (frozenset(), False), trs, _used_update, self.budget,
                          on_new=on_new, prune=lambda m, a: not se.feasible(m, a[0]))
            if hit is not None:
                out = (YES, g.path(hit))
            elif g.complete:
                out = (NO, None)
            else:
                out = (UNKNOWN, None)
        self._exact_cache[key] = out
        return out

    def witness(self, target, k1):
        """A rule sequence realising ``query(target, k1) == "yes"``, if one is found in budget."""
        k1 = frozenset(k1)
        if isinstance(target, (EmptyTarget, ExactVar)) and not self.finite:
            return self._exact_search(target, k1)[1]
        goal_key = self._key(target, k1)
        trs = [t for t in self.trs if t.c1 <= k1]

        def on_new(g, i):
            m, (used, nonempty) = g.states[i]
            if used != k1:
                return None
            if isinstance(target, AnyTarget):
                return i
            if isinstance(target, Covers):
                return i if nonempty and m[goal_key[1]] >= 1 else None
            if isinstance(target, EmptyTarget):
                return i if not any(m) else None
            return i if m == self.net.unit(target.var) else None

        g, hit = _bfs(self.m0, (frozenset(), False), trs, _used_update, self.budget, on_new=on_new)
        return None if hit is None else g.path(hit)


def par_reach_exists(mp: Mbrs, x: Var, k, target, budget: SearchBudget = DEFAULT_BUDGET) -> Verdict:
    """Is there a finite derivation from ``x`` to ``target`` with maximal exactly ``k``?"""
    k = frozenset(k)
    prof = ReachProfile(mp, x, k, budget)
    ans = prof.query(target, k)
    if ans == YES:
        return Verdict.yes(tuple(prof.witness(target, k) or ()) or None)
    if ans == NO:
        return Verdict.no()
    return Verdict.unknown("search budget exhausted")


# -- infinite or escaping derivations ---------------------------------------

def _inf_update(a, tr):
    return (a[0] | tr.c1, a[1] | tr.c2, a[2] or tr.escape)


def _same_support(mp1: Mbrs, mp2: Mbrs) -> bool:
    if len(mp1.rules) != len(mp2.rules):
        return False
    return all(r.id == q.id and r.lhs == q.lhs and r.rhs == q.rhs and r.action == q.action
               for r, q in zip(mp1.rules, mp2.rules))


def _nonnegative_cycle(g: StateGraph, scc, edges, need: frozenset) -> bool:
    """Is there a closed walk inside ``scc`` whose total effect is >= 0 on
    every place and whose edges carry every component in ``need``?

    Inside one strongly connected set of Karp-Miller nodes the finite places
    return to their values along any closed walk, so only the omega places
    constrain the walk. Edges that no non-negative circulation can use are
    dropped and the remaining strongly connected parts are re-examined; a
    part whose edges are all usable carries a circulation with full, hence
    strongly connected, support.
    """
    omega = [p for p, c in enumerate(g.states[next(iter(scc))][0]) if c == OMEGA]
    work = [list(edges)]
    while work:
        part = work.pop()
        if not part:
            continue
        have = frozenset().union(*(tr.c1 for _, tr, _ in part))
        if not need <= have:
            continue
        usable = _usable_edges(part, omega)
        if len(usable) == len(part):
            return True
        kept = [part[i] for i in usable]
        dg = nx.DiGraph()
        dg.add_edges_from((i, j) for i, _, j in kept)
        for comp in nx.strongly_connected_components(dg):
            sub = [e for e in kept if e[0] in comp and e[2] in comp]
            if sub:
                work.append(sub)
    return False


def _usable_edges(part, omega) -> list:
    """Indices of edges lying on some circulation with non-negative omega effect."""
    if not omega:
        return list(range(len(part)))
    nodes = sorted({i for i, _, _ in part} | {j for _, _, j in part})
    pos = {v: r for r, v in enumerate(nodes)}
    m = len(part)
    # variables: x_0..x_{m-1} (flow), y_0..y_{m-1} (capped indicators)
    a_eq = np.zeros((len(nodes), 2 * m))
    for col, (i, _, j) in enumerate(part):
        a_eq[pos[i], col] -= 1
        a_eq[pos[j], col] += 1
    rows = []
    for p in omega:
        row = np.zeros(2 * m)
        for col, (_, tr, _) in enumerate(part):
            row[col] = -sum(d for q, d in tr.delta if q == p)
        rows.append(row)
    for col in range(m):
        row = np.zeros(2 * m)
        row[m + col] = 1
        row[col] = -1
        rows.append(row)
    c = np.concatenate([np.zeros(m), -np.ones(m)])
    bounds = [(0, 1e4)] * m + [(0, 1)] * m
    res = linprog(c, A_ub=np.array(rows), b_ub=np.zeros(len(rows)), A_eq=a_eq,
                  b_eq=np.zeros(len(nodes)), bounds=bounds, method="highs")
    if res.status != 0:
        return []
    return [col for col in range(m) if res.x[m + col] > 0.5]


def par_inf_exists(mp1: Mbrs, mp2: Mbrs, x: Var, k, kw, rstar,
                   budget: SearchBudget = DEFAULT_BUDGET, want_witness: bool = True) -> Verdict:
    """Derivation from ``x`` with maximal_1 = k and maximalInf_1 | maximal_2 = kw
    that is infinite or uses a rule outside ``rstar``.

    Existence is settled on the annotated Karp-Miller graph: the escaping
    finite case is control-state coverability, the infinite case a closed
    walk with non-negative effect. On Yes the witness is a :class:`Lasso`
    (infinite case) or a tuple of rule ids (finite escaping case), found by
    a bounded concrete search; it is ``None`` when that search runs out of
    budget or ``want_witness`` is false.
    """
    if not _same_support(mp1, mp2):
        raise ValueError("support mismatch between the two parallel systems")
    k, kw, rstar = frozenset(k), frozenset(kw), frozenset(rstar)
    net = ParNet(mp1)
    if x not in net.index:
        raise ValueError(f"unknown variable {x}")
    trs = [t for t in net.transitions(mp2, rstar) if t.c1 <= k and t.c2 <= kw]
    m0 = net.unit(x)
    a0 = (frozenset(), frozenset(), False)
    goal = (k, kw, True)

    km = _karp_miller(m0, a0, trs, _inf_update, budget.node_bound)
    exists = None
    if km.complete:
        exists = any(a == goal for _, a in km.states)
        if not exists:
            for scc, edges in _cycle_sccs(km, k, kw):
                need = kw - km.states[next(iter(scc))][1][1]
                if _nonnegative_cycle(km, scc, edges, need):
                    exists = True
                    break
        if not exists:
            return Verdict.no()
        if not want_witness:
            return Verdict.yes(None, "decided on the coverability graph")

    def on_new(g, j):
        if g.states[j][1] == goal:
            return ("finite", j)

    def on_edge(g, i, tr, j):
        m2, a2 = g.states[j]
        if a2[0] != k:
            return None
        seg = tr.c1
        node = i
        while node is not None:
            if _leq(g.states[node][0], m2) and seg | a2[1] == kw:
                return ("pump", node, i, tr)
            if g.parent[node] is None:
                break
            node, ptr = g.parent[node]
            seg = seg | ptr.c1
            if not seg <= kw:
                break
        return None

    g, hit = _bfs(m0, a0, trs, _inf_update, budget, on_new=on_new, on_edge=on_edge)
    if hit is not None:
        if hit[0] == "finite":
            return Verdict.yes(tuple(g.path(hit[1])))
        _, a, i, tr = hit
        prefix = g.path(a)
        cycle = g.path(i)[len(prefix):] + [tr.rid]
        return Verdict.yes(Lasso(tuple(prefix), tuple(cycle)))
    for scc, edges in _cycle_sccs(g, k, kw):
        start = min(scc)
        need = kw - g.states[start][1][1]
        return Verdict.yes(Lasso(tuple(g.path(start)), tuple(_closed_walk(scc, edges, start, need))))
    if exists:
        return Verdict.yes(None, "decided on the coverability graph; no concrete witness within budget")
    if g.complete:
        return Verdict.no()
    return Verdict.unknown("coverability graph and concrete search both exhausted their budget")
