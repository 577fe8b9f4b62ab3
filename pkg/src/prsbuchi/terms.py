"""Process terms modulo AC of parallel composition, associativity of
sequential composition and the empty-process identity.

Every term object is canonical by construction: build terms through
:func:`var`, :func:`par` and :func:`seq` (or :func:`canonicalize` for raw
nested tuples) and structural equality coincides with term equivalence.
"""
from __future__ import annotations

from collections import Counter
from itertools import combinations

ORDINARY = "ordinary"
Z_HAT_F = "z_hat_f"
Z_HAT_INF = "z_hat_inf"


class Term:
    """Base class of canonical process terms; equality is key equality."""

    __slots__ = ("key", "_hash", "size")

    def _init(self, key: str, size: int) -> None:
        self.key = key
        self._hash = hash(key)
        self.size = size

    def __eq__(self, other):
        return isinstance(other, Term) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"<{self}>"

    def variables(self) -> frozenset:
        raise NotImplementedError


class Empty(Term):
    __slots__ = ()

    def __init__(self):
        self._init("eps", 0)

    def __str__(self):
        return "eps"

    def variables(self):
        return frozenset()


class Var(Term):
    __slots__ = ("name", "kind")

    def __init__(self, name: str, kind: str = ORDINARY):
        self.name = name
        self.kind = kind
        self._init(name, 1)

    def __str__(self):
        return self.name

    def variables(self):
        return frozenset((self,))


class Par(Term):
    """Parallel composition; ``children`` is a sorted tuple of >= 2 non-Par terms."""

    __slots__ = ("children",)

    def __init__(self, children: tuple):
        self.children = children
        self._init("(" + "||".join(c.key for c in children) + ")",
                   sum(c.size for c in children))

    def __str__(self):
        return " || ".join(str(c) for c in self.children)

    def variables(self):
        out = frozenset()
        for c in self.children:
            out |= c.variables()
        return out


class Seq(Term):
    """Right-associated sequential composition ``head.tail``.

    ``head`` is a variable or a parallel composition. In ``head.tail`` only the
    suffix ``tail`` is active.
    """

    __slots__ = ("head", "tail")

    def __init__(self, head: Term, tail: Term):
        self.head = head
        self.tail = tail
        self._init(head.key + "." + tail.key, head.size + tail.size)

    def __str__(self):
        h = f"({self.head})" if isinstance(self.head, Par) else str(self.head)
        t = f"({self.tail})" if isinstance(self.tail, Par) else str(self.tail)
        return f"{h}.{t}"

    def variables(self):
        return self.head.variables() | self.tail.variables()


EPS = Empty()
Z_F = Var("^ZF", Z_HAT_F)
Z_INF = Var("^Zinf", Z_HAT_INF)


def var(name: str) -> Var:
    return Var(name)


def par(*terms: Term) -> Term:
    children = []
    for t in terms:
        if isinstance(t, Par):
            children.extend(t.children)
        elif t is not EPS and not isinstance(t, Empty):
            children.append(t)
    if not children:
        return EPS
    if len(children) == 1:
        return children[0]
    children.sort(key=lambda c: c.key)
    return Par(tuple(children))


def seq(*terms: Term) -> Term:
    out: Term = EPS
    for t in reversed(terms):
        out = _seq2(t, out)
    return out


def _seq2(a: Term, b: Term) -> Term:
    if isinstance(a, Empty):
        return b
    if isinstance(b, Empty):
        return a
    if isinstance(a, Seq):
        return Seq(a.head, _seq2(a.tail, b))
    return Seq(a, b)


def canonicalize(raw) -> Term:
    """Canonical form of a raw term.

    ``raw`` may be a :class:`Term` (possibly assembled by hand from the raw
    classes), a variable name, ``None``/``"eps"`` for the empty term, or a
    nested tuple ``("par", t1, t2, ...)`` / ``("seq", t1, t2, ...)``.
    """
    if raw is None or isinstance(raw, Empty) or raw == "eps":
        return EPS
    if isinstance(raw, str):
        return Var(raw)
    if isinstance(raw, Var):
        return raw
    if isinstance(raw, Par):
        return par(*(canonicalize(c) for c in raw.children))
    if isinstance(raw, Seq):
        return seq(canonicalize(raw.head), canonicalize(raw.tail))
    if isinstance(raw, tuple) and raw:
        op, *args = raw
        parts = [canonicalize(a) for a in args]
        if op == "par":
            return par(*parts)
        if op == "seq":
            return seq(*parts)
    raise TypeError(f"not a raw process term: {raw!r}")


def is_var(t: Term) -> bool:
    return isinstance(t, Var)


def is_var_par(t: Term) -> bool:
    """True for a variable or a parallel composition of variables."""
    if isinstance(t, Var):
        return True
    return isinstance(t, Par) and all(isinstance(c, Var) for c in t.children)


def par_children(t: Term) -> tuple:
    """Top-level parallel components of ``t`` (empty tuple for eps)."""
    if isinstance(t, Par):
        return t.children
    if isinstance(t, Empty):
        return ()
    return (t,)


def seq_cells(t: Term) -> list:
    """The cells ``c1, ..., cm`` of ``t = c1. ... .cm`` (head-first)."""
    cells = []
    while isinstance(t, Seq):
        cells.append(t.head)
        t = t.tail
    if not isinstance(t, Empty):
        cells.append(t)
    return cells


def is_normal_term(t: Term) -> bool:
    """t ::= X | t||t | X.t"""
    if isinstance(t, Var):
        return True
    if isinstance(t, Par):
        return all(is_normal_term(c) for c in t.children)
    if isinstance(t, Seq):
        return isinstance(t.head, Var) and is_normal_term(t.tail)
    return False


def sub_multisets(children: tuple, proper: bool = True):
    """Distinct non-empty sub-multisets of a sorted child tuple, as tuples."""
    seen = set()
    top = len(children) - (1 if proper else 0)
    for size in range(1, top + 1):
        for combo in combinations(children, size):
            if combo not in seen:
                seen.add(combo)
                yield combo


def sub_multisets_of_size(children: tuple, size: int):
    """Distinct sub-multisets of exactly ``size`` elements of a sorted tuple."""
    seen = set()
    for combo in combinations(children, size):
        if combo not in seen:
            seen.add(combo)
            yield combo


def multiset_minus(children: tuple, part: tuple):
    """``children - part`` as a tuple, or None if ``part`` is not included."""
    rest = Counter(children)
    rest.subtract(part)
    if any(v < 0 for v in rest.values()):
        return None
    return tuple(sorted(rest.elements(), key=lambda c: c.key))


def subterms(t: Term) -> frozenset:
    """SubTerms(t): the term itself plus the subterms of its active parts."""
    if isinstance(t, (Empty, Var)):
        return frozenset((t,))
    if isinstance(t, Seq):
        return subterms(t.tail) | {t}
    out = {t}
    for part in sub_multisets(t.children):
        out |= subterms(par(*part))
    return frozenset(out)


def is_subterm(u: Term, t: Term) -> bool:
    """``u in subterms(t)`` without enumerating the subterms."""
    if u == t:
        return True
    if isinstance(t, Seq):
        return is_subterm(u, t.tail)
    if not isinstance(t, Par):
        return False
    if isinstance(u, Par) and len(u.children) < len(t.children) \
            and multiset_minus(t.children, u.children) is not None:
        return True
    return any(is_subterm(u, c) for c in set(t.children))


def small_subterms(t: Term, limit: int) -> set:
    """The members of ``subterms(t)`` of size at most ``limit``."""
    out = {t} if t.size <= limit else set()
    if isinstance(t, Seq):
        out |= small_subterms(t.tail, limit)
    elif isinstance(t, Par):
        kids = t.children
        for size in range(2, min(limit, len(kids) - 1) + 1):
            for part in sub_multisets_of_size(kids, size):
                if sum(c.size for c in part) <= limit:
                    out.add(par(*part))
        for c in set(kids):
            out |= small_subterms(c, limit)
    return out


def substitute(t: Term, st: Term, new: Term) -> frozenset:
    """All terms ``t[st -> new]`` obtained by replacing one occurrence of ``st``."""
    if t == st:
        return frozenset((new,))
    if not is_subterm(st, t):
        return frozenset()
    if isinstance(t, Seq):
        return frozenset(seq(t.head, s) for s in substitute(t.tail, st, new))
    out = set()
    for part in sub_multisets(t.children):
        t1 = par(*part)
        if not is_subterm(st, t1):
            continue
        t2 = par(*multiset_minus(t.children, part))
        for s in substitute(t1, st, new):
            out.add(par(s, t2))
    return frozenset(out)


def seq_parts(t: Term) -> frozenset:
    """SEQ(t): the purely sequential threads of ``t``."""
    if isinstance(t, Empty):
        return frozenset()
    if isinstance(t, Var):
        return frozenset((t,))
    if isinstance(t, Seq):
        return frozenset(seq(t.head, s) for s in seq_parts(t.tail))
    out = frozenset()
    for c in t.children:
        out |= seq_parts(c)
    return out


def _check_sequential(t: Term) -> list:
    cells = seq_cells(t)
    if not cells or not all(isinstance(c, Var) for c in cells):
        raise ValueError(f"expected a non-empty sequential term, got {t}")
    return cells


def last(t: Term) -> Var:
    return _check_sequential(t)[-1]


def seq_concat(t: Term, u: Term) -> Term:
    """``t o u``: replace last(t) by ``u``."""
    cells = _check_sequential(t)
    _check_sequential(u)
    return seq(*cells[:-1], u)
