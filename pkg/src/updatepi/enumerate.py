"""Term generators: exhaustive small-scope enumeration and random sampling.

The exhaustive generator works over a fixed alphabet: channels ``a`` and
``b``, the location ``l`` (at versions 1 and 2 where updates need them),
one bound name ``x`` and one process variable ``X``.  Size counts every
constructor except ``0``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Optional

from .congruence import canonical
from .terms import (
    NIL,
    REPLICATED,
    ONCE,
    Blocked,
    Input,
    Loc,
    LocPat,
    Name,
    NamePat,
    OutName,
    OutProc,
    Par,
    Process,
    ProcessVar,
    ProcPat,
    Restrict,
    Seq,
    UpdProv,
    UpdRecv,
    Var,
    par_components,
)

A, B = Name("a"), Name("b")
L = Name("l")
L1, L2 = Name("l", 1), Name("l", 2)
XN = Name("x")
XV = ProcessVar("X")


@dataclass(frozen=True)
class Alphabet:
    """Which constructors the exhaustive generator may use."""

    label: str
    names: bool = True  # a!(m) outputs and a?(x) inputs
    restrict: bool = False
    higher_order: bool = False  # b!{P}, b?(X), X
    located: bool = False  # l[P]
    passivation: bool = False  # l?[X]
    update: bool = False  # provisions at l@1 and l@2, receptions at l@1
    blocked: bool = False
    replicated: bool = True
    sequence: bool = True


FULL = Alphabet("full", restrict=True, higher_order=True, located=True, passivation=True, update=True, blocked=True)

FRAGMENTS = (
    Alphabet("names", restrict=True),
    Alphabet("higher-order", names=False, higher_order=True),
    Alphabet("locality", restrict=True, located=True, passivation=True, replicated=False),
    Alphabet("update", names=False, update=True, blocked=True, replicated=False),
)


class _Enumerator:
    """Congruence classes of terms of each exact size over an alphabet.

    Channel ``a`` carries names and channel ``b`` carries processes, so
    every output has exactly one matching input shape.  Each level keeps
    one canonical representative per class and larger terms are built
    from those.  Restrictions are only generated where the normal form
    keeps them (at the top of a scope), and sequences never start with
    an output, which the normal form would extrude.
    """

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.levels: dict = {}
        self.comps: dict = {}
        self.rank: dict = {}
        # classes already produced at a smaller size, per scope kind; the
        # normal form can shrink a term (unused restrictions vanish)
        self.seen: dict = {}

    def terms(self, n: int, bn: bool, bv: bool) -> list[Process]:
        key = (n, bn, bv)
        if key not in self.levels:
            self.levels[key] = self._build(n, bn, bv)
        return self.levels[key]

    def components(self, n, bn, bv):
        """Classes of size ``n`` that are neither parallel nor restricted."""
        key = (n, bn, bv)
        if key not in self.comps:
            self.comps[key] = [p for p in self.terms(n, bn, bv) if not isinstance(p, (Par, Restrict))]
        return self.comps[key]

    def _build(self, n, bn, bv):
        ab = self.alphabet
        for k in range(n):
            self.terms(k, bn, bv)  # smaller classes first, so ``seen`` is complete
        seen = self.seen.setdefault((bn, bv), set())
        if n == 0:
            seen.add(NIL)
            return [NIL]
        found: dict = {}

        def add(p):
            c = canonical(p)
            if c not in found and c not in seen:
                found[c] = c

        names = (A, B, XN) if bn else (A, B)
        modes = (ONCE, REPLICATED) if ab.replicated else (ONCE,)
        if n == 1:
            if bv:
                add(Var(XV))
            for m in names:
                add(OutName(A, (m,)))
                if bn:
                    add(OutName(XN, (m,)))
        k = n - 1
        if ab.restrict:
            for body in self.terms(k, True, bv):
                add(Restrict(XN, body))
        for body in self.terms(k, bn, bv):
            if ab.located:
                add(Loc(L, body))
            if ab.higher_order:
                add(OutProc(B, body))
            if ab.update:
                add(UpdProv(L1, body))
                add(UpdProv(L2, body))
            if ab.blocked and body is not NIL:
                add(Blocked(body))
        for mode in modes:
            if ab.names:
                for body in self.terms(k, True, bv):
                    add(Input(NamePat(A, (XN,)), mode, body))
            for body in self.terms(k, bn, True):
                if ab.higher_order:
                    add(Input(ProcPat(B, (XV,)), mode, body))
                if ab.passivation:
                    add(Input(LocPat(L, XV), mode, body))
        if ab.update and n >= 2:
            for j in range(0, n - 1):
                for log in self.terms(j, bn, True):
                    for body in self.terms(n - 2 - j, bn, True):
                        add(UpdRecv(L1, XV, log, Loc(L1, body)))
        # each multiset of components is built once, smallest component first
        for i in range(1, n - 1):
            rest = [q for q in self.terms(n - 1 - i, bn, bv) if not isinstance(q, Restrict) and q is not NIL]
            for p in self.components(i, bn, bv):
                rank = self.rank[p]
                for q in rest:
                    if all(self.rank.get(c, rank) >= rank for c in par_components(q)):
                        add(Par(p, q))
        if ab.sequence:
            for i in range(1, n - 1):
                rest = [q for q in self.terms(n - 1 - i, bn, bv) if not isinstance(q, Restrict)]
                for p in self.components(i, bn, bv):
                    if isinstance(p, (OutName, OutProc, Loc, UpdProv, Seq)):
                        continue
                    for q in rest:
                        add(Seq(p, q))
        out = list(found.values())
        seen.update(out)
        for c in out:
            self.rank.setdefault(c, len(self.rank))
        return out


_ENUMERATORS: dict = {}


def _enumerator(alphabet: Alphabet) -> _Enumerator:
    if alphabet not in _ENUMERATORS:
        _ENUMERATORS[alphabet] = _Enumerator(alphabet)
    return _ENUMERATORS[alphabet]


def closed_terms(bound: int, alphabet: Alphabet = FULL) -> list[Process]:
    """Closed terms of at most ``bound`` constructors, one per congruence class."""
    en = _enumerator(alphabet)
    out = []
    for n in range(0, bound + 1):
        out.extend(en.terms(n, False, False))
    return out


# -- random terms ------------------------------------------------------------------

_NAME_POOL = ["a", "b", "c", "log", "ok", "n"]
_LOC_POOL = ["l", "k"]


class RandomTerms:
    """Random well-scoped terms for property tests and round-trip checks.

    With ``reactive`` set, names come from two channels and one location
    and every name tuple has length one, so outputs usually find a
    matching input.
    """

    def __init__(self, seed: int = 0, closed: bool = True, reactive: bool = False):
        self.rng = random.Random(seed)
        self.closed = closed
        self.reactive = reactive
        self._k = 0

    def name(self, scope) -> Name:
        r = self.rng
        if scope and r.random() < 0.4:
            return r.choice(scope)
        if self.reactive:
            return Name(r.choice(("a", "b")))
        base = r.choice(_NAME_POOL)
        return Name(base, r.choice([None, None, 1, 2]) if r.random() < 0.2 else None)

    def arity(self, low=0) -> int:
        return 1 if self.reactive else self.rng.randrange(low, 3)

    def loc(self, versioned=False) -> Name:
        if self.reactive:
            return Name("l", self.rng.choice([1, 2]) if versioned else None)
        base = self.rng.choice(_LOC_POOL)
        v = self.rng.choice([1, 2, 3]) if versioned or self.rng.random() < 0.3 else None
        return Name(base, v)

    def fresh(self, prefix="x") -> str:
        self._k += 1
        return f"{prefix}{self.rng.randrange(3)}"

    def term(self, depth: int = 4, names=(), vars=()) -> Process:
        r = self.rng
        names, vars = list(names), list(vars)
        if depth <= 0 or r.random() < 0.15:
            leaves = ["nil", "out"]
            if vars or not self.closed:
                leaves.append("var")
            kind = r.choice(leaves)
            if kind == "nil":
                return NIL
            if kind == "var":
                return Var(r.choice(vars) if vars and (self.closed or r.random() < 0.7) else ProcessVar("Y"))
            return OutName(self.name(names), tuple(self.name(names) for _ in range(self.arity())))
        d = depth - 1
        kind = r.choice(
            ["par", "par", "seq", "new", "loc", "outp", "in", "inp", "pass", "prov", "recv", "blk", "out"]
        )
        if kind == "par":
            return Par(self.term(d, names, vars), self.term(d, names, vars))
        if kind == "seq":
            return Seq(self.term(d, names, vars), self.term(d, names, vars))
        if kind == "new":
            x = Name(self.fresh())
            return Restrict(x, self.term(d, names + [x], vars))
        if kind == "loc":
            return Loc(self.loc(), self.term(d, names, vars))
        if kind == "outp":
            return OutProc(self.name(names), self.term(d, names, vars))
        if kind == "in":
            k = self.arity(1)
            bs = tuple(dict.fromkeys(Name(self.fresh("y")) for _ in range(k)))
            return Input(NamePat(self.name(names), bs), r.random() < 0.3, self.term(d, names + list(bs), vars))
        if kind in ("inp", "pass"):
            x = ProcessVar(self.fresh("X"))
            body = self.term(d, names, vars + [x])
            pat = ProcPat(self.name(names), (x,)) if kind == "inp" else LocPat(self.loc(), x)
            return Input(pat, r.random() < 0.3, body)
        if kind == "prov":
            return UpdProv(self.loc(versioned=True), self.term(d, names, vars))
        if kind == "recv":
            x = ProcessVar(self.fresh("X"))
            loc = self.loc(versioned=True)
            return UpdRecv(loc, x, self.term(d - 1, names, vars + [x]), Loc(loc, self.term(d - 1, names, vars + [x])))
        if kind == "blk":
            return Blocked(self.term(d, names, vars))
        return OutName(self.name(names), tuple(self.name(names) for _ in range(self.arity())))


def random_terms(count: int, seed: int = 0, depth: int = 4, closed: bool = True, reactive: bool = False) -> list[Process]:
    gen = RandomTerms(seed, closed, reactive)
    return [gen.term(depth) for _ in range(count)]
