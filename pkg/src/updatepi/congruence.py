"""Structural congruence: a normalizer to canonical form and the induced equality.

Normalization runs in two passes.  The structural pass gives every binder
a unique internal name, hoists restrictions out of parallel, sequential
and blocked positions (never out of a location), flattens sequences,
drops neutral Nil elements, drops unused restrictions and extrudes
outputs from the head of a sequence.  The canonical pass then sorts
parallel components by a binder-independent key, orders each block of
hoisted restrictions by trying every permutation, and renames binders by
depth.  Two terms are congruent iff their canonical forms are equal.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .terms import (
    NIL,
    Blocked,
    Input,
    Loc,
    LocPat,
    Name,
    NamePat,
    Nil,
    OutName,
    OutProc,
    Par,
    Pattern,
    Process,
    ProcessVar,
    ProcPat,
    Restrict,
    Seq,
    UpdProv,
    UpdRecv,
    Var,
    free_names,
    free_vars,
    par,
    par_components,
    seq,
    seq_elements,
)

# a block of more hoisted binders than this is ordered heuristically
MAX_PERMUTED_BINDERS = 6

EXTRUDABLE = (OutName, OutProc, UpdProv, Loc)


@dataclass(frozen=True)
class CanonicalForm:
    term: Process

    def __str__(self):
        return str(self.term)


def normalize(p: Process) -> CanonicalForm:
    return CanonicalForm(canonical(p))


# canonical forms are memoized; the table is dropped wholesale when full
_CACHE: dict = {}
_CACHE_LIMIT = 200_000


def canonical(p: Process) -> Process:
    """The canonical representative of ``p``'s congruence class."""
    hit = _CACHE.get(p)
    if hit is not None:
        return hit
    s = _Structural()
    q = _Canonicalizer(s.close(p, {}, {})).run()
    if len(_CACHE) >= _CACHE_LIMIT:
        _CACHE.clear()
    _CACHE[p] = q
    _CACHE[q] = q
    return q


def struct_eq(p: Process, q: Process) -> bool:
    return canonical(p) == canonical(q)


def congruent_inputs(xi: Pattern, zeta: Pattern) -> bool:
    """Patterns of the same sort, subject and arity, binders aside."""
    return type(xi) is type(zeta) and xi.subject == zeta.subject and len(xi.binders) == len(zeta.binders)


# -- structural pass --------------------------------------------------------


class _Structural:
    def __init__(self):
        self.counter = 0

    def fresh_name(self) -> Name:
        self.counter += 1
        return Name(f"%{self.counter}")

    def fresh_var(self) -> ProcessVar:
        self.counter += 1
        return ProcessVar(f"%{self.counter}")

    def close(self, p, nenv, venv) -> Process:
        binders, comps = self.flat(p, nenv, venv)
        return self.wrap(binders, comps)

    @staticmethod
    def wrap(binders, comps) -> Process:
        body = par(*comps)
        if binders:
            used = free_names(body)
            for b in reversed(binders):
                if b in used:
                    body = Restrict(b, body)
        return body

    def flat(self, p, nenv, venv) -> tuple[list[Name], list[Process]]:
        """Hoisted binders and parallel components of ``p``."""
        if isinstance(p, Nil):
            return [], []
        if isinstance(p, Var):
            return [], [Var(venv.get(p.var, p.var))]
        if isinstance(p, Restrict):
            u = self.fresh_name()
            bs, cs = self.flat(p.body, {**nenv, p.binder: u}, venv)
            return [u] + bs, cs
        if isinstance(p, Par):
            b1, c1 = self.flat(p.left, nenv, venv)
            b2, c2 = self.flat(p.right, nenv, venv)
            return b1 + b2, c1 + c2
        if isinstance(p, Seq):
            return self.flat_seq(seq_elements(p), nenv, venv)
        if isinstance(p, Blocked):
            bs, cs = self.flat(p.body, nenv, venv)
            if not cs:
                return [], []
            return bs, [Blocked(par(*cs))]
        if isinstance(p, Loc):
            return [], [Loc(nenv.get(p.loc, p.loc), self.close(p.body, nenv, venv))]
        if isinstance(p, OutName):
            return [], [OutName(nenv.get(p.subject, p.subject), tuple(nenv.get(x, x) for x in p.payloads))]
        if isinstance(p, OutProc):
            return [], [OutProc(nenv.get(p.subject, p.subject), self.close(p.payload, nenv, venv))]
        if isinstance(p, UpdProv):
            return [], [UpdProv(nenv.get(p.loc, p.loc), self.close(p.payload, nenv, venv))]
        if isinstance(p, Input):
            pat = p.pattern
            subject = nenv.get(pat.subject, pat.subject)
            if isinstance(pat, NamePat):
                us = tuple(self.fresh_name() for _ in pat.binders)
                body = self.close(p.body, {**nenv, **dict(zip(pat.binders, us))}, venv)
                return [], [Input(NamePat(subject, us), p.replicated, body)]
            us = tuple(self.fresh_var() for _ in pat.binders)
            body = self.close(p.body, nenv, {**venv, **dict(zip(pat.binders, us))})
            newpat = ProcPat(subject, us) if isinstance(pat, ProcPat) else LocPat(subject, us[0])
            return [], [Input(newpat, p.replicated, body)]
        if isinstance(p, UpdRecv):
            u = self.fresh_var()
            venv2 = {**venv, p.binder: u}
            return [], [
                UpdRecv(
                    nenv.get(p.loc_pattern, p.loc_pattern),
                    u,
                    self.close(p.log, nenv, venv2),
                    self.close(p.body, nenv, venv2),
                )
            ]
        raise TypeError(p)

    def flat_seq(self, elements, nenv, venv):
        binders: list[Name] = []
        elems: list[list[Process]] = []
        for e in elements:
            bs, cs = self.flat(e, nenv, venv)
            binders += bs
            elems.append(cs)
        return binders, _chain(elems)


def _spliced(cs: list[Process]) -> Optional[list[list[Process]]]:
    """The elements of ``cs`` when it is a single sequence, else None."""
    if len(cs) == 1 and isinstance(cs[0], Seq):
        return [[] if isinstance(x, Nil) else par_components(x) for x in seq_elements(cs[0])]
    return None


def _chain(elems: list[list[Process]]) -> list[Process]:
    """Normal components of ``E1; ...; En`` given each element's components.

    The tail is normalized first.  Then ``0; T`` is ``T``, outputs leave
    the head (``(out | R); T`` is ``out | R; T``), and a head that is
    itself a sequence is spliced by associativity.  A trailing ``0`` is
    kept, since ``P; 0`` is not ``P``.
    """
    head = elems[0]
    inner = _spliced(head)
    if inner is not None:
        return _chain(inner + elems[1:])
    if len(elems) == 1:
        return head
    tail = _chain(elems[1:])
    if not head:
        return tail
    moved = [c for c in head if isinstance(c, EXTRUDABLE)]
    rest = [c for c in head if not isinstance(c, EXTRUDABLE)]
    if not rest:
        return moved + tail
    inner = _spliced(rest)
    if inner is not None:
        return moved + _chain(inner + [tail])
    later = seq_elements(tail[0]) if len(tail) == 1 and isinstance(tail[0], Seq) else [par(*tail)]
    return moved + [seq(par(*rest), *later)]


# -- canonical pass ---------------------------------------------------------


def _name_pool(taken: set[str], prefix: str):
    i = 0
    while True:
        cand = f"{prefix}{i}"
        if cand not in taken:
            yield cand
        i += 1


class _Canonicalizer:
    def __init__(self, term: Process):
        self.term = term
        free = {n.base for n in free_names(term)}
        fvars = {v.ident for v in free_vars(term)}
        self._npool_iter = _name_pool(free, "x")
        self._vpool_iter = _name_pool(fvars, "X")
        self._npool: list[Name] = []
        self._vpool: list[ProcessVar] = []

    def nname(self, level: int) -> Name:
        while len(self._npool) <= level:
            self._npool.append(Name(next(self._npool_iter)))
        return self._npool[level]

    def vname(self, level: int) -> ProcessVar:
        while len(self._vpool) <= level:
            self._vpool.append(ProcessVar(next(self._vpool_iter)))
        return self._vpool[level]

    def run(self) -> Process:
        return self.c(self.term, {}, {}, 0, 0)[1]

    # names

    def n(self, x: Name, nenv) -> tuple[str, Name]:
        lvl = nenv.get(x)
        if lvl is None:
            return str(x), x
        return f"#{lvl}", self.nname(lvl)

    def c(self, p, nenv, venv, nd, vd) -> tuple[str, Process]:
        if isinstance(p, Nil):
            return "0", NIL
        if isinstance(p, Var):
            lvl = venv.get(p.var)
            if lvl is None:
                return f"V{p.var}", p
            return f"V#{lvl}", Var(self.vname(lvl))
        if isinstance(p, Restrict):
            return self.scope(p, nenv, venv, nd, vd)
        if isinstance(p, Par):
            parts = sorted((self.c(q, nenv, venv, nd, vd) for q in par_components(p)), key=lambda e: e[0])
            return "P(" + ";".join(k for k, _ in parts) + ")", par(*(q for _, q in parts))
        if isinstance(p, Seq):
            parts = [self.c(q, nenv, venv, nd, vd) for q in seq_elements(p)]
            return "S(" + "/".join(k for k, _ in parts) + ")", seq(*(q for _, q in parts))
        if isinstance(p, Loc):
            kl, l = self.n(p.loc, nenv)
            kb, b = self.c(p.body, nenv, venv, nd, vd)
            return f"L{kl}[{kb}]", Loc(l, b)
        if isinstance(p, OutName):
            ks, s = self.n(p.subject, nenv)
            ps = [self.n(x, nenv) for x in p.payloads]
            return f"O{ks}(" + ",".join(k for k, _ in ps) + ")", OutName(s, tuple(x for _, x in ps))
        if isinstance(p, OutProc):
            ks, s = self.n(p.subject, nenv)
            kb, b = self.c(p.payload, nenv, venv, nd, vd)
            return f"Q{ks}{{{kb}}}", OutProc(s, b)
        if isinstance(p, UpdProv):
            ks, s = self.n(p.loc, nenv)
            kb, b = self.c(p.payload, nenv, venv, nd, vd)
            return f"U{ks}{{{kb}}}", UpdProv(s, b)
        if isinstance(p, Blocked):
            kb, b = self.c(p.body, nenv, venv, nd, vd)
            return f"B[{kb}]", Blocked(b)
        if isinstance(p, Input):
            pat = p.pattern
            ks, s = self.n(pat.subject, nenv)
            mode = "*" if p.replicated else ">"
            k = len(pat.binders)
            if isinstance(pat, NamePat):
                nenv2 = {**nenv, **{b: nd + i for i, b in enumerate(pat.binders)}}
                kb, b = self.c(p.body, nenv2, venv, nd + k, vd)
                newpat = NamePat(s, tuple(self.nname(nd + i) for i in range(k)))
                tag = "n"
            else:
                venv2 = {**venv, **{b: vd + i for i, b in enumerate(pat.binders)}}
                kb, b = self.c(p.body, nenv, venv2, nd, vd + k)
                vs = tuple(self.vname(vd + i) for i in range(k))
                newpat = ProcPat(s, vs) if isinstance(pat, ProcPat) else LocPat(s, vs[0])
                tag = "p" if isinstance(pat, ProcPat) else "l"
            return f"I{tag}{ks}/{k}{mode}{{{kb}}}", Input(newpat, p.replicated, b)
        if isinstance(p, UpdRecv):
            ks, s = self.n(p.loc_pattern, nenv)
            venv2 = {**venv, p.binder: vd}
            kr, r = self.c(p.log, nenv, venv2, nd, vd + 1)
            kb, b = self.c(p.body, nenv, venv2, nd, vd + 1)
            return f"R{ks}#{{{kr}}}*{{{kb}}}", UpdRecv(s, self.vname(vd), r, b)
        raise TypeError(p)

    def scope(self, p, nenv, venv, nd, vd):
        binders = []
        while isinstance(p, Restrict):
            binders.append(p.binder)
            p = p.body
        comps = par_components(p)
        k = len(binders)
        if k <= MAX_PERMUTED_BINDERS:
            orders = itertools.permutations(binders)
        else:
            orders = [self._heuristic_order(binders, comps, nenv, venv, nd, vd)]
        best = None
        for order in orders:
            nenv2 = {**nenv, **{b: nd + i for i, b in enumerate(order)}}
            parts = sorted((self.c(q, nenv2, venv, nd + k, vd) for q in comps), key=lambda e: e[0])
            key = f"N{k}(" + ";".join(kk for kk, _ in parts) + ")"
            if best is None or key < best[0]:
                best = (key, parts)
        key, parts = best
        body = par(*(q for _, q in parts))
        for i in reversed(range(k)):
            body = Restrict(self.nname(nd + i), body)
        return key, body

    def _heuristic_order(self, binders, comps, nenv, venv, nd, vd):
        # all block binders share one level, then number by first occurrence
        nenv2 = {**nenv, **{b: nd for b in binders}}
        keyed = sorted(comps, key=lambda q: self.c(q, nenv2, venv, nd + 1, vd)[0])
        order = []
        for q in keyed:
            for x in _names_in_order(q):
                if x in binders and x not in order:
                    order.append(x)
        return order + [b for b in binders if b not in order]


def _names_in_order(p):
    if isinstance(p, OutName):
        yield p.subject
        yield from p.payloads
    elif isinstance(p, Loc):
        yield p.loc
    elif isinstance(p, UpdProv):
        yield p.loc
    elif isinstance(p, OutProc):
        yield p.subject
    elif isinstance(p, Input):
        yield p.pattern.subject
    elif isinstance(p, UpdRecv):
        yield p.loc_pattern
    for c in p.children():
        yield from _names_in_order(c)
