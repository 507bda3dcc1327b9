"""Capture-avoiding substitution of names for names and processes for variables."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .terms import (
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
    fresh_name,
    fresh_var,
)


@dataclass(frozen=True)
class Substitution:
    """Finite partial maps Name -> Name and ProcessVar -> Process.

    Identity entries are dropped on construction.
    """

    names: tuple[tuple[Name, Name], ...] = field(default=())
    procs: tuple[tuple[ProcessVar, Process], ...] = field(default=())

    def __post_init__(self):
        names = dict(self.names)
        procs = dict(self.procs)
        object.__setattr__(
            self, "names", tuple(sorted(((k, v) for k, v in names.items() if k != v), key=lambda e: e[0].sort_key()))
        )
        object.__setattr__(
            self,
            "procs",
            tuple(sorted(((k, v) for k, v in procs.items() if v != Var(k)), key=lambda e: e[0].ident)),
        )

    @classmethod
    def of(cls, names: Mapping[Name, Name] = None, procs: Mapping[ProcessVar, Process] = None) -> "Substitution":
        return cls(tuple((names or {}).items()), tuple((procs or {}).items()))

    @property
    def name_map(self) -> dict[Name, Name]:
        return dict(self.names)

    @property
    def proc_map(self) -> dict[ProcessVar, Process]:
        return dict(self.procs)

    def __bool__(self):
        return bool(self.names or self.procs)

    def range_names(self) -> set[Name]:
        out = {v for _, v in self.names}
        for _, p in self.procs:
            out |= free_names(p)
        return out

    def range_vars(self) -> set[ProcessVar]:
        out: set[ProcessVar] = set()
        for _, p in self.procs:
            out |= free_vars(p)
        return out

    def then(self, other: "Substitution") -> "Substitution":
        """Sequential composition: apply ``self`` first, then ``other``."""
        names = {k: other.name_map.get(v, v) for k, v in self.names}
        for k, v in other.names:
            names.setdefault(k, v)
        procs = {k: apply(other, v) for k, v in self.procs}
        for k, v in other.procs:
            procs.setdefault(k, v)
        return Substitution.of(names, procs)


IDENTITY = Substitution()


def apply(theta: Substitution, p: Process) -> Process:
    """Replace free occurrences in ``p`` according to ``theta``.

    A binder that would capture a free name or variable of the
    substitution's range is renamed first.
    """
    if not theta:
        return p
    return _apply(p, theta.name_map, theta.proc_map)


def _rn(n, nm):
    return nm.get(n, n)


def _range_names(nm, pm):
    out = set(nm.values())
    for q in pm.values():
        out |= free_names(q)
    return out


def _range_vars(pm):
    out = set()
    for q in pm.values():
        out |= free_vars(q)
    return out


def _bind_names(binders, body, nm, pm):
    """Shadow/rename name binders; returns (new binders, new maps)."""
    nm = {k: v for k, v in nm.items() if k not in binders}
    if not nm and not pm:
        return list(binders), nm, pm, False
    danger = _range_names(nm, pm)
    new = []
    renames = {}
    avoid = danger | free_names(body) | set(nm) | set(binders)
    for b in binders:
        if b in danger:
            f = fresh_name(avoid, b.base)
            avoid.add(f)
            renames[b] = f
            new.append(f)
        else:
            new.append(b)
    if renames:
        nm = {**nm, **renames}
    return new, nm, pm, True


def _bind_vars(binders, body_fvs, nm, pm):
    pm = {k: v for k, v in pm.items() if k not in binders}
    danger = _range_vars(pm)
    new = []
    renames = {}
    avoid = danger | body_fvs | set(pm) | set(binders)
    for b in binders:
        if b in danger:
            f = fresh_var(avoid, b.ident)
            avoid.add(f)
            renames[b] = Var(f)
            new.append(f)
        else:
            new.append(b)
    if renames:
        pm = {**pm, **renames}
    return new, nm, pm


def _apply(p, nm, pm):
    if not nm and not pm:
        return p
    if isinstance(p, Nil):
        return p
    if isinstance(p, Var):
        return pm.get(p.var, p)
    if isinstance(p, Restrict):
        (b,), nm2, pm2, _ = _bind_names([p.binder], p.body, nm, pm)
        return Restrict(b, _apply(p.body, nm2, pm2))
    if isinstance(p, Par):
        return Par(_apply(p.left, nm, pm), _apply(p.right, nm, pm))
    if isinstance(p, Seq):
        return Seq(_apply(p.first, nm, pm), _apply(p.then, nm, pm))
    if isinstance(p, Loc):
        return Loc(_rn(p.loc, nm), _apply(p.body, nm, pm))
    if isinstance(p, OutName):
        return OutName(_rn(p.subject, nm), tuple(_rn(x, nm) for x in p.payloads))
    if isinstance(p, OutProc):
        return OutProc(_rn(p.subject, nm), _apply(p.payload, nm, pm))
    if isinstance(p, Input):
        pat = p.pattern
        subject = _rn(pat.subject, nm)
        if isinstance(pat, NamePat):
            bs, nm2, pm2, _ = _bind_names(list(pat.binders), p.body, nm, pm)
            return Input(NamePat(subject, tuple(bs)), p.replicated, _apply(p.body, nm2, pm2))
        bs, nm2, pm2 = _bind_vars(list(pat.binders), free_vars(p.body), nm, pm)
        newpat = ProcPat(subject, tuple(bs)) if isinstance(pat, ProcPat) else LocPat(subject, bs[0])
        return Input(newpat, p.replicated, _apply(p.body, nm2, pm2))
    if isinstance(p, UpdProv):
        return UpdProv(_rn(p.loc, nm), _apply(p.payload, nm, pm))
    if isinstance(p, UpdRecv):
        (x,), nm2, pm2 = _bind_vars([p.binder], free_vars(p.log) | free_vars(p.body), nm, pm)
        return UpdRecv(_rn(p.loc_pattern, nm), x, _apply(p.log, nm2, pm2), _apply(p.body, nm2, pm2))
    if isinstance(p, Blocked):
        return Blocked(_apply(p.body, nm, pm))
    raise TypeError(p)


def plug(context: Process, hole: ProcessVar, filler: Process) -> Process:
    """Fill every occurrence of ``hole`` with ``filler``, capturing freely.

    This is context filling, not substitution: binders of ``context`` that
    enclose the hole do bind the filler's names.
    """
    if isinstance(context, Var):
        return filler if context.var == hole else context
    if isinstance(context, (Nil, OutName)):
        return context
    if isinstance(context, Restrict):
        return Restrict(context.binder, plug(context.body, hole, filler))
    if isinstance(context, Par):
        return Par(plug(context.left, hole, filler), plug(context.right, hole, filler))
    if isinstance(context, Seq):
        return Seq(plug(context.first, hole, filler), plug(context.then, hole, filler))
    if isinstance(context, Loc):
        return Loc(context.loc, plug(context.body, hole, filler))
    if isinstance(context, Blocked):
        return Blocked(plug(context.body, hole, filler))
    # holes never sit under prefixes or payloads
    return context
