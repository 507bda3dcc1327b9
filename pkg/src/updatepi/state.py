"""Visible state of a process and the matchability test between states."""
from __future__ import annotations

from collections import Counter

from .terms import (
    Blocked,
    Input,
    Loc,
    Nil,
    OutName,
    OutProc,
    Par,
    Process,
    Restrict,
    Seq,
    StateMultiset,
    UpdProv,
    UpdRecv,
    Var,
)


def state_of(p: Process) -> StateMultiset:
    """Multiset of output subjects and location names visible in ``p``.

    Carried processes (payloads, located bodies) contribute their own
    state; triggers contribute nothing; restricted names are hidden.
    """
    return StateMultiset.from_counter(_state(p))


def _state(p: Process) -> Counter:
    if isinstance(p, (Nil, Var, Input, UpdRecv)):
        return Counter()
    if isinstance(p, OutName):
        return Counter([p.subject])
    if isinstance(p, OutProc):
        c = _state(p.payload)
        c[p.subject] += 1
        return c
    if isinstance(p, Loc):
        c = _state(p.body)
        c[p.loc] += 1
        return c
    if isinstance(p, UpdProv):
        c = _state(p.payload)
        c[p.loc] += 1
        return c
    if isinstance(p, (Par, Seq)):
        a, b = p.children()
        return _state(a) + _state(b)
    if isinstance(p, Restrict):
        c = _state(p.body)
        c.pop(p.binder, None)
        return c
    if isinstance(p, Blocked):
        return _state(p.body)
    raise TypeError(p)


def match(delta: StateMultiset, delta2: StateMultiset) -> bool:
    """Multiset inclusion ``delta <= delta2``."""
    return delta.issubset(delta2)
