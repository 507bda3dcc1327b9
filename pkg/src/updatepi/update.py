"""Safe component updates: compatibility, version gating, the four update
outcomes, and rollback of failed updates."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .congruence import canonical
from .state import match, state_of
from .subst import Substitution, apply
from .syntax import UPDATE_CHANNEL
from .terms import (
    Blocked,
    Input,
    Loc,
    Name,
    NamePat,
    OutName,
    OutProc,
    Par,
    Process,
    ProcPat,
    Restrict,
    StateMultiset,
    UpdProv,
    UpdRecv,
    free_names,
)


class Polarity(enum.Enum):
    IN = "in"
    OUT = "out"


class Sort(enum.Enum):
    NAME = "name"
    PROC = "proc"
    LOC = "loc"


@dataclass(frozen=True, order=True)
class Interface:
    channel: str
    polarity: str
    arity: int
    sort: str


InterfaceSignature = frozenset


def interface_signature(p: Process) -> frozenset[Interface]:
    """The set of free-subject channel interfaces used anywhere in ``p``."""
    out: set[Interface] = set()
    _sig(p, frozenset(), out)
    return frozenset(out)


def _add(out, subject: Name, bound, polarity: Polarity, arity: int, sort: Sort):
    if subject not in bound:
        out.add(Interface(subject.base, polarity.value, arity, sort.value))


def _sig(p, bound, out):
    if isinstance(p, Restrict):
        _sig(p.body, bound | {p.binder}, out)
        return
    if isinstance(p, OutName):
        _add(out, p.subject, bound, Polarity.OUT, len(p.payloads), Sort.NAME)
    elif isinstance(p, OutProc):
        _add(out, p.subject, bound, Polarity.OUT, 1, Sort.PROC)
    elif isinstance(p, Loc):
        _add(out, p.loc, bound, Polarity.OUT, 1, Sort.LOC)
    elif isinstance(p, UpdProv):
        out.add(Interface(UPDATE_CHANNEL, Polarity.OUT.value, 2, Sort.LOC.value))
    elif isinstance(p, UpdRecv):
        out.add(Interface(UPDATE_CHANNEL, Polarity.IN.value, 2, Sort.LOC.value))
    elif isinstance(p, Input):
        pat = p.pattern
        if isinstance(pat, NamePat):
            _add(out, pat.subject, bound, Polarity.IN, len(pat.binders), Sort.NAME)
            _sig(p.body, bound | set(pat.binders), out)
            return
        sort = Sort.PROC if isinstance(pat, ProcPat) else Sort.LOC
        _add(out, pat.subject, bound, Polarity.IN, 1, sort)
    for c in p.children():
        _sig(c, bound, out)


def comp(p: Process, q: Process) -> bool:
    """Replacement ``p`` keeps every interface the replaced ``q`` exposes."""
    return interface_signature(q) <= interface_signature(p)


def version_gate(prov_loc: Name, recv_loc: Name) -> bool:
    """Does a provision for ``prov_loc`` apply to a receiver guarding ``recv_loc``?

    Only forward updates pass: a strictly larger version, or no versions
    on either side.
    """
    if prov_loc.base != recv_loc.base:
        return False
    if prov_loc.version is None and recv_loc.version is None:
        return True
    if prov_loc.version is None:
        return False
    if recv_loc.version is None:
        return True
    return prov_loc.version > recv_loc.version


class OutcomeKind(enum.Enum):
    OK = "Ok"
    UNMAT = "UnMat"
    REST = "Rest"
    FAIL = "Fail"


RULE_OF_KIND = {
    OutcomeKind.OK: "R.Update.Ok",
    OutcomeKind.UNMAT: "R.Update.UnMat",
    OutcomeKind.REST: "R.Update.Rest",
    OutcomeKind.FAIL: "R.Update.Fail",
}


@dataclass(frozen=True)
class UpdateOutcome:
    kind: OutcomeKind
    result_term: Process
    result_state: StateMultiset
    stored_log: Optional[Process]
    fired_rule: str
    # the pieces rollback needs
    old_component: Optional[Process] = None
    new_component: Optional[Process] = None
    substitution: Substitution = field(default_factory=Substitution)


def try_update(prov: UpdProv, recv: UpdRecv, ambient_state: Optional[StateMultiset] = None) -> UpdateOutcome:
    """Resolve a provision against a reception.

    ``result_term`` is what replaces the pair ``prov | recv``;
    ``result_state`` is ``ambient_state`` with the pair's contribution
    swapped for the result's.
    """
    if ambient_state is None:
        ambient_state = state_of(Par(prov, recv))
    before = state_of(Par(prov, recv))

    def finish(kind, term, log=None, old=None, new=None, theta=Substitution()):
        st = ambient_state.difference(before).union(state_of(term))
        return UpdateOutcome(kind, term, st, log, RULE_OF_KIND[kind], old, new, theta)

    if not version_gate(prov.loc, recv.loc_pattern):
        return finish(OutcomeKind.UNMAT, Par(prov, recv))
    component = recv.body
    if not comp(prov.payload, component.body):
        return finish(OutcomeKind.REST, recv)
    theta = Substitution.of(procs={recv.binder: prov.payload})
    updated = apply(theta, component)
    log = apply(theta, recv.log)
    # Everything visible in the old component or in the delivered package
    # must stay visible after the update (multiset max, not sum).
    old_state = StateMultiset.from_counter(state_of(component).counter() | state_of(prov.payload).counter())
    new_state = state_of(updated)
    if match(old_state, new_state):
        return finish(OutcomeKind.OK, Par(recv, Par(Blocked(log), updated)), log, component, updated, theta)
    return finish(OutcomeKind.FAIL, Par(recv, Par(log, Blocked(updated))), log, component, updated, theta)


class NothingToRecover(LookupError):
    pass


def closed_key(p: Process, bound=frozenset()) -> Process:
    """Canonical form of ``p`` with the names in ``bound`` closed off.

    Two occurrences of the same subterm under differently named binders
    get the same key.
    """
    for n in sorted(free_names(p) & set(bound), key=Name.sort_key):
        p = Restrict(n, p)
    return canonical(p)


@dataclass
class _Entry:
    kind: OutcomeKind
    blocked: Process
    log: Process
    component: Process
    consumed: bool = False


class RecoveryLedger:
    """Remembers blocks created by updates so failed ones can be rolled back.

    Ok outcomes are recorded too; their blocked logs are archives and
    refuse recovery.
    """

    def __init__(self):
        self.entries: list[_Entry] = []

    def register(self, outcome: UpdateOutcome, bound=frozenset()) -> None:
        if outcome.kind is OutcomeKind.FAIL:
            blocked = Blocked(outcome.new_component)
        elif outcome.kind is OutcomeKind.OK:
            blocked = Blocked(outcome.stored_log)
        else:
            return
        self.entries.append(
            _Entry(
                outcome.kind,
                closed_key(blocked, bound),
                closed_key(outcome.stored_log, bound),
                outcome.old_component,
            )
        )

    def find(self, blocked: Process, bound=frozenset()) -> _Entry:
        key = closed_key(blocked, bound)
        archived = False
        for e in self.entries:
            if e.blocked != key or e.consumed:
                continue
            if e.kind is OutcomeKind.FAIL:
                return e
            archived = True
        if archived:
            raise NothingToRecover(f"nothing to recover: {blocked} is an archived update log")
        raise NothingToRecover(f"nothing to recover for {blocked}")

    def recover(self, blocked: Process, recovery_log: Optional[Process] = None, bound=frozenset()) -> _Entry:
        entry = self.find(blocked, bound)
        if recovery_log is not None and closed_key(recovery_log, bound) != entry.log:
            raise NothingToRecover("nothing to recover: the log does not belong to this failed update")
        entry.consumed = True
        return entry


def recover(blocked: Process, recovery_log: Process, ledger: RecoveryLedger) -> Process:
    """Roll back the failed update that produced ``blocked``.

    Returns the component as it was before the update.  The ledger entry
    is consumed, so a second call for the same block raises.
    """
    return ledger.recover(blocked, recovery_log).component
