"""Labelled transitions, the action algebra, and the check that silent
transitions coincide with reductions.

Transitions are generated compositionally on canonical terms.  An input
or output leaf emits its label together with a hole: a fresh process
variable standing where the leaf's residual will go.  When two sibling
labels cancel to ``Eps`` the residuals are computed from the two leaves
and plugged into the holes, and the result is re-emitted as ``Tau``.
"""
from __future__ import annotations

import itertools
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .congruence import canonical
from .engine import Configuration, Engine, Flags
from .enumerate import closed_terms
from .subst import IDENTITY, Substitution, apply, plug
from .syntax import UPDATE_CHANNEL
from .terms import (
    NIL,
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
    free_names,
    size,
)
from .update import OutcomeKind, try_update

UP = Name(UPDATE_CHANNEL)


# -- actions -------------------------------------------------------------------


class Action:
    def names(self) -> set:
        return set()


@dataclass(frozen=True, order=True)
class Eps(Action):
    def __str__(self):
        return "eps"


@dataclass(frozen=True, order=True)
class Tau(Action):
    def __str__(self):
        return "tau"


@dataclass(frozen=True, order=True)
class In(Action):
    """Input on ``subject``; ``shape`` is the pattern's sort and arity."""

    subject: Name
    shape: tuple

    def names(self):
        return {self.subject}

    def __str__(self):
        sort, arity = self.shape
        return f"{self.subject}?<{sort}/{arity}>"


@dataclass(frozen=True, order=True)
class Out(Action):
    """Output on ``subject``; ``shape`` matches the receiving pattern's."""

    subject: Name
    shape: tuple
    payload: str = ""
    payload_names: frozenset = field(default=frozenset(), compare=False)

    def names(self):
        return {self.subject} | set(self.payload_names)

    def __str__(self):
        # the payload is the printed output term itself
        return self.payload or f"{self.subject}!"


@dataclass(frozen=True)
class ParComp(Action):
    """A multiset of two or more non-cancelling actions."""

    items: tuple

    def names(self):
        return set().union(*(a.names() for a in self.items))

    def __str__(self):
        return " | ".join(map(str, self.items))


@dataclass(frozen=True)
class SeqComp(Action):
    first: Action
    second: Action

    def names(self):
        return self.first.names() | self.second.names()

    def __str__(self):
        return f"({self.first}) + ({self.second})"


def _key(a: Action):
    return (type(a).__name__, str(a), repr(a))


def complementary(a: Action, b: Action) -> bool:
    if isinstance(a, In):
        a, b = b, a
    return isinstance(a, Out) and isinstance(b, In) and a.subject == b.subject and a.shape == b.shape


def par_action(*actions: Action) -> Action:
    """Parallel composition of actions, normalized.

    Flattens, drops ``Eps`` and cancels output/input pairs on the same
    subject and shape.  Cancellation works on the sorted multiset, so
    the result does not depend on how the composition was bracketed.
    """
    flat = []
    stack = list(actions)
    while stack:
        a = stack.pop()
        if isinstance(a, ParComp):
            stack.extend(a.items)
        elif not isinstance(a, Eps):
            flat.append(a)
    flat.sort(key=_key)
    outs = [a for a in flat if isinstance(a, Out)]
    ins = [a for a in flat if isinstance(a, In)]
    rest = [a for a in flat if not isinstance(a, (Out, In))]
    kept_outs = []
    for o in outs:
        for j, i in enumerate(ins):
            if complementary(o, i):
                del ins[j]
                break
        else:
            kept_outs.append(o)
    items = sorted(kept_outs + ins + rest, key=_key)
    if not items:
        return Eps()
    if len(items) == 1:
        return items[0]
    return ParComp(tuple(items))


def seq_action(a: Action, b: Action) -> Action:
    """``a`` then ``b``; two silent steps in sequence are one silent step."""
    if isinstance(a, Tau) and isinstance(b, Tau):
        return Tau()
    return SeqComp(a, b)


# -- transitions -----------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    source: Process
    label: Action
    target: Process
    instantiation: Substitution = IDENTITY
    rules: tuple = ()


@dataclass(frozen=True)
class _Open:
    """A derivation in progress: label, target with holes, and the leaf per hole."""

    label: Action
    target: Process
    hole: Optional[ProcessVar]
    leaf: Optional[Process]
    rules: tuple
    theta: Substitution = IDENTITY


def _in_shape(pat) -> tuple:
    if isinstance(pat, NamePat):
        return ("name", len(pat.binders))
    if isinstance(pat, ProcPat):
        return ("proc", 1)
    return ("loc", 1)


def residuals(out: Process, inp: Process):
    """What an output leaf and an input leaf become after they interact.

    Returns ``(out_fill, in_fill, theta, rule)``.
    """
    if isinstance(inp, UpdRecv):
        outcome = try_update(out, inp)
        if outcome.kind is OutcomeKind.UNMAT:
            return out, inp, IDENTITY, "T.Update.UnMat"
        return NIL, outcome.result_term, outcome.substitution, "T.Update." + outcome.kind.value
    pat = inp.pattern
    if isinstance(pat, NamePat):
        theta = Substitution.of(names=dict(zip(pat.binders, out.payloads)))
        rule = "T.In.Name"
    elif isinstance(pat, ProcPat):
        theta = Substitution.of(procs={pat.binder: out.payload})
        rule = "T.In.Proc"
    else:
        theta = Substitution.of(procs={pat.binder: out.body})
        rule = "T.In.Pass"
    body = apply(theta, inp.body)
    return NIL, (Par(inp, body) if inp.replicated else body), theta, rule


class _Generator:
    def __init__(self, flags: Flags):
        self.flags = flags
        self.counter = itertools.count()

    def hole(self) -> ProcessVar:
        return ProcessVar(f"%H{next(self.counter)}")

    def leaf(self, p, label, rule):
        h = self.hole()
        return [_Open(label, Var(h), h, p, (rule,))]

    def tr(self, p: Process) -> list[_Open]:
        if isinstance(p, OutName):
            return self.leaf(p, Out(p.subject, ("name", len(p.payloads)), str(p), frozenset(p.payloads)), "T.Out.Name")
        if isinstance(p, OutProc):
            return self.leaf(p, Out(p.subject, ("proc", 1), str(p), frozenset(free_names(p.payload))), "T.Out.Proc")
        if isinstance(p, UpdProv):
            return self.leaf(p, Out(UP, ("update", 2), str(p), frozenset(free_names(p))), "T.Update.Prv")
        if isinstance(p, Input):
            return self.leaf(p, In(p.pattern.subject, _in_shape(p.pattern)), "T.In")
        if isinstance(p, UpdRecv):
            return self.leaf(p, In(UP, ("update", 2)), "T.Update.Ok")
        if isinstance(p, Loc):
            out = self.leaf(p, Out(p.loc, ("loc", 1), str(p), frozenset(free_names(p))), "T.Out.Pass")
            out.extend(self.located(p))
            return out
        if isinstance(p, Restrict):
            res = []
            for t in self.tr(p.body):
                if p.binder in t.label.names():
                    continue
                res.append(_Open(t.label, Restrict(p.binder, t.target), t.hole, t.leaf, t.rules + ("T.Nu",), t.theta))
            return res
        if isinstance(p, Blocked):
            if not self.flags.allow_blocked_steps:
                return []
            return [
                _Open(t.label, Blocked(t.target), None, None, t.rules + ("T.Blk",), t.theta)
                for t in self.tr(p.body)
                if isinstance(t.label, Tau)
            ]
        if isinstance(p, Seq):
            res = [
                _Open(t.label, Seq(t.target, p.then), t.hole, t.leaf, t.rules + ("T.Seq.Fst",), t.theta)
                for t in self.tr(p.first)
                if not isinstance(t.label, Eps)
            ]
            if self.flags.seq_both:
                firsts = [t for t in self.tr(p.first) if isinstance(t.label, Tau)]
                seconds = [t for t in self.tr(p.then) if isinstance(t.label, Tau)]
                for a, b in itertools.product(firsts, seconds):
                    res.append(
                        _Open(seq_action(a.label, b.label), Seq(a.target, b.target), None, None, a.rules + b.rules + ("T.Seq.Both",), a.theta)
                    )
            return res
        if isinstance(p, Par):
            return self.parallel(p)
        return []

    def located(self, p: Loc) -> list[_Open]:
        body = p.body
        binders = []
        while isinstance(body, Restrict):
            binders.append(body.binder)
            body = body.body
        res = []
        for t in self.tr(body):
            if not isinstance(t.label, Tau):
                continue
            target = t.target
            for b in reversed(binders):
                target = Restrict(b, target)
            extra = ("T.Res",) if binders else ()
            res.append(_Open(t.label, Loc(p.loc, target), None, None, t.rules + extra + ("T.Pass",), t.theta))
        return res

    def parallel(self, p: Par) -> list[_Open]:
        left, right = self.tr(p.left), self.tr(p.right)
        res = []
        for t in left:
            if not isinstance(t.label, Eps):
                res.append(_Open(t.label, Par(t.target, p.right), t.hole, t.leaf, t.rules + ("T.Par.L",), t.theta))
        for t in right:
            if not isinstance(t.label, Eps):
                res.append(_Open(t.label, Par(p.left, t.target), t.hole, t.leaf, t.rules + ("T.Par.R",), t.theta))
        for a in left:
            for b in right:
                if a.hole is None or b.hole is None or not complementary(a.label, b.label):
                    continue
                if not isinstance(par_action(a.label, b.label), Eps):
                    continue
                o, i = (a, b) if isinstance(a.label, Out) else (b, a)
                out_fill, in_fill, theta, rule = residuals(o.leaf, i.leaf)
                target = plug(plug(Par(a.target, b.target), o.hole, out_fill), i.hole, in_fill)
                rules = a.rules + b.rules + (rule, "T.Comm")
                res.append(_Open(Eps(), target, None, None, rules, theta))
                res.append(_Open(Tau(), target, None, None, rules + ("T.Red",), theta))
        return res


def transitions(p: Process, flags: Flags = Flags()) -> list[Transition]:
    """All one-step transitions of ``p`` (taken up to congruence)."""
    canon = canonical(p)
    out = []
    for t in _Generator(flags).tr(canon):
        target = t.target
        if t.hole is not None:
            # an open input or output: the residual is the symbolic placeholder
            target = plug(target, t.hole, Var(ProcessVar("%" + "H")) if isinstance(t.label, In) else NIL)
        out.append(Transition(p, t.label, canonical(target), t.theta, t.rules))
    return out


def tau_successors(p: Process, flags: Flags = Flags()) -> set:
    return {t.target for t in transitions(p, flags) if isinstance(t.label, Tau)}


def tau_closure(p: Process, depth: int, flags: Flags = Flags(), size_bound: Optional[int] = None) -> set:
    """Terms reachable by at most ``depth`` silent transitions, canonicalized."""
    start = canonical(p)
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        q, d = frontier.popleft()
        if d >= depth or (size_bound is not None and size(q) > size_bound):
            continue
        for r in tau_successors(q, flags):
            if r not in seen:
                seen.add(r)
                frontier.append((r, d + 1))
    return seen


# -- correspondence ---------------------------------------------------------------


@dataclass
class Counterexample:
    term: Process
    only_reduction: list
    only_lts: list

    def __str__(self):
        lines = [f"term: {self.term}"]
        lines += [f"  reduction only: {q}" for q in self.only_reduction]
        lines += [f"  lts only: {q}" for q in self.only_lts]
        return "\n".join(lines)


@dataclass
class CorrespondenceReport:
    bound: int
    flags: Flags
    terms_checked: int
    transitions_compared: int
    counterexamples: list
    seconds: float
    depth: int = 0

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def summary(self) -> str:
        return (
            f"bound {self.bound}, closure depth {self.depth}: {self.terms_checked} terms, "
            f"{self.transitions_compared} successor pairs, {len(self.counterexamples)} counterexamples "
            f"({self.seconds:.1f}s)"
        )


class FlagMismatch(ValueError):
    pass


def correspondence_check(
    bound: int,
    flags: Flags = Flags(),
    lts_flags: Optional[Flags] = None,
    terms: Optional[Iterable[Process]] = None,
    depth: int = 3,
    size_bound: int = 12,
) -> CorrespondenceReport:
    """Compare silent transitions with reductions on every generated term.

    For each term the one-step successor sets must agree, and so must the
    closures up to ``depth`` steps.  Environment outputs are not silent,
    so that engine option is refused, as is any difference between the
    flags of the two sides.
    """
    lts_flags = flags if lts_flags is None else lts_flags
    if lts_flags != flags:
        raise FlagMismatch(f"the engine runs with {flags} but the transition system with {lts_flags}; both sides must agree")
    if flags.environment:
        raise FlagMismatch("environment outputs are visible actions, not silent ones; disable them for the check")
    if terms is None:
        terms = closed_terms(bound)
    engine = Engine(flags)
    start = time.perf_counter()
    checked = compared = 0
    bad = []
    cache_red: dict = {}
    cache_tau: dict = {}

    def red(q):
        if q not in cache_red:
            cache_red[q] = frozenset(engine.successors(q))
        return cache_red[q]

    def tau(q):
        if q not in cache_tau:
            cache_tau[q] = frozenset(tau_successors(q, flags))
        return cache_tau[q]

    for p in terms:
        checked += 1
        p = canonical(p)
        # closures in lockstep; a mismatch at any visited term is reported there
        seen = {p}
        frontier = deque([(p, 0)])
        while frontier:
            q, d = frontier.popleft()
            a, b = red(q), tau(q)
            compared += 1
            if a != b:
                bad.append(Counterexample(q, sorted(map(str, a - b)), sorted(map(str, b - a))))
                break
            if d >= depth or size(q) > size_bound:
                continue
            for r in a:
                if r not in seen:
                    seen.add(r)
                    frontier.append((r, d + 1))
    return CorrespondenceReport(bound, flags, checked, compared, bad, time.perf_counter() - start, depth)


def closure_pair(p: Process, depth: int, flags: Flags = Flags(), size_bound: int = 12):
    """Reduction-reachable and tau-closure sets for one term, side by side."""
    engine = Engine(flags)
    reach = engine.reachable(Configuration.of(p), depth, size_bound).terms
    return reach, tau_closure(p, depth, flags, size_bound)
