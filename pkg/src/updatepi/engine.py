"""Reduction engine: redex enumeration over state-annotated configurations,
step application with an append-only trace, scheduling, bounded
exploration and recovery of failed updates.

The engine works on canonical forms.  Positions are paths of child
indices into the canonical term: ``Par`` and ``Seq`` use 0/1 for their
two children, every single-child node (restriction, location, block)
uses 0.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .congruence import canonical
from .state import state_of
from .subst import IDENTITY, Substitution, apply
from .terms import (
    NIL,
    Blocked,
    Input,
    Loc,
    LocPat,
    NamePat,
    Nil,
    OutName,
    OutProc,
    Par,
    Process,
    ProcPat,
    Restrict,
    Seq,
    StateMultiset,
    UpdProv,
    UpdRecv,
    alpha_eq,
    free_names,
    par_components,
    size,
)
from .update import NothingToRecover, OutcomeKind, RecoveryLedger, UpdateOutcome, closed_key, try_update

Path = tuple[int, ...]

OUTPUTS = (OutName, OutProc, Loc, UpdProv)
INPUTS = (Input, UpdRecv)

ENVIRONMENT_RULE = {OutName: "R.Out.Name", OutProc: "R.Out.Proc", Loc: "R.Out.Pass", UpdProv: "R.Update.Prv"}

RULES = (
    "R.Out.Name",
    "R.Out.Proc",
    "R.Out.Pass",
    "R.Update.Prv",
    "R.In.Name",
    "R.In.Proc",
    "R.In.Pass",
    "R.Comm",
    "R.Par.L",
    "R.Par.R",
    "R.Seq.Fst",
    "R.Seq.Both",
    "R.Res",
    "R.Blk",
    "R.Eqv",
    "R.Alpha",
    "R.Exec",
    "R.Update.Ok",
    "R.Update.UnMat",
    "R.Update.Rest",
    "R.Update.Fail",
    "Recover",
    "Unblock",
)


class EngineError(Exception):
    pass


class StaleStepError(EngineError):
    pass


@dataclass(frozen=True)
class Flags:
    """Optional readings of the reduction rules.

    ``allow_blocked_steps`` lets blocked bodies reduce internally,
    ``seq_both`` lets later sequence elements step together with the
    first one, and ``environment`` lets top-level outputs with free
    subjects be consumed by the environment.
    """

    allow_blocked_steps: bool = False
    seq_both: bool = False
    environment: bool = False


@dataclass(frozen=True)
class Configuration:
    term: Process
    state: StateMultiset

    def __post_init__(self):
        if self.state != state_of(self.term):
            raise EngineError("configuration state disagrees with the state of its term")

    @classmethod
    def of(cls, term: Process) -> "Configuration":
        return cls(term, state_of(term))


@dataclass(frozen=True)
class StepRecord:
    rule: str
    pre_term: Process
    post_term: Process
    pre_state: StateMultiset
    post_state: StateMultiset
    position: Path
    substitution: Substitution = IDENTITY
    context: tuple[str, ...] = ()
    partner: Optional[Path] = None
    # bookkeeping that does not travel through trace files
    replacements: tuple = field(default=(), compare=False, repr=False)
    outcomes: tuple = field(default=(), compare=False, repr=False)

    @property
    def consumed(self) -> StateMultiset:
        return self.pre_state.difference(self.post_state)

    @property
    def produced(self) -> StateMultiset:
        return self.post_state.difference(self.pre_state)

    def describe(self) -> str:
        pos = ".".join(map(str, self.position)) or "root"
        extra = f" with {'.'.join(map(str, self.partner)) or 'root'}" if self.partner is not None else ""
        return f"{self.rule} at {pos}{extra}"


# -- paths -------------------------------------------------------------------


def subterm_at(p: Process, path: Path) -> Process:
    for i in path:
        kids = p.children() if not isinstance(p, (Input, UpdRecv, OutProc, UpdProv)) else ()
        if i >= len(kids):
            raise EngineError(f"no subterm at position {'.'.join(map(str, path))}")
        p = kids[i]
    return p


def _rebuild(p: Process, i: int, new: Process) -> Process:
    if isinstance(p, Par):
        return Par(new, p.right) if i == 0 else Par(p.left, new)
    if isinstance(p, Seq):
        return Seq(new, p.then) if i == 0 else Seq(p.first, new)
    if isinstance(p, Restrict):
        return Restrict(p.binder, new)
    if isinstance(p, Loc):
        return Loc(p.loc, new)
    if isinstance(p, Blocked):
        return Blocked(new)
    raise EngineError(f"cannot descend into {type(p).__name__}")


def replace_at(p: Process, path: Path, new: Process) -> Process:
    if not path:
        return new
    child = subterm_at(p, path[:1])
    return _rebuild(p, path[0], replace_at(child, path[1:], new))


def bound_along(p: Process, path: Path) -> frozenset:
    """Names bound by restrictions enclosing ``path``."""
    out = set()
    for i in path:
        if isinstance(p, Restrict):
            out.add(p.binder)
        p = subterm_at(p, (i,))
    return frozenset(out)


# -- redex discovery -----------------------------------------------------------


@dataclass(frozen=True)
class _Leaf:
    path: Path
    term: Process
    tags: tuple[str, ...]
    bound: frozenset


@dataclass
class _Raw:
    rule: str
    position: Path
    replacements: tuple
    context: tuple[str, ...]
    substitution: Substitution = IDENTITY
    partner: Optional[Path] = None
    outcomes: tuple = ()


def _dedupe(tags):
    seen = []
    for t in tags:
        if t not in seen:
            seen.append(t)
    return tuple(seen)


def _seq_elements(p: Process, path: Path):
    if isinstance(p, Seq):
        return _seq_elements(p.first, path + (0,)) + _seq_elements(p.then, path + (1,))
    return [(path, p)]


def _leftmost_innermost(path: Path):
    return tuple(path) + (1 << 30,)


class _Scanner:
    def __init__(self, flags: Flags):
        self.flags = flags

    def region(self, p, path, tags, bound, out, in_chain=False, loc_top=False):
        leaves, nested, chains = out
        if isinstance(p, Restrict):
            tag = "R.Res" if loc_top else "R.Exec"
            self.region(p.body, path + (0,), tags + (tag,), bound | {p.binder}, out, loc_top=loc_top)
        elif isinstance(p, Par):
            self.region(p.left, path + (0,), tags + ("R.Par.L",), bound, out)
            self.region(p.right, path + (1,), tags + ("R.Par.R",), bound, out)
        elif isinstance(p, Seq):
            if self.flags.seq_both and not in_chain:
                chains.append((path, p, tags, bound))
            self.region(p.first, path + (0,), tags + ("R.Seq.Fst",), bound, out, in_chain=True)
        elif isinstance(p, Loc):
            leaves.append(_Leaf(path, p, tags, bound))
            nested.append((path + (0,), p.body, tags + ("R.Exec",), bound, True))
        elif isinstance(p, Blocked):
            if self.flags.allow_blocked_steps:
                nested.append((path + (0,), p.body, tags + ("R.Blk",), bound, False))
        elif isinstance(p, OUTPUTS + INPUTS):
            leaves.append(_Leaf(path, p, tags, bound))

    def steps(self, p, path=(), tags=(), bound=frozenset(), root=False, loc_top=False) -> list[_Raw]:
        leaves, nested, chains = [], [], []
        self.region(p, path, tags, bound, (leaves, nested, chains), loc_top=loc_top)
        raws = []
        outs = [l for l in leaves if isinstance(l.term, OUTPUTS)]
        ins = [l for l in leaves if isinstance(l.term, INPUTS)]
        for i in ins:
            for o in outs:
                r = self.pair(o, i)
                if r is not None:
                    raws.append(r)
        for npath, body, ntags, nbound, is_loc in nested:
            raws.extend(self.steps(body, npath, ntags, nbound, loc_top=is_loc))
        for cpath, node, ctags, cbound in chains:
            raws.extend(self.seq_both(cpath, node, ctags, cbound))
        if root and self.flags.environment:
            for o in outs:
                if self._subject(o.term) not in o.bound:
                    rule = ENVIRONMENT_RULE[type(o.term)]
                    raws.append(_Raw(rule, o.path, ((o.path, NIL),), _dedupe(o.tags)))
        return raws

    @staticmethod
    def _subject(t):
        if isinstance(t, (OutName, OutProc)):
            return t.subject
        return t.loc

    @staticmethod
    def _context(o: _Leaf, i: _Leaf):
        k = 0
        while k < min(len(o.path), len(i.path)) and o.path[k] == i.path[k]:
            k += 1
        below = [t for t in o.tags[k:] + i.tags[k:] if t not in ("R.Par.L", "R.Par.R")]
        return _dedupe(i.tags[:k] + ("R.Comm",) + tuple(below))

    def pair(self, o: _Leaf, i: _Leaf) -> Optional[_Raw]:
        out, inp = o.term, i.term
        ctx = self._context(o, i)
        if isinstance(inp, UpdRecv):
            if not isinstance(out, UpdProv):
                return None
            outcome = try_update(out, inp)
            if outcome.kind is OutcomeKind.UNMAT:
                reps = ()
            else:
                reps = ((o.path, NIL), (i.path, outcome.result_term))
            return _Raw(outcome.fired_rule, i.path, reps, ctx, outcome.substitution, o.path, ((outcome, i.bound),))
        if isinstance(out, UpdProv):
            return None
        pat = inp.pattern
        if pat.subject != self._subject(out):
            return None
        if isinstance(pat, NamePat) and isinstance(out, OutName):
            if len(pat.binders) != len(out.payloads):
                return None
            theta = Substitution.of(names=dict(zip(pat.binders, out.payloads)))
            rule = "R.In.Name"
        elif isinstance(pat, ProcPat) and isinstance(out, OutProc):
            theta = Substitution.of(procs={pat.binder: out.payload})
            rule = "R.In.Proc"
        elif isinstance(pat, LocPat) and isinstance(out, Loc):
            theta = Substitution.of(procs={pat.binder: out.body})
            rule = "R.In.Pass"
        else:
            return None
        body = apply(theta, inp.body)
        fill = Par(inp, body) if inp.replicated else body
        return _Raw(rule, i.path, ((o.path, NIL), (i.path, fill)), ctx, theta, o.path)

    def seq_both(self, path, node, tags, bound) -> list[_Raw]:
        elems = _seq_elements(node, path)
        per = []
        for epath, e in elems:
            etags = tags + tuple("R.Seq.Fst" for _ in epath[len(path) :])
            per.append(self.steps(e, epath, etags, bound))
        if not per[0]:
            return []
        out = []
        n = len(elems)
        for mask in range(1, 1 << (n - 1)):
            chosen = [0] + [k + 1 for k in range(n - 1) if mask >> k & 1]
            if any(not per[k] for k in chosen):
                continue
            combos = [[]]
            for k in chosen:
                combos = [c + [s] for c in combos for s in per[k]]
            for combo in combos:
                reps = tuple(r for s in combo for r in s.replacements)
                outcomes = tuple(oc for s in combo for oc in s.outcomes)
                ctx = _dedupe(tags + ("R.Seq.Both",) + tuple(t for s in combo for t in s.context[len(tags) :]))
                out.append(_Raw("R.Seq.Both", path, reps, ctx, combo[0].substitution, None, outcomes))
        return out


# -- schedules -----------------------------------------------------------------


@dataclass(frozen=True)
class First:
    """Always fire the leftmost-innermost redex."""


@dataclass(frozen=True)
class Random:
    seed: int = 0


Policy = Union[First, Random, Callable[[Configuration, list], Optional[int]]]


@dataclass
class Reachability:
    configurations: set
    truncated: bool

    @property
    def terms(self) -> set:
        return {c.term for c in self.configurations}


class Engine:
    """One engine per thread of control; the trace is append-only."""

    def __init__(self, flags: Flags = Flags()):
        self.flags = flags
        self.trace: list[StepRecord] = []
        self.ledger = RecoveryLedger()
        self._scanner = _Scanner(flags)

    # enumeration

    def enumerate_steps(self, c: Configuration) -> list[StepRecord]:
        canon = canonical(c.term)
        lead = ()
        if canon != c.term:
            lead = ("R.Alpha",) if alpha_eq(canon, c.term) else ("R.Eqv",)
        raws = self._scanner.steps(canon, root=True)
        records = []
        for r in raws:
            post = canon
            for path, new in r.replacements:
                post = replace_at(post, path, new)
            post = canonical(post)
            records.append(
                StepRecord(
                    rule=r.rule,
                    pre_term=c.term,
                    post_term=post,
                    pre_state=c.state,
                    post_state=state_of(post),
                    position=r.position,
                    substitution=r.substitution,
                    context=_dedupe(lead + r.context),
                    partner=r.partner,
                    replacements=r.replacements,
                    outcomes=r.outcomes,
                )
            )
        records.sort(key=lambda s: (_leftmost_innermost(s.position), _leftmost_innermost(s.partner or ()), s.rule))
        return records

    def successors(self, term: Process) -> set:
        """Canonical one-step successors of ``term``."""
        return {s.post_term for s in self.enumerate_steps(Configuration.of(term))}

    # application

    def apply_step(self, c: Configuration, s: StepRecord) -> Configuration:
        if canonical(c.term) != canonical(s.pre_term):
            raise StaleStepError("step was enumerated for a different term")
        for outcome, bound in s.outcomes:
            self.ledger.register(outcome, bound)
        if s.post_state != state_of(s.post_term):
            raise EngineError("step record violates the derived-state invariant")
        self.trace.append(s)
        return Configuration(s.post_term, s.post_state)

    def run(self, c: Configuration, fuel: int, policy: Policy = First()):
        if fuel < 0:
            raise ValueError("fuel must be nonnegative")
        rng = random.Random(policy.seed) if isinstance(policy, Random) else None
        taken = []
        for _ in range(fuel):
            steps = self.enumerate_steps(c)
            if not steps:
                break
            if isinstance(policy, First):
                idx = 0
            elif rng is not None:
                idx = rng.randrange(len(steps))
            else:
                idx = policy(c, steps)
                if idx is None:
                    break
            c = self.apply_step(c, steps[idx])
            taken.append(steps[idx])
        return c, taken

    # exploration

    def reachable(self, c: Configuration, depth_bound: int, size_bound: int) -> Reachability:
        start = canonical(c.term)
        seen = {start}
        truncated = False
        frontier = deque([(start, 0)])
        while frontier:
            term, d = frontier.popleft()
            if size(term) > size_bound:
                truncated = True
                continue
            succ = self.successors(term)
            if d >= depth_bound:
                if succ - seen:
                    truncated = True
                continue
            for q in succ:
                if q not in seen:
                    seen.add(q)
                    frontier.append((q, d + 1))
        return Reachability({Configuration.of(t) for t in seen}, truncated)

    # recovery

    def blocked_positions(self, c: Configuration) -> list[Path]:
        """Paths of blocked components in the canonical term, outermost first."""
        out = []

        def walk(p, path):
            if isinstance(p, Blocked):
                out.append(path)
                return
            if isinstance(p, (Restrict, Par, Seq, Loc)):
                for i, ch in enumerate(p.children()):
                    walk(ch, path + (i,))

        walk(canonical(c.term), ())
        return out

    def recover_block(self, c: Configuration, path: Path) -> Configuration:
        """Roll back the failed update whose blocked component sits at ``path``.

        The blocked component and the still-present pieces of its activated
        log are removed; the pre-update component survives inside the
        reception's template.
        """
        canon = canonical(c.term)
        try:
            node = subterm_at(canon, path)
        except EngineError:
            node = None
        if not isinstance(node, Blocked):
            raise NothingToRecover(f"nothing to recover: no blocked process at {'.'.join(map(str, path)) or 'root'}")
        bound = bound_along(canon, path)
        entry = self.ledger.recover(node, None, bound)
        post = replace_at(canon, path, NIL)
        post = self._remove_log(post, path, entry.log)
        post = canonical(post)
        record = StepRecord(
            rule="Recover",
            pre_term=c.term,
            post_term=post,
            pre_state=c.state,
            post_state=state_of(post),
            position=path,
            context=(),
        )
        self.trace.append(record)
        return Configuration(post, record.post_state)

    @staticmethod
    def _remove_log(term: Process, path: Path, log_key: Process) -> Process:
        # strip the key's own restrictions, then look for each component
        binders = []
        body = log_key
        while isinstance(body, Restrict):
            binders.append(body.binder)
            body = body.body
        wanted = [closed_key(q, frozenset(binders)) for q in par_components(body) if not isinstance(q, Nil)]
        # the sibling components live in the maximal Par chain above ``path``
        top = path
        while top and isinstance(subterm_at(term, top[:-1]), Par):
            top = top[:-1]
        region = subterm_at(term, top)
        bound = bound_along(term, top)

        def leaves(p, rel):
            if isinstance(p, Par):
                return leaves(p.left, rel + (0,)) + leaves(p.right, rel + (1,))
            return [(rel, p)]

        for rel, comp in leaves(region, ()):
            key = closed_key(comp, bound)
            if key in wanted:
                wanted.remove(key)
                term = replace_at(term, top + rel, NIL)
        return term

    def unblock(self, c: Configuration, path: Path) -> Configuration:
        """Explicitly release the blocked process at ``path``."""
        canon = canonical(c.term)
        node = subterm_at(canon, path)
        if not isinstance(node, Blocked):
            raise EngineError("no blocked process at that position")
        post = canonical(replace_at(canon, path, node.body))
        record = StepRecord("Unblock", c.term, post, c.state, state_of(post), path)
        self.trace.append(record)
        return Configuration(post, record.post_state)
