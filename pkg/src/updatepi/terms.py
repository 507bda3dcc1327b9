"""Abstract syntax of update-pi processes, names, patterns and states.

All term classes are frozen dataclasses, so terms hash, compare
structurally, and can be shared freely.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

NAME_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
VAR_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")
KEYWORDS = frozenset({"new"})


class TermError(ValueError):
    """Raised when a term violates a construction invariant."""


@dataclass(frozen=True, order=True)
class Name:
    base: str
    version: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.base, str) or not self.base:
            raise TermError("name base must be a nonempty identifier")
        if not (NAME_RE.match(self.base) or self.base.startswith("%")):
            raise TermError(f"invalid name identifier {self.base!r}")
        if self.base in KEYWORDS:
            raise TermError(f"{self.base!r} is a keyword")
        if self.version is not None and (not isinstance(self.version, int) or self.version < 0):
            raise TermError("version must be a natural number")

    def __str__(self):
        if self.version is None:
            return self.base
        return f"{self.base}@{self.version}"

    def sort_key(self):
        return (self.base, -1 if self.version is None else self.version)


@dataclass(frozen=True, order=True)
class ProcessVar:
    ident: str

    def __post_init__(self):
        if not isinstance(self.ident, str) or not self.ident:
            raise TermError("process variable must be a nonempty identifier")
        if not (VAR_RE.match(self.ident) or self.ident.startswith("%")):
            raise TermError(f"invalid process variable {self.ident!r}")

    def __str__(self):
        return self.ident


def N(text: str) -> Name:
    """Build a Name from ``base`` or ``base@version`` text."""
    if "@" in text:
        base, v = text.split("@", 1)
        return Name(base, int(v))
    return Name(text)


# -- patterns ---------------------------------------------------------------


@dataclass(frozen=True)
class NamePat:
    subject: Name
    binders: tuple[Name, ...]

    def __post_init__(self):
        object.__setattr__(self, "binders", tuple(self.binders))
        _check_binders(self.binders)
        for b in self.binders:
            if b.version is not None:
                raise TermError("binders carry no version")


@dataclass(frozen=True)
class ProcPat:
    subject: Name
    binders: tuple[ProcessVar, ...]

    def __post_init__(self):
        object.__setattr__(self, "binders", tuple(self.binders))
        _check_binders(self.binders)
        if len(self.binders) != 1:
            raise TermError("process patterns take exactly one binder")

    @property
    def binder(self) -> ProcessVar:
        return self.binders[0]


@dataclass(frozen=True)
class LocPat:
    subject: Name
    binder: ProcessVar

    @property
    def binders(self) -> tuple[ProcessVar, ...]:
        return (self.binder,)


Pattern = Union[NamePat, ProcPat, LocPat]


def _check_binders(binders):
    if not binders:
        raise TermError("binder list must be nonempty")
    if len(set(binders)) != len(binders):
        raise TermError("duplicate binders in pattern")


# -- processes --------------------------------------------------------------


class Process:
    """Base class of all process terms."""

    __slots__ = ()

    def __str__(self):
        from .syntax import print_term

        return print_term(self)

    def children(self) -> tuple["Process", ...]:
        return ()


@dataclass(frozen=True, repr=False)
class Nil(Process):
    def __repr__(self):
        return "Nil()"


NIL = Nil()


@dataclass(frozen=True)
class Var(Process):
    var: ProcessVar


@dataclass(frozen=True)
class Restrict(Process):
    binder: Name
    body: Process

    def __post_init__(self):
        if self.binder.version is not None:
            raise TermError("restricted names carry no version")

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Seq(Process):
    first: Process
    then: Process

    def children(self):
        return (self.first, self.then)


@dataclass(frozen=True)
class Loc(Process):
    loc: Name
    body: Process

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class OutName(Process):
    subject: Name
    payloads: tuple[Name, ...]

    def __post_init__(self):
        object.__setattr__(self, "payloads", tuple(self.payloads))


@dataclass(frozen=True)
class OutProc(Process):
    subject: Name
    payload: Process

    def children(self):
        return (self.payload,)


@dataclass(frozen=True)
class Input(Process):
    pattern: Pattern
    replicated: bool
    body: Process

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class UpdProv(Process):
    loc: Name
    payload: Process

    def children(self):
        return (self.payload,)


@dataclass(frozen=True)
class UpdRecv(Process):
    loc_pattern: Name
    binder: ProcessVar
    log: Process
    body: Process

    def __post_init__(self):
        if not isinstance(self.body, Loc) or self.body.loc.base != self.loc_pattern.base:
            raise TermError(
                f"update reception on {self.loc_pattern} must guard a component located at {self.loc_pattern.base}"
            )

    def children(self):
        return (self.log, self.body)


@dataclass(frozen=True)
class Blocked(Process):
    body: Process

    def children(self):
        return (self.body,)


ONCE = False
REPLICATED = True


def par(*procs: Process) -> Process:
    """Left-nested parallel composition; the empty composition is Nil."""
    procs = [p for p in procs]
    if not procs:
        return NIL
    out = procs[0]
    for p in procs[1:]:
        out = Par(out, p)
    return out


def seq(*procs: Process) -> Process:
    out = procs[0]
    for p in procs[1:]:
        out = Seq(out, p)
    return out


def par_components(p: Process) -> list[Process]:
    """Flatten a tree of Par nodes into its non-Par leaves."""
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
        else:
            out.append(q)
    return out


def seq_elements(p: Process) -> list[Process]:
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Seq):
            stack.append(q.then)
            stack.append(q.first)
        else:
            out.append(q)
    return out


def size(p: Process) -> int:
    """Number of constructors in ``p``, not counting Nil leaves."""
    if isinstance(p, Nil):
        return 0
    return 1 + sum(size(c) for c in p.children())


def subterms(p: Process) -> Iterator[Process]:
    yield p
    for c in p.children():
        yield from subterms(c)


# -- binding-aware queries --------------------------------------------------


def _pattern_names(pat: Pattern) -> set[Name]:
    return set(pat.binders) if isinstance(pat, NamePat) else set()


def _pattern_vars(pat: Pattern) -> set[ProcessVar]:
    return set() if isinstance(pat, NamePat) else set(pat.binders)


def free_names(p: Process) -> set[Name]:
    """Names occurring free in ``p``."""
    if isinstance(p, (Nil, Var)):
        return set()
    if isinstance(p, Restrict):
        return free_names(p.body) - {p.binder}
    if isinstance(p, (Par, Seq)):
        return free_names(p.left if isinstance(p, Par) else p.first) | free_names(
            p.right if isinstance(p, Par) else p.then
        )
    if isinstance(p, Loc):
        return {p.loc} | free_names(p.body)
    if isinstance(p, OutName):
        return {p.subject, *p.payloads}
    if isinstance(p, OutProc):
        return {p.subject} | free_names(p.payload)
    if isinstance(p, Input):
        return {p.pattern.subject} | (free_names(p.body) - _pattern_names(p.pattern))
    if isinstance(p, UpdProv):
        return {p.loc} | free_names(p.payload)
    if isinstance(p, UpdRecv):
        return {p.loc_pattern} | free_names(p.log) | free_names(p.body)
    if isinstance(p, Blocked):
        return free_names(p.body)
    raise TypeError(p)


def free_vars(p: Process) -> set[ProcessVar]:
    if isinstance(p, Var):
        return {p.var}
    if isinstance(p, Input):
        return free_vars(p.body) - _pattern_vars(p.pattern)
    if isinstance(p, UpdRecv):
        return (free_vars(p.log) | free_vars(p.body)) - {p.binder}
    out: set[ProcessVar] = set()
    for c in p.children():
        out |= free_vars(c)
    return out


def is_closed(p: Process) -> bool:
    return not free_vars(p)


def fresh_name(avoid: Iterable[Name], hint: str) -> Name:
    """First of ``hint``, ``hint1``, ``hint2``... whose base is unused in ``avoid``."""
    taken = {n.base for n in avoid}
    if hint not in taken:
        return Name(hint)
    i = 1
    while f"{hint}{i}" in taken:
        i += 1
    return Name(f"{hint}{i}")


def fresh_var(avoid: Iterable[ProcessVar], hint: str) -> ProcessVar:
    taken = {v.ident for v in avoid}
    if hint not in taken:
        return ProcessVar(hint)
    i = 1
    while f"{hint}{i}" in taken:
        i += 1
    return ProcessVar(f"{hint}{i}")


# -- alpha equivalence ------------------------------------------------------


def alpha_eq(p: Process, q: Process) -> bool:
    """Equality up to consistent renaming of bound names and variables.

    Binders are replaced by their binding depth on each side, so two
    occurrences agree when both are free and equal, or both are bound at
    the same depth.
    """
    return _alpha(p, q, {}, {}, {}, {}, 0)


def _same_name(a, b, e1, e2):
    i, j = e1.get(a), e2.get(b)
    if i is None and j is None:
        return a == b
    return i == j


def _alpha(p, q, n1, n2, v1, v2, d):
    if type(p) is not type(q):
        return False
    if isinstance(p, Nil):
        return True
    if isinstance(p, Var):
        return _same_name(p.var, q.var, v1, v2)
    if isinstance(p, Restrict):
        return _alpha(p.body, q.body, {**n1, p.binder: d}, {**n2, q.binder: d}, v1, v2, d + 1)
    if isinstance(p, (Par, Seq)):
        a1, b1 = p.children()
        a2, b2 = q.children()
        return _alpha(a1, a2, n1, n2, v1, v2, d) and _alpha(b1, b2, n1, n2, v1, v2, d)
    if isinstance(p, Loc):
        return _same_name(p.loc, q.loc, n1, n2) and _alpha(p.body, q.body, n1, n2, v1, v2, d)
    if isinstance(p, OutName):
        return (
            len(p.payloads) == len(q.payloads)
            and _same_name(p.subject, q.subject, n1, n2)
            and all(_same_name(x, y, n1, n2) for x, y in zip(p.payloads, q.payloads))
        )
    if isinstance(p, OutProc):
        return _same_name(p.subject, q.subject, n1, n2) and _alpha(p.payload, q.payload, n1, n2, v1, v2, d)
    if isinstance(p, Input):
        pp, qp = p.pattern, q.pattern
        if type(pp) is not type(qp) or p.replicated != q.replicated:
            return False
        if len(pp.binders) != len(qp.binders) or not _same_name(pp.subject, qp.subject, n1, n2):
            return False
        if isinstance(pp, NamePat):
            n1 = {**n1, **{b: d + i for i, b in enumerate(pp.binders)}}
            n2 = {**n2, **{b: d + i for i, b in enumerate(qp.binders)}}
        else:
            v1 = {**v1, **{b: d + i for i, b in enumerate(pp.binders)}}
            v2 = {**v2, **{b: d + i for i, b in enumerate(qp.binders)}}
        return _alpha(p.body, q.body, n1, n2, v1, v2, d + len(pp.binders))
    if isinstance(p, UpdProv):
        return _same_name(p.loc, q.loc, n1, n2) and _alpha(p.payload, q.payload, n1, n2, v1, v2, d)
    if isinstance(p, UpdRecv):
        if not _same_name(p.loc_pattern, q.loc_pattern, n1, n2):
            return False
        v1 = {**v1, p.binder: d}
        v2 = {**v2, q.binder: d}
        return _alpha(p.log, q.log, n1, n2, v1, v2, d + 1) and _alpha(p.body, q.body, n1, n2, v1, v2, d + 1)
    if isinstance(p, Blocked):
        return _alpha(p.body, q.body, n1, n2, v1, v2, d)
    raise TypeError(p)


# -- states -----------------------------------------------------------------


@dataclass(frozen=True)
class StateMultiset:
    """A finite multiset of names; absent names have multiplicity zero."""

    counts: tuple[tuple[Name, int], ...] = field(default=())

    def __post_init__(self):
        c = Counter()
        for name, k in self.counts:
            if k < 0:
                raise TermError("negative multiplicity")
            c[name] += k
        object.__setattr__(
            self, "counts", tuple(sorted(((n, k) for n, k in c.items() if k > 0), key=lambda e: e[0].sort_key()))
        )

    @classmethod
    def of(cls, *names: Name) -> "StateMultiset":
        return cls(tuple(Counter(names).items()))

    @classmethod
    def from_counter(cls, c: Counter) -> "StateMultiset":
        return cls(tuple(c.items()))

    def counter(self) -> Counter:
        return Counter(dict(self.counts))

    def __getitem__(self, name: Name) -> int:
        return dict(self.counts).get(name, 0)

    def __len__(self):
        return sum(k for _, k in self.counts)

    def __iter__(self):
        for n, k in self.counts:
            for _ in range(k):
                yield n

    def __bool__(self):
        return bool(self.counts)

    def union(self, other: "StateMultiset") -> "StateMultiset":
        return StateMultiset.from_counter(self.counter() + other.counter())

    __add__ = union

    def difference(self, other: "StateMultiset") -> "StateMultiset":
        # Counter subtraction floors at zero
        return StateMultiset.from_counter(self.counter() - other.counter())

    __sub__ = difference

    def without(self, name: Name) -> "StateMultiset":
        return StateMultiset(tuple((n, k) for n, k in self.counts if n != name))

    def issubset(self, other: "StateMultiset") -> bool:
        oc = other.counter()
        return all(oc[n] >= k for n, k in self.counts)

    def as_dict(self) -> dict[str, int]:
        return {str(n): k for n, k in self.counts}

    def __str__(self):
        if not self.counts:
            return "{}"
        return "{" + ", ".join(str(n) for n in self) + "}"


EMPTY = StateMultiset()


def _memoize_hash(cls):
    # Terms are immutable and hashed constantly (memo tables, sets of
    # states), so each instance keeps its hash after the first call.
    compute = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = compute(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__


for _cls in (Name, ProcessVar, NamePat, ProcPat, LocPat, Nil, Var, Restrict, Par, Seq, Loc, OutName, OutProc,
             Input, UpdProv, UpdRecv, Blocked):
    _memoize_hash(_cls)
