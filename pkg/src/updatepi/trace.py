"""Trace documents: export, import and replay of engine traces.

A trace is a JSON object with ``schemaVersion``, ``initialTerm``,
``flags`` and ``steps``.  Terms are stored in concrete syntax, states as
sorted name-to-multiplicity maps.  Output uses sorted keys, UTF-8 and a
trailing newline so documents diff cleanly.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from typing import Optional

from .congruence import canonical
from .engine import Configuration, Engine, EngineError, Flags, StepRecord
from .subst import Substitution
from .syntax import parse, print_term
from .terms import N, Process, ProcessVar, StateMultiset

SCHEMA_VERSION = 1


class TraceError(ValueError):
    pass


def _state_json(s: StateMultiset) -> dict:
    return dict(sorted(s.as_dict().items()))


def _state_from(d: dict) -> StateMultiset:
    return StateMultiset(tuple((N(k), int(v)) for k, v in d.items()))


def _subst_json(theta: Substitution) -> dict:
    return {
        "names": {str(k): str(v) for k, v in theta.names},
        "procs": {str(k): print_term(v) for k, v in theta.procs},
    }


def _subst_from(d: dict) -> Substitution:
    names = {N(k): N(v) for k, v in d.get("names", {}).items()}
    procs = {ProcessVar(k): parse(v, closed=False) for k, v in d.get("procs", {}).items()}
    return Substitution.of(names, procs)


def step_to_json(s: StepRecord) -> dict:
    return {
        "rule": s.rule,
        "positionPath": list(s.position),
        "partnerPath": None if s.partner is None else list(s.partner),
        "preTerm": print_term(s.pre_term),
        "postTerm": print_term(s.post_term),
        "preState": _state_json(s.pre_state),
        "postState": _state_json(s.post_state),
        "substitution": _subst_json(s.substitution),
        "context": list(s.context),
    }


def step_from_json(d: dict) -> StepRecord:
    try:
        return StepRecord(
            rule=d["rule"],
            pre_term=parse(d["preTerm"], closed=False),
            post_term=parse(d["postTerm"], closed=False),
            pre_state=_state_from(d["preState"]),
            post_state=_state_from(d["postState"]),
            position=tuple(d["positionPath"]),
            substitution=_subst_from(d.get("substitution", {})),
            context=tuple(d.get("context", ())),
            partner=None if d.get("partnerPath") is None else tuple(d["partnerPath"]),
        )
    except KeyError as e:
        raise TraceError(f"step is missing field {e.args[0]!r}") from None


def export_trace(trace: list[StepRecord], initial: Optional[Process] = None, flags: Flags = Flags()) -> bytes:
    if initial is None:
        initial = trace[0].pre_term if trace else None
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "initialTerm": None if initial is None else print_term(initial),
        "flags": asdict(flags),
        "steps": [step_to_json(s) for s in trace],
    }
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def import_trace(data: bytes):
    """Returns ``(initial term or None, steps, flags)``."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TraceError(f"not a trace document: {e}") from None
    if doc.get("schemaVersion") != SCHEMA_VERSION:
        raise TraceError(f"unsupported schema version {doc.get('schemaVersion')!r}")
    initial = doc.get("initialTerm")
    initial = None if initial is None else parse(initial, closed=False)
    flags = Flags(**doc.get("flags", {}))
    return initial, [step_from_json(s) for s in doc.get("steps", [])], flags


def replay(data: bytes, flags: Optional[Flags] = None) -> tuple[Configuration, list[StepRecord]]:
    """Re-execute a trace from its initial term and return the final configuration.

    Every step is re-derived by the engine, never copied from the
    document; a step the engine cannot reproduce is an error.
    """
    initial, steps, doc_flags = import_trace(data)
    engine = Engine(doc_flags if flags is None else flags)
    if initial is None:
        return Configuration.of(parse("0")), []
    c = Configuration.of(initial)
    for k, s in enumerate(steps):
        if s.rule == "Recover":
            c = engine.recover_block(c, s.position)
        elif s.rule == "Unblock":
            c = engine.unblock(c, s.position)
        else:
            want = canonical(s.post_term)
            for cand in engine.enumerate_steps(c):
                if (cand.rule, cand.position, cand.partner) == (s.rule, s.position, s.partner) and cand.post_term == want:
                    c = engine.apply_step(c, cand)
                    break
            else:
                raise TraceError(f"step {k} ({s.rule}) cannot be reproduced from the current term")
        if c.state != s.post_state:
            raise TraceError(f"step {k} ({s.rule}) reached state {c.state}, trace says {s.post_state}")
    return c, engine.trace


__all__ = ["export_trace", "import_trace", "replay", "TraceError", "SCHEMA_VERSION", "EngineError"]
