import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import seeds, stepping_processes
from updatepi.congruence import struct_eq
from updatepi.engine import Configuration, Engine, Flags, Random
from updatepi.syntax import parse
from updatepi.trace import SCHEMA_VERSION, TraceError, export_trace, import_trace, replay


def load(name):
    with open(f"fixtures/{name}") as f:
        return parse(f.read())


def fire(engine, c, rule):
    (s,) = [s for s in engine.enumerate_steps(c) if s.rule == rule]
    return engine.apply_step(c, s)


def test_empty_trace_document():
    doc = json.loads(export_trace([]))
    assert doc == {"flags": {"allow_blocked_steps": False, "environment": False, "seq_both": False}, "initialTerm": None, "schemaVersion": SCHEMA_VERSION, "steps": []}


def test_document_is_sorted_and_newline_terminated():
    e = Engine()
    fire(e, Configuration.of(parse("a!(n) | a?(x) > x!()")), "R.In.Name")
    data = export_trace(e.trace)
    assert data.endswith(b"\n")
    text = data.decode("utf-8")
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def test_one_step_schema():
    e = Engine()
    fire(e, Configuration.of(parse("a!(n) | a?(x) > x!()")), "R.In.Name")
    (step,) = json.loads(export_trace(e.trace))["steps"]
    assert step["rule"] == "R.In.Name"
    assert set(step) >= {"rule", "positionPath", "preTerm", "postTerm", "preState", "postState", "substitution"}
    assert struct_eq(parse(step["preTerm"]), parse("a!(n) | a?(x) > x!()"))
    assert struct_eq(parse(step["postTerm"]), parse("n!()"))
    assert step["preState"] == {"a": 1}
    assert step["postState"] == {"n": 1}
    # binders are renamed canonically, so only the substituted value is fixed
    assert list(step["substitution"]["names"].values()) == ["n"]


def test_import_reproduces_records():
    e = Engine()
    c = Configuration.of(load("update_fail.upi"))
    c = fire(e, c, "R.Update.Fail")
    e.recover_block(c, e.blocked_positions(c)[0])
    initial, steps, flags = import_trace(export_trace(e.trace))
    assert flags == Flags()
    assert len(steps) == len(e.trace)
    for got, want in zip(steps, e.trace):
        assert (got.rule, got.position, got.partner, got.pre_state, got.post_state, got.context) == (
            want.rule,
            want.position,
            want.partner,
            want.pre_state,
            want.post_state,
            want.context,
        )
        assert struct_eq(got.pre_term, want.pre_term) and struct_eq(got.post_term, want.post_term)
        assert got.substitution.name_map == want.substitution.name_map
        assert {k: struct_eq(v, want.substitution.proc_map[k]) for k, v in got.substitution.procs} == {
            k: True for k, _ in want.substitution.procs
        }


def test_fail_then_recover_round_trip():
    e = Engine()
    start = load("update_fail.upi")
    c = fire(e, Configuration.of(start), "R.Update.Fail")
    final = e.recover_block(c, e.blocked_positions(c)[0])
    doc = json.loads(export_trace(e.trace))
    assert [s["rule"] for s in doc["steps"]] == ["R.Update.Fail", "Recover"]
    # recovery gives back the component that was about to be replaced
    assert struct_eq(parse(doc["steps"][1]["postTerm"]), parse("up?(l@1, X)#{log!(ok)} * l@1[go?(z) > X]"))
    got, trace = replay(export_trace(e.trace))
    assert struct_eq(got.term, final.term) and got.state == final.state
    assert [s.rule for s in trace] == ["R.Update.Fail", "Recover"]


@given(stepping_processes(), seeds, st.integers(1, 6))
@settings(max_examples=60)
def test_random_runs_replay(p, seed, fuel):
    flags = Flags(allow_blocked_steps=True, seq_both=True)
    e = Engine(flags)
    final = e.run(Configuration.of(p), fuel, Random(seed))
    final = final[0] if isinstance(final, tuple) else final
    got, _ = replay(export_trace(e.trace, initial=p, flags=flags))
    assert struct_eq(got.term, final.term)
    assert got.state == final.state


def test_replay_rejects_tampered_steps():
    e = Engine()
    fire(e, Configuration.of(parse("a!(n) | a?(x) > x!()")), "R.In.Name")
    doc = json.loads(export_trace(e.trace))
    doc["steps"][0]["postTerm"] = "m!()"
    doc["steps"][0]["postState"] = {"m": 1}
    with pytest.raises(TraceError):
        replay(json.dumps(doc).encode())
    doc = json.loads(export_trace(e.trace))
    doc["steps"][0]["postState"] = {"n": 2}
    with pytest.raises(TraceError):
        replay(json.dumps(doc).encode())


@pytest.mark.parametrize("data", [b"not json", b'{"schemaVersion": 99}', b'{"schemaVersion": 1, "steps": [{}]}', b"\xff"])
def test_bad_documents(data):
    with pytest.raises(TraceError):
        import_trace(data)
