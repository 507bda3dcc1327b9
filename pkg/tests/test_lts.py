import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import stepping_processes
from updatepi.congruence import canonical, struct_eq
from updatepi.engine import Engine, Flags
from updatepi.enumerate import FRAGMENTS, FULL, Alphabet, closed_terms
from updatepi.lts import (
    Eps,
    FlagMismatch,
    In,
    Out,
    ParComp,
    SeqComp,
    Tau,
    complementary,
    correspondence_check,
    par_action,
    seq_action,
    tau_closure,
    tau_successors,
    transitions,
)
from updatepi.syntax import parse
from updatepi.terms import NIL, Name, Par, Restrict

A, B = Name("a"), Name("b")


# -- examples -------------------------------------------------------------------


def test_output_name_emits_its_payload():
    ts = transitions(parse("a!(n)"))
    assert len(ts) == 1
    (t,) = ts
    assert isinstance(t.label, Out) and t.label.subject == A and t.label.shape == ("name", 1)
    assert t.target == NIL
    assert str(t.label) == "a!(n)"
    assert not t.instantiation


def test_nil_has_no_transitions():
    assert transitions(NIL) == []


def test_communication_gives_tau():
    taus = tau_successors(parse("a!(n) | a?(x) > x!()"))
    assert any(struct_eq(q, parse("n!()")) for q in taus)


def test_communication_emits_eps_only_at_the_top():
    ts = transitions(parse("a!(n) | a?(x) > x!()"))
    assert {type(t.label).__name__ for t in ts} >= {"Eps", "Tau", "Out", "In"}
    nested = transitions(parse("(a!(n) | a?(x) > x!()) | c!()"))
    # the inner Eps is framed by the outer parallel only through its Tau image
    assert not any(isinstance(t.label, Eps) for t in nested if "T.Par.L" in t.rules or "T.Par.R" in t.rules)


def test_update_ok_transition():
    p = parse("up!(l@2){a!(n)} | up?(l@1, X)#{log!(ok)} * l@1[a!(n)]")
    taus = tau_successors(p)
    engine = set(Engine().successors(p))
    assert taus == engine
    ts = [t for t in transitions(p) if isinstance(t.label, Tau)]
    assert any("T.Update.Ok" in t.rules for t in ts)


def test_input_labels_are_symbolic():
    (t,) = transitions(parse("a?(x, y) > x!()"))
    assert isinstance(t.label, In)
    assert str(t.label) == "a?<name/2>"
    assert "%H" in str(t.target)


def test_restriction_hides_labels():
    # neither the output nor the input on the restricted channel escapes
    assert transitions(parse("new a. a!(n)")) == []
    assert transitions(parse("new a. a?(x) > 0")) == []
    # a payload mentioning the restricted name also stays hidden
    assert transitions(parse("new m. a!(m)")) == []
    # the silent step inside survives
    taus = tau_successors(parse("new a. (a!(n) | a?(x) > x!())"))
    assert any(struct_eq(q, parse("n!()")) for q in taus)


def test_located_bodies_export_only_tau():
    ts = transitions(parse("l[a!(n)]"))
    assert [str(t.label) for t in ts] == ["l[a!(n)]"]
    taus = tau_successors(parse("l[a!(n) | a?(x) > 0]"))
    assert any(struct_eq(q, parse("l[0]")) for q in taus)


def test_blocked_bodies_need_the_flag():
    p = parse("[[a!(n) | a?(x) > 0]]")
    assert tau_successors(p) == set()
    assert tau_successors(p, Flags(allow_blocked_steps=True)) == set(Engine(Flags(allow_blocked_steps=True)).successors(p))


def test_sequence_successor_is_inactive():
    p = parse("c?(x) > 0; (a!(n) | a?(x) > 0)")
    assert tau_successors(p) == set()


def test_tau_closure_examples():
    assert tau_closure(NIL, 3) == {NIL}
    p = parse("a!{q!()} | a?(X) * (X | p!())")
    induced = parse("a?(X) * (X | p!()) | q!() | p!()")
    assert canonical(induced) in tau_closure(p, 1)
    assert tau_closure(p, 0) == {canonical(p)}


# -- action algebra ----------------------------------------------------------------

atoms = st.sampled_from(
    [
        Out(A, ("name", 1), "a!(n)"),
        In(A, ("name", 1)),
        Out(B, ("proc", 1), "b!{0}"),
        In(B, ("proc", 1)),
        In(A, ("name", 2)),
        Tau(),
        Eps(),
    ]
)
action_trees = st.recursive(atoms, lambda sub: st.lists(sub, min_size=2, max_size=3).map(lambda xs: par_action(*xs)), max_leaves=8)


@given(action_trees)
def test_eps_is_neutral(a):
    assert par_action(a, Eps()) == par_action(a)
    assert par_action(Eps(), a) == par_action(a)


@given(action_trees, action_trees)
def test_composition_commutes(a, b):
    assert par_action(a, b) == par_action(b, a)


@given(action_trees, action_trees, action_trees)
def test_composition_associates(a, b, c):
    assert par_action(par_action(a, b), c) == par_action(a, par_action(b, c))


@given(st.lists(atoms, max_size=6), st.randoms(use_true_random=False))
def test_normalization_is_confluent(xs, rnd):
    shuffled = list(xs)
    rnd.shuffle(shuffled)
    assert par_action(*xs) == par_action(*shuffled)


def test_complements_cancel():
    o, i = Out(A, ("name", 1), "a!(n)"), In(A, ("name", 1))
    assert complementary(o, i) and complementary(i, o)
    assert par_action(o, i) == Eps()
    # mismatched arity does not cancel
    assert isinstance(par_action(o, In(A, ("name", 2))), ParComp)
    assert par_action() == Eps()


def test_sequential_labels_are_not_composed_further():
    assert seq_action(Tau(), Tau()) == Tau()
    s = seq_action(In(A, ("name", 1)), Tau())
    assert isinstance(s, SeqComp)
    assert isinstance(par_action(s, Out(A, ("name", 1), "a!(n)")), ParComp)


# -- structural properties ------------------------------------------------------------


@given(stepping_processes())
def test_tau_matches_engine(p):
    for flags in (Flags(), Flags(allow_blocked_steps=True, seq_both=True)):
        assert tau_successors(p, flags) == set(Engine(flags).successors(p))


@given(stepping_processes())
def test_labels_avoid_restricted_names(p):
    for t in transitions(Restrict(A, p)):
        assert A not in t.label.names()


@given(stepping_processes())
def test_ground_labels_need_no_instantiation(p):
    for t in transitions(p):
        if isinstance(t.label, Out):
            assert not t.instantiation


@given(stepping_processes())
def test_eps_never_framed(p):
    for t in transitions(Par(p, parse("c!()"))):
        assert not isinstance(t.label, Eps) or t.rules[-1] == "T.Comm"


# -- correspondence ------------------------------------------------------------------


def test_correspondence_small_bound():
    for flags in (Flags(), Flags(allow_blocked_steps=True, seq_both=True)):
        rep = correspondence_check(3, flags)
        assert rep.ok, rep.counterexamples[:1]
        assert rep.terms_checked == len(closed_terms(3, FULL))


def test_correspondence_fragments_bound_five():
    for ab in FRAGMENTS:
        rep = correspondence_check(5, terms=closed_terms(5, ab))
        assert rep.ok, (ab.label, rep.counterexamples[:1])


def test_correspondence_empty_alphabet_is_vacuous():
    empty = Alphabet("empty", names=False, replicated=False, sequence=False)
    rep = correspondence_check(4, terms=closed_terms(4, empty))
    # only plain outputs remain, nothing reduces, so every comparison is of empty sets
    assert rep.ok and rep.transitions_compared == rep.terms_checked


def test_correspondence_refuses_mismatched_flags():
    with pytest.raises(FlagMismatch):
        correspondence_check(2, Flags(), Flags(allow_blocked_steps=True))
    with pytest.raises(FlagMismatch):
        correspondence_check(2, Flags(environment=True))


def test_check_discriminates_flag_settings():
    # the comparison is not vacuous: the two flag settings really differ
    loose = Engine(Flags(allow_blocked_steps=True))
    differs = [p for p in closed_terms(4, FULL) if set(loose.successors(p)) != tau_successors(p, Flags())]
    assert differs


def test_update_outcomes_agree_on_both_sides():
    for name in ("ok", "unmat", "rest", "fail"):
        with open(f"fixtures/update_{name}.upi") as f:
            p = parse(f.read())
        assert tau_successors(p) == set(Engine().successors(p)), name
