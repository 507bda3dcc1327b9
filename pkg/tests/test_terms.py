import pytest
from hypothesis import given

from oracles import oracle_alpha_eq, oracle_free_names
from strategies import closed_processes, open_processes
from updatepi.syntax import parse, print_term
from updatepi.terms import (
    NIL,
    Input,
    Loc,
    LocPat,
    N,
    Name,
    NamePat,
    OutName,
    Par,
    ProcessVar,
    ProcPat,
    Restrict,
    StateMultiset,
    TermError,
    UpdRecv,
    Var,
    alpha_eq,
    free_names,
    free_vars,
    fresh_name,
    fresh_var,
    is_closed,
    size,
)

a, b, n, x, y = N("a"), N("b"), N("n"), N("x"), N("y")
X = ProcessVar("X")


def test_name_versions_print_and_parse():
    assert str(Name("l", 2)) == "l@2"
    assert N("l@2") == Name("l", 2)
    assert Name("l", 1) != Name("l")


@pytest.mark.parametrize("bad", ["", "A", "1a", "new"])
def test_bad_name_identifiers_rejected(bad):
    with pytest.raises(TermError):
        Name(bad)


def test_negative_version_rejected():
    with pytest.raises(TermError):
        Name("l", -1)


def test_restriction_binder_has_no_version():
    with pytest.raises(TermError):
        Restrict(Name("x", 1), NIL)


def test_pattern_binders_distinct_and_nonempty():
    with pytest.raises(TermError):
        NamePat(a, (x, x))
    with pytest.raises(TermError):
        NamePat(a, ())
    with pytest.raises(TermError):
        ProcPat(a, (X, ProcessVar("Y")))


def test_reception_must_guard_its_location():
    with pytest.raises(TermError):
        UpdRecv(Name("l", 1), X, NIL, Loc(N("k"), Var(X)))


def test_free_names_examples():
    assert free_names(parse("a!(n) | a?(x) > x!(b)")) == {a, n, b}
    assert free_names(parse("new x. x!(n)")) == {n}
    assert free_names(NIL) == set()


def test_free_vars_and_closedness():
    p = Input(ProcPat(a, (X,)), False, Par(Var(X), Var(ProcessVar("Y"))))
    assert free_vars(p) == {ProcessVar("Y")}
    assert not is_closed(p)
    assert is_closed(parse("a?{X} > X"))


def test_passivation_binds_its_variable():
    p = Input(LocPat(N("l"), X), False, Var(X))
    assert free_vars(p) == set()
    assert free_names(p) == {N("l")}


def test_fresh_name_avoids():
    avoid = {x, Name("x1"), Name("x2")}
    f = fresh_name(avoid, "x")
    assert f not in avoid and f.base.startswith("x")
    v = fresh_var({X}, "X")
    assert v != X


def test_alpha_eq_examples():
    assert alpha_eq(parse("a?(x) > x!()"), parse("a?(y) > y!()"))
    assert not alpha_eq(parse("a?(x) > x!()"), parse("a?(y) > x!()"))
    assert alpha_eq(parse("new x. x!(n)"), parse("new y. y!(n)"))
    assert not alpha_eq(parse("a!(n) | b!(n)"), parse("b!(n) | a!(n)"))


def test_size_counts_constructors():
    assert size(NIL) == 0
    assert size(parse("a!(n) | b!(n)")) == 3


def test_state_multiset_algebra():
    s = StateMultiset.of(a, a, b)
    assert s[a] == 2 and len(s) == 3
    assert s.difference(StateMultiset.of(a)) == StateMultiset.of(a, b)
    assert StateMultiset.of(a).union(StateMultiset.of(b)) == StateMultiset.of(b, a)
    assert s.as_dict() == {"a": 2, "b": 1}
    with pytest.raises(TermError):
        StateMultiset(((a, -1),))


@given(open_processes())
def test_free_names_agree_with_nameless_oracle(p):
    assert free_names(p) == oracle_free_names(p)


@given(closed_processes(), closed_processes())
def test_alpha_eq_agrees_with_nameless_oracle(p, q):
    assert alpha_eq(p, q) == oracle_alpha_eq(p, q)
    assert alpha_eq(p, p)


@given(closed_processes())
def test_terms_hash_consistently(p):
    q = parse(print_term(p))
    if q == p:
        assert hash(q) == hash(p)
