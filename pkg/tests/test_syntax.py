import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import oracle_alpha_eq
from strategies import closed_processes, open_processes
from updatepi.congruence import canonical
from updatepi.enumerate import random_terms
from updatepi.syntax import ParseError, parse, print_term, tokenize
from updatepi.terms import (
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
    ProcessVar,
    ProcPat,
    Restrict,
    Seq,
    UpdProv,
    UpdRecv,
    Var,
    alpha_eq,
)

a, n, x, l = Name("a"), Name("n"), Name("x"), Name("l")
X = ProcessVar("X")


# -- grammar examples ---------------------------------------------------------------


def test_parse_name_communication():
    assert parse("a!(n) | a?(x) > 0") == Par(OutName(a, (n,)), Input(NamePat(a, (x,)), False, NIL))


def test_parse_replicated_process_input():
    p = parse("a!{q!()} | a?(X) * (X | p!())")
    assert p == Par(
        OutProc(a, OutName(Name("q"), ())),
        Input(ProcPat(a, (X,)), True, Par(Var(X), OutName(Name("p"), ()))),
    )
    # a?{X} is the primary spelling of the same pattern
    assert parse("a!{q!()} | a?{X} * (X | p!())") == p


def test_parse_update_reception():
    l1 = Name("l", 1)
    assert parse("up?(l@1, X)#{log!(ok)} * l@1[ a!(n) ]") == UpdRecv(
        l1, X, OutName(Name("log"), (Name("ok"),)), Loc(l1, OutName(a, (n,)))
    )


@pytest.mark.parametrize(
    "src, expected",
    [
        ("0", NIL),
        ("new x. x!()", Restrict(x, OutName(x, ()))),
        ("l[0]", Loc(l, NIL)),
        ("[[a!(n)]]", Blocked(OutName(a, (n,)))),
        ("up!(l@2){0}", UpdProv(Name("l", 2), NIL)),
        ("l?[X] > X", Input(LocPat(l, X), False, Var(X))),
        ("a!(n); 0", Seq(OutName(a, (n,)), NIL)),
        ("a?(x) > 0; 0", Seq(Input(NamePat(a, (x,)), False, NIL), NIL)),
        ("a!() | a!() | a!()", Par(Par(OutName(a, ()), OutName(a, ())), OutName(a, ()))),
        ("0 | 0; 0", Par(NIL, Seq(NIL, NIL))),
        ("new x. 0 | 0", Restrict(x, Par(NIL, NIL))),
        ("-- a comment\n0", NIL),
    ],
)
def test_grammar(src, expected):
    assert parse(src) == expected


def test_sequence_is_left_associative():
    assert parse("0; a!(); 0") == Seq(Seq(NIL, OutName(a, ())), NIL)


def test_versions_on_names():
    assert parse("a@3!(n@1)") == OutName(Name("a", 3), (Name("n", 1),))


# -- errors ---------------------------------------------------------------------------


def test_error_reports_span_and_expected_tokens():
    with pytest.raises(ParseError) as e:
        parse("a!(n) |\n  ?", file="t.upi")
    err = e.value
    assert (err.span.file, err.span.start_line, err.span.start_col) == ("t.upi", 2, 3)
    assert "name" in err.expected
    assert str(err).startswith("t.upi:2:3:")


def test_span_start_not_after_end():
    with pytest.raises(ParseError) as e:
        parse("a?(x) > ")
    s = e.value.span
    assert (s.start_line, s.start_col) <= (s.end_line, s.end_col)


def test_unbound_variable_is_a_scope_error():
    with pytest.raises(ParseError) as e:
        parse("a!(n) | Y")
    assert "unbound" in e.value.message
    assert e.value.span.start_col == 9
    # open mode accepts it
    assert parse("a!(n) | Y", closed=False) == Par(OutName(a, (n,)), Var(ProcessVar("Y")))


@pytest.mark.parametrize(
    "bad",
    ["", "a!", "a!(n", "new . 0", "a?(x) 0", "1", "a!(n) )", "a?() > 0", "a?(x, x) > 0", "new x@1. 0", "up!(l, m){0}", "$"],
)
def test_malformed_inputs_raise_parse_error(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_deep_nesting_is_a_parse_error_not_a_crash():
    with pytest.raises(ParseError):
        parse("(" * 5000 + "0" + ")" * 5000)


# -- printer --------------------------------------------------------------------------


def test_printer_examples():
    assert print_term(Par(OutName(a, ()), NIL)) == "a!() | 0"
    assert print_term(Restrict(n, NIL)) == "new n. 0"
    assert print_term(Par(Restrict(n, NIL), NIL)) == "(new n. 0) | 0"
    assert print_term(Seq(Par(NIL, NIL), NIL)) == "(0 | 0); 0"
    assert print_term(Input(NamePat(a, (x,)), False, Par(NIL, NIL))) == "a?(x) > (0 | 0)"


@given(open_processes(5))
def test_round_trip(p):
    q = parse(print_term(p), closed=False)
    assert alpha_eq(p, q)
    assert oracle_alpha_eq(p, q)


@given(closed_processes(5))
def test_printer_is_deterministic_and_stable(p):
    s = print_term(p)
    assert print_term(parse(s)) == s
    c = canonical(p)
    assert print_term(canonical(parse(print_term(c)))) == print_term(c)


@given(closed_processes(4), closed_processes(4))
def test_printer_injective_modulo_alpha(p, q):
    if print_term(p) == print_term(q):
        assert alpha_eq(p, q)


_ALPHABET = list("abxXlu0!?()[]{}|;>*#,.@-  \n") + ["new", "up", "@1", "[[", "]]"]


@given(st.lists(st.sampled_from(_ALPHABET), max_size=30))
def test_parser_is_total_on_token_soup(parts):
    try:
        parse("".join(parts), closed=False)
    except ParseError as e:
        assert e.span.start_line >= 1


@given(st.text(max_size=40))
def test_parser_is_total_on_arbitrary_text(s):
    try:
        parse(s)
    except ParseError:
        pass


def test_tokenizer_positions():
    toks = tokenize("a!(n)\n  | 0")
    bar = [t for t in toks if t.kind == "|"][0]
    assert (bar.line, bar.col) == (2, 3)
    assert toks[-1].kind == "eof"


def test_mutated_valid_terms_never_crash():
    rng = random.Random(7)
    for p in random_terms(300, seed=3):
        s = list(print_term(p))
        for _ in range(3):
            if s:
                i = rng.randrange(len(s))
                s[i] = rng.choice(_ALPHABET)
        try:
            parse("".join(s), closed=False)
        except ParseError:
            pass
