from hypothesis import given
from hypothesis import strategies as st

from oracles import nameless, oracle_apply
from strategies import closed_processes, open_processes
from updatepi.congruence import canonical
from updatepi.subst import IDENTITY, Substitution, apply
from updatepi.syntax import parse
from updatepi.terms import NIL, Input, N, OutName, Par, ProcessVar, ProcPat, Restrict, Var, alpha_eq, free_names

a, n, x = N("a"), N("n"), N("x")
X = ProcessVar("X")
Q = parse("b!(m)")


def test_process_variable_replaced():
    assert apply(Substitution.of(procs={X: Q}), Par(Var(X), NIL)) == Par(Q, NIL)


def test_bound_variable_untouched():
    p = Input(ProcPat(a, (X,)), False, Var(X))
    assert apply(Substitution.of(procs={X: Q}), p) == p


def test_binder_renamed_on_collision():
    p = Restrict(n, OutName(a, (x,)))
    got = apply(Substitution.of(names={x: n}), p)
    assert isinstance(got, Restrict) and got.binder != n
    assert got.body == OutName(a, (n,))
    assert nameless(got) == oracle_apply({x: n}, {}, p)


def test_identity_entries_dropped():
    assert not Substitution.of(names={x: x}, procs={X: Var(X)})


def test_substitution_reaches_under_blocks():
    p = parse("[[X]]", closed=False)
    assert apply(Substitution.of(procs={X: Q}), p) == parse("[[b!(m)]]")


def test_payload_free_names_not_captured():
    # substituting a process mentioning y under a binder y renames the binder
    p = parse("a?(y) > X", closed=False)
    got = apply(Substitution.of(procs={X: parse("y!()")}), p)
    assert N("y") in free_names(got)


name_maps = st.dictionaries(
    st.sampled_from([N("a"), N("b"), N("c"), N("x0"), N("y1")]),
    st.sampled_from([N("a"), N("n"), N("x0"), N("y0"), N("z")]),
    max_size=3,
)


@given(closed_processes(), name_maps)
def test_apply_matches_nameless_oracle(p, nm):
    theta = Substitution.of(names=nm)
    assert nameless(apply(theta, p)) == oracle_apply(nm, {}, p)


@given(open_processes(), closed_processes(2))
def test_process_substitution_matches_oracle(p, q):
    theta = Substitution.of(procs={ProcessVar("Y"): q})
    assert nameless(apply(theta, p)) == oracle_apply({}, {ProcessVar("Y"): q}, p)


@given(open_processes())
def test_identity_is_neutral(p):
    assert alpha_eq(apply(IDENTITY, p), p)


@given(closed_processes(), name_maps)
def test_free_names_bound(p, nm):
    theta = Substitution.of(names=nm)
    allowed = (free_names(p) - set(theta.name_map)) | theta.range_names()
    assert free_names(apply(theta, p)) <= allowed


@given(closed_processes(), name_maps, name_maps)
def test_sequential_composition(p, m1, m2):
    t1, t2 = Substitution.of(names=m1), Substitution.of(names=m2)
    assert alpha_eq(apply(t2, apply(t1, p)), apply(t1.then(t2), p))


@given(closed_processes(), name_maps)
def test_commutes_with_alpha(p, nm):
    q = canonical(p)
    theta = Substitution.of(names=nm)
    if alpha_eq(p, q):
        assert alpha_eq(apply(theta, p), apply(theta, q))
