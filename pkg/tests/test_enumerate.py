import pytest

from updatepi.congruence import canonical
from updatepi.enumerate import FRAGMENTS, FULL, RandomTerms, closed_terms, random_terms
from updatepi.terms import free_vars, size


@pytest.mark.parametrize("alphabet", (FULL,) + FRAGMENTS, ids=lambda a: a.label)
def test_enumerated_classes_are_distinct_canonical_and_closed(alphabet):
    terms = closed_terms(3 if alphabet is FULL else 4, alphabet)
    assert len(set(terms)) == len(terms)
    for p in terms:
        assert canonical(p) == p
        assert not free_vars(p)


def test_enumeration_grows_with_the_bound():
    counts = [len(closed_terms(b, FULL)) for b in range(4)]
    assert counts[0] == 1
    assert counts == sorted(counts) and len(set(counts)) == 4
    assert all(size(p) <= 3 for p in closed_terms(3, FULL))


def test_random_terms_are_reproducible():
    assert random_terms(20, seed=4) == random_terms(20, seed=4)
    assert random_terms(20, seed=4) != random_terms(20, seed=5)


def test_random_closed_terms_are_closed():
    for p in random_terms(300, seed=1):
        assert not free_vars(p)
    assert any(free_vars(p) for p in random_terms(300, seed=1, closed=False))


def test_reactive_terms_use_the_small_alphabet():
    g = RandomTerms(3, reactive=True)
    names = {str(g.name(())) for _ in range(50)}
    assert names <= {"a", "b"}
