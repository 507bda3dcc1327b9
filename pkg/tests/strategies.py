"""Hypothesis strategies for terms, states and substitutions."""
from functools import lru_cache

from hypothesis import strategies as st

from updatepi.engine import Configuration, Engine, Flags
from updatepi.enumerate import FRAGMENTS, FULL, RandomTerms, closed_terms
from updatepi.terms import Name, StateMultiset

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def closed_processes(max_depth=4):
    return st.builds(lambda s, d: RandomTerms(s, closed=True).term(d), seeds, st.integers(0, max_depth))


def open_processes(max_depth=4):
    return st.builds(lambda s, d: RandomTerms(s, closed=False).term(d), seeds, st.integers(0, max_depth))


@lru_cache(maxsize=None)
def stepping_terms():
    """Enumerated closed terms with at least one step under both optional flags."""
    e = Engine(Flags(allow_blocked_steps=True, seq_both=True))
    pool = closed_terms(4, FULL) + [p for f in FRAGMENTS for p in closed_terms(5, f)]
    return tuple(p for p in pool if e.enumerate_steps(Configuration.of(p)))


def stepping_processes():
    """Closed terms that can reduce: enumerated ones plus reactive random ones."""
    reactive = st.builds(lambda s, d: RandomTerms(s, reactive=True).term(d), seeds, st.integers(2, 5))
    return st.one_of(st.deferred(lambda: st.sampled_from(stepping_terms())), reactive)


names = st.sampled_from([Name("a"), Name("b"), Name("c"), Name("l"), Name("l", 1), Name("n")])

states = st.lists(names, max_size=6).map(lambda ns: StateMultiset.of(*ns))
