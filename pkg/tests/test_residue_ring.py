import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from primesums.residue_ring import (
    Congruence,
    Modulus,
    ModulusMismatch,
    ResidueSet,
    coverage,
    factorize,
    filter_set,
    find_summands,
    iterated_sumset,
    lift,
    sumset,
    totient,
    units,
)


def loop_sumset(A, B, m):
    return {(a + b) % m for a in A for b in B}


def loop_totient(m):
    return sum(1 for a in range(m) if math.gcd(a, m) == 1)


@st.composite
def residue_sets(draw, max_m=64, m=None):
    if m is None:
        m = draw(st.integers(2, max_m))
    members = draw(st.sets(st.integers(0, m - 1), max_size=m))
    return ResidueSet.from_iterable(m, members)


@st.composite
def same_modulus(draw, n, max_m=64):
    m = draw(st.integers(2, max_m))
    return [draw(residue_sets(m=m)) for _ in range(n)]


def test_basic_members_and_reduction_of_inputs():
    A = ResidueSet.from_iterable(15, [1, 16, -1, 4])
    assert A.members() == [1, 4, 14]
    assert len(A) == 3 and 14 in A and 2 not in A


def test_modulus_rejects_nonpositive():
    with pytest.raises(ValueError):
        Modulus(0)


def test_mismatched_moduli_raise():
    with pytest.raises(ModulusMismatch):
        sumset(ResidueSet.full(6), ResidueSet.full(7))


def test_iterated_rejects_h_zero():
    with pytest.raises(ValueError):
        iterated_sumset(ResidueSet.full(5), 0)


def test_units_and_totient_small():
    assert units(15).members() == [1, 2, 4, 7, 8, 11, 13, 14]
    assert totient(30) == 8 and totient(2) == 1
    with pytest.raises(ValueError):
        units(1)


def test_shao_triple_sumset_misses_only_14():
    A = ResidueSet.from_iterable(15, [1, 2, 4, 7, 13])
    S = iterated_sumset(A, 3)
    assert coverage(S).missed.members() == [14]


def test_empty_set_sumset_is_empty():
    E = ResidueSet.empty(9)
    assert len(sumset(E, ResidueSet.full(9))) == 0


def test_filters_zero_is_even():
    assert 0 in filter_set(12, "even")
    assert filter_set(12, "odd").members() == [1, 3, 5, 7, 9, 11]
    assert filter_set(30, Congruence(29, 30)).members() == [29]
    assert filter_set(60, Congruence(4, 12)).members() == [4, 16, 28, 40, 52]
    with pytest.raises(ValueError):
        filter_set(10, Congruence(1, 3))


def test_coverage_even_proportion():
    A = ResidueSet.from_iterable(30, [1, 7, 13, 17, 19])
    rep = coverage(sumset(A, A), "even")
    assert rep.missed.members() == [10, 12, 16, 22, 28]
    assert rep.proportion_missed_even == Fraction(1, 3)


def test_lift_with_units():
    base = ResidueSet.from_iterable(30, [1, 7, 13, 17, 19])
    L = lift(base, 210, unit_filter=True)
    assert all(math.gcd(a, 210) == 1 and a % 30 in base for a in L)
    assert len(L) == 5 * 6


def test_lift_requires_divisibility():
    with pytest.raises(ValueError):
        lift(ResidueSet.full(4), 10)


def test_find_summands_is_lex_least():
    A = ResidueSet.from_iterable(15, [1, 2, 4, 7, 13])
    got = find_summands([A] * 3, 13)
    brute = min(t for t in ((a, b, c) for a in A for b in A for c in A) if sum(t) % 15 == 13)
    assert got == brute
    assert find_summands([A] * 3, 14) is None


def test_factorize():
    assert factorize(360) == {2: 3, 3: 2, 5: 1}
    assert Modulus(30).is_squarefree and not Modulus(12).is_squarefree


@settings(max_examples=200, deadline=None)
@given(same_modulus(2))
def test_sumset_matches_double_loop(sets):
    A, B = sets
    assert set(sumset(A, B).members()) == loop_sumset(A.members(), B.members(), A.m)


@settings(max_examples=100, deadline=None)
@given(same_modulus(2))
def test_sumset_commutes(sets):
    A, B = sets
    assert sumset(A, B) == sumset(B, A)


@settings(max_examples=100, deadline=None)
@given(same_modulus(3, max_m=40))
def test_sumset_associates(sets):
    A, B, C = sets
    assert sumset(sumset(A, B), C) == sumset(A, sumset(B, C))


@settings(max_examples=100, deadline=None)
@given(same_modulus(3))
def test_sumset_monotone(sets):
    A, B, C = sets
    assert sumset(A, C) <= sumset(A | B, C)


@settings(max_examples=100, deadline=None)
@given(residue_sets(max_m=48), st.integers(1, 4))
def test_iterated_matches_repeated_sumset(A, h):
    ref = A
    for _ in range(h - 1):
        ref = ResidueSet.from_iterable(A.m, loop_sumset(ref.members(), A.members(), A.m))
    assert iterated_sumset(A, h) == ref


@settings(max_examples=100, deadline=None)
@given(same_modulus(2), st.data())
def test_unit_scaling_is_equivariant(sets, data):
    A, B = sets
    u = data.draw(st.sampled_from(units(A.m).members()))
    assert sumset(A, B).scale(u) == sumset(A.scale(u), B.scale(u))


@settings(max_examples=100, deadline=None)
@given(same_modulus(2), st.data())
def test_reduction_commutes_with_sumset(sets, data):
    A, B = sets
    q = data.draw(st.sampled_from([d for d in range(2, A.m + 1) if A.m % d == 0]))
    assert sumset(A, B).reduce(q) == sumset(A.reduce(q), B.reduce(q))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(1, 6), st.data())
def test_lift_then_reduce_matches_base_sumset(q, mult, data):
    A = data.draw(residue_sets(m=q))
    L = lift(A, q * mult)
    assert sumset(L, L).reduce(q) == sumset(A, A)


@settings(max_examples=100, deadline=None)
@given(same_modulus(2))
def test_set_algebra_matches_python_sets(sets):
    A, B = sets
    a, b = set(A), set(B)
    assert set(A | B) == a | b and set(A & B) == a & b and set(A - B) == a - b
    assert set(A.complement()) == set(range(A.m)) - a


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 2000))
def test_units_count_equals_totient(m):
    assert len(units(m)) == totient(m) == loop_totient(m)


def test_totient_against_numpy_sieve():
    N = 10**6
    phi = np.arange(N + 1)
    for p in range(2, N + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    rng = random.Random(5)
    sample = list(range(2, 20001)) + rng.sample(range(20001, N + 1), 3000)
    assert all(totient(m) == phi[m] for m in sample)
    assert all(len(units(m)) == phi[m] for m in range(2, 3001))


def test_totient_sampled_up_to_a_million():
    rng = random.Random(20240101)
    for m in rng.sample(range(2, 10**6 + 1), 30):
        phi, n, d = m, m, 2
        while d * d <= n:
            if n % d == 0:
                phi = phi // d * (d - 1)
                while n % d == 0:
                    n //= d
            d += 1
        if n > 1:
            phi = phi // n * (n - 1)
        assert totient(m) == phi
    for m in rng.sample(range(2, 5000), 20):
        assert len(units(m)) == loop_totient(m)
