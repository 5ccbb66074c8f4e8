"""End-to-end acceptance checks, one test per criterion.

Each test enforces its own wall-clock limit.  The terminal summary prints a
PASS/FAIL line per criterion (see conftest.py).
"""
import itertools
import math
import random
import time

import numpy as np

from primesums.constructions import MISSED_30, doubling_family, problem66a_family, problem66b_family, verify
from primesums.extremal_search import SearchProblem, brute_force_max_noncovering, hfold_bits, max_noncovering
from primesums.prime_tools import PrimeSubset, progression_filter, sieve, two_prime_reps
from primesums.q_construction import (
    build_layers,
    check_nesting,
    check_odd_identity,
    ledger_conservation,
    make_schedule,
    pruning_residuals,
    verify_fact2,
)
from primesums.residue_ring import ResidueSet, coverage, iterated_sumset, sumset, totient

# frozen after the double-loop check in test_c1
MISSED_15 = [14]


def trial_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def test_c1_boundary_mod15():
    """criterion 1: {1,2,4,7,13}+{..}+{..} over Z_15 misses exactly {14}, < 1 ms"""
    A = ResidueSet.from_iterable(15, [1, 2, 4, 7, 13])
    t0 = time.perf_counter()
    missed = coverage(iterated_sumset(A, 3)).missed.members()
    elapsed = time.perf_counter() - t0
    members = A.members()
    pairs = {(a + b) % 15 for a in members for b in members}
    triples = {(s + c) % 15 for s in pairs for c in members}
    oracle = sorted(set(range(15)) - triples)
    assert oracle == MISSED_15
    assert missed == MISSED_15
    assert 14 not in iterated_sumset(A, 3)
    assert elapsed < 1e-3, elapsed


def test_c2_sharpness_mod15():
    """criterion 2: max non-covering unit subset of Z_15 has size 5 = (5/8)*8; all size >= 6 cover, < 1 s"""
    t0 = time.perf_counter()
    units = [u for u in range(15) if math.gcd(u, 15) == 1]
    full = (1 << 15) - 1
    best = -1
    n_subsets = 0
    big_noncovering = 0
    for s in range(len(units) + 1):
        for A in itertools.combinations(units, s):
            n_subsets += 1
            if hfold_bits(A, 15, 3) != full:
                best = max(best, s)
                big_noncovering += s >= 6
    prob = SearchProblem(15, h=3)
    pruned = max_noncovering(prob)
    brute, _ = brute_force_max_noncovering(prob)
    elapsed = time.perf_counter() - t0
    assert n_subsets == 2**8 and big_noncovering == 0
    assert best == brute == pruned.max_size == 5
    assert 5 * totient(15) == 8 * best
    assert pruned.complete
    assert elapsed < 1.0, elapsed


def test_c3_family_verifications():
    """criterion 3: mod-30p and mod-12p families for p in {7,11,13,17,19}, < 10 s total"""
    t0 = time.perf_counter()
    for p in (7, 11, 13, 17, 19):
        c = problem66b_family(p)
        rep = verify(c)
        assert rep.passed, [r for r in rep.results if r.status != "pass"]
        assert rep.size == 5 * (p - 1)
        assert 8 * rep.size == 5 * totient(30 * p)
        S = iterated_sumset(c.produce(), 3)
        assert not any(x % 30 == 29 for x in S)

        c = problem66a_family(p)
        rep = verify(c)
        assert rep.passed, [r for r in rep.results if r.status != "pass"]
        A = c.produce()
        S2 = sumset(A, A)
        assert not any(x % 12 == 4 for x in S2)
        cov = coverage(S2, "even")
        assert cov.proportion_missed_even >= 1 / 6
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, elapsed


def test_c4_doubling_family():
    """criterion 4: |A_k| = 5*2^k > 2^(k+2) and A_k+A_k misses every lift of B, k = 1..10, < 30 s"""
    t0 = time.perf_counter()
    for k in range(1, 11):
        c = doubling_family(k)
        rep = verify(c)
        assert rep.passed, [r for r in rep.results if r.status != "pass"]
        A = c.produce()
        m = 30 << k
        assert len(A) == 5 << k > 1 << (k + 2) and totient(m) == 1 << (k + 3)
        S = sumset(A, A)
        lifted = [b + 30 * j for b in MISSED_30 for j in range(m // 30)]
        assert len(lifted) == 5 << k
        assert not any(x in S for x in lifted)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, elapsed


def test_c5_dirichlet_density():
    """criterion 5: primes in {1,2,4,7,13} mod 15 up to 1e6 are 5/8 of all primes within 0.0125, < 5 s"""
    t0 = time.perf_counter()
    t = sieve(10**6)
    S = progression_filter(t, 15, [1, 2, 4, 7, 13])
    ratio = len(S) / len(t)
    elapsed = time.perf_counter() - t0
    assert len(t) == 78498
    assert abs(ratio - 0.625) <= 0.0125, ratio
    assert elapsed < 5.0, elapsed


def test_c6_q_structural_suite():
    """criterion 6: default schedule nesting, odd identity, pruning completeness, Fact 2, conservation, < 2 min"""
    t0 = time.perf_counter()
    sched = make_schedule()
    assert sched.x == (100, 800, 6419, 51352, 410819, 3286552, 26292419, 210339352)
    layers = build_layers(sched)
    assert check_nesting(layers)
    assert check_odd_identity(layers)
    residuals = pruning_residuals(layers)
    assert set(residuals) == {1, 2, 3} and all(v == 0 for v in residuals.values()), residuals
    fact2 = verify_fact2(layers)
    assert fact2.passed, [(e.target, e.witness) for e in fact2.entries if e.representable]
    for diff, union in ledger_conservation(layers).values():
        assert diff == union
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0, elapsed


def test_c7_negative_control():
    """criterion 7: skipping the pruning step lets some target become a triple sum, < 2 min"""
    t0 = time.perf_counter()
    layers = build_layers(make_schedule(), prune=False)
    fact2 = verify_fact2(layers)
    hits = [e for e in fact2.entries if e.representable]
    assert hits
    for e in hits:
        assert sum(e.witness) == e.target and all(q in layers.Q for q in e.witness)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0, elapsed


def test_c8_oracle_equivalences():
    """criterion 8: sumset vs double loop (500 cases), pair reps to 1e4, sieve to 1e5, zero mismatches"""
    rng = random.Random(8)
    mismatches = 0
    for _ in range(500):
        m = rng.randint(2, 64)
        a = {rng.randrange(m) for _ in range(rng.randint(0, m))}
        b = {rng.randrange(m) for _ in range(rng.randint(0, m))}
        got = sumset(ResidueSet.from_iterable(m, a), ResidueSet.from_iterable(m, b)).members()
        want = sorted({(x + y) % m for x in a for y in b})
        mismatches += got != want
    assert mismatches == 0

    N = 10**4
    ref_primes = [n for n in range(2, N + 1) if trial_prime(n)]
    oracle: dict[int, list[tuple[int, int]]] = {}
    for i, w in enumerate(ref_primes):
        for v in ref_primes[i:]:
            if w + v > N:
                break
            oracle.setdefault(w + v, []).append((w, v))
    P = PrimeSubset.all(sieve(N))
    for n in range(4, N + 1):
        got = [(r.w, r.v) for r in two_prime_reps(n, P)]
        mismatches += got != oracle.get(n, [])
    assert mismatches == 0

    M = 10**5
    flags = sieve(M).is_prime(np.arange(M + 1))
    mismatches += sum(bool(flags[n]) != trial_prime(n) for n in range(M + 1))
    assert mismatches == 0
