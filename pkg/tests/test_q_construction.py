import json
import math

import numpy as np
import pytest

from primesums.prime_tools import PrimeSubset, sieve, three_prime_witness, two_prime_reps
from primesums.q_construction import (
    ScheduleError,
    build_H,
    build_layers,
    check_nesting,
    check_odd_identity,
    fact1_series,
    fact2_at,
    ledger_conservation,
    load_schedule_config,
    make_schedule,
    next_target,
    pruning_residuals,
    trim_left,
    verify_fact2,
    write_checkpoint_csv,
    write_ledger_csv,
)


@pytest.fixture(scope="module")
def small():
    return build_layers(make_schedule(K=6))


@pytest.fixture(scope="module")
def small_unpruned():
    return build_layers(make_schedule(K=6), prune=False)


def test_default_schedule_points():
    s = make_schedule()
    assert s.x == (100, 800, 6419, 51352, 410819, 3286552, 26292419, 210339352)
    assert s.congruence_ok()
    assert s.target_indices() == [1, 2, 3]


def test_k5_schedule():
    s = make_schedule(K=5)
    assert s.x[:2] == (100, 800)
    assert s.at(3) == next_target(6400) == 6419
    assert all(s.at(2 * k + 1) % 30 == 29 for k in s.target_indices())


def test_next_target_is_least_above():
    for c in (0, 28.5, 29, 6400, 12345.9):
        n = next_target(c)
        assert n > c and n % 30 == 29 and n - 30 <= c


@pytest.mark.parametrize("K", [0, 1, 2, 3])
def test_too_few_checkpoints(K):
    with pytest.raises(ScheduleError):
        make_schedule(K=K)


def test_schedule_rejections():
    with pytest.raises(ScheduleError, match="x_"):
        make_schedule(K=8, max_x=10**6)
    with pytest.raises(ScheduleError):
        make_schedule("explicit", {"points": [100, 800, 1230, 2000]}, K=4)
    with pytest.raises(ScheduleError):
        make_schedule("explicit", {"points": [100, 90, 119, 2000]}, K=4)
    with pytest.raises(ScheduleError):
        make_schedule("tower")
    with pytest.raises(ScheduleError):
        make_schedule(params={"r": 1})


def test_layer_definitions_on_toy_schedule():
    s = make_schedule("explicit", {"points": [100, 800, 1229, 9000]}, K=4)
    t = sieve(9000)
    H = build_H(s, t)
    primes = t.primes.tolist()
    assert H.between(100, 800).tolist() == [p for p in primes if 100 < p <= 800]
    assert H.between(800, 1229).tolist() == [p for p in primes if 800 < p <= 1229 and p % 15 in (1, 2, 4, 7, 13)]
    assert len(H.between(0, 100)) == 0  # layers start above x_1


def test_degenerate_trim_flagged():
    s = make_schedule("explicit", {"points": [100, 800, 1229, 9000]}, K=4)
    left = trim_left(s, 1)
    assert left == pytest.approx(1229 - 800 - 1229 / math.sqrt(math.log(1229)))
    assert left <= 800
    layers = build_layers(s)
    rec = layers.trims[0]
    assert rec.degenerate and rec.trimmed > 0
    assert len(layers.even_block(layers.W, 1)) == 0


def test_trim_bound_on_default_blocks(small):
    s = small.schedule
    for rec in small.trims:
        assert not rec.degenerate
        block = small.even_block(small.W, rec.k)
        assert (block < rec.left).all()
        assert len(small.H.between(math.ceil(rec.left) - 1, s.at(2 * rec.k + 1))) >= rec.trimmed


def test_structural_invariants(small):
    assert check_nesting(small)
    assert check_odd_identity(small)
    assert all(v == 0 for v in pruning_residuals(small).values())
    for diff, union in ledger_conservation(small).values():
        assert diff == union


def test_pruning_cross_checked_with_two_prime_reps(small):
    s = small.schedule
    for k in s.target_indices():
        target = s.at(2 * k + 1)
        Qk = PrimeSubset.from_values(small.table, small.even_block(small.Q, k))
        Wk = set(small.even_block(small.W, k).tolist())
        removed = Wk - set(Qk.members.tolist())
        justified = set()
        for p in small.small_primes(k).tolist():
            assert two_prime_reps(target - p, Qk) == []
            rest = target - p
            justified |= {w for w in Wk if rest - w in Wk}
        assert removed == justified


def test_ledger_rows_are_valid(small):
    s = small.schedule
    for led in small.ledgers:
        target = s.at(2 * led.k + 1)
        W = set(small.even_block(small.W, led.k).tolist())
        for p, w, v in led.records.tolist():
            assert p + w + v == target and w <= v and w in W and v in W
            assert s.at(1) < p <= s.at(2 * led.k)
        assert led.removed == len(led.elements())


def test_fact2_holds_and_matches_independent_search(small):
    rep = verify_fact2(small)
    assert rep.passed
    for e in rep.entries:
        assert three_prime_witness(e.target, small.Q) is None
        assert e.cases["I_all_in_block"]["excluded_by_residues"]


def test_negative_control_finds_witness(small_unpruned):
    rep = verify_fact2(small_unpruned)
    assert not rep.passed
    for e in rep.entries:
        if e.representable:
            a, b, c = e.witness
            assert a + b + c == e.target
            assert all(x in small_unpruned.Q for x in e.witness)


def test_non_29_target_is_representable(small):
    for k in small.schedule.target_indices():
        n = small.schedule.at(2 * k + 1) - 2  # 27 mod 30
        e = fact2_at(small, k, n)
        assert e.representable and sum(e.witness) == n


def test_deterministic_layers():
    a = build_layers(make_schedule(K=5))
    b = build_layers(make_schedule(K=5))
    assert np.array_equal(a.Q.mask, b.Q.mask)
    assert all(np.array_equal(x.records, y.records) for x, y in zip(a.ledgers, b.ledgers))


def test_fact1_series(small):
    f = fact1_series(small)
    for h, w, q in zip(f.H, f.W, f.Q):
        assert q.count <= w.count <= h.count
    assert all(f.floor_respected.values())
    assert all(0 <= v < 1 for v in f.removed_fraction.values())


def test_exports(small, tmp_path):
    write_checkpoint_csv(small, tmp_path / "c.csv")
    write_ledger_csv(small, tmp_path / "l.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("j,x,H_count") and len(lines) == small.schedule.K
    assert "np." not in lines[1]
    n_rows = sum(len(led.records) for led in small.ledgers)
    assert len((tmp_path / "l.csv").read_text().splitlines()) == n_rows + 1


def test_config_loading(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"rule": "geometric", "params": {"x1": 100, "r": 8}, "K": 5}))
    sched, cfg = load_schedule_config(p)
    assert sched.x == make_schedule(K=5).x
    p.write_text(json.dumps({"K": 5, "bogus": 1}))
    with pytest.raises(ScheduleError):
        load_schedule_config(p)


def test_toy_schedule_too_close_to_exclude_targets():
    # 1229 < 3 * 800, so three primes from the odd interval reach the target
    layers = build_layers(make_schedule("explicit", {"points": [100, 800, 1229, 9000]}, K=4))
    rep = verify_fact2(layers)
    assert not rep.passed
    assert rep.entries[0].witness == (101, 331, 797)
