"""A finite, checkable version of the sparse prime set whose triple sums miss
every target checkpoint.

Three nested layers are built over a schedule x_1 < x_2 < ... < x_K:

* H takes every prime in the odd-index intervals (x_j, x_{j+1}] and only the
  primes congruent to 1, 2, 4, 7, 13 mod 15 in the even-index intervals.
* W drops from each even interval the tail
  [x_{2k+1} - x_{2k} - x_{2k+1}/sqrt(log x_{2k+1}), x_{2k+1}].
* Q further drops every element of a pair w + v = x_{2k+1} - p with w, v in
  W_{2k} and p any prime in (x_1, x_{2k}].

The towers of exponentials that make the densities converge are out of reach,
so the schedule grows geometrically and only the structural facts are checked.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .prime_tools import (
    DEFAULT_MAX_LIMIT,
    PrimeSubset,
    PrimeTable,
    cached_sieve,
    density_series,
    pair_sum_counts,
    progression_filter,
    unordered_rep_counts,
)
from .residue_ring import ResidueSet, iterated_sumset

SHAO_CLASSES = (1, 2, 4, 7, 13)
TARGET_RESIDUE = 29
TARGET_MODULUS = 30
DEFAULT_X1_FLOOR = 30
GROWTH_NOTE = (
    "geometric schedule: the asymptotic densities 1 and 5/8 are not reproduced "
    "at this scale; only nesting, pruning completeness and target avoidance are asserted"
)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    x: tuple[int, ...]  # x[0] is x_1
    rule: str
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.x)

    def at(self, j: int) -> int:
        """The 1-based checkpoint x_j."""
        return self.x[j - 1]

    def target_indices(self) -> list[int]:
        """k >= 1 with x_{2k+1} in the schedule."""
        return [k for k in range(1, (self.K - 1) // 2 + 1)]

    def congruence_ok(self) -> bool:
        return all(self.at(2 * k + 1) % TARGET_MODULUS == TARGET_RESIDUE for k in self.target_indices())

    def to_dict(self) -> dict[str, Any]:
        return {"rule": self.rule, "params": dict(self.params), "K": self.K, "x": list(self.x)}


def next_target(candidate: float) -> int:
    """Least integer strictly above ``candidate`` that is 29 mod 30 (hence odd)."""
    n = math.floor(candidate) + 1
    return n + (TARGET_RESIDUE - n) % TARGET_MODULUS


def _validate(x: Sequence[int], floor: int) -> None:
    if x[0] < floor:
        raise ScheduleError(f"x_1={x[0]} below floor {floor}")
    for j in range(1, len(x)):
        if x[j] <= x[j - 1]:
            raise ScheduleError(f"checkpoints not increasing at index {j + 1}")
    for j in range(3, len(x) + 1, 2):
        if x[j - 1] % TARGET_MODULUS != TARGET_RESIDUE:
            raise ScheduleError(f"target x_{j}={x[j - 1]} is not 29 mod 30")


def make_schedule(
    rule: str = "geometric",
    params: dict[str, Any] | None = None,
    K: int = 8,
    *,
    max_x: int = DEFAULT_MAX_LIMIT,
    x1_floor: int = DEFAULT_X1_FLOOR,
) -> Schedule:
    """Build a checkpoint sequence of length ``K``.

    ``geometric``: params ``x1`` (default 100) and ``r`` (default 8); even
    points are ceil(r * previous), odd points from x_3 on are snapped to the
    next integer that is 29 mod 30.  ``explicit``: params ``points``.
    """
    params = dict(params or {})
    if K < 4:
        raise ScheduleError(f"K={K}: need at least 4 checkpoints")
    if rule == "geometric":
        x1 = int(params.setdefault("x1", 100))
        r = params.setdefault("r", 8)
        if r <= 1:
            raise ScheduleError("growth ratio must exceed 1")
        x = [x1]
        for j in range(2, K + 1):
            cand = r * x[-1]
            x.append(next_target(cand) if j % 2 == 1 else math.ceil(cand))
            if x[-1] > max_x:
                raise ScheduleError(f"x_{j}={x[-1]} exceeds budget {max_x}")
    elif rule == "explicit":
        x = [int(v) for v in params.get("points", [])]
        if len(x) != K:
            raise ScheduleError(f"explicit schedule has {len(x)} points, K={K}")
        for j, v in enumerate(x, 1):
            if v > max_x:
                raise ScheduleError(f"x_{j}={v} exceeds budget {max_x}")
    else:
        raise ScheduleError(f"unknown growth rule {rule!r}")
    _validate(x, x1_floor)
    return Schedule(tuple(x), rule, params)


@dataclass(frozen=True)
class Interval:
    j: int
    lo: int  # exclusive
    hi: int  # inclusive
    restricted: bool  # even index: only the mod-15 classes


def intervals(schedule: Schedule) -> list[Interval]:
    return [Interval(j, schedule.at(j), schedule.at(j + 1), j % 2 == 0) for j in range(1, schedule.K)]


def _interval_mask(table: PrimeTable, lo: float, hi: float) -> np.ndarray:
    """Mask over prime indices of primes in (lo, hi]."""
    mask = np.zeros(len(table.primes), dtype=bool)
    a = np.searchsorted(table.primes, lo, side="right")
    b = np.searchsorted(table.primes, hi, side="right")
    mask[a:b] = True
    return mask


def build_H(schedule: Schedule, table: PrimeTable) -> PrimeSubset:
    if schedule.at(schedule.K) > table.limit:
        raise ScheduleError(f"schedule reaches {schedule.at(schedule.K)} beyond table limit {table.limit}")
    classes = progression_filter(table, 15, SHAO_CLASSES).mask
    mask = np.zeros(len(table.primes), dtype=bool)
    for iv in intervals(schedule):
        part = _interval_mask(table, iv.lo, iv.hi)
        mask |= part & classes if iv.restricted else part
    return PrimeSubset(table, mask)


@dataclass(frozen=True)
class TrimRecord:
    k: int
    left: float  # trimmed closed interval is [left, x_{2k+1}]
    floor: float  # x_{2k+1} / sqrt(log x_{2k+1})
    trimmed: int
    degenerate: bool  # left <= x_{2k}: the whole even interval goes


def trim_left(schedule: Schedule, k: int) -> float:
    x_next = schedule.at(2 * k + 1)
    return x_next - schedule.at(2 * k) - x_next / math.sqrt(math.log(x_next))


def build_W(schedule: Schedule, H: PrimeSubset) -> tuple[PrimeSubset, list[TrimRecord]]:
    table = H.parent
    mask = H.mask.copy()
    trims = []
    for k in schedule.target_indices():
        x_next = schedule.at(2 * k + 1)
        left = trim_left(schedule, k)
        a = np.searchsorted(table.primes, math.ceil(left), side="left")
        b = np.searchsorted(table.primes, x_next, side="right")
        a = max(a, np.searchsorted(table.primes, schedule.at(2 * k), side="right"))
        trimmed = int(mask[a:b].sum())
        mask[a:b] = False
        trims.append(TrimRecord(k, left, x_next / math.sqrt(math.log(x_next)), trimmed, left <= schedule.at(2 * k)))
    return PrimeSubset(table, mask), trims


@dataclass
class RemovalLedger:
    k: int
    target: int
    candidates_p: int  # primes p in (x_1, x_{2k}]
    removed: int
    sum_t_p: int  # total unordered representations over all p
    records: np.ndarray  # rows (p, w, v), w <= v, w + v = target - p

    def elements(self) -> np.ndarray:
        return np.unique(self.records[:, 1:].ravel()) if len(self.records) else np.zeros(0, np.int64)


@dataclass
class QLayers:
    schedule: Schedule
    table: PrimeTable
    H: PrimeSubset
    W: PrimeSubset
    Q: PrimeSubset
    trims: list[TrimRecord]
    ledgers: list[RemovalLedger]
    pruned: bool = True

    def even_block(self, layer: PrimeSubset, k: int) -> np.ndarray:
        return layer.between(self.schedule.at(2 * k), self.schedule.at(2 * k + 1))

    def small_primes(self, k: int) -> np.ndarray:
        """All primes p with x_1 < p <= x_{2k}."""
        t = self.table
        return t.primes[t.count(self.schedule.at(1)) : t.count(self.schedule.at(2 * k))]


def _justify(target: int, removed: np.ndarray, ps: np.ndarray, block: np.ndarray, lo: int) -> np.ndarray:
    """One (p, w, v) row per removed element, using the least p that works for it.

    Each element starts at the least p that can keep its partner inside the
    block and steps upward through the primes, all elements in lockstep.
    """
    dense = np.zeros(int(block[-1]) - lo + 1 if len(block) else 1, dtype=bool)
    dense[block - lo] = True
    todo = removed.copy()
    start = np.searchsorted(ps, target - todo - int(block[-1]), side="left")
    rows = []
    step = 0
    while len(todo):
        idx = start + step
        live = idx < len(ps)
        if not live.any():
            raise AssertionError(f"{len(todo)} removed elements lack a representation")
        p = ps[np.minimum(idx, len(ps) - 1)]
        other = target - p - todo
        off = other - lo
        ok = live & (off >= 0) & (off < len(dense))
        ok[ok] = dense[off[ok]]
        if ok.any():
            e, o = todo[ok], other[ok]
            rows.append(np.column_stack([p[ok], np.minimum(e, o), np.maximum(e, o)]))
            todo, start = todo[~ok], start[~ok]
        step += 1
    return np.concatenate(rows) if rows else np.zeros((0, 3), dtype=np.int64)


def build_Q(schedule: Schedule, H: PrimeSubset, W: PrimeSubset, trims: list[TrimRecord], *, prune: bool = True) -> QLayers:
    table = W.parent
    mask = W.mask.copy()
    ledgers = []
    layers = QLayers(schedule, table, H, W, PrimeSubset(table, mask), trims, ledgers, prune)
    if not prune:
        return layers
    for k in schedule.target_indices():
        target = schedule.at(2 * k + 1)
        block = layers.even_block(W, k)
        ps = layers.small_primes(k)
        if len(block) == 0 or len(ps) == 0:
            ledgers.append(RemovalLedger(k, target, len(ps), 0, 0, np.zeros((0, 3), np.int64)))
            continue
        # w is removed iff target - w is p + v for some small prime p and v in the block
        hit = pair_sum_counts(ps, block, target - block) > 0
        removed = block[hit]
        sum_tp = int(unordered_rep_counts(block, target - ps).sum())
        records = _justify(target, removed, ps, block, int(block[0]))
        records = np.unique(records, axis=0)
        mask[table.index_of(removed)] = False
        ledgers.append(RemovalLedger(k, target, len(ps), len(removed), sum_tp, records))
    layers.Q = PrimeSubset(table, mask)
    return layers


def build_layers(schedule: Schedule, table: PrimeTable | None = None, *, prune: bool = True) -> QLayers:
    if table is None:
        table = cached_sieve(schedule.at(schedule.K))
    H = build_H(schedule, table)
    W, trims = build_W(schedule, H)
    return build_Q(schedule, H, W, trims, prune=prune)


# ---------------------------------------------------------------- checks


def check_nesting(layers: QLayers) -> bool:
    return layers.Q <= layers.W and layers.W <= layers.H


def check_odd_identity(layers: QLayers) -> bool:
    for iv in intervals(layers.schedule):
        if iv.restricted:
            continue
        part = _interval_mask(layers.table, iv.lo, iv.hi)
        h, w, q = (layers.H.mask[part], layers.W.mask[part], layers.Q.mask[part])
        if not (np.array_equal(h, w) and np.array_equal(w, q) and h.all()):
            return False
    return True


def pruning_residuals(layers: QLayers) -> dict[int, int]:
    """Per k: number of (p, {w, v}) with w, v in Q_{2k}, p prime in (x_1, x_{2k}], w + v + p = x_{2k+1}."""
    out = {}
    for k in layers.schedule.target_indices():
        target = layers.schedule.at(2 * k + 1)
        block = layers.even_block(layers.Q, k)
        ps = layers.small_primes(k)
        out[k] = int(unordered_rep_counts(block, target - ps).sum()) if len(block) and len(ps) else 0
    return out


def ledger_conservation(layers: QLayers) -> dict[int, tuple[int, int]]:
    """Per k: (|W_{2k}| - |Q_{2k}|, size of the union of ledger elements)."""
    out = {}
    by_k = {led.k: led for led in layers.ledgers}
    for k in layers.schedule.target_indices():
        diff = len(layers.even_block(layers.W, k)) - len(layers.even_block(layers.Q, k))
        led = by_k.get(k)
        out[k] = (diff, len(led.elements()) if led is not None else 0)
    return out


@dataclass
class Fact2Entry:
    k: int
    target: int
    representable: bool
    witness: tuple[int, int, int] | None
    cases: dict[str, Any]


@dataclass
class Fact2Report:
    entries: list[Fact2Entry]
    note: str = GROWTH_NOTE

    @property
    def passed(self) -> bool:
        return not any(e.representable for e in self.entries)

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "note": self.note,
            "entries": [
                {"k": e.k, "target": e.target, "representable": e.representable,
                 "witness": list(e.witness) if e.witness else None, "cases": e.cases}
                for e in self.entries
            ],
        }


def triple_witness(members: np.ndarray, n: int) -> tuple[int, int, int] | None:
    """Exhaustive: the least sorted triple from ``members`` summing to ``n``, or None."""
    members = members[members < n]
    if not len(members):
        return None
    hit = pair_sum_counts(members, members, n - members) > 0
    if not hit.any():
        return None
    q1 = int(members[np.argmax(hit)])
    rest = members[members >= q1]
    pos = np.searchsorted(members, n - q1 - rest)
    pos = np.minimum(pos, len(members) - 1)
    ok = members[pos] == n - q1 - rest
    # q1 is the least summand of some triple, so a partner pair exists in rest
    q2 = int(rest[np.argmax(ok)])
    return tuple(sorted((q1, q2, n - q1 - q2)))


def fact2_at(layers: QLayers, k: int, n: int | None = None) -> Fact2Entry:
    """Exhaustive triple check of ``n`` (default x_{2k+1}) against Q, with case tallies.

    Summands at most n split into L = Q up to x_{2k} and M = Q_{2k}.
    """
    s = layers.schedule
    n = s.at(2 * k + 1) if n is None else n
    Qn = layers.Q.members[layers.Q.members < n]
    witness = triple_witness(Qn, n)

    L = Qn[Qn <= s.at(2 * k)]
    M = Qn[Qn > s.at(2 * k)]
    residues = sorted({int(r) for r in M % TARGET_MODULUS})
    if residues:
        R = ResidueSet.from_iterable(TARGET_MODULUS, residues)
        res_blocked = (n % TARGET_MODULUS) not in iterated_sumset(R, 3)
    else:
        res_blocked = True
    maxL = int(L[-1]) if len(L) else 0
    maxM = int(M[-1]) if len(M) else 0
    case_iv = int((pair_sum_counts(M, M, n - L) > 0).sum()) if len(L) and len(M) else 0
    cases = {
        "I_all_in_block": {"block_size": int(len(M)), "block_residues_mod_30": residues,
                           "excluded_by_residues": bool(res_blocked)},
        "II_two_below": {"bound": 2 * maxL + maxM, "excluded_by_size": 2 * maxL + maxM < n},
        "III_all_below": {"bound": 3 * maxL, "excluded_by_size": 3 * maxL < n},
        "IV_one_below": {"candidates": int(len(L)), "completions_found": case_iv},
    }
    return Fact2Entry(k, n, witness is not None, witness, cases)


def verify_fact2(layers: QLayers) -> Fact2Report:
    return Fact2Report([fact2_at(layers, k) for k in layers.schedule.target_indices()])


@dataclass
class Fact1Summary:
    checkpoints: list[int]
    H: list[Any]
    W: list[Any]
    Q: list[Any]
    max_rel_gap_QW: float
    interval_W_over_H: dict[int, float]
    removed_fraction: dict[int, float]
    floor_respected: dict[int, bool]
    note: str = GROWTH_NOTE


def fact1_series(layers: QLayers) -> Fact1Summary:
    s = layers.schedule
    xs = list(s.x[1:])
    dH, dW, dQ = (density_series(S, xs) for S in (layers.H, layers.W, layers.Q))
    gaps = [abs(q.count - w.count) / w.count for q, w in zip(dQ, dW) if w.count]
    ratio = {}
    for iv in intervals(s):
        h = len(layers.H.between(iv.lo, iv.hi))
        ratio[iv.j] = len(layers.W.between(iv.lo, iv.hi)) / h if h else float("nan")
    removed, floor_ok = {}, {}
    trims = {t.k: t for t in layers.trims}
    for led in layers.ledgers:
        w = len(layers.even_block(layers.W, led.k))
        removed[led.k] = led.removed / w if w else 0.0
        els = led.elements()
        if not trims[led.k].degenerate:
            floor_ok[led.k] = bool((els > trims[led.k].floor).all())
    return Fact1Summary(xs, dH, dW, dQ, max(gaps) if gaps else 0.0, ratio, removed, floor_ok)


# ---------------------------------------------------------------- exports


def write_checkpoint_csv(layers: QLayers, path: str | os.PathLike) -> None:
    s = layers.schedule
    xs = list(s.x[1:])
    series = [density_series(S, xs) for S in (layers.H, layers.W, layers.Q)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "x", "H_count", "W_count", "Q_count", "H_value", "W_value", "Q_value"])
        for i, x in enumerate(xs):
            h, wv, q = (ser[i] for ser in series)
            w.writerow([i + 2, x, h.count, wv.count, q.count, repr(h.value), repr(wv.value), repr(q.value)])


def write_ledger_csv(layers: QLayers, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "p", "w", "v"])
        for led in layers.ledgers:
            for p, a, b in led.records.tolist():
                w.writerow([led.k, p, a, b])


def load_schedule_config(path: str | os.PathLike) -> tuple[Schedule, dict[str, Any]]:
    """JSON config: {"rule": ..., "params": {...}, "K": ..., "prune": true, "seed": 0}."""
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ScheduleError("config must be a JSON object")
    unknown = set(cfg) - {"rule", "params", "K", "prune", "seed", "max_x"}
    if unknown:
        raise ScheduleError(f"unknown config keys {sorted(unknown)}")
    kw = {"max_x": int(cfg["max_x"])} if "max_x" in cfg else {}
    sched = make_schedule(cfg.get("rule", "geometric"), cfg.get("params"), int(cfg.get("K", 8)), **kw)
    return sched, cfg
