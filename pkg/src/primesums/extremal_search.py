"""Exhaustive search for large subsets of Z_m whose h-fold sumset misses a target.

Subsets are enumerated one size at a time, keeping only the canonical
representative of each orbit under multiplication by the units that fix
the target (the lexicographically least sorted member tuple).  Covering
is preserved by that action and by passing to supersets, which is what
makes the size by size scan exact.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Sequence

from .residue_ring import Modulus, ResidueSet, _rotate, filter_set, units

DEFAULT_MAX_NODES = 5_000_000
DEFAULT_MAX_SECONDS = 600.0
DEFAULT_MAX_PHI = 24


class SearchError(ValueError):
    pass


@dataclass(frozen=True)
class SearchProblem:
    m: int
    h: int = 3
    universe: str = "units"  # "units" | "all"
    target: str = "full"  # "full" | "even" | "odd"
    min_size: int = 1
    max_nodes: int = DEFAULT_MAX_NODES
    max_seconds: float = DEFAULT_MAX_SECONDS

    def __post_init__(self):
        if self.h not in (2, 3):
            raise SearchError("h must be 2 or 3")
        if self.universe not in ("units", "all"):
            raise SearchError(f"unknown universe {self.universe!r}")
        if self.target not in ("full", "even", "odd"):
            raise SearchError(f"unknown target {self.target!r}")
        if self.min_size < 0:
            raise SearchError("min_size must be >= 0")

    def universe_members(self) -> list[int]:
        if self.universe == "units":
            return units(self.m).members()
        return list(range(self.m))

    def target_bits(self) -> int:
        return filter_set(self.m, "all" if self.target == "full" else self.target).bits


@dataclass
class SearchResult:
    problem: SearchProblem
    max_size: int
    witnesses: list[tuple[int, ...]]
    orbits_explored: int
    pruned: int
    complete: bool = True
    sizes_scanned: list[int] = field(default_factory=list)


class _Budget:
    def __init__(self, max_nodes: int, max_seconds: float):
        self.max_nodes = max_nodes
        self.deadline = time.monotonic() + max_seconds
        self.nodes = 0

    def spend(self, n: int = 1) -> bool:
        self.nodes += n
        if self.nodes > self.max_nodes:
            return False
        if self.nodes & 0x3FF == 0 and time.monotonic() > self.deadline:
            return False
        return True


def unit_list(m: int) -> list[int]:
    return units(m).members()


def symmetry_group(m: int, target_bits: int | None = None) -> list[int]:
    """Units whose multiplication maps the target onto itself (all units when no target)."""
    us = unit_list(m)
    if target_bits is None:
        return us
    T = [i for i in range(m) if target_bits >> i & 1]
    out = []
    for u in us:
        img = 0
        for t in T:
            img |= 1 << (u * t % m)
        if img == target_bits:
            out.append(u)
    return out


def canonical(A: Sequence[int], m: int, us: Sequence[int] | None = None) -> tuple[int, ...]:
    """Lexicographically least sorted image of ``A`` under multiplication by ``us``
    (default: every unit)."""
    if us is None:
        us = unit_list(m)
    return min(tuple(sorted((u * a) % m for a in A)) for u in us)


def _is_canonical(A: tuple[int, ...], m: int, us: Sequence[int]) -> bool:
    for u in us:
        if u == 1:
            continue
        if tuple(sorted((u * a) % m for a in A)) < A:
            return False
    return True


def hfold_bits(A: Sequence[int], m: int, h: int) -> int:
    base = 0
    for a in A:
        base |= 1 << a
    acc = base
    for _ in range(h - 1):
        nxt = 0
        for a in A:
            nxt |= _rotate(acc, a, m)
        acc = nxt
    return acc


def covers(A: Sequence[int], m: int, h: int, target_bits: int) -> bool:
    return target_bits & ~hfold_bits(A, m, h) == 0


def _candidates(pool: list[int], s: int, anchor: int | None, lead: int | None) -> Iterator[tuple[int, ...]]:
    """Subsets of ``pool`` of size ``s``; with ``anchor`` set, only those containing it.

    ``lead`` restricts to subsets whose first free element is ``pool[lead]``
    (used to split work between processes).
    """
    if anchor is not None:
        rest = [x for x in pool if x != anchor]
        if s == 0:
            return
        k = s - 1
        if lead is None:
            for c in combinations(rest, k):
                yield tuple(sorted((anchor,) + c))
        elif k > 0:
            first = rest[lead]
            for c in combinations(rest[lead + 1:], k - 1):
                yield tuple(sorted((anchor, first) + c))
        elif lead == 0:
            yield (anchor,)
        return
    if lead is None:
        yield from combinations(pool, s)
    elif s > 0:
        first = pool[lead]
        for c in combinations(pool[lead + 1:], s - 1):
            yield (first,) + c


def _scan(args) -> tuple[list[tuple[int, ...]], int, int, bool]:
    m, h, pool, s, anchor, lead, target_bits, us, max_nodes, max_seconds, want_covering, stop_first = args
    budget = _Budget(max_nodes, max_seconds)
    found: list[tuple[int, ...]] = []
    explored = pruned = 0
    for A in _candidates(pool, s, anchor, lead):
        if not budget.spend():
            return found, explored, pruned, False
        if not _is_canonical(A, m, us):
            pruned += 1
            continue
        explored += 1
        if covers(A, m, h, target_bits) == want_covering:
            found.append(A)
            if stop_first:
                break
    return found, explored, pruned, True


def scan_size(
    m: int,
    h: int,
    pool: list[int],
    s: int,
    target_bits: int,
    *,
    want_covering: bool = False,
    stop_first: bool = False,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_seconds: float = DEFAULT_MAX_SECONDS,
    workers: int = 1,
) -> tuple[list[tuple[int, ...]], int, int, bool]:
    """Canonical ``s``-subsets of ``pool`` that cover (or fail to cover) the target.

    Returns ``(matches, orbits_explored, pruned, complete)``; matches are sorted.
    """
    all_units = unit_list(m)
    us = symmetry_group(m, target_bits)
    # with the full unit group acting on the unit pool, every orbit meets the sets containing 1
    anchor = 1 if pool == all_units and len(us) == len(all_units) else None
    if workers <= 1 or s < 2:
        tasks = [(m, h, pool, s, anchor, None, target_bits, us, max_nodes, max_seconds, want_covering, stop_first)]
        outs = [_scan(tasks[0])]
    else:
        n_lead = len(pool) - (1 if anchor is not None else 0)
        tasks = [(m, h, pool, s, anchor, i, target_bits, us, max_nodes, max_seconds, want_covering, stop_first)
                 for i in range(n_lead)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(_scan, tasks))
    found: list[tuple[int, ...]] = []
    explored = pruned = 0
    complete = True
    for f, e, p, c in outs:
        found.extend(f)
        explored += e
        pruned += p
        complete = complete and c
    if explored + pruned > max_nodes:
        complete = False
    found.sort()
    if stop_first:
        found = found[:1]
    return found, explored, pruned, complete


def max_noncovering(problem: SearchProblem, workers: int = 1, max_phi: int = DEFAULT_MAX_PHI) -> SearchResult:
    pool = problem.universe_members()
    if not pool:
        raise SearchError("empty universe")
    if len(pool) > max_phi:
        raise SearchError(f"universe of size {len(pool)} exceeds search cap {max_phi}")
    target = problem.target_bits()
    t0 = time.monotonic()
    explored = pruned = 0
    scanned: list[int] = []
    for s in range(len(pool), problem.min_size - 1, -1):
        if s == 0:
            break
        remaining = problem.max_seconds - (time.monotonic() - t0)
        found, e, p, ok = scan_size(
            problem.m, problem.h, pool, s, target,
            max_nodes=problem.max_nodes - explored - pruned,
            max_seconds=max(remaining, 0.0), workers=workers,
        )
        explored += e
        pruned += p
        scanned.append(s)
        if not ok:
            return SearchResult(problem, s if found else -1, found, explored, pruned, False, scanned)
        if found:
            return SearchResult(problem, s, found, explored, pruned, True, scanned)
    # nothing at or above min_size fails; the empty set misses everything
    floor = max(problem.min_size - 1, 0)
    return SearchResult(problem, floor, [()] if floor == 0 else [], explored, pruned, True, scanned)


def brute_force_max_noncovering(problem: SearchProblem) -> tuple[int, list[tuple[int, ...]]]:
    """Unpruned reference: every subset of the universe, no symmetry, no ordering tricks."""
    pool = problem.universe_members()
    m, h = problem.m, problem.h
    target = set(ResidueSet(Modulus(m), problem.target_bits()).members())
    best, best_sets = -1, []
    n = len(pool)
    for mask in range(1 << n):
        A = [pool[i] for i in range(n) if mask >> i & 1]
        if len(A) < best or len(A) < problem.min_size:
            continue
        sums = {0}
        for _ in range(h):
            sums = {(s + a) % m for s in sums for a in A}
        if not target <= sums:
            if len(A) > best:
                best, best_sets = len(A), []
            best_sets.append(A)
    if best < 0:
        floor = max(problem.min_size - 1, 0)
        return floor, [()] if floor == 0 else []
    us = symmetry_group(m, problem.target_bits())
    witnesses = sorted({canonical(A, m, us) for A in best_sets})
    return best, witnesses


def _check_squarefree_odd(m: int) -> Modulus:
    mod = Modulus(m)
    if m % 2 == 0:
        raise SearchError(f"m={m} is even")
    if not mod.is_squarefree:
        raise SearchError(f"m={m} is not square-free")
    return mod


@dataclass
class ThresholdCertificate:
    m: int
    phi: int
    threshold_size: int  # floor(5 phi / 8) + 1
    passed: bool
    vacuous: bool
    orbits_checked: int
    counterexample: tuple[int, ...] | None
    boundary_size: int  # floor(5 phi / 8)
    boundary_exact: bool  # 5 phi / 8 is an integer
    boundary_attained: bool
    boundary_witnesses: list[tuple[int, ...]]
    complete: bool = True


def threshold_certificate(
    m: int,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_seconds: float = DEFAULT_MAX_SECONDS,
    max_phi: int = DEFAULT_MAX_PHI,
    workers: int = 1,
) -> ThresholdCertificate:
    """Check that every subset of the units larger than 5/8 of them has A+A+A = Z_m.

    Only subsets of size floor(5 phi/8) + 1 are enumerated; covering passes to supersets.
    """
    _check_squarefree_odd(m)
    pool = unit_list(m)
    phi = len(pool)
    if phi > max_phi:
        raise SearchError(f"phi({m})={phi} exceeds search cap {max_phi}")
    full = (1 << m) - 1
    bsize = (5 * phi) // 8
    s0 = bsize + 1
    checked = 0
    complete = True
    counter = None
    vacuous = s0 > phi
    if not vacuous:
        bad, e, _, ok = scan_size(m, 3, pool, s0, full, stop_first=True,
                                  max_nodes=max_nodes, max_seconds=max_seconds, workers=workers)
        checked += e
        complete = ok
        counter = bad[0] if bad else None
    witnesses: list[tuple[int, ...]] = []
    if bsize >= 1:
        witnesses, e, _, ok = scan_size(m, 3, pool, bsize, full,
                                        max_nodes=max_nodes, max_seconds=max_seconds, workers=workers)
        complete = complete and ok
    return ThresholdCertificate(
        m=m,
        phi=phi,
        threshold_size=s0,
        passed=counter is None and complete,
        vacuous=vacuous,
        orbits_checked=checked,
        counterexample=counter,
        boundary_size=bsize,
        boundary_exact=(5 * phi) % 8 == 0,
        boundary_attained=bool(witnesses),
        boundary_witnesses=witnesses,
        complete=complete,
    )


@dataclass
class ShenReport:
    m: int
    sizes: tuple[int, int, int]
    in_hypothesis: bool  # s1 > 5 phi/8 and s2, s3 >= 5 phi/8
    passed: bool
    triples_checked: int
    witness: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], int] | None
    complete: bool = True


def shen_variant(
    m: int,
    sizes: tuple[int, int, int],
    *,
    max_m: int = 15,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_seconds: float = DEFAULT_MAX_SECONDS,
) -> ShenReport:
    """Exhaustively test A1 + A2 + A3 = Z_m over unit subsets of the given sizes.

    A1 ranges over orbit representatives (scaling all three sets together
    preserves the sum); A2, A3 range over all subsets, unordered when s2 == s3.
    """
    _check_squarefree_odd(m)
    if m > max_m:
        raise SearchError(f"m={m} exceeds shen search cap {max_m}")
    pool = unit_list(m)
    phi = len(pool)
    s1, s2, s3 = sizes
    if not all(0 <= s <= phi for s in sizes):
        raise SearchError(f"sizes {sizes} out of range 0..{phi}")
    bound = Fraction(5 * phi, 8)
    in_hyp = s1 > bound and s2 >= bound and s3 >= bound
    full = (1 << m) - 1
    budget = _Budget(max_nodes, max_seconds)
    reps, _, _, _ = scan_size(m, 1, pool, s1, 0, want_covering=True)  # target 0: every canonical subset
    bits = {}

    def as_bits(A):
        if A not in bits:
            b = 0
            for a in A:
                b |= 1 << a
            bits[A] = b
        return bits[A]

    seconds = list(combinations(pool, s2))
    thirds = list(combinations(pool, s3))
    checked = 0
    for A1 in reps:
        b1 = as_bits(A1)
        for j, A2 in enumerate(seconds):
            b12 = 0
            for a in A2:
                b12 |= _rotate(b1, a, m)
            n12 = b12.bit_count()
            start = j if s2 == s3 else 0
            for A3 in thirds[start:]:
                if not budget.spend():
                    return ShenReport(m, sizes, in_hyp, False, checked, None, complete=False)
                checked += 1
                if n12 + s3 > m:
                    continue  # pigeonhole: X + Y = Z_m when |X| + |Y| > m
                acc = 0
                for a in A3:
                    acc |= _rotate(b12, a, m)
                if acc != full:
                    gap = full & ~acc
                    missing = (gap & -gap).bit_length() - 1
                    return ShenReport(m, sizes, in_hyp, False, checked, (A1, A2, A3, missing))
    return ShenReport(m, sizes, in_hyp, True, checked, None)
