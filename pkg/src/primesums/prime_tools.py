"""Sieving, prime subsets, relative densities and two/three-prime representations."""
from __future__ import annotations

import csv
import io
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import fft as sfft

from .residue_ring import ResidueSet

DEFAULT_MAX_LIMIT = 1 << 31
SEGMENT_ODDS = 1 << 22
CACHE_ENV = "PRIMESUMS_CACHE_DIR"
_MAGIC = b"PSTB"
_FORMAT_VERSION = 1


class SieveBudgetError(ValueError):
    pass


def estimate_table_bytes(limit: int) -> int:
    """Packed odd-only bitmap plus an int64 prime list."""
    n_primes = int(1.1 * limit / math.log(limit)) if limit > 10 else 4
    return limit // 16 + 1 + 8 * n_primes


class PrimeTable:
    """Primes up to ``limit`` with O(1) membership through a packed odd-only bitmap."""

    def __init__(self, limit: int, primes: np.ndarray, odd_bits: np.ndarray):
        self.limit = limit
        self.primes = primes
        self._bits = odd_bits  # bit i (little-endian) <-> the odd number 2i + 1

    def __len__(self) -> int:
        return len(self.primes)

    def __repr__(self) -> str:
        return f"PrimeTable(limit={self.limit}, count={len(self.primes)})"

    def __contains__(self, n: int) -> bool:
        return bool(self.is_prime(np.asarray([n]))[0])

    def is_prime(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        out = n == 2
        odd = (n & 1 == 1) & (n > 1) & (n <= self.limit)
        idx = np.where(odd, n >> 1, 0)
        bit = (self._bits[idx >> 3] >> (idx & 7).astype(np.uint8)) & 1
        return out | (odd & (bit == 1))

    def count(self, x) -> np.ndarray | int:
        """pi(x) for x within the table."""
        c = np.searchsorted(self.primes, np.asarray(x), side="right")
        return int(c) if np.ndim(c) == 0 else c

    def index_of(self, n) -> np.ndarray:
        return np.searchsorted(self.primes, np.asarray(n), side="left")

    def upto(self, x: int) -> np.ndarray:
        return self.primes[: self.count(x)]


def _small_odd_sieve(n: int) -> np.ndarray:
    """Odd primes <= n by a plain sieve (base primes for segmenting)."""
    if n < 3:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones((n + 1) // 2, dtype=bool)  # index i <-> 2i + 1
    flags[0] = False
    for i in range(1, (math.isqrt(n) - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[p * p // 2 :: p] = False
    return 2 * np.flatnonzero(flags).astype(np.int64) + 1


def sieve(limit: int, max_limit: int = DEFAULT_MAX_LIMIT, segment: int = SEGMENT_ODDS) -> PrimeTable:
    if limit < 2:
        raise ValueError("limit must be >= 2")
    if limit > max_limit:
        raise SieveBudgetError(
            f"limit {limit} exceeds sieve budget {max_limit} "
            f"(would need about {estimate_table_bytes(limit) / 2**20:.0f} MiB)"
        )
    base = _small_odd_sieve(math.isqrt(limit))
    n_odd = (limit + 1) // 2  # odd numbers 1, 3, ..., <= limit
    flags = np.ones(n_odd, dtype=bool)
    flags[0] = False
    for lo in range(0, n_odd, segment):
        hi = min(lo + segment, n_odd)
        seg = flags[lo:hi]  # view; index i <-> 2(lo + i) + 1
        first = 2 * lo + 1
        for p in base:
            p = int(p)
            start = max(p * p, ((first + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            i0 = (start - first) // 2
            if i0 < hi - lo:
                seg[i0::p] = False
    odd_primes = 2 * np.flatnonzero(flags).astype(np.int64) + 1
    primes = np.concatenate([np.array([2], dtype=np.int64), odd_primes])
    return PrimeTable(limit, primes, np.packbits(flags, bitorder="little"))


def trial_division_is_prime(n: int) -> bool:
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


def save_table(table: PrimeTable, path: str | os.PathLike) -> None:
    """Binary cache: magic, format version, limit, then the packed odd bitmap."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<IQ", _FORMAT_VERSION, table.limit))
        fh.write(table._bits.tobytes())


def load_table(path: str | os.PathLike) -> PrimeTable:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if head[:4] != _MAGIC:
            raise ValueError(f"{path}: not a prime table")
        version, limit = struct.unpack("<IQ", head[4:])
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        bits = np.frombuffer(fh.read(), dtype=np.uint8).copy()
    n_odd = (limit + 1) // 2
    flags = np.unpackbits(bits, bitorder="little", count=n_odd).astype(bool)
    primes = np.concatenate([[2], 2 * np.flatnonzero(flags).astype(np.int64) + 1]).astype(np.int64)
    return PrimeTable(limit, primes, bits)


def cached_sieve(limit: int, cache_dir: str | os.PathLike | None = None, **kw) -> PrimeTable:
    """Sieve through an on-disk cache when a cache directory is configured."""
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return sieve(limit, **kw)
    path = Path(cache_dir) / f"primes-{limit}.v{_FORMAT_VERSION}.bin"
    if path.exists():
        return load_table(path)
    table = sieve(limit, **kw)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    save_table(table, tmp)
    os.replace(tmp, path)
    return table


class PrimeSubset:
    """A subset of a table's primes, stored as a boolean mask over prime indices."""

    def __init__(self, parent: PrimeTable, mask: np.ndarray):
        if mask.shape != parent.primes.shape:
            raise ValueError("mask must align with parent primes")
        self.parent = parent
        self.mask = mask
        self._members: np.ndarray | None = None

    @classmethod
    def all(cls, parent: PrimeTable) -> "PrimeSubset":
        return cls(parent, np.ones(len(parent.primes), dtype=bool))

    @classmethod
    def none(cls, parent: PrimeTable) -> "PrimeSubset":
        return cls(parent, np.zeros(len(parent.primes), dtype=bool))

    @classmethod
    def from_values(cls, parent: PrimeTable, values: Iterable[int]) -> "PrimeSubset":
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.int64)
        if len(values) and not parent.is_prime(values).all():
            raise ValueError("values must be primes of the parent table")
        mask = np.zeros(len(parent.primes), dtype=bool)
        mask[parent.index_of(values)] = True
        return cls(parent, mask)

    @property
    def members(self) -> np.ndarray:
        if self._members is None:
            self._members = self.parent.primes[self.mask]
        return self._members

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __repr__(self) -> str:
        return f"PrimeSubset(size={len(self)}, limit={self.parent.limit})"

    def contains(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        prime = self.parent.is_prime(n)
        idx = np.minimum(self.parent.index_of(n), len(self.mask) - 1)
        return prime & self.mask[idx]

    def __contains__(self, n: int) -> bool:
        return bool(self.contains([n])[0])

    def count(self, x) -> np.ndarray | int:
        c = np.searchsorted(self.members, np.asarray(x), side="right")
        return int(c) if np.ndim(c) == 0 else c

    def between(self, lo: float, hi: float) -> np.ndarray:
        """Members in the half-open interval (lo, hi]."""
        m = self.members
        return m[np.searchsorted(m, lo, side="right") : np.searchsorted(m, hi, side="right")]

    def _same(self, other: "PrimeSubset") -> None:
        if other.parent is not self.parent:
            raise ValueError("subsets of different tables")

    def __and__(self, other: "PrimeSubset") -> "PrimeSubset":
        self._same(other)
        return PrimeSubset(self.parent, self.mask & other.mask)

    def __or__(self, other: "PrimeSubset") -> "PrimeSubset":
        self._same(other)
        return PrimeSubset(self.parent, self.mask | other.mask)

    def __sub__(self, other: "PrimeSubset") -> "PrimeSubset":
        self._same(other)
        return PrimeSubset(self.parent, self.mask & ~other.mask)

    def __le__(self, other: "PrimeSubset") -> bool:
        self._same(other)
        return not bool((self.mask & ~other.mask).any())

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeSubset) and other.parent is self.parent and np.array_equal(self.mask, other.mask)

    __hash__ = None


def progression_filter(t: PrimeTable, q: int, classes: ResidueSet | Iterable[int]) -> PrimeSubset:
    """Primes p <= limit with p mod q in ``classes``."""
    if isinstance(classes, ResidueSet):
        if classes.m != q:
            raise ValueError(f"classes are mod {classes.m}, expected mod {q}")
        classes = classes.members()
    lut = np.zeros(q, dtype=bool)
    lut[[c % q for c in classes]] = True
    return PrimeSubset(t, lut[t.primes % q])


@dataclass(frozen=True)
class DensityPoint:
    x: int
    count: int
    value: float  # (log x / x) * count


def density_series(S: PrimeSubset, checkpoints: Sequence[int]) -> list[DensityPoint]:
    xs = np.asarray(checkpoints, dtype=np.int64)
    if len(xs) and xs.max() > S.parent.limit:
        raise ValueError(f"checkpoint {int(xs.max())} exceeds table limit {S.parent.limit}")
    if len(xs) and xs.min() < 2:
        raise ValueError("checkpoints must be >= 2")
    counts = S.count(xs)
    return [DensityPoint(int(x), int(c), math.log(int(x)) / int(x) * int(c)) for x, c in zip(xs, np.atleast_1d(counts))]


def density_summary(points: Sequence[DensityPoint]) -> dict[str, float]:
    vals = [p.value for p in points]
    return {"min": min(vals), "max": max(vals), "last": vals[-1]} if vals else {}


def write_density_csv(points: Sequence[DensityPoint], out) -> None:
    """CSV with columns x, count, value. ``out`` is a path or a text stream."""
    own = isinstance(out, (str, os.PathLike))
    fh = open(out, "w", newline="") if own else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "count", "value"])
        for p in points:
            w.writerow([p.x, p.count, repr(p.value)])
    finally:
        if own:
            fh.close()


def density_csv_text(points: Sequence[DensityPoint]) -> str:
    buf = io.StringIO()
    write_density_csv(points, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class RepPair:
    n: int
    w: int
    v: int


def two_prime_reps(n: int, S: PrimeSubset) -> list[RepPair]:
    """All unordered w <= v in S with w + v = n."""
    if n < 4:
        raise ValueError("n must be >= 4")
    m = S.members
    ws = m[: np.searchsorted(m, n // 2, side="right")]
    vs = n - ws
    ok = S.contains(vs)
    return [RepPair(n, int(w), int(v)) for w, v in zip(ws[ok], vs[ok])]


def three_prime_witness(n: int, S: PrimeSubset) -> tuple[int, int, int] | None:
    """Lexicographically least q1 <= q2 <= q3 in S with q1 + q2 + q3 = n.

    None certifies absence: every q1 <= n/3 and q1 <= q2 <= (n - q1)/2 was tried.
    """
    if n < 7:
        raise ValueError("n must be >= 7")
    m = S.members
    for q1 in m[: np.searchsorted(m, n // 3, side="right")]:
        q1 = int(q1)
        lo = np.searchsorted(m, q1, side="left")
        hi = np.searchsorted(m, (n - q1) // 2, side="right")
        q2 = m[lo:hi]
        hit = S.contains(n - q1 - q2)
        if hit.any():
            q2v = int(q2[np.argmax(hit)])
            return (q1, q2v, n - q1 - q2v)
    return None


def _indicator_groups(values: np.ndarray, wheel: int):
    groups = {}
    res = values % wheel
    for r in np.unique(res):
        idx = (values[res == r] - r) // wheel
        groups[int(r)] = (int(idx.min()), idx - idx.min())
    return groups


def pair_sum_counts(X: np.ndarray, Y: np.ndarray, targets: np.ndarray, wheel: int = 30) -> np.ndarray:
    """Number of ordered pairs (x, y) in X x Y with x + y = t, for each t in ``targets``.

    X, Y must be sets of non-negative integers (no repeats).  Both are split
    by residue mod ``wheel`` and each pair of classes is convolved by FFT on
    the compressed index, which keeps transforms short for spread-out sets.
    """
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    out = np.zeros(len(targets), dtype=np.int64)
    if not len(X) or not len(Y) or not len(targets):
        return out
    gx = _indicator_groups(X, wheel)
    gy = _indicator_groups(Y, wheel)
    span = max(int(i.max()) for _, i in gx.values()) + max(int(i.max()) for _, i in gy.values()) + 1
    size = sfft.next_fast_len(span, real=True)

    def spectrum(idx):
        a = np.zeros(size)
        a[idx] = 1.0
        return sfft.rfft(a)

    fy = {s: (oy, spectrum(iy)) for s, (oy, iy) in gy.items()}
    tres = targets % wheel
    for r, (ox, ix) in gx.items():
        fx = spectrum(ix)
        for s, (oy, sy) in fy.items():
            sel = np.flatnonzero(tres == (r + s) % wheel)
            if not len(sel):
                continue
            k = (targets[sel] - r - s) // wheel - ox - oy
            ok = (k >= 0) & (k < span)
            if not ok.any():
                continue
            conv = sfft.irfft(fx * sy, n=size)[:span]
            vals = conv[k[ok]]
            rounded = np.rint(vals)
            if np.abs(vals - rounded).max(initial=0) > 0.25:
                raise FloatingPointError("FFT rounding error too large for exact counts")
            out[sel[ok]] += rounded.astype(np.int64)
    return out


def unordered_rep_counts(S_members: np.ndarray, targets: np.ndarray, wheel: int = 30) -> np.ndarray:
    """|{w <= v in S : w + v = t}| for each target, from ordered pair counts."""
    targets = np.asarray(targets, dtype=np.int64)
    ordered = pair_sum_counts(S_members, S_members, targets, wheel)
    half = targets // 2
    diag = np.zeros(len(targets), dtype=bool)
    if len(S_members):
        pos = np.minimum(np.searchsorted(S_members, half), len(S_members) - 1)
        diag = (targets % 2 == 0) & (S_members[pos] == half)
    return (ordered + diag) // 2


def distinct_prime_factors(n: int, table: PrimeTable | None = None) -> list[int]:
    out = []
    primes = table.primes if table is not None else None
    if primes is not None and primes[-1] ** 2 >= n:
        for p in primes:
            p = int(p)
            if p * p > n:
                break
            if n % p == 0:
                out.append(p)
                while n % p == 0:
                    n //= p
    else:
        d = 2
        while d * d <= n:
            if n % d == 0:
                out.append(d)
                while n % d == 0:
                    n //= d
            d += 1
    if n > 1:
        out.append(n)
    return out


def bound_shape(n: int, table: PrimeTable | None = None) -> float:
    """n / (log n)^2 times the product of (1 + 1/p) over distinct primes p | n."""
    prod = 1.0
    for p in distinct_prime_factors(n, table):
        prod *= 1.0 + 1.0 / p
    return n / math.log(n) ** 2 * prod


@dataclass(frozen=True)
class RepProfileRow:
    n: int
    t: int
    shape: float
    ratio: float


def rep_count_profile(targets: Sequence[int], S: PrimeSubset, *, exact_loop: bool | None = None) -> list[RepProfileRow]:
    """Exact unordered two-element representation counts next to the sieve bound's shape.

    Counts come from ``two_prime_reps`` for short target lists and from one
    FFT pass otherwise (``exact_loop`` forces either route).
    """
    targets = [int(n) for n in targets]
    if any(n > S.parent.limit for n in targets):
        raise ValueError("targets exceed table limit")
    if exact_loop is None:
        exact_loop = len(targets) <= 64
    if exact_loop:
        ts = [len(two_prime_reps(n, S)) for n in targets]
    else:
        ts = unordered_rep_counts(S.members, np.asarray(targets)).tolist()
    rows = []
    for n, t in zip(targets, ts):
        shape = bound_shape(n, S.parent)
        rows.append(RepProfileRow(n, int(t), shape, t / shape))
    return rows
