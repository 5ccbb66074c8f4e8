"""Dense set algebra over Z/mZ.

A :class:`ResidueSet` stores its members as the set bits of a Python
integer, so a sumset is a handful of rotate-and-OR operations rather than
a double loop over members.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

# Largest modulus a dense ResidueSet may use. Module-level so callers can raise it.
DENSE_LIMIT = 1 << 24


class ModulusMismatch(ValueError):
    pass


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization; adequate for n up to DENSE_LIMIT."""
    factors: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


@dataclass(frozen=True)
class Modulus:
    m: int
    factors: dict[int, int] = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 2:
            raise ValueError(f"modulus must be an integer >= 2, got {self.m!r}")
        if self.m > DENSE_LIMIT:
            raise ValueError(f"modulus {self.m} exceeds dense-set limit {DENSE_LIMIT}")
        if self.factors is None:
            object.__setattr__(self, "factors", factorize(self.m))

    @property
    def is_squarefree(self) -> bool:
        return all(e == 1 for e in self.factors.values())

    def __int__(self) -> int:
        return self.m


def _as_modulus(m: Union[int, Modulus]) -> Modulus:
    return m if isinstance(m, Modulus) else Modulus(m)


def _bits_to_list(bits: int) -> list[int]:
    s = bin(bits)[:1:-1]
    return [i for i, c in enumerate(s) if c == "1"]


@dataclass(frozen=True)
class ResidueSet:
    """A subset of Z/mZ; bit ``i`` of ``bits`` is set iff ``i`` is a member."""

    modulus: Modulus
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.modulus.m:
            raise ValueError("members must lie in [0, m)")

    @classmethod
    def from_iterable(cls, m: Union[int, Modulus], members: Iterable[int]) -> "ResidueSet":
        mod = _as_modulus(m)
        bits = 0
        for a in members:
            bits |= 1 << (a % mod.m)
        return cls(mod, bits)

    @classmethod
    def full(cls, m: Union[int, Modulus]) -> "ResidueSet":
        mod = _as_modulus(m)
        return cls(mod, (1 << mod.m) - 1)

    @classmethod
    def empty(cls, m: Union[int, Modulus]) -> "ResidueSet":
        return cls(_as_modulus(m), 0)

    @property
    def m(self) -> int:
        return self.modulus.m

    def members(self) -> list[int]:
        return _bits_to_list(self.bits)

    def __iter__(self):
        return iter(self.members())

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, a: int) -> bool:
        return bool((self.bits >> (a % self.m)) & 1)

    def _check(self, other: "ResidueSet") -> None:
        if self.m != other.m:
            raise ModulusMismatch(f"modulus mismatch: {self.m} vs {other.m}")

    def __or__(self, other: "ResidueSet") -> "ResidueSet":
        self._check(other)
        return ResidueSet(self.modulus, self.bits | other.bits)

    def __and__(self, other: "ResidueSet") -> "ResidueSet":
        self._check(other)
        return ResidueSet(self.modulus, self.bits & other.bits)

    def __sub__(self, other: "ResidueSet") -> "ResidueSet":
        self._check(other)
        return ResidueSet(self.modulus, self.bits & ~other.bits)

    def __le__(self, other: "ResidueSet") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def complement(self) -> "ResidueSet":
        return ResidueSet(self.modulus, ((1 << self.m) - 1) & ~self.bits)

    def translate(self, t: int) -> "ResidueSet":
        return ResidueSet(self.modulus, _rotate(self.bits, t % self.m, self.m))

    def scale(self, u: int) -> "ResidueSet":
        """Image under multiplication by ``u``."""
        m = self.m
        return ResidueSet.from_iterable(self.modulus, ((u * a) % m for a in self.members()))

    def reduce(self, q: int) -> "ResidueSet":
        """Image under the projection Z/mZ -> Z/qZ (requires q | m)."""
        if self.m % q:
            raise ValueError(f"{q} does not divide {self.m}")
        return ResidueSet.from_iterable(q, (a % q for a in self.members()))

    def __repr__(self) -> str:
        mem = self.members()
        shown = ", ".join(map(str, mem[:16])) + (", ..." if len(mem) > 16 else "")
        return f"ResidueSet(m={self.m}, {{{shown}}})"


def _periodic(block: int, period: int, m: int) -> int:
    """Repeat a ``period``-bit pattern across ``m`` bits (period divides m)."""
    out, length = block, period
    while length < m:
        out |= out << length
        length *= 2
    return out & ((1 << m) - 1)


def _evens(m: int) -> int:
    # parity of the representative in [0, m); 0 counts as even
    return _periodic(0b01, 2, m + (m % 2)) & ((1 << m) - 1)


def _rotate(bits: int, a: int, m: int) -> int:
    if a == 0:
        return bits
    mask = (1 << m) - 1
    return ((bits << a) & mask) | (bits >> (m - a))


def totient(m: Union[int, Modulus]) -> int:
    mod = _as_modulus(m)
    phi = mod.m
    for p in mod.factors:
        phi = phi // p * (p - 1)
    return phi


def units(m: Union[int, Modulus]) -> ResidueSet:
    mod = _as_modulus(m)
    bits = (1 << mod.m) - 1
    for p in mod.factors:
        bits &= ~_periodic(1, p, mod.m)
    return ResidueSet(mod, bits)


def sumset(A: ResidueSet, B: ResidueSet) -> ResidueSet:
    A._check(B)
    if len(A) > len(B):
        A, B = B, A
    m = A.m
    acc = 0
    for a in A.members():
        acc |= _rotate(B.bits, a, m)
    return ResidueSet(A.modulus, acc)


def iterated_sumset(A: ResidueSet, h: int) -> ResidueSet:
    if h < 1:
        raise ValueError("h must be >= 1")
    acc = A
    for _ in range(h - 1):
        acc = sumset(acc, A)
    return acc


def find_summands(sets: Sequence[ResidueSet], target: int) -> tuple[int, ...] | None:
    """Return the lexicographically least ``(a_1, ..., a_h)`` with ``a_i in sets[i]``
    summing to ``target`` mod m, or None when no such tuple exists."""
    if not sets:
        raise ValueError("need at least one set")
    m = sets[0].m
    suffix = [sets[-1]]
    for S in reversed(sets[:-1]):
        suffix.append(sumset(S, suffix[-1]))
    suffix.reverse()
    target %= m
    if target not in suffix[0]:
        return None
    out: list[int] = []
    for i in range(len(sets) - 1):
        a = next(a for a in sets[i].members() if (target - a) % m in suffix[i + 1])
        out.append(a)
        target = (target - a) % m
    out.append(target)
    return tuple(out)


@dataclass(frozen=True)
class Congruence:
    r: int
    q: int


Filter = Union[str, Congruence]


def filter_set(m: Union[int, Modulus], flt: Filter = "all") -> ResidueSet:
    mod = _as_modulus(m)
    if flt == "all":
        return ResidueSet.full(mod)
    if flt == "even":
        return ResidueSet(mod, _evens(mod.m))
    if flt == "odd":
        return ResidueSet(mod, ((1 << mod.m) - 1) & ~_evens(mod.m))
    if isinstance(flt, Congruence):
        if flt.q < 1 or mod.m % flt.q:
            raise ValueError(f"congruence modulus {flt.q} does not divide {mod.m}")
        return ResidueSet(mod, _periodic(1 << (flt.r % flt.q), flt.q, mod.m))
    raise ValueError(f"unknown filter {flt!r}")


@dataclass(frozen=True)
class CoverageReport:
    modulus: Modulus
    covered: ResidueSet
    missed: ResidueSet
    missed_even_count: int
    missed_odd_count: int
    # missed even classes over even classes of the filtered universe
    proportion_missed_even: Fraction


def coverage(S: ResidueSet, flt: Filter = "all") -> CoverageReport:
    universe = filter_set(S.modulus, flt)
    covered = S & universe
    missed = universe - S
    even_mask = filter_set(S.modulus, "even")
    missed_even = len(missed & even_mask)
    evens = len(universe & even_mask)
    return CoverageReport(
        modulus=S.modulus,
        covered=covered,
        missed=missed,
        missed_even_count=missed_even,
        missed_odd_count=len(missed) - missed_even,
        proportion_missed_even=Fraction(missed_even, evens) if evens else Fraction(0),
    )


def lift(base: ResidueSet, m: Union[int, Modulus], unit_filter: bool = False) -> ResidueSet:
    """All residues mod ``m`` whose reduction mod ``base.m`` lies in ``base``."""
    mod = _as_modulus(m)
    q = base.m
    if mod.m % q:
        raise ValueError(f"{q} does not divide {mod.m}")
    out = ResidueSet(mod, _periodic(base.bits, q, mod.m))
    if unit_filter:
        out = out & units(mod)
    return out
