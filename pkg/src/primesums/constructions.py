"""Named residue-set recipes bundled with machine-checkable claims.

Each builder returns a :class:`Construction`; :func:`verify` evaluates its
claims by direct computation and reports witnesses for anything that fails.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .residue_ring import (
    DENSE_LIMIT,
    Congruence,
    Modulus,
    ResidueSet,
    coverage,
    filter_set,
    find_summands,
    iterated_sumset,
    lift,
    totient,
)

SHAO_15 = (1, 2, 4, 7, 13)
SHIFTED_30 = (1, 7, 13, 17, 19)
MISSED_30 = (10, 12, 16, 22, 28)
BASE_12 = (1, 5, 7)

CLAIM_KINDS = (
    "cardinality_lower_bound",
    "cardinality_equals",
    "miss_class",
    "miss_congruence_family",
    "missed_set_equals",
    "missed_even_proportion",
    "covers_all",
)


class ConstructionError(ValueError):
    """Parameters do not satisfy a recipe's preconditions."""


@dataclass(frozen=True)
class Claim:
    """A finitely checkable property of a produced set.

    ``payload`` keys by kind:

    * cardinality_lower_bound: ``bound`` (Fraction), ``strict`` (bool)
    * cardinality_equals: ``value``
    * miss_class: ``h``, ``classes``
    * miss_congruence_family: ``h``, ``residues``, ``q``
    * missed_set_equals: ``h``, ``filter``, ``classes``
    * missed_even_proportion: ``h``, ``at_least`` (Fraction)
    * covers_all: ``h``, ``filter``
    """

    id: str
    kind: str
    payload: dict[str, Any]
    anchor: str = ""

    def __post_init__(self):
        if self.kind not in CLAIM_KINDS:
            raise ValueError(f"unknown claim kind {self.kind!r}")


@dataclass(frozen=True)
class Construction:
    name: str
    params: dict[str, int]
    modulus: int
    recipe: Callable[[], ResidueSet] = field(repr=False, compare=False)
    claims: tuple[Claim, ...] = ()

    def produce(self) -> ResidueSet:
        return self.recipe()


@dataclass
class ClaimResult:
    id: str
    kind: str
    status: str  # "pass" | "fail"
    detail: str
    witness: dict[str, Any] | None = None


@dataclass
class VerificationReport:
    construction: str
    params: dict[str, int]
    modulus: int
    size: int
    results: list[ClaimResult]

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.results)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def shao_mod15() -> Construction:
    A1 = ResidueSet.from_iterable(15, SHAO_15)
    return Construction(
        name="shao-mod15",
        params={},
        modulus=15,
        recipe=lambda: A1,
        claims=(
            Claim("size-above-half-phi", "cardinality_lower_bound",
                  {"bound": Fraction(totient(15), 2), "strict": True}, "|A1| > phi(15)/2 = 4"),
            Claim("size-five", "cardinality_equals", {"value": 5}, "|A1| = 5 = (5/8) phi(15)"),
            Claim("misses-14", "miss_class", {"h": 3, "classes": [14]}, "14 not in A1+A1+A1"),
        ),
    )


def shifted_mod30() -> Construction:
    A = ResidueSet.from_iterable(30, SHIFTED_30)
    return Construction(
        name="shifted-mod30",
        params={},
        modulus=30,
        recipe=lambda: A,
        claims=(
            Claim("size-above-half-phi", "cardinality_lower_bound",
                  {"bound": Fraction(totient(30), 2), "strict": True}, "|A| > phi(30)/2 = 4"),
            Claim("misses-29", "miss_class", {"h": 3, "classes": [29]}, "29 not in A0+A0+A0"),
            Claim("even-misses-are-B", "missed_set_equals",
                  {"h": 2, "filter": "even", "classes": list(MISSED_30)},
                  "B = {10,12,16,22,28} not in A+A"),
        ),
    )


def problem66b_family(p: int) -> Construction:
    if not _is_prime(p):
        raise ConstructionError(f"p={p} is not prime")
    if 30 % p == 0:
        raise ConstructionError(f"p={p} divides 30")
    m = 30 * p
    if m > DENSE_LIMIT:
        raise ConstructionError(f"modulus {m} exceeds dense-set limit")
    base = ResidueSet.from_iterable(30, SHIFTED_30)
    phi = totient(m)
    return Construction(
        name="problem66b",
        params={"p": p},
        modulus=m,
        recipe=lambda: lift(base, m, unit_filter=True),
        claims=(
            Claim("size-bound", "cardinality_lower_bound",
                  {"bound": Fraction(m, 6) - 5, "strict": False}, "|A| >= m/6 - 5"),
            Claim("size-five-eighths-phi", "cardinality_equals",
                  {"value": Fraction(5, 8) * phi}, "m/6 - 5 = (5/8) phi(m)"),
            Claim("triple-misses-29-mod-30", "miss_congruence_family",
                  {"h": 3, "residues": [29], "q": 30}, "no member of A+A+A is 29 mod 30"),
        ),
    )


def problem66a_family(p: int) -> Construction:
    if not _is_prime(p):
        raise ConstructionError(f"p={p} is not prime")
    if 12 % p == 0:
        raise ConstructionError(f"p={p} divides 12")
    m = 12 * p
    if m > DENSE_LIMIT:
        raise ConstructionError(f"modulus {m} exceeds dense-set limit")
    base = ResidueSet.from_iterable(12, BASE_12)
    phi = totient(m)
    return Construction(
        name="problem66a",
        params={"p": p},
        modulus=m,
        recipe=lambda: lift(base, m, unit_filter=True),
        claims=(
            Claim("size-two-thirds-phi", "cardinality_lower_bound",
                  {"bound": Fraction(2 * phi, 3), "strict": False}, "|A| >= 2 phi(m)/3"),
            Claim("pair-misses-4-mod-12", "miss_congruence_family",
                  {"h": 2, "residues": [4], "q": 12}, "no element 12k+4 in A+A"),
            Claim("missed-even-sixth", "missed_even_proportion",
                  {"h": 2, "at_least": Fraction(1, 6)}, "1/6 of even classes missed by A+A"),
        ),
    )


def doubling_set(k: int) -> ResidueSet:
    """The recursive family: A_1 = A u (A+30) in Z_60, A_{j+1} = A_j u (A_j + 2^j*30)."""
    m = 60
    bits = ResidueSet.from_iterable(30, SHIFTED_30).bits
    bits |= bits << 30
    for j in range(1, k):
        bits |= bits << (30 << j)
        m *= 2
    return ResidueSet(Modulus(m), bits)


def doubling_family(k: int, max_k: int | None = None) -> Construction:
    if max_k is None:
        max_k = (DENSE_LIMIT // 30).bit_length() - 1
    if k < 1 or k > max_k:
        raise ConstructionError(f"k={k} outside 1..{max_k}")
    m = 30 << k
    return Construction(
        name="doubling",
        params={"k": k},
        modulus=m,
        recipe=lambda: doubling_set(k),
        claims=(
            Claim("size-exact", "cardinality_equals", {"value": 5 << k}, "|A_k| = 5*2^k"),
            Claim("size-above-half-phi", "cardinality_lower_bound",
                  {"bound": Fraction(1 << (k + 2)), "strict": True}, "|A_k| > phi(m_k)/2 = 2^(k+2)"),
            Claim("pair-misses-B", "miss_congruence_family",
                  {"h": 2, "residues": list(MISSED_30), "q": 30},
                  "A_k+A_k misses a positive proportion of even classes"),
            Claim("missed-even-third", "missed_even_proportion",
                  {"h": 2, "at_least": Fraction(1, 3)}, "lift of B is 1/3 of the even classes"),
        ),
    )


REGISTRY: dict[str, Callable[..., Construction]] = {
    "shao-mod15": shao_mod15,
    "shifted-mod30": shifted_mod30,
    "problem66b": problem66b_family,
    "problem66a": problem66a_family,
    "doubling": doubling_family,
}


def _witness(A: ResidueSet, h: int, c: int) -> dict[str, Any]:
    return {"class": c, "summands": list(find_summands([A] * h, c))}


def _check(claim: Claim, A: ResidueSet, sums: dict[int, ResidueSet]) -> ClaimResult:
    kind, pl = claim.kind, claim.payload

    def hfold(h: int) -> ResidueSet:
        if h not in sums:
            sums[h] = iterated_sumset(A, h)
        return sums[h]

    def result(ok: bool, detail: str, witness=None) -> ClaimResult:
        return ClaimResult(claim.id, kind, "pass" if ok else "fail", detail, None if ok else witness)

    if kind == "cardinality_lower_bound":
        n, bound = len(A), pl["bound"]
        ok = n > bound if pl["strict"] else n >= bound
        return result(ok, f"|A|={n} {'>' if pl['strict'] else '>='} {bound}", {"size": n})
    if kind == "cardinality_equals":
        n = len(A)
        return result(n == pl["value"], f"|A|={n}, expected {pl['value']}", {"size": n})
    if kind == "miss_class":
        S = hfold(pl["h"])
        hit = [c for c in pl["classes"] if c in S]
        w = _witness(A, pl["h"], hit[0]) if hit else None
        return result(not hit, f"classes {pl['classes']} absent from {pl['h']}-fold sumset", w)
    if kind == "miss_congruence_family":
        S = hfold(pl["h"])
        family = ResidueSet.empty(A.modulus)
        for r in pl["residues"]:
            family = family | filter_set(A.modulus, Congruence(r, pl["q"]))
        hit = (S & family).members()
        w = _witness(A, pl["h"], hit[0]) if hit else None
        return result(not hit, f"{len(family)} classes = {pl['residues']} mod {pl['q']} all missed", w)
    if kind == "missed_set_equals":
        rep = coverage(hfold(pl["h"]), pl["filter"])
        got = rep.missed.members()
        want = sorted(pl["classes"])
        w = None
        if got != want:
            extra = sorted(set(want) - set(got))
            w = _witness(A, pl["h"], extra[0]) if extra else {"unexpected_misses": sorted(set(got) - set(want))}
        return result(got == want, f"missed {pl['filter']} classes {got}", w)
    if kind == "missed_even_proportion":
        rep = coverage(hfold(pl["h"]), "even")
        ok = rep.proportion_missed_even >= pl["at_least"]
        return result(ok, f"missed even proportion {rep.proportion_missed_even} >= {pl['at_least']}",
                      {"proportion": str(rep.proportion_missed_even)})
    if kind == "covers_all":
        rep = coverage(hfold(pl["h"]), pl.get("filter", "all"))
        missed = rep.missed.members()
        return result(not missed, f"{pl['h']}-fold sumset covers {pl.get('filter', 'all')}",
                      {"missed": missed[:20]})
    raise AssertionError(kind)


def verify(c: Construction) -> VerificationReport:
    A = c.produce()
    sums: dict[int, ResidueSet] = {}
    results = [_check(claim, A, sums) for claim in c.claims]
    return VerificationReport(c.name, dict(c.params), c.modulus, len(A), results)
