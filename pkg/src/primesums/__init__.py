"""Sumset algebra over residue rings and sparse prime sets avoiding ternary sums."""

__version__ = "0.1.0"

from .residue_ring import Modulus, ResidueSet, CoverageReport, totient, units, sumset, iterated_sumset, coverage, lift

__all__ = [
    "Modulus",
    "ResidueSet",
    "CoverageReport",
    "totient",
    "units",
    "sumset",
    "iterated_sumset",
    "coverage",
    "lift",
]
