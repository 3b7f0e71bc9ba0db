"""Golay complementary training pairs.

The training sequences are built in four steps: a hard-coded binary length-26
seed pair, a lift onto the QPSK diagonal, four concatenation doublings
(26 -> 416) and a weighted superposition onto the 16-QAM grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import InvalidInputError

ALPHABETS = ("binary", "qpsk", "qam16")

# Length-26 binary Golay pair (Golay, 1961).
_SEED_A = "++++-++--+-+-+--+-+++--+++"
_SEED_B = "++++-++--+-+++++-+---++---"

QPSK_PLUS = np.exp(1j * np.pi / 4)
# Unimodular factor applied to the complementary mate before superposition.
MATE_ROTATION = 1.0 + 0.0j


class ConstructionError(RuntimeError):
    """A constructed pair failed the complementarity check."""


@dataclass(frozen=True)
class GolayPair:
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    alphabet: str

    def __post_init__(self):
        if self.alphabet not in ALPHABETS:
            raise InvalidInputError(f"unknown alphabet {self.alphabet!r}")
        a = np.array(self.a, dtype=complex)
        b = np.array(self.b, dtype=complex)
        if a.ndim != 1 or a.shape != b.shape or a.shape[0] == 0:
            raise InvalidInputError("pair members must be non-empty, 1-D and of equal length")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def L(self) -> int:
        return self.a.shape[0]

    @property
    def mean_energy(self) -> float:
        """Mean per-element energy over both members."""
        return float((np.sum(np.abs(self.a) ** 2) + np.sum(np.abs(self.b) ** 2)) / (2 * self.L))


@dataclass(frozen=True)
class ComplementarityReport:
    peak: float
    max_sidelobe: float
    passed: bool


def aperiodic_acf_sum(p: GolayPair) -> np.ndarray:
    """Sum of both aperiodic autocorrelations at lags ``0..L-1``.

    Entry ``j`` is ``sum_m a[m] conj(a[m+j]) + sum_m b[m] conj(b[m+j])``.
    """
    L = p.L
    # np.correlate(x, x, "full")[L-1+j] = sum_m x[m+j] conj(x[m]), the conjugate of what we want
    full = np.correlate(p.a, p.a, "full") + np.correlate(p.b, p.b, "full")
    return np.conj(full[L - 1:])


def verify_complementary(p: GolayPair, rtol: float = 1e-9) -> ComplementarityReport:
    sums = aperiodic_acf_sum(p)
    expected = 2 * p.L * p.mean_energy
    peak = float(np.real(sums[0]))
    sidelobe = float(np.max(np.abs(sums[1:]))) if p.L > 1 else 0.0
    ok = (
        np.isfinite(peak)
        and expected > 0
        and abs(peak - expected) <= rtol * expected
        and sidelobe <= rtol * peak
    )
    return ComplementarityReport(peak=peak, max_sidelobe=sidelobe, passed=bool(ok))


def _bipolar(s: str) -> np.ndarray:
    return np.array([1.0 if c == "+" else -1.0 for c in s])


def golay_seed_26() -> GolayPair:
    return GolayPair(_bipolar(_SEED_A), _bipolar(_SEED_B), "binary")


def golay_double(p: GolayPair) -> GolayPair:
    """``(A, B) -> (A|B, A|-B)``."""
    if not verify_complementary(p).passed:
        raise InvalidInputError("input pair is not complementary")
    return GolayPair(np.concatenate([p.a, p.b]), np.concatenate([p.a, -p.b]), p.alphabet)


def to_qpsk(p: GolayPair) -> GolayPair:
    """Lift a bipolar pair onto the QPSK diagonal: +1 -> e^{i pi/4}, -1 -> e^{i 5pi/4}."""
    if p.alphabet != "binary":
        raise InvalidInputError("to_qpsk expects a binary pair")
    return GolayPair(p.a * QPSK_PLUS, p.b * QPSK_PLUS, "qpsk")


def complementary_mate(p: GolayPair, rotation: complex = MATE_ROTATION) -> GolayPair:
    """Mate pair ``(c*rev(conj(B)), -c*rev(conj(A)))``.

    A Golay pair and its mate have cross-correlation sums that vanish at every
    lag, which is what keeps the 16-QAM superposition complementary.
    """
    return GolayPair(rotation * np.conj(p.b[::-1]), -rotation * np.conj(p.a[::-1]), p.alphabet)


def to_16qam(p1: GolayPair, p2: GolayPair) -> GolayPair:
    """Superpose ``(2*p1 + p2)/sqrt(5)`` elementwise on both members."""
    for p in (p1, p2):
        if p.alphabet != "qpsk":
            raise InvalidInputError("to_16qam expects QPSK pairs")
        if not verify_complementary(p).passed:
            raise InvalidInputError("input pair is not complementary")
    if p1.L != p2.L:
        raise InvalidInputError("pairs must have equal length")
    out = GolayPair((2 * p1.a + p2.a) / np.sqrt(5), (2 * p1.b + p2.b) / np.sqrt(5), "qam16")
    if not verify_complementary(out).passed:
        raise ConstructionError("superposition is not complementary; p2 is not a valid companion of p1")
    return out


@lru_cache(maxsize=None)
def training_pair(doublings: int = 4) -> GolayPair:
    """Frozen 16-QAM pair used as training symbols (length 416 by default)."""
    q = to_qpsk(golay_seed_26())
    for _ in range(doublings):
        q = golay_double(q)
    return to_16qam(q, complementary_mate(q))


def write_pair_csv(p: GolayPair, path) -> None:
    """CSV dump with columns ``index, re_a, im_a, re_b, im_b``."""
    rows = np.column_stack([np.arange(p.L), p.a.real, p.a.imag, p.b.real, p.b.imag])
    np.savetxt(path, rows, delimiter=",", header="index,re_a,im_a,re_b,im_b", comments="",
               fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g"])
