"""Numeric substrate: power-of-two DFTs, the PN weighting sequence and seeded streams.

Everything stochastic in the package draws from an :class:`RngStream`, so a
campaign rerun with the same master seed reproduces every number.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid dimensioning or parameters."""


class InvalidInputError(ValueError):
    """Raised when an input violates an operation's precondition."""


# x^16 + x^14 + x^13 + x^11 + 1, a primitive polynomial (period 65535).
PN_TAPS = (16, 14, 13, 11)
PN_REGISTER_BITS = 16


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _check_pow2(x: np.ndarray) -> None:
    if x.ndim != 1 or not is_power_of_two(x.shape[0]):
        raise ConfigurationError(f"DFT length must be a power of two, got {x.shape}")


def fft(x) -> np.ndarray:
    """Forward DFT without scaling, ``X[v] = sum_n x[n] exp(-2j*pi*v*n/N)``."""
    x = np.asarray(x, dtype=complex)
    _check_pow2(x)
    return np.fft.fft(x)


def ifft(X) -> np.ndarray:
    """Inverse DFT with ``1/N`` scaling; exact inverse of :func:`fft`."""
    X = np.asarray(X, dtype=complex)
    _check_pow2(X)
    return np.fft.ifft(X)


@dataclass(frozen=True)
class PnSequence:
    """Bipolar weighting sequence p(n) with elements in {-1, +1}."""

    values: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return self.values.shape[0]


def pn_generate(seed: int, length: int) -> PnSequence:
    """Run the 16-bit Fibonacci LFSR from ``seed`` and map bits to ``1 - 2*bit``.

    The register is shifted left; the feedback bit is the XOR of the tap
    positions in :data:`PN_TAPS` (1-based from the output end) and the output
    bit is the register MSB before the shift.
    """
    if length < 1:
        raise ConfigurationError("PN length must be >= 1")
    state = int(seed) & 0xFFFF
    if state == 0:
        raise ConfigurationError("PN seed must leave a nonzero 16-bit register state")
    bits = np.empty(length, dtype=np.int8)
    for k in range(length):
        bits[k] = (state >> 15) & 1
        fb = 0
        for t in PN_TAPS:
            fb ^= (state >> (t - 1)) & 1
        state = ((state << 1) | fb) & 0xFFFF
    return PnSequence(values=(1 - 2 * bits).astype(float), seed=int(seed))


@dataclass(frozen=True)
class RngStream:
    """Named, seeded random stream.

    The generator is derived from ``(seed, label)`` via a SHA-256 digest of the
    label, so streams are independent of creation order and of the process
    that creates them.
    """

    seed: int
    label: str = ""

    def generator(self) -> np.random.Generator:
        digest = hashlib.sha256(self.label.encode("utf-8")).digest()
        words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(self.seed), *words])))

    def child(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{label}" if self.label else label)


def complex_gaussian(rng: RngStream | np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance ``sigma**2``."""
    if sigma < 0:
        raise InvalidInputError("sigma must be non-negative")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if sigma == 0:
        return np.zeros(n, dtype=complex)
    scale = sigma / np.sqrt(2.0)
    return scale * (gen.standard_normal(n) + 1j * gen.standard_normal(n))
