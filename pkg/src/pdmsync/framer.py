"""Dual-polarization OFDM frame construction.

A frame is two Alamouti-arranged training symbols followed by
``n_data_symbols`` 16-QAM OFDM symbols on each polarization::

            TS1            TS2
    X-pol   p(n)*A         -conj(B)
    Y-pol   p(n)*B         conj(A)

``p(n)`` is the bipolar PN weight applied to all ``N_s`` samples of TS1
(cyclic prefix included).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import ConfigurationError, InvalidInputError, PnSequence, RngStream, ifft, is_power_of_two, pn_generate
from .seqgen import GolayPair, training_pair, verify_complementary


@dataclass(frozen=True)
class FrameConfig:
    """OFDM dimensioning.

    The default layout reproduces 416 data subcarriers, one DC bin, 10 bins
    reserved around DC (5 per side) and 85 unmodulated edge bins (43 below,
    42 above) on a 512-point FFT with a 46-sample cyclic prefix at 40 GSa/s.
    """

    N: int = 512
    N_cp: int = 46
    L: int = 416
    F_s: float = 40e9
    n_data_symbols: int = 10
    pn_seed: int = 1
    use_pn: bool = True
    dc_guard: int = 5
    edge_low: int = 43
    edge_high: int = 42

    def __post_init__(self):
        if not is_power_of_two(self.N):
            raise ConfigurationError("N must be a power of two")
        if not 0 <= self.N_cp < self.N:
            raise ConfigurationError("N_cp must lie in [0, N)")
        if self.F_s <= 0 or self.n_data_symbols < 0:
            raise ConfigurationError("F_s must be positive and n_data_symbols non-negative")
        n_data = self.N - 1 - 2 * self.dc_guard - self.edge_low - self.edge_high
        if n_data != self.L or n_data % 2:
            raise ConfigurationError(
                f"layout leaves {n_data} data bins, expected an even count equal to L={self.L}")

    @property
    def N_s(self) -> int:
        return self.N + self.N_cp

    @property
    def N_r(self) -> int:
        return self.N_s + self.N_cp

    @property
    def delta_f(self) -> float:
        return self.F_s / self.N

    @property
    def frame_length(self) -> int:
        return self.N_s * (2 + self.n_data_symbols)

    @cached_property
    def data_bins(self) -> np.ndarray:
        """FFT-order bin indices of the data subcarriers, lowest frequency first."""
        half = self.L // 2
        neg = np.arange(-self.dc_guard - half, -self.dc_guard)
        pos = np.arange(self.dc_guard + 1, self.dc_guard + 1 + half)
        return np.mod(np.concatenate([neg, pos]), self.N)

    def pn(self) -> PnSequence | None:
        return pn_generate(self.pn_seed, self.N_s) if self.use_pn else None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DualPolSignal:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    sample_rate: float
    true_frame_start: int | None = None

    def __post_init__(self):
        x = np.array(self.x, dtype=complex)
        y = np.array(self.y, dtype=complex)
        if x.shape != y.shape or x.ndim != 1:
            raise InvalidInputError("x and y must be 1-D and of equal length")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.shape[0]

    def with_samples(self, x, y, **changes) -> "DualPolSignal":
        return replace(self, x=x, y=y, **changes)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.x) ** 2) + np.sum(np.abs(self.y) ** 2))


@dataclass(frozen=True)
class FrameLabel:
    """Half-open sample ranges relative to the frame start."""

    ts1: tuple[int, int]
    ts2: tuple[int, int]
    data: tuple[int, int]

    @classmethod
    def for_config(cls, cfg: FrameConfig) -> "FrameLabel":
        ns = cfg.N_s
        return cls((0, ns), (ns, 2 * ns), (2 * ns, 2 * ns + ns * cfg.n_data_symbols))


# Gray-coded amplitude levels indexed by the two-bit value b0b1.
_GRAY_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])
_QAM_SCALE = 1.0 / np.sqrt(10.0)


def qam16_map(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 4:
        raise InvalidInputError("16-QAM needs a multiple of 4 bits")
    b = bits.reshape(-1, 4)
    i = _GRAY_LEVELS[2 * b[:, 0] + b[:, 1]]
    q = _GRAY_LEVELS[2 * b[:, 2] + b[:, 3]]
    return (i + 1j * q) * _QAM_SCALE


def qam16_demap(symbols) -> np.ndarray:
    s = np.asarray(symbols, dtype=complex) / _QAM_SCALE
    out = np.empty((s.size, 4), dtype=np.int8)
    for col, comp in ((0, s.real), (2, s.imag)):
        idx = np.argmin(np.abs(comp[:, None] - _GRAY_LEVELS[None, :]), axis=1)
        out[:, col] = idx >> 1
        out[:, col + 1] = idx & 1
    return out.ravel()


def subcarrier_map(payload, cfg: FrameConfig) -> np.ndarray:
    payload = np.asarray(payload, dtype=complex)
    if payload.shape != (cfg.L,):
        raise InvalidInputError(f"payload must have length {cfg.L}")
    spectrum = np.zeros(cfg.N, dtype=complex)
    spectrum[cfg.data_bins] = payload
    return spectrum


def extract_payload(spectrum, cfg: FrameConfig) -> np.ndarray:
    return np.asarray(spectrum)[cfg.data_bins]


def ofdm_modulate(spectrum, cfg: FrameConfig) -> np.ndarray:
    body = ifft(spectrum)
    return np.concatenate([body[cfg.N - cfg.N_cp:], body])


def ofdm_demodulate(symbol, cfg: FrameConfig) -> np.ndarray:
    """Strip the cyclic prefix and return the unscaled spectrum."""
    return np.fft.fft(np.asarray(symbol)[cfg.N_cp:cfg.N_s])


def build_training_block(gcs: GolayPair, cfg: FrameConfig) -> tuple[DualPolSignal, FrameLabel]:
    if gcs.L != cfg.L:
        raise InvalidInputError(f"training pair length {gcs.L} does not match L={cfg.L}")
    if not verify_complementary(gcs).passed:
        raise InvalidInputError("training pair is not complementary")
    pn = cfg.pn()
    w = pn.values if pn is not None else 1.0
    sym = lambda payload: ofdm_modulate(subcarrier_map(payload, cfg), cfg)  # noqa: E731
    x = np.concatenate([w * sym(gcs.a), sym(-np.conj(gcs.b))])
    y = np.concatenate([w * sym(gcs.b), sym(np.conj(gcs.a))])
    label = FrameLabel((0, cfg.N_s), (cfg.N_s, 2 * cfg.N_s), (2 * cfg.N_s, 2 * cfg.N_s))
    return DualPolSignal(x, y, cfg.F_s, true_frame_start=0), label


def build_frame(cfg: FrameConfig, gcs: GolayPair | None = None, data_bits=None,
                rng: RngStream | np.random.Generator | None = None) -> tuple[DualPolSignal, FrameLabel]:
    """Training block followed by ``cfg.n_data_symbols`` data symbols per polarization.

    ``data_bits`` holds ``2 * n_data_symbols * L * 4`` bits (X first, then Y);
    when omitted, random bits are drawn from ``rng``.
    """
    gcs = training_pair() if gcs is None else gcs
    block, _ = build_training_block(gcs, cfg)
    n_bits = cfg.n_data_symbols * cfg.L * 4
    if data_bits is None:
        if rng is None:
            raise InvalidInputError("either data_bits or rng is required")
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        data_bits = gen.integers(0, 2, size=2 * n_bits)
    data_bits = np.asarray(data_bits).ravel()
    if data_bits.size < 2 * n_bits:
        raise InvalidInputError(f"need {2 * n_bits} data bits, got {data_bits.size}")

    pols = []
    for k in range(2):
        syms = qam16_map(data_bits[k * n_bits:(k + 1) * n_bits]).reshape(cfg.n_data_symbols, cfg.L)
        pols.append([ofdm_modulate(subcarrier_map(s, cfg), cfg) for s in syms])
    x = np.concatenate([block.x, *pols[0]])
    y = np.concatenate([block.y, *pols[1]])
    return DualPolSignal(x, y, cfg.F_s, true_frame_start=0), FrameLabel.for_config(cfg)


def write_frame(sig: DualPolSignal, path, cfg: FrameConfig | None = None,
                label: FrameLabel | None = None, extra: dict | None = None) -> Path:
    """Write interleaved float32 ``re_x, im_x, re_y, im_y`` plus a JSON sidecar header.

    Returns the sidecar path (``<path>.json``).
    """
    path = Path(path)
    inter = np.empty((len(sig), 4), dtype="<f4")
    inter[:, 0], inter[:, 1] = sig.x.real, sig.x.imag
    inter[:, 2], inter[:, 3] = sig.y.real, sig.y.imag
    inter.tofile(path)
    header = {
        "format": "pdmsync-frame/1",
        "sample_format": "float32le interleaved re_x,im_x,re_y,im_y",
        "n_samples": len(sig),
        "sample_rate": sig.sample_rate,
        "true_frame_start": sig.true_frame_start,
        "frame_config": cfg.to_dict() if cfg is not None else None,
        "label": asdict(label) if label is not None else None,
    }
    if extra:
        header.update(extra)
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(header, indent=2))
    return side


def read_frame(path) -> tuple[DualPolSignal, dict]:
    path = Path(path)
    header = json.loads(path.with_name(path.name + ".json").read_text())
    raw = np.fromfile(path, dtype="<f4").reshape(-1, 4).astype(float)
    if raw.shape[0] != header["n_samples"]:
        raise InvalidInputError("sample count does not match header")
    sig = DualPolSignal(raw[:, 0] + 1j * raw[:, 1], raw[:, 2] + 1j * raw[:, 3],
                        header["sample_rate"], header.get("true_frame_start"))
    return sig, header
