"""Linear fiber impairments on a dual-polarization signal.

:func:`run_channel` applies them in a fixed order: timing pad, residual CD,
DGD, PDL, CFO, laser phase noise, ASE. All CFO and phase operators use the
absolute buffer index as time reference.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import ConfigurationError, InvalidInputError, RngStream, complex_gaussian
from .framer import DualPolSignal

C_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class OsnrModel:
    reference_bandwidth_hz: float = 12.5e9

    def __post_init__(self):
        if self.reference_bandwidth_hz <= 0:
            raise ConfigurationError("reference bandwidth must be positive")


@dataclass(frozen=True)
class ChannelProfile:
    """Impairment set for one trial. ``None`` disables OSNR/linewidth."""

    cfo_hz: float = 0.0
    osnr_db: float | None = None
    dgd_ps: float = 0.0
    pmd_launch_deg: float = 45.0
    pdl_db: float = 0.0
    pdl_axis_deg: float = 0.0
    residual_cd_ps_per_nm: float = 0.0
    linewidth_hz: float | None = None
    timing_pad: int | tuple[int, int] = 0
    center_wavelength_nm: float = 1550.0
    random_carrier_phase: bool = False

    def __post_init__(self):
        if self.dgd_ps < 0 or self.pdl_db < 0:
            raise ConfigurationError("dgd_ps and pdl_db must be non-negative")
        if self.linewidth_hz is not None and self.linewidth_hz < 0:
            raise ConfigurationError("linewidth must be non-negative")
        pad = self.timing_pad
        if isinstance(pad, (tuple, list)):
            if len(pad) != 2 or not 0 <= pad[0] <= pad[1]:
                raise ConfigurationError("timing_pad range must be (lo, hi) with 0 <= lo <= hi")
            object.__setattr__(self, "timing_pad", (int(pad[0]), int(pad[1])))
        elif pad < 0:
            raise ConfigurationError("timing_pad must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.timing_pad, tuple):
            d["timing_pad"] = list(self.timing_pad)
        return d


def _generator(rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def _rotate(x, y, theta):
    c, s = np.cos(theta), np.sin(theta)
    return c * x + s * y, -s * x + c * y


def draw_pad(spec, rng) -> int:
    if isinstance(spec, (tuple, list)):
        return int(_generator(rng).integers(spec[0], spec[1] + 1))
    return int(spec)


def apply_timing_pad(sig: DualPolSignal, pad_samples: int) -> DualPolSignal:
    """Prepend ``pad_samples`` zeros; noise is added later by :func:`add_ase`."""
    if pad_samples < 0:
        raise InvalidInputError("pad must be non-negative")
    if pad_samples == 0:
        return sig
    z = np.zeros(pad_samples, dtype=complex)
    start = (sig.true_frame_start or 0) + pad_samples
    return sig.with_samples(np.concatenate([z, sig.x]), np.concatenate([z, sig.y]), true_frame_start=start)


def apply_cfo(sig: DualPolSignal, nu_hz: float, F_s: float | None = None) -> DualPolSignal:
    F_s = sig.sample_rate if F_s is None else F_s
    if abs(nu_hz) > F_s / 2:
        raise ConfigurationError(f"|CFO| {nu_hz:g} Hz exceeds F_s/2")
    if nu_hz == 0:
        return sig
    rot = np.exp(2j * np.pi * nu_hz * np.arange(len(sig)) / F_s)
    return sig.with_samples(sig.x * rot, sig.y * rot)


def apply_phase_noise(sig: DualPolSignal, linewidth_hz: float | None, F_s: float | None, rng,
                      initial_phase: float = 0.0) -> DualPolSignal:
    """Common Wiener phase, increment variance ``2*pi*linewidth/F_s`` per sample."""
    F_s = sig.sample_rate if F_s is None else F_s
    if linewidth_hz is not None and linewidth_hz < 0:
        raise InvalidInputError("linewidth must be non-negative")
    if not linewidth_hz and initial_phase == 0.0:
        return sig
    phi = np.full(len(sig), float(initial_phase))
    if linewidth_hz:
        steps = _generator(rng).standard_normal(len(sig)) * np.sqrt(2 * np.pi * linewidth_hz / F_s)
        steps[0] = 0.0
        phi += np.cumsum(steps)
    rot = np.exp(1j * phi)
    return sig.with_samples(sig.x * rot, sig.y * rot)


def _freq_axis(n: int, F_s: float) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / F_s)


def apply_dgd(sig: DualPolSignal, dgd_ps: float, launch_deg: float = 45.0,
              F_s: float | None = None) -> DualPolSignal:
    """First-order PMD element with principal axes at ``launch_deg``.

    The first principal component is delayed by +DGD/2 and the second
    advanced by DGD/2, exactly in the frequency domain (cyclic over the buffer).
    """
    F_s = sig.sample_rate if F_s is None else F_s
    if dgd_ps < 0:
        raise InvalidInputError("DGD must be non-negative")
    if dgd_ps == 0:
        return sig
    theta = np.deg2rad(launch_deg)
    u1, u2 = _rotate(sig.x, sig.y, theta)
    f = _freq_axis(len(sig), F_s)
    half = np.exp(-1j * np.pi * f * dgd_ps * 1e-12)
    u1 = np.fft.ifft(np.fft.fft(u1) * half)
    u2 = np.fft.ifft(np.fft.fft(u2) * np.conj(half))
    x, y = _rotate(u1, u2, -theta)
    return sig.with_samples(x, y)


def apply_pdl(sig: DualPolSignal, pdl_db: float, axis_deg: float = 0.0) -> DualPolSignal:
    """Attenuate the axis at ``axis_deg + 90`` by ``pdl_db`` in power."""
    if pdl_db < 0:
        raise InvalidInputError("PDL must be non-negative")
    if pdl_db == 0:
        return sig
    theta = np.deg2rad(axis_deg)
    u1, u2 = _rotate(sig.x, sig.y, theta)
    u2 = u2 * 10 ** (-pdl_db / 20)
    x, y = _rotate(u1, u2, -theta)
    return sig.with_samples(x, y)


def cd_phase(f_hz, d_ps_per_nm: float, lambda_nm: float = 1550.0) -> np.ndarray:
    """Phase of the CD all-pass response, ``pi * D * lambda^2 * f^2 / c`` (SI units)."""
    D = d_ps_per_nm * 1e-12 / 1e-9
    lam = lambda_nm * 1e-9
    return np.pi * D * lam**2 * np.asarray(f_hz, dtype=float) ** 2 / C_LIGHT


def apply_cd(sig: DualPolSignal, d_ps_per_nm: float, lambda_nm: float = 1550.0,
             F_s: float | None = None) -> DualPolSignal:
    F_s = sig.sample_rate if F_s is None else F_s
    if d_ps_per_nm == 0:
        return sig
    H = np.exp(-1j * cd_phase(_freq_axis(len(sig), F_s), d_ps_per_nm, lambda_nm))
    return sig.with_samples(np.fft.ifft(np.fft.fft(sig.x) * H), np.fft.ifft(np.fft.fft(sig.y) * H))


def signal_power(sig: DualPolSignal) -> float:
    """Mean per-sample power summed over both polarizations, pad excluded."""
    k0 = sig.true_frame_start or 0
    x, y = sig.x[k0:], sig.y[k0:]
    if x.size == 0:
        return 0.0
    return float(np.mean(np.abs(x) ** 2) + np.mean(np.abs(y) ** 2))


def ase_variance(p_total: float, osnr_db: float, F_s: float, model: OsnrModel = OsnrModel()) -> float:
    """Per-polarization noise variance for a two-polarization OSNR in ``model``'s bandwidth."""
    return p_total * F_s / (2 * model.reference_bandwidth_hz * 10 ** (osnr_db / 10))


def measure_osnr_db(clean: DualPolSignal, noisy: DualPolSignal, model: OsnrModel = OsnrModel()) -> float:
    k0 = clean.true_frame_start or 0
    noise = np.mean(np.abs(noisy.x[k0:] - clean.x[k0:]) ** 2) + np.mean(np.abs(noisy.y[k0:] - clean.y[k0:]) ** 2)
    # noise power per sample over F_s, rescaled to the reference bandwidth
    noise_ref = noise * model.reference_bandwidth_hz / clean.sample_rate
    return float(10 * np.log10(signal_power(clean) / noise_ref))


def add_ase(sig: DualPolSignal, osnr_db: float | None, model: OsnrModel = OsnrModel(), rng=None) -> DualPolSignal:
    if osnr_db is None or np.isinf(osnr_db):
        return sig
    p = signal_power(sig)
    if p <= 0:
        raise InvalidInputError("cannot set OSNR on a zero-power signal")
    sigma = np.sqrt(ase_variance(p, osnr_db, sig.sample_rate, model))
    gen = _generator(rng)
    return sig.with_samples(sig.x + complex_gaussian(gen, len(sig), sigma),
                            sig.y + complex_gaussian(gen, len(sig), sigma))


def run_channel(sig: DualPolSignal, profile: ChannelProfile, rng: RngStream,
                model: OsnrModel = OsnrModel()) -> DualPolSignal:
    """Apply ``profile`` in the fixed order pad, CD, DGD, PDL, CFO, phase noise, ASE.

    Each stochastic stage draws from its own child stream of ``rng``.
    """
    F_s = sig.sample_rate
    sig = apply_timing_pad(sig, draw_pad(profile.timing_pad, rng.child("pad").generator()))
    sig = apply_cd(sig, profile.residual_cd_ps_per_nm, profile.center_wavelength_nm, F_s)
    sig = apply_dgd(sig, profile.dgd_ps, profile.pmd_launch_deg, F_s)
    sig = apply_pdl(sig, profile.pdl_db, profile.pdl_axis_deg)
    sig = apply_cfo(sig, profile.cfo_hz, F_s)
    if profile.linewidth_hz or profile.random_carrier_phase:
        gen = rng.child("phase").generator()
        phi0 = gen.uniform(0, 2 * np.pi) if profile.random_carrier_phase else 0.0
        sig = apply_phase_noise(sig, profile.linewidth_hz, F_s, gen, initial_phase=phi0)
    return add_ase(sig, profile.osnr_db, model, rng.child("ase").generator())
