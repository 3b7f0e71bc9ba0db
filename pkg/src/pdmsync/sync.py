"""Joint frame and frequency synchronization from the Alamouti training block.

Timing
    For each candidate start ``d`` and relative polarization delay ``alpha``
    in ``[-beta, beta]`` the estimator forms::

        PxA(d) = sum_n  rx(d+n)       p(n) ry(d+alpha+Nr+mod(Ncp-n, N))
        PxB(d) = sum_n  ry(d+alpha+n) p(n) rx(d+Nr+mod(Ncp-n, N))
        PyA(d) = sum_n  rx(d-alpha+n) p(n) ry(d+Nr+mod(Ncp-n, N))
        PyB(d) = sum_n  ry(d+n)       p(n) rx(d-alpha+Nr+mod(Ncp-n, N))

    with plain (unconjugated) products; the second training symbol is the
    conjugate time reversal of the first, so the products collapse to
    ``|a(n)|^2 + |b(n)|^2`` at the true start. The metric is
    ``M = |PA - PB|^2 / R^2``, maximized over ``alpha`` for each ``d``. By
    default ``R`` is the energy of the ``2 * Ns`` samples from ``d``; the
    printed ``R = 2 * sum_{n<Ns} |r(d+n)|^2`` is available as an option.

    The sums only depend on two bilinear kernels,
    ``F(d, a) = PxA(d; a)`` and ``G(d, a) = PyB(d; a)``, because
    ``PxB(d; a) = G(d+a, a)`` and ``PyA(d; a) = F(d-a, a)``.

Frequency
    The fractional part comes from the phase between cyclic-prefix samples
    and their copies one FFT length later (both training symbols, both
    polarizations). The integer part maximizes the cyclic correlation between
    the PN-de-weighted, CP-stripped first training symbol spectrum and the
    known ``A + B`` spectrum.

    Under DGD at a 45 degree launch the x-pol arrival at ``pad - DGD/2``
    carries ``(A - B)/2`` and the one at ``pad + DGD/2`` carries
    ``(A + B)/2``; frame sync lands on either. Against the ``A + B``
    reference the former cancels, so the x-only integer metric can fail
    there while the ``"diversity"`` variant always includes the good arrival.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from .core import PnSequence
from .framer import DualPolSignal, FrameConfig, subcarrier_map
from .seqgen import GolayPair, training_pair

# Calibration of the (1/pi)*arg fractional estimators, fitted by sweeping a
# known CFO over (-delta_f/2, delta_f/2); see tests/test_sync.py.
FRAC_KAPPA = {"cp": 0.5, "printed": 1.0}


class WindowError(IndexError):
    """The requested metric window reaches outside the received buffer."""


class DegenerateInputError(ValueError):
    """An estimator sum vanished, so no phase or argmax can be formed."""


@dataclass(frozen=True)
class SyncConfig:
    """Estimator settings.

    ``search_window`` is an inclusive ``(first, last)`` range of candidate
    starts; ``None`` searches every start whose metric fits in the buffer.
    ``conjugate`` switches the second factor of every product to its
    conjugate (kept for comparison only). ``frac_method`` selects the
    fractional-CFO estimator: ``"cp"`` (default) or ``"printed"``, the
    half-symbol sum of the unconjugated timing products. ``energy_norm``
    picks the metric denominator: ``"two_symbol"`` (default) uses the energy
    of the windows at ``d`` and ``d + N_s``, ``"printed"`` twice the energy
    of the window at ``d`` only, which diverges over a noiseless zero pad.
    ``integer_method`` selects the integer-CFO input: ``"x"`` (default) uses
    the x-pol first training symbol at ``d_hat_x`` only, ``"diversity"`` sums
    the metric over both polarizations and both DGD arrivals.
    """

    frame_cfg: FrameConfig = field(default_factory=FrameConfig)
    beta: int = 8
    gcs: GolayPair | None = None
    search_window: tuple[int, int] | None = None
    conjugate: bool = False
    frac_method: str = "cp"
    kappa: float | None = None
    energy_norm: str = "two_symbol"
    integer_method: str = "x"

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.frac_method not in FRAC_KAPPA:
            raise ValueError(f"unknown frac_method {self.frac_method!r}")
        if self.energy_norm not in ("two_symbol", "printed"):
            raise ValueError(f"unknown energy_norm {self.energy_norm!r}")
        if self.integer_method not in ("x", "diversity"):
            raise ValueError(f"unknown integer_method {self.integer_method!r}")
        if self.gcs is None:
            object.__setattr__(self, "gcs", training_pair())

    @property
    def pn(self) -> PnSequence | None:
        return self.frame_cfg.pn()

    @property
    def pn_weights(self) -> np.ndarray:
        pn = self.pn
        return pn.values if pn is not None else np.ones(self.frame_cfg.N_s)

    @property
    def frac_kappa(self) -> float:
        return FRAC_KAPPA[self.frac_method] if self.kappa is None else self.kappa

    @property
    def alphas(self) -> np.ndarray:
        """Candidate delays ordered 0, -1, 1, -2, 2, ... so argmax breaks ties toward small |alpha|."""
        out = [0]
        for k in range(1, self.beta + 1):
            out += [-k, k]
        return np.array(out, dtype=np.int64)

    def valid_range(self, n_samples: int) -> tuple[int, int]:
        c = self.frame_cfg
        return self.beta, n_samples - self.beta - c.N_r - c.N


@dataclass(frozen=True)
class MetricTrace:
    d: np.ndarray
    m_x: np.ndarray
    m_y: np.ndarray
    alpha_x: np.ndarray
    alpha_y: np.ndarray
    mu: np.ndarray | None = None
    xi: np.ndarray | None = None


class FrameSync(NamedTuple):
    d_hat_x: int
    d_hat_y: int
    alpha_hat: int
    trace: MetricTrace


@dataclass(frozen=True)
class SyncEstimate:
    d_hat_x: int
    d_hat_y: int
    alpha_hat: int
    eps_hat: float
    mu_hat: int
    nu_hat_hz: float
    trace: MetricTrace | None = field(default=None, repr=False)


@numba.njit(cache=True, fastmath=True)
def _bilinear(u, v, p, d0, n_d, shifts, N, N_cp, N_r):
    # out[i, j] = sum_n p[n] u[d+n] v[d + shifts[j] + N_r + mod(N_cp - n, N)], d = d0 + i.
    # Entries needing samples outside [0, len) stay NaN.
    Ns = N + N_cp
    n_u = u.shape[0]
    n_v = v.shape[0]
    out = np.full((n_d, shifts.shape[0]), np.nan + 0j)
    w = np.empty(Ns, dtype=np.complex128)
    for i in range(n_d):
        d = d0 + i
        if d < 0 or d + Ns > n_u:
            continue
        for n in range(Ns):
            w[n] = p[n] * u[d + n]
        for j in range(shifts.shape[0]):
            base = d + shifts[j] + N_r
            if base < 0 or base + N > n_v:
                continue
            acc = 0j
            # n in [0, N_cp]: index base + N_cp - n; n in (N_cp, Ns): base + N + N_cp - n
            top = base + N_cp
            for n in range(N_cp + 1):
                acc += w[n] * v[top - n]
            top += N
            for n in range(N_cp + 1, Ns):
                acc += w[n] * v[top - n]
            out[i, j] = acc
    return out


def _streams(r: DualPolSignal, cfg: SyncConfig):
    x = np.ascontiguousarray(r.x)
    y = np.ascontiguousarray(r.y)
    if cfg.conjugate:
        return x, y, np.conj(x), np.conj(y)
    return x, y, x, y


def _window(r: DualPolSignal, cfg: SyncConfig) -> tuple[int, int]:
    lo, hi = cfg.valid_range(len(r))
    if cfg.search_window is not None:
        a, b = cfg.search_window
        if a < lo or b > hi:
            raise WindowError(f"search window {cfg.search_window} outside valid range [{lo}, {hi}]")
        lo, hi = a, b
    if hi < lo:
        raise WindowError("received buffer too short for a single metric evaluation")
    return lo, hi


def timing_correlation(r: DualPolSignal, d: int, alpha: int, cfg: SyncConfig) -> tuple[complex, complex]:
    """``(Px(d; alpha), Py(d; alpha))`` for a single candidate."""
    c = cfg.frame_cfg
    need_lo = d - abs(alpha)
    need_hi = d + abs(alpha) + c.N_r + c.N
    if need_lo < 0 or need_hi > len(r):
        raise WindowError(f"candidate d={d}, alpha={alpha} reaches outside the buffer")
    x, y, xv, yv = _streams(r, cfg)
    p = cfg.pn_weights
    a = np.array([alpha], dtype=np.int64)
    k = abs(alpha)
    # rows of F and G start at d - |alpha|
    F = _bilinear(x, yv, p, d - k, 2 * k + 1, a, c.N, c.N_cp, c.N_r)
    G = _bilinear(y, xv, p, d - k, 2 * k + 1, -a, c.N, c.N_cp, c.N_r)
    Fd, Fdm = F[k, 0], F[k - alpha, 0]
    Gd, Gdp = G[k, 0], G[k + alpha, 0]
    return complex(Fd - Gdp), complex(Fdm - Gd)


def timing_energy(r: DualPolSignal, d: int, cfg: SyncConfig) -> tuple[float, float]:
    """``(Rx(d), Ry(d))``, the metric normalization at ``d``.

    With ``energy_norm="printed"`` this is twice the energy of the
    ``N_s``-sample window at ``d``; otherwise the energy of the two
    consecutive windows at ``d`` and ``d + N_s``.
    """
    Ns = cfg.frame_cfg.N_s
    span = Ns if cfg.energy_norm == "printed" else 2 * Ns
    if d < 0 or d + span > len(r):
        raise WindowError("energy window outside buffer")
    rx = _window_energy(r.x, d, d, cfg)[0]
    ry = _window_energy(r.y, d, d, cfg)[0]
    return float(rx), float(ry)


def _window_energy(s: np.ndarray, lo: int, hi: int, cfg: SyncConfig) -> np.ndarray:
    Ns = cfg.frame_cfg.N_s
    e = np.concatenate([[0.0], np.cumsum(np.abs(s) ** 2)])
    d = np.arange(lo, hi + 1)
    if cfg.energy_norm == "printed":
        return 2 * (e[d + Ns] - e[d])
    return e[d + 2 * Ns] - e[d]


def metric_grid(r: DualPolSignal, cfg: SyncConfig):
    """Full ``M_x(d; alpha)``, ``M_y(d; alpha)`` over the search window.

    Returns ``(d, alphas, m_x, m_y)`` with metric arrays of shape
    ``(len(d), len(alphas))``.
    """
    c = cfg.frame_cfg
    lo, hi = _window(r, cfg)
    x, y, xv, yv = _streams(r, cfg)
    p = cfg.pn_weights
    alphas = cfg.alphas
    beta = cfg.beta
    d0 = lo - beta
    n_ext = hi - lo + 1 + 2 * beta
    F = _bilinear(x, yv, p, d0, n_ext, alphas, c.N, c.N_cp, c.N_r)
    G = _bilinear(y, xv, p, d0, n_ext, -alphas, c.N, c.N_cp, c.N_r)

    d = np.arange(lo, hi + 1)
    cols = np.arange(alphas.size)[None, :]
    i = (d - d0)[:, None]
    px = F[i, cols] - G[i + alphas[None, :], cols]
    py = F[i - alphas[None, :], cols] - G[i, cols]

    rx = _window_energy(r.x, lo, hi, cfg)[:, None]
    ry = _window_energy(r.y, lo, hi, cfg)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        m_x = np.where(rx > 0, np.abs(px) ** 2 / rx**2, 0.0)
        m_y = np.where(ry > 0, np.abs(py) ** 2 / ry**2, 0.0)
    return d, alphas, m_x, m_y


def frame_sync(r: DualPolSignal, cfg: SyncConfig) -> FrameSync:
    d, alphas, m_x, m_y = metric_grid(r, cfg)
    ax = np.argmax(m_x, axis=1)
    ay = np.argmax(m_y, axis=1)
    rows = np.arange(d.size)
    mx = m_x[rows, ax]
    my = m_y[rows, ay]
    ix = int(np.argmax(mx))
    iy = int(np.argmax(my))
    trace = MetricTrace(d=d, m_x=mx, m_y=my, alpha_x=alphas[ax], alpha_y=alphas[ay])
    return FrameSync(int(d[ix]), int(d[iy]), int(alphas[ax[ix]]), trace)


def _frac_cp(r: DualPolSignal, d_hat_x: int, d_hat_y: int, cfg: SyncConfig) -> complex:
    c = cfg.frame_cfg
    # TS1 carries the PN weight on its prefix as well, so strip it before pairing
    w = cfg.pn_weights
    weights = (w[:c.N_cp] * w[c.N:c.N_s], np.ones(c.N_cp))
    acc = 0j
    for s, d in ((r.x, d_hat_x), (r.y, d_hat_y)):
        for k in range(2):
            start = d + k * c.N_s
            if start < 0 or start + c.N_s > len(s):
                raise WindowError("training block outside buffer")
            head = s[start:start + c.N_cp]
            tail = s[start + c.N:start + c.N + c.N_cp]
            acc += np.sum(weights[k] * np.conj(head) * tail)
    return acc


def _frac_printed(r: DualPolSignal, d_hat: int, cfg: SyncConfig) -> complex:
    c = cfg.frame_cfg
    if d_hat < 0 or d_hat + c.N_r + c.N > len(r):
        raise WindowError("training block outside buffer")
    x, y, xv, yv = _streams(r, cfg)
    p = cfg.pn_weights
    n = np.arange(c.N_s // 2)
    m = np.mod(c.N_cp - n, c.N)
    pa = x[d_hat + n] * p[n] * yv[d_hat + c.N_r + m]
    pb = y[d_hat + n] * p[n] * xv[d_hat + c.N_r + m]
    return complex(np.sum(pa - pb))


def frac_cfo(r: DualPolSignal, d_hat_x: int, cfg: SyncConfig, d_hat_y: int | None = None) -> float:
    """Fractional CFO in subcarrier units, ``kappa/pi * arg(sum)``."""
    d_hat_y = d_hat_x if d_hat_y is None else d_hat_y
    if cfg.frac_method == "cp":
        acc = _frac_cp(r, d_hat_x, d_hat_y, cfg)
    else:
        acc = _frac_printed(r, d_hat_x, cfg)
    if not np.isfinite(acc) or abs(acc) == 0:
        raise DegenerateInputError("fractional CFO sum is zero")
    return float(cfg.frac_kappa * np.angle(acc) / np.pi)


def reference_spectrum(cfg: SyncConfig) -> np.ndarray:
    """``A_f + B_f`` in FFT bin order."""
    c = cfg.frame_cfg
    return subcarrier_map(cfg.gcs.a, c) + subcarrier_map(cfg.gcs.b, c)


def _xi(s: np.ndarray, d: int, cfg: SyncConfig) -> np.ndarray:
    c = cfg.frame_cfg
    if d < 0 or d + c.N_s > len(s):
        raise WindowError("training symbol outside buffer")
    R = np.fft.fft((s[d:d + c.N_s] * cfg.pn_weights)[c.N_cp:])
    energy = float(np.sum(np.abs(R) ** 2))
    if energy == 0:
        raise DegenerateInputError("received training spectrum is all zero")
    S = reference_spectrum(cfg)
    # corr[k] = sum_v conj(S[v]) R[(v + k) mod N]
    corr = np.fft.ifft(np.conj(np.fft.fft(S)) * np.fft.fft(R))
    return np.abs(corr) ** 2 / energy**2


def integer_cfo(r: DualPolSignal, d_hat_x: int, cfg: SyncConfig,
                alpha_hat: int = 0) -> tuple[int, np.ndarray, np.ndarray]:
    """Integer CFO ``mu`` in ``[-N/2, N/2-1]``; returns ``(mu_hat, mu, xi)``.

    ``r`` must already be compensated for the fractional part. With
    ``cfg.integer_method == "diversity"`` the metric is summed over both
    polarizations and both arrival windows ``d_hat_x`` and ``d_hat_x + alpha_hat``.
    """
    c = cfg.frame_cfg
    if cfg.integer_method == "diversity":
        starts = sorted({d_hat_x, d_hat_x + alpha_hat})
        xi_full = sum(_xi(s, d, cfg) for d in starts for s in (r.x, r.y))
    else:
        xi_full = _xi(r.x, d_hat_x, cfg)
    mu = np.arange(-c.N // 2, c.N // 2)
    xi = xi_full[np.mod(mu, c.N)]
    order = np.lexsort((mu > 0, np.abs(mu)))  # ties: smaller |mu|, then negative
    best = order[np.argmax(xi[order])]
    return int(mu[best]), mu, xi


def compensate_cfo(r: DualPolSignal, nu_hz: float, F_s: float | None = None) -> DualPolSignal:
    F_s = r.sample_rate if F_s is None else F_s
    if nu_hz == 0:
        return r
    rot = np.exp(-2j * np.pi * nu_hz * np.arange(len(r)) / F_s)
    return r.with_samples(r.x * rot, r.y * rot)


def estimate_cfo(r: DualPolSignal, d_hat_x: int, cfg: SyncConfig, d_hat_y: int | None = None,
                 alpha_hat: int = 0, trace: MetricTrace | None = None) -> SyncEstimate:
    c = cfg.frame_cfg
    d_hat_y = d_hat_x if d_hat_y is None else d_hat_y
    eps = frac_cfo(r, d_hat_x, cfg, d_hat_y)
    work = compensate_cfo(r, eps * c.delta_f, c.F_s)
    mu_hat, mu, xi = integer_cfo(work, d_hat_x, cfg, alpha_hat)
    if trace is not None:
        trace = MetricTrace(trace.d, trace.m_x, trace.m_y, trace.alpha_x, trace.alpha_y, mu, xi)
    return SyncEstimate(d_hat_x, d_hat_y, alpha_hat, eps, mu_hat, (eps + mu_hat) * c.delta_f, trace)


def synchronize(r: DualPolSignal, cfg: SyncConfig) -> SyncEstimate:
    """Frame sync followed by CFO estimation; the returned trace holds M and Xi."""
    fs = frame_sync(r, cfg)
    return estimate_cfo(r, fs.d_hat_x, cfg, fs.d_hat_y, fs.alpha_hat, fs.trace)
