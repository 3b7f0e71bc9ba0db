"""Monte-Carlo campaigns: frame -> channel -> estimator -> score, over a swept grid.

Every trial seeds its own streams from ``(master_seed, point index, trial
index)``, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelProfile, OsnrModel, run_channel
from .core import RngStream
from .framer import FrameConfig, build_frame
from .sync import SyncConfig, frame_sync, synchronize
from .seqgen import training_pair

SCHEMA_VERSION = "pdmsync-summary/1"

SWEEP_FIELDS = {
    "osnr_db": "osnr_db",
    "pdl_db": "pdl_db",
    "residual_cd": "residual_cd_ps_per_nm",
    "residual_cd_ps_per_nm": "residual_cd_ps_per_nm",
    "dgd_ps": "dgd_ps",
    "cfo_hz": "cfo_hz",
}

_FLOAT_FIELDS = ("cfo_hz", "osnr_db", "dgd_ps", "pmd_launch_deg", "pdl_db", "pdl_axis_deg",
                 "residual_cd_ps_per_nm", "linewidth_hz", "center_wavelength_nm")


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``5e9`` and ``5.0e9`` as floats (YAML 1.1 needs ``5.0e+9``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


class ConfigError(ValueError):
    """Malformed campaign configuration."""


def default_profile() -> ChannelProfile:
    return ChannelProfile(cfo_hz=5e9, osnr_db=None, linewidth_hz=100e3, timing_pad=(100, 1100),
                          random_carrier_phase=True)


@dataclass(frozen=True)
class CampaignSpec:
    sweep_variable: str
    sweep_values: tuple
    frame_cfg: FrameConfig = field(default_factory=FrameConfig)
    base_profile: ChannelProfile = field(default_factory=default_profile)
    trials_per_point: int = 200
    master_seed: int = 0
    beta: int = 8
    osnr_reference_bandwidth_hz: float = 12.5e9
    # candidate starts cover [beta, max pad + window_extra]; None means one frame length
    window_extra: int | None = None
    integer_method: str = "x"
    name: str = "campaign"

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_FIELDS:
            raise ConfigError(f"unknown sweep variable {self.sweep_variable!r}")
        if len(self.sweep_values) == 0:
            raise ConfigError("sweep grid is empty")
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be >= 1")
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))

    @property
    def n_data_symbols(self) -> int:
        return self.frame_cfg.n_data_symbols

    def profile_at(self, value: float) -> ChannelProfile:
        return replace(self.base_profile, **{SWEEP_FIELDS[self.sweep_variable]: value})

    def sync_config(self, profile: ChannelProfile, n_samples: int | None = None) -> SyncConfig:
        """Estimator settings; with ``n_samples`` the window is clipped to the buffer."""
        pad = profile.timing_pad
        pad_hi = pad[1] if isinstance(pad, tuple) else pad
        extra = self.frame_cfg.frame_length if self.window_extra is None else self.window_extra
        sc = SyncConfig(self.frame_cfg, beta=self.beta, integer_method=self.integer_method)
        hi = pad_hi + extra
        if n_samples is not None:
            hi = min(hi, sc.valid_range(n_samples)[1])
        return replace(sc, search_window=(self.beta, hi))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sweep": {"variable": self.sweep_variable, "values": list(self.sweep_values)},
            "frame_cfg": self.frame_cfg.to_dict(),
            "base_profile": self.base_profile.to_dict(),
            "trials_per_point": self.trials_per_point,
            "master_seed": self.master_seed,
            "beta": self.beta,
            "osnr_reference_bandwidth_hz": self.osnr_reference_bandwidth_hz,
            "window_extra": self.window_extra,
            "integer_method": self.integer_method,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignSpec":
        d = dict(d)
        known = {"name", "sweep", "frame_cfg", "base_profile", "trials_per_point", "master_seed",
                 "beta", "osnr_reference_bandwidth_hz", "window_extra", "integer_method",
                 "n_data_symbols", "outputs"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            sweep = d.pop("sweep")
            variable, values = sweep["variable"], sweep["values"]
        except (KeyError, TypeError):
            raise ConfigError("config needs sweep.variable and sweep.values") from None
        d.pop("outputs", None)
        frame = dict(d.pop("frame_cfg", {}) or {})
        if "n_data_symbols" in d:
            frame["n_data_symbols"] = d.pop("n_data_symbols")
        prof = dict(d.pop("base_profile", {}) or {})
        try:
            for k in _FLOAT_FIELDS:
                if prof.get(k) is not None:
                    prof[k] = float(prof[k])
            values = [float(v) for v in values]
            frame_cfg = FrameConfig(**frame)
            base = replace(default_profile(), **prof)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if isinstance(base.timing_pad, list):
            base = replace(base, timing_pad=tuple(base.timing_pad))
        try:
            return cls(sweep_variable=variable, sweep_values=tuple(values), frame_cfg=frame_cfg,
                       base_profile=base, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_campaign(path) -> CampaignSpec:
    try:
        data = yaml.load(Path(path).read_text(), Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return CampaignSpec.from_dict(data)


@dataclass(frozen=True)
class TrialReport:
    point_index: int
    point_value: float
    trial_index: int
    trial_seed: str
    pad: int
    true_frame_start: int
    nu_hz: float
    dgd_ps: float
    d_hat_x: int
    d_hat_y: int
    alpha_hat: int
    d_err_x: float
    d_err_y: float
    alpha_err: float
    eps_hat: float
    mu_hat: int
    nu_hat_hz: float
    cfo_err_hz: float
    sync_success: bool
    error: str = ""
    wall_time: float = 0.0


def expected_arrivals(profile: ChannelProfile, pad: int, F_s: float) -> tuple[list[float], list[float]]:
    """Frame-start instants carrying each polarization's training energy.

    With DGD the launched polarizations split over the two principal states,
    delayed by +DGD/2 and -DGD/2; a start is correct if it matches any
    arrival that carries nonzero power for that polarization.
    """
    h = profile.dgd_ps * 1e-12 * F_s / 2
    if h == 0:
        return [float(pad)], [float(pad)]
    th = math.radians(profile.pmd_launch_deg)
    c2, s2 = math.cos(th) ** 2, math.sin(th) ** 2
    tol = 1e-9
    ax = [pad + h] * (c2 > tol) + [pad - h] * (s2 > tol)
    ay = [pad + h] * (s2 > tol) + [pad - h] * (c2 > tol)
    return ax, ay


def _nearest(value: int, arrivals: list[float]) -> float:
    return min(arrivals, key=lambda a: (abs(value - a), a))


def _failed(base: dict, msg: str) -> TrialReport:
    nan = float("nan")
    return TrialReport(**base, d_hat_x=-1, d_hat_y=-1, alpha_hat=0, d_err_x=nan, d_err_y=nan, alpha_err=nan,
                       eps_hat=nan, mu_hat=0, nu_hat_hz=nan, cfo_err_hz=nan, sync_success=False, error=msg)


def run_trial(spec: CampaignSpec, point_value: float, trial_index: int, point_index: int = 0) -> TrialReport:
    t0 = time.perf_counter()
    label = f"{spec.name}/p{point_index}/t{trial_index}"
    stream = RngStream(spec.master_seed, label)
    profile = spec.profile_at(point_value)
    cfg = spec.frame_cfg
    base = dict(point_index=point_index, point_value=float(point_value), trial_index=trial_index,
                trial_seed=label, pad=-1, true_frame_start=-1, nu_hz=profile.cfo_hz, dgd_ps=profile.dgd_ps)
    try:
        sig, _ = build_frame(cfg, training_pair(), rng=stream.child("bits"))
        rx = run_channel(sig, profile, stream.child("channel"), OsnrModel(spec.osnr_reference_bandwidth_hz))
        pad = rx.true_frame_start
        base.update(pad=pad, true_frame_start=pad)
        est = synchronize(rx, spec.sync_config(profile, len(rx)))
    except Exception as exc:  # component failures are recorded, not raised
        rep = _failed(base, f"{type(exc).__name__}: {exc}")
        return replace(rep, wall_time=time.perf_counter() - t0)

    ax, ay = expected_arrivals(profile, pad, cfg.F_s)
    near_x = _nearest(est.d_hat_x, ax)
    near_y = _nearest(est.d_hat_y, ay)
    d_err_x = float(est.d_hat_x - near_x)
    d_err_y = float(est.d_hat_y - near_y)
    alpha_err = float(est.alpha_hat - (-2 * (near_x - pad)))
    ok = abs(d_err_x) <= 0.5 and abs(d_err_y) <= 0.5
    return TrialReport(**base, d_hat_x=est.d_hat_x, d_hat_y=est.d_hat_y, alpha_hat=est.alpha_hat,
                       d_err_x=d_err_x, d_err_y=d_err_y, alpha_err=alpha_err, eps_hat=est.eps_hat,
                       mu_hat=est.mu_hat, nu_hat_hz=est.nu_hat_hz, cfo_err_hz=est.nu_hat_hz - profile.cfo_hz,
                       sync_success=ok, wall_time=time.perf_counter() - t0)


def _job(args):
    spec, value, trial, point = args
    return run_trial(spec, value, trial, point)


def run_trials(spec: CampaignSpec, workers: int = 1) -> list[TrialReport]:
    jobs = [(spec, v, t, i) for i, v in enumerate(spec.sweep_values) for t in range(spec.trials_per_point)]
    if workers <= 1:
        reports = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return sorted(reports, key=lambda r: (r.point_index, r.trial_index))


def _stat(v: np.ndarray, fn) -> float | None:
    return float(fn(v)) if v.size else None


def summarize(spec: CampaignSpec, reports: list[TrialReport]) -> dict:
    """Per-point aggregates; excludes wall times so the result is order- and timing-independent."""
    points = []
    for i, value in enumerate(spec.sweep_values):
        rs = [r for r in reports if r.point_index == i]
        n = len(rs)
        fails = sum(not r.sync_success for r in rs)
        ex = np.array([r.d_err_x for r in rs if not math.isnan(r.d_err_x)])
        ey = np.array([r.d_err_y for r in rs if not math.isnan(r.d_err_y)])
        cfo = np.array([abs(r.cfo_err_hz) for r in rs if math.isfinite(r.cfo_err_hz)])
        hist: dict[str, int] = {}
        for e in ex:
            key = repr(float(e))
            hist[key] = hist.get(key, 0) + 1
        points.append({
            "value": value,
            "n_trials": n,
            "n_component_errors": sum(bool(r.error) for r in rs),
            "sync_error_rate": fails / n if n else None,
            "timing_error_rate_x": float(np.mean(ex != 0)) if ex.size else None,
            "timing_error_rate_y": float(np.mean(ey != 0)) if ey.size else None,
            "mean_abs_d_err_x": _stat(np.abs(ex), np.mean),
            "mean_abs_d_err_y": _stat(np.abs(ey), np.mean),
            "cfo_err_abs_mean_hz": _stat(cfo, np.mean),
            "cfo_err_abs_max_hz": _stat(cfo, np.max),
            "cfo_err_abs_p99_hz": _stat(cfo, lambda v: np.percentile(v, 99)),
            "timing_err_hist_x": dict(sorted(hist.items(), key=lambda kv: float(kv[0]))),
        })
    return {
        "schema": SCHEMA_VERSION,
        "config": spec.to_dict(),
        "osnr_convention": "two-polarization signal power over ASE power in the reference bandwidth",
        "sweep_variable": spec.sweep_variable,
        "points": points,
    }


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n"


_CSV_FIELDS = [f.name for f in fields(TrialReport)]


def write_trials_csv(reports: list[TrialReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_FIELDS)
        for r in reports:
            row = []
            for name in _CSV_FIELDS:
                v = getattr(r, name)
                row.append(repr(float(v)) if isinstance(v, float) else (int(v) if isinstance(v, bool) else v))
            w.writerow(row)


def read_trials_csv(path) -> list[TrialReport]:
    types = {f.name: f.type for f in fields(TrialReport)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                t = types[k]
                if t in ("int", int):
                    kw[k] = int(v)
                elif t in ("float", float):
                    kw[k] = float(v)
                elif t in ("bool", bool):
                    kw[k] = bool(int(v))
                else:
                    kw[k] = v
            out.append(TrialReport(**kw))
    return out


def run_campaign(spec: CampaignSpec, out_dir=None, workers: int = 1) -> tuple[dict, list[TrialReport]]:
    """Run every grid point; when ``out_dir`` is given write ``summary.json`` and ``trials.csv``."""
    reports = run_trials(spec, workers)
    summary = summarize(spec, reports)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(summary_json(summary))
        write_trials_csv(reports, out / "trials.csv")
    return summary, reports


# --- metric traces -----------------------------------------------------------

TRACE_SCENARIOS = ("timing-delay20", "cfo-pm5")


def _write_columns(path: Path, header: list[str], cols) -> None:
    rows = np.column_stack(cols)
    np.savetxt(path, rows, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def plateau_width(m: np.ndarray) -> int:
    """Length of the contiguous run around the peak within 3 dB of it."""
    k = int(np.argmax(m))
    half = m[k] / 2
    lo = k
    while lo > 0 and m[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < m.size - 1 and m[hi + 1] >= half:
        hi += 1
    return hi - lo + 1


def delay_scenario(use_pn: bool, delay_samples: int = 20, osnr_db: float | None = 4.0, seed: int = 0,
                   cfo_hz: float = 5e9, n_data_symbols: int = 2):
    """Received frame with a pure ``delay_samples`` relative delay (x late by half, y early by half).

    Returns ``(signal, SyncConfig)`` with ``beta = delay_samples``.
    """
    cfg = FrameConfig(n_data_symbols=n_data_symbols, use_pn=use_pn)
    stream = RngStream(seed, "trace/delay")
    sig, _ = build_frame(cfg, training_pair(), rng=stream.child("bits"))
    dgd_ps = delay_samples / cfg.F_s * 1e12
    prof = ChannelProfile(cfo_hz=cfo_hz, osnr_db=osnr_db, dgd_ps=dgd_ps, pmd_launch_deg=0.0, timing_pad=600)
    rx = run_channel(sig, prof, stream.child("channel"))
    return rx, SyncConfig(cfg, beta=delay_samples, search_window=(delay_samples, 600 + 558))


def cfo_scenario(nu_hz: float, osnr_db: float | None = None, seed: int = 0):
    cfg = FrameConfig(n_data_symbols=1)
    stream = RngStream(seed, f"trace/cfo{nu_hz:+.0f}")
    sig, _ = build_frame(cfg, training_pair(), rng=stream.child("bits"))
    rx = run_channel(sig, ChannelProfile(cfo_hz=nu_hz, osnr_db=osnr_db, timing_pad=300), stream.child("channel"))
    return rx, SyncConfig(cfg)


def emit_traces(scenario: str, out_dir, seed: int = 0) -> list[Path]:
    """Write metric traces for ``scenario`` (one of :data:`TRACE_SCENARIOS` or ``"all"``)."""
    if scenario not in (*TRACE_SCENARIOS, "all"):
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {TRACE_SCENARIOS + ('all',)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if scenario in ("timing-delay20", "all"):
        for use_pn in (True, False):
            rx, sc = delay_scenario(use_pn, seed=seed)
            tr = frame_sync(rx, sc).trace
            path = out / f"timing_{'pn' if use_pn else 'nopn'}.csv"
            _write_columns(path, ["d", "m_x", "m_y", "alpha_x"], [tr.d, tr.m_x, tr.m_y, tr.alpha_x])
            written.append(path)
    if scenario in ("cfo-pm5", "all"):
        for nu in (-5e9, 5e9):
            rx, sc = cfo_scenario(nu, seed=seed)
            est = synchronize(rx, sc)
            path = out / f"xi_{'plus' if nu > 0 else 'minus'}5ghz.csv"
            _write_columns(path, ["mu", "xi"], [est.trace.mu, est.trace.xi])
            written.append(path)
    return written
