"""Command-line entry point.

Subcommands::

    pdmsync sim run --config FILE --out DIR [--trials K] [--seed S] [--workers W]
    pdmsync sim trace --scenario NAME --out DIR [--seed S]
    pdmsync seq dump [--out FILE]
    pdmsync frame dump --out FILE [--seed S] [--n-data-symbols N] [--no-pn]
                       [--pad P] [--cfo-hz F] [--osnr-db R]
    pdmsync sync trace --in FILE --out DIR [--beta B]

Exit status is 0 on success, 2 on a configuration error and 3 on an I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import ChannelProfile, run_channel
from .core import ConfigurationError, InvalidInputError, RngStream
from .framer import FrameConfig, build_frame, read_frame, write_frame
from .harness import TRACE_SCENARIOS, ConfigError, emit_traces, load_campaign, run_campaign
from .seqgen import training_pair, write_pair_csv
from .sync import SyncConfig, WindowError, synchronize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _sim_run(args) -> int:
    spec = load_campaign(args.config)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        spec = replace(spec, trials_per_point=args.trials)
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    summary, _ = run_campaign(spec, args.out, workers=args.workers)
    for p in summary["points"]:
        print(f"{spec.sweep_variable}={p['value']:g}  sync_error_rate={p['sync_error_rate']:.4f}  "
              f"cfo_err_max_hz={p['cfo_err_abs_max_hz']}")
    return EXIT_OK


def _sim_trace(args) -> int:
    for path in emit_traces(args.scenario, args.out, seed=args.seed):
        print(path)
    return EXIT_OK


def _seq_dump(args) -> int:
    pair = training_pair()
    if args.out is None:
        write_pair_csv(pair, sys.stdout)
    else:
        write_pair_csv(pair, args.out)
    return EXIT_OK


def _frame_dump(args) -> int:
    try:
        cfg = FrameConfig(n_data_symbols=args.n_data_symbols, use_pn=not args.no_pn)
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None
    stream = RngStream(args.seed, "cli/frame")
    sig, label = build_frame(cfg, rng=stream.child("bits"))
    extra = {"seed": args.seed}
    if args.pad or args.cfo_hz or args.osnr_db is not None:
        try:
            prof = ChannelProfile(cfo_hz=args.cfo_hz, osnr_db=args.osnr_db, timing_pad=args.pad)
        except ConfigurationError as exc:
            raise ConfigError(str(exc)) from None
        sig = run_channel(sig, prof, stream.child("channel"))
        extra["channel"] = prof.to_dict()
    side = write_frame(sig, args.out, cfg, label, extra=extra)
    print(side)
    return EXIT_OK


def _sync_trace(args) -> int:
    sig, header = read_frame(args.inp)
    frame = header.get("frame_config") or {}
    try:
        cfg = FrameConfig(**frame)
        sc = SyncConfig(cfg, beta=args.beta)
        est = synchronize(sig, sc)
    except (TypeError, ConfigurationError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tr = est.trace
    np.savetxt(out / "timing.csv", np.column_stack([tr.d, tr.m_x, tr.m_y, tr.alpha_x, tr.alpha_y]),
               delimiter=",", header="d,m_x,m_y,alpha_x,alpha_y", comments="", fmt="%.17g")
    np.savetxt(out / "xi.csv", np.column_stack([tr.mu, tr.xi]), delimiter=",", header="mu,xi",
               comments="", fmt="%.17g")
    result = {"d_hat_x": est.d_hat_x, "d_hat_y": est.d_hat_y, "alpha_hat": est.alpha_hat,
              "eps_hat": est.eps_hat, "mu_hat": est.mu_hat, "nu_hat_hz": est.nu_hat_hz}
    (out / "estimate.json").write_text(json.dumps(result, indent=2) + "\n")
    print(json.dumps(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdmsync", description="PDM-OFDM synchronization simulator")
    top = ap.add_subparsers(dest="group", required=True)

    sim = top.add_parser("sim", help="Monte-Carlo campaigns and metric traces")
    sim_sub = sim.add_subparsers(dest="cmd", required=True)
    run = sim_sub.add_parser("run", help="run a campaign from a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=_sim_run)
    trace = sim_sub.add_parser("trace", help="write timing-metric and Xi traces")
    trace.add_argument("--scenario", required=True, help=f"one of {', '.join(TRACE_SCENARIOS)} or all")
    trace.add_argument("--out", required=True)
    trace.add_argument("--seed", type=int, default=0)
    trace.set_defaults(func=_sim_trace)

    seq = top.add_parser("seq", help="training sequences")
    seq_sub = seq.add_subparsers(dest="cmd", required=True)
    sd = seq_sub.add_parser("dump", help="write the 16-QAM training pair as CSV")
    sd.add_argument("--out")
    sd.set_defaults(func=_seq_dump)

    frame = top.add_parser("frame", help="transmit frames")
    frame_sub = frame.add_subparsers(dest="cmd", required=True)
    fd = frame_sub.add_parser("dump", help="write one frame in the binary interchange format")
    fd.add_argument("--out", required=True)
    fd.add_argument("--seed", type=int, default=0)
    fd.add_argument("--n-data-symbols", type=int, default=10)
    fd.add_argument("--no-pn", action="store_true")
    fd.add_argument("--pad", type=int, default=0, help="leading zero samples before the frame")
    fd.add_argument("--cfo-hz", type=float, default=0.0)
    fd.add_argument("--osnr-db", type=float)
    fd.set_defaults(func=_frame_dump)

    sync = top.add_parser("sync", help="receiver synchronization")
    sync_sub = sync.add_subparsers(dest="cmd", required=True)
    st = sync_sub.add_parser("trace", help="synchronize a stored signal and write M_x, M_y and Xi")
    st.add_argument("--in", dest="inp", required=True)
    st.add_argument("--out", required=True)
    st.add_argument("--beta", type=int, default=8)
    st.set_defaults(func=_sync_trace)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidInputError, WindowError, KeyError, json.JSONDecodeError) as exc:
        print(f"I/O error: malformed input: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
