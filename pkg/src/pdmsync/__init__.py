"""Frame and carrier-frequency synchronization for PDM-OFDM with Golay training symbols."""

from .channel import ChannelProfile, OsnrModel, run_channel
from .core import ConfigurationError, InvalidInputError, PnSequence, RngStream, pn_generate
from .framer import DualPolSignal, FrameConfig, FrameLabel, build_frame, read_frame, write_frame
from .harness import CampaignSpec, TrialReport, emit_traces, load_campaign, run_campaign, run_trial
from .seqgen import GolayPair, training_pair, verify_complementary
from .sync import SyncConfig, SyncEstimate, estimate_cfo, frame_sync, synchronize

__version__ = "0.1.0"

__all__ = [
    "CampaignSpec", "ChannelProfile", "ConfigurationError", "DualPolSignal", "FrameConfig", "FrameLabel",
    "GolayPair", "InvalidInputError", "OsnrModel", "PnSequence", "RngStream", "SyncConfig", "SyncEstimate",
    "TrialReport", "build_frame", "emit_traces", "estimate_cfo", "frame_sync", "load_campaign", "pn_generate",
    "read_frame", "run_campaign", "run_channel", "run_trial", "synchronize", "training_pair",
    "verify_complementary", "write_frame",
]
