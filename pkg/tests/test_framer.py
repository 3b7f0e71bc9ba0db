import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdmsync.core import ConfigurationError, InvalidInputError, RngStream, fft
from pdmsync.framer import (
    FrameConfig,
    FrameLabel,
    build_frame,
    build_training_block,
    extract_payload,
    ofdm_demodulate,
    ofdm_modulate,
    qam16_demap,
    qam16_map,
    read_frame,
    subcarrier_map,
    write_frame,
)
from pdmsync.seqgen import GolayPair, training_pair

CFG = FrameConfig()


def test_config_derived_sizes():
    assert (CFG.N_s, CFG.N_r) == (558, 604)
    assert CFG.delta_f == 78.125e6
    assert CFG.frame_length == 558 * 12


def test_layout_partitions_bins():
    bins = CFG.data_bins
    assert bins.size == len(set(bins.tolist())) == 416
    signed = np.where(bins >= 256, bins - 512, bins)
    assert signed.min() == -213 and signed.max() == 213
    assert not np.any(np.abs(signed) <= 5)
    unused = set(range(-256, 256)) - set(signed.tolist())
    dc_guard = {k for k in unused if abs(k) <= 5}
    edge = unused - dc_guard
    assert len(dc_guard) == 11  # DC plus five per side
    assert sum(k < 0 for k in edge) == 43 and sum(k > 0 for k in edge) == 42
    assert 416 + 1 + 10 + 85 == 512


@pytest.mark.parametrize("changes", [dict(N=500), dict(N_cp=512), dict(L=400), dict(edge_low=44)])
def test_config_rejects_bad_dimensioning(changes):
    with pytest.raises(ConfigurationError):
        FrameConfig(**changes)


def test_subcarrier_map():
    np.testing.assert_array_equal(subcarrier_map(np.zeros(416), CFG), np.zeros(512))
    rng = np.random.default_rng(1)
    payload = rng.normal(size=416) + 1j * rng.normal(size=416)
    spec = subcarrier_map(payload, CFG)
    assert np.count_nonzero(spec) == 416
    np.testing.assert_array_equal(extract_payload(spec, CFG), payload)
    with pytest.raises(InvalidInputError):
        subcarrier_map(np.ones(415), CFG)


def test_ofdm_symbol():
    rng = np.random.default_rng(2)
    spec = subcarrier_map(qam16_map(rng.integers(0, 2, 416 * 4)), CFG)
    sym = ofdm_modulate(spec, CFG)
    assert sym.shape == (558,)
    np.testing.assert_array_equal(sym[:46], sym[512:558])
    body = sym[46:]
    assert np.sum(np.abs(body) ** 2) == pytest.approx(np.sum(np.abs(spec) ** 2) / 512, rel=1e-9)
    np.testing.assert_allclose(ofdm_demodulate(sym, CFG), spec, atol=1e-12)


def test_training_block_structure():
    gcs = training_pair()
    block, label = build_training_block(gcs, CFG)
    assert len(block) == 1116
    assert label.ts1 == (0, 558) and label.ts2 == (558, 1116)
    p = CFG.pn().values
    sym = lambda v: ofdm_modulate(subcarrier_map(v, CFG), CFG)  # noqa: E731
    # de-weighting recovers the unweighted symbols exactly since p^2 = 1
    np.testing.assert_array_equal(block.x[:558] * p, sym(gcs.a) * p * p)
    np.testing.assert_allclose(block.x[:558] * p, sym(gcs.a), atol=1e-15)
    np.testing.assert_allclose(block.y[:558] * p, sym(gcs.b), atol=1e-15)
    # second symbol: spectra -conj(B) and conj(A)
    np.testing.assert_allclose(extract_payload(fft(block.x[558 + 46:]), CFG), -np.conj(gcs.b), atol=1e-12)
    np.testing.assert_allclose(extract_payload(fft(block.y[558 + 46:]), CFG), np.conj(gcs.a), atol=1e-12)


def test_second_symbol_conjugate_time_reversal():
    # ifft(conj(X))[n] = conj(ifft(X)[-n mod N]), so TS2-X is the negated conjugate reversal of unweighted TS1-Y
    gcs = training_pair()
    block, _ = build_training_block(gcs, CFG)
    s2 = block.x[558 + 46:]
    b_t = (block.y[:558] * CFG.pn().values)[46:]
    np.testing.assert_allclose(s2, -np.conj(b_t[(-np.arange(512)) % 512]), atol=1e-13)


def test_training_block_rejects_wrong_pairs():
    with pytest.raises(InvalidInputError):
        build_training_block(GolayPair([1, 1], [1, -1], "binary"), CFG)
    bad = GolayPair(np.ones(416), np.ones(416), "qam16")
    with pytest.raises(InvalidInputError):
        build_training_block(bad, CFG)


def test_ts_spectra_recovered_from_frame():
    gcs = training_pair()
    sig, label = build_frame(CFG, gcs, rng=RngStream(3, "bits"))
    p = CFG.pn().values
    a0, a1 = label.ts1
    ra = extract_payload(fft((sig.x[a0:a1] * p)[46:]), CFG)
    rb = extract_payload(fft((sig.y[a0:a1] * p)[46:]), CFG)
    np.testing.assert_allclose(ra, gcs.a, atol=1e-12)
    np.testing.assert_allclose(rb, gcs.b, atol=1e-12)


@pytest.mark.parametrize("n_data, length", [(0, 1116), (1, 1674), (10, 6696)])
def test_frame_lengths(n_data, length):
    cfg = FrameConfig(n_data_symbols=n_data)
    sig, label = build_frame(cfg, rng=np.random.default_rng(0))
    assert len(sig) == length
    assert sig.true_frame_start == 0
    assert label == FrameLabel.for_config(cfg)
    assert label.data[1] - label.data[0] == 558 * n_data


def test_paper_scale_frame_and_overhead():
    cfg = FrameConfig(n_data_symbols=1000)
    assert cfg.frame_length == 559_116
    assert 2 / 1002 == pytest.approx(0.002, abs=5e-5)
    sig, _ = build_frame(cfg, rng=np.random.default_rng(0))
    assert len(sig) == 559_116


def test_frame_bits_order_and_underrun():
    cfg = FrameConfig(n_data_symbols=2)
    n = 2 * 416 * 4
    bits = np.random.default_rng(4).integers(0, 2, 2 * n)
    sig, label = build_frame(cfg, data_bits=bits)
    first_x = extract_payload(fft(sig.x[label.data[0] + 46:label.data[0] + 558]), cfg)
    np.testing.assert_array_equal(qam16_demap(first_x), bits[:416 * 4])
    first_y = extract_payload(fft(sig.y[label.data[0] + 46:label.data[0] + 558]), cfg)
    np.testing.assert_array_equal(qam16_demap(first_y), bits[n:n + 416 * 4])
    with pytest.raises(InvalidInputError):
        build_frame(cfg, data_bits=bits[:-1])
    with pytest.raises(InvalidInputError):
        build_frame(cfg)


def test_ts_and_data_power_match():
    sig, label = build_frame(CFG, rng=RngStream(9, "bits"))
    ts = np.mean(np.abs(sig.x[:1116]) ** 2 + np.abs(sig.y[:1116]) ** 2)
    data = np.mean(np.abs(sig.x[1116:]) ** 2 + np.abs(sig.y[1116:]) ** 2)
    assert abs(ts / data - 1) < 0.05


def test_qam16_round_trip_and_energy():
    bits = np.random.default_rng(5).integers(0, 2, 10_000)
    np.testing.assert_array_equal(qam16_demap(qam16_map(bits)), bits)
    all_points = qam16_map(np.array([[(k >> s) & 1 for s in (3, 2, 1, 0)] for k in range(16)]).ravel())
    assert np.mean(np.abs(all_points) ** 2) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        qam16_map([0, 1, 1])


def test_qam16_gray_neighbours():
    words = np.array([[(k >> s) & 1 for s in (3, 2, 1, 0)] for k in range(16)])
    pts = qam16_map(words.ravel()) * np.sqrt(10)
    nearest = 2.0
    pairs = 0
    for i in range(16):
        for j in range(i + 1, 16):
            if abs(abs(pts[i] - pts[j]) - nearest) < 1e-9:
                assert np.sum(words[i] != words[j]) == 1
                pairs += 1
    assert pairs == 24


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=0.4, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=50))
def test_qam16_demap_is_nearest_point(noise):
    noise = np.array(noise)
    bits = np.random.default_rng(len(noise)).integers(0, 2, 4 * noise.size)
    # perturbations below half the minimum distance never flip a decision
    scaled = noise * (0.99 / np.sqrt(10) / max(1.0, np.max(np.abs(noise.real)), np.max(np.abs(noise.imag))))
    np.testing.assert_array_equal(qam16_demap(qam16_map(bits) + scaled), bits)


def test_frame_file_round_trip(tmp_path):
    cfg = FrameConfig(n_data_symbols=1)
    sig, label = build_frame(cfg, rng=RngStream(1, "bits"))
    path = tmp_path / "frame.bin"
    side = write_frame(sig, path, cfg, label, extra={"note": "test"})
    assert path.stat().st_size == len(sig) * 16
    header = json.loads(side.read_text())
    assert header["frame_config"]["N"] == 512 and header["label"]["ts2"] == [558, 1116]
    back, hdr = read_frame(path)
    assert hdr["note"] == "test"
    np.testing.assert_allclose(back.x, sig.x, atol=1e-6)
    np.testing.assert_allclose(back.y, sig.y, atol=1e-6)
    raw = np.fromfile(path, dtype="<f4")
    assert raw[0] == np.float32(sig.x[0].real) and raw[3] == np.float32(sig.y[0].imag)


def test_dual_pol_signal_validation():
    from pdmsync.framer import DualPolSignal

    with pytest.raises(InvalidInputError):
        DualPolSignal(np.ones(3), np.ones(4), 1.0)
    s = DualPolSignal(np.ones(3), np.ones(3), 1.0)
    assert s.energy == 6.0
    with pytest.raises(ValueError):
        s.x[0] = 2
