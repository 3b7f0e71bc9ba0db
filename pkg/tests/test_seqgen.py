import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdmsync.core import InvalidInputError
from pdmsync.seqgen import (
    ConstructionError,
    GolayPair,
    complementary_mate,
    golay_double,
    golay_seed_26,
    to_16qam,
    to_qpsk,
    training_pair,
    verify_complementary,
    write_pair_csv,
)


def brute_force_sums(a, b):
    """Both aperiodic autocorrelations summed at every lag, by explicit double loop."""
    L = len(a)
    out = []
    for j in range(L):
        s = 0j
        for m in range(L - j):
            s += a[m] * np.conj(a[m + j]) + b[m] * np.conj(b[m + j])
        out.append(s)
    return np.array(out)


def _all_binary_pairs(L):
    for bits in itertools.product((1.0, -1.0), repeat=2 * L):
        yield np.array(bits[:L]), np.array(bits[L:])


# every binary Golay pair of length 2 and 10, enumerated once by the oracle
GOLAY_2 = [(a, b) for a, b in _all_binary_pairs(2)
           if np.max(np.abs(brute_force_sums(a, b)[1:])) == 0]
GOLAY_10 = [
    (np.array([1, 1, -1, 1, -1, 1, -1, -1, 1, 1.0]), np.array([1, 1, -1, 1, 1, 1, 1, 1, -1, -1.0])),
]


def test_canonical_pairs():
    rep = verify_complementary(GolayPair([1, 1], [1, -1], "binary"))
    assert rep.passed and rep.peak == 4
    # lag-1 sum is a0*a1 + b0*b1 = 2
    bad = verify_complementary(GolayPair([1, 1], [1, 1], "binary"))
    assert not bad.passed and bad.max_sidelobe == 2
    assert brute_force_sums([1, 1], [1, 1])[1] == 2


def test_oracle_agrees_with_fast_checker():
    a, b = GOLAY_10[0]
    sums = brute_force_sums(a, b)
    assert sums[0] == 20 and np.max(np.abs(sums[1:])) == 0
    assert verify_complementary(GolayPair(a, b, "binary")).passed


def test_seed_26():
    p = golay_seed_26()
    assert (p.L, len(p.b)) == (26, 26)
    assert set(np.unique(p.a.real)) == {-1.0, 1.0}
    sums = brute_force_sums(p.a, p.b)
    assert sums[0].real == 52
    assert np.max(np.abs(sums[1:])) == 0


def test_qpsk_lift():
    seed = golay_seed_26()
    q = to_qpsk(seed)
    assert q.L == 26 and q.alphabet == "qpsk"
    np.testing.assert_allclose(np.abs(q.a), 1, atol=1e-12)
    np.testing.assert_allclose(brute_force_sums(q.a, q.b), brute_force_sums(seed.a, seed.b), atol=1e-12)
    with pytest.raises(InvalidInputError):
        to_qpsk(q)


def test_doubling_chain_reaches_416():
    q = to_qpsk(golay_seed_26())
    lengths = []
    for _ in range(4):
        q = golay_double(q)
        lengths.append(q.L)
        assert verify_complementary(q).passed
    assert lengths == [52, 104, 208, 416]
    assert verify_complementary(q).peak == pytest.approx(832, rel=1e-12)


def test_double_rejects_non_complementary():
    with pytest.raises(InvalidInputError):
        golay_double(GolayPair([1, 1], [1, 1], "binary"))


@pytest.mark.parametrize("pair", GOLAY_2 + GOLAY_10, ids=lambda p: f"L{len(p[0])}")
def test_doubling_preserves_complementarity(pair):
    p = GolayPair(*pair, "binary")
    for _ in range(3):
        p = golay_double(p)
        assert verify_complementary(p).passed


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(GOLAY_2 + GOLAY_10 + [(golay_seed_26().a, golay_seed_26().b)]),
       st.booleans(), st.booleans(), st.booleans())
def test_doubling_property_over_equivalent_pairs(pair, neg_a, rev_b, swap):
    # negation, reversal and swapping map Golay pairs to Golay pairs
    a, b = pair
    a = -a if neg_a else a
    b = b[::-1] if rev_b else b
    if swap:
        a, b = b, a
    p = GolayPair(a, b, "binary")
    assert verify_complementary(p).passed
    assert verify_complementary(golay_double(p)).passed


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_unit_rotation_leaves_sums_unchanged(t1, t2):
    p = training_pair()
    rot = GolayPair(p.a * np.exp(1j * t1), p.b * np.exp(1j * t2), "qam16")
    np.testing.assert_allclose(np.abs(brute_force_sums(rot.a[:64], rot.b[:64])),
                               np.abs(brute_force_sums(p.a[:64], p.b[:64])), atol=1e-9)
    np.testing.assert_allclose(brute_force_sums(rot.a, rot.b)[0], 832, rtol=1e-9)


def test_frozen_16qam_pair():
    p = training_pair()
    assert p.L == 416 and p.alphabet == "qam16"
    assert p.mean_energy == pytest.approx(1.0, abs=1e-9)
    sums = brute_force_sums(p.a, p.b)
    assert sums[0].real == pytest.approx(832, rel=1e-9)
    assert np.max(np.abs(sums[1:])) <= 1e-9 * 832
    grid = {-3, -1, 1, 3}
    for s in (p.a, p.b):
        scaled = s * np.sqrt(10)
        assert set(np.round(scaled.real).astype(int)) <= grid
        assert set(np.round(scaled.imag).astype(int)) <= grid
        np.testing.assert_allclose(scaled, np.round(scaled.real) + 1j * np.round(scaled.imag), atol=1e-12)


def test_mate_is_cross_orthogonal():
    q = to_qpsk(golay_seed_26())
    m = complementary_mate(q)
    cross = sum(np.correlate(x, y, "full") for x, y in ((q.a, m.a), (q.b, m.b)))
    assert np.max(np.abs(cross)) < 1e-12


def test_16qam_rejects_bad_companion():
    q = to_qpsk(golay_seed_26())
    # q itself is a valid (if useless) companion: 3q/sqrt(5) stays complementary
    assert verify_complementary(to_16qam(q, q)).passed
    flipped = GolayPair(q.a, -q.b, "qpsk")
    with pytest.raises(ConstructionError):
        to_16qam(q, flipped)
    with pytest.raises(InvalidInputError):
        to_16qam(golay_seed_26(), q)


def test_pair_csv(tmp_path):
    path = tmp_path / "pair.csv"
    write_pair_csv(training_pair(), path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "index,re_a,im_a,re_b,im_b"
    assert rows.shape == (416, 5)
    np.testing.assert_array_equal(rows[:, 1] + 1j * rows[:, 2], training_pair().a)


def test_pair_rejects_bad_shapes():
    with pytest.raises(InvalidInputError):
        GolayPair([1, 1], [1], "binary")
    with pytest.raises(InvalidInputError):
        GolayPair([1], [1], "octal")
