import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from radonbarcode.barcode import (
    Barcode,
    Encoder,
    Extremum,
    barcode_to_pbm,
    barcode_to_string,
    encode_minmax,
    encode_threshold,
    find_extrema,
    hamming,
    minmax_row,
    parse_barcode,
    smooth,
    threshold_row,
)
from radonbarcode.exceptions import IncomparableBarcodes, InvalidWindow, MalformedBarcodeText
from radonbarcode.radon import ProjectionSet, project

MIN, MAX = Extremum.MIN, Extremum.MAX

rows5 = arrays(np.float64, 5, elements=st.floats(0, 100, allow_subnormal=False))


def pset(rows, image_side=2):
    rows = np.asarray(rows, dtype=np.float64)
    return ProjectionSet(np.arange(len(rows)) * 180.0 / len(rows), rows, image_side)


def random_barcode(rng, encoder="minmax", window=5):
    bits = rng.integers(0, 2, size=8 * 47)
    return Barcode(bits, encoder, 8, 32, window if encoder == "minmax" else 0)


# thresholding


def test_threshold_median_of_nonzero():
    assert threshold_row([0, 3, 5, 0, 2]).tolist() == [0, 1, 1, 0, 0]


def test_threshold_even_count_median():
    # nonzero {1, 2, 3, 4}: median 2.5
    assert threshold_row([1, 2, 0, 3, 4]).tolist() == [0, 0, 0, 1, 1]


def test_threshold_degenerate_rows():
    assert threshold_row([0, 0, 0, 0]).tolist() == [0, 0, 0, 0]
    assert threshold_row([4, 4, 4, 4]).tolist() == [1, 1, 1, 1]


def test_encode_threshold_concatenates_rows():
    bc = encode_threshold(pset([[0, 3, 5, 0, 2], [0, 0, 0, 0, 0]]))
    assert bc.bits.tolist() == [0, 1, 1, 0, 0, 0, 0, 0, 0, 0]
    assert bc.config == (Encoder.THRESHOLD, 2, 2, 0)


# smoothing


def test_smooth_identity_window():
    p = [0.0, 3.0, 1.0]
    assert smooth(p, 1).tolist() == p


def test_smooth_truncated_edges():
    assert smooth([0, 3, 0], 3).tolist() == [1.5, 1.0, 1.5]


@pytest.mark.parametrize("value", [0.1, 1 / 3, 7.25, 0.0])
@pytest.mark.parametrize("window", [1, 3, 5, 7])
def test_smooth_constant_is_exact(value, window):
    p = np.full(9, value)
    assert np.array_equal(smooth(p, window), p)


@pytest.mark.parametrize("window", [0, 2, 4, 11])
def test_smooth_rejects_bad_window(window):
    with pytest.raises(InvalidWindow):
        smooth(np.arange(9.0), window)


def test_smooth_matches_oracle(rng):
    for _ in range(50):
        p = rng.random(47)
        p[:5] = 0
        for w in (3, 5, 7):
            assert smooth(p, w).tolist() == oracles.moving_average(p.tolist(), w)


# extrema


def test_extrema_examples():
    assert find_extrema([1, 2, 3, 2, 1]) == [(0, MIN), (2, MAX), (4, MIN)]
    assert find_extrema([1, 2, 3, 4]) == [(0, MIN), (3, MAX)]
    assert find_extrema([5, 5, 5]) == [(0, MIN)]


def test_extrema_plateaus_collapse_to_first_index():
    assert find_extrema([0, 0, 2, 2, 2, 1, 1, 3]) == [(0, MIN), (2, MAX), (5, MIN), (7, MAX)]
    assert find_extrema([3, 3, 1]) == [(0, MAX), (2, MIN)]
    assert find_extrema([7]) == [(0, MIN)]


@settings(max_examples=200)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=30))
def test_extrema_alternate_and_match_oracle(values):
    ext = find_extrema(values)
    idx = [i for i, _ in ext]
    assert idx == sorted(set(idx))
    assert all(a[1] != b[1] for a, b in zip(ext, ext[1:]))
    assert [(i, k.value) for i, k in ext] == oracles.extrema(values)


# minmax encoding


def test_minmax_examples():
    assert minmax_row([1, 2, 3, 2, 1]).tolist() == [0, 0, 1, 1, 1]
    assert minmax_row([5, 4, 3, 1]).tolist() == [1, 1, 1, 1]
    assert minmax_row([1, 2, 3, 4]).tolist() == [0, 0, 0, 0]
    assert minmax_row([2, 2, 2]).tolist() == [0, 0, 0]


def test_minmax_two_humps():
    # min0 max2 min4 max6: spans [0,2)->0 [2,4)->1 [4,6)->0, bin 6 closes a rise -> 0
    assert minmax_row([0, 1, 2, 1, 0, 1, 2]).tolist() == [0, 0, 1, 1, 0, 0, 0]


@settings(max_examples=200)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=30))
def test_minmax_row_matches_oracle(values):
    assert minmax_row(values).tolist() == oracles.minmax_bits(values)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1e6, allow_subnormal=False), min_size=2, max_size=40, unique=True))
def test_monotone_rows(values):
    up = sorted(values)
    assert not minmax_row(up).any()
    assert minmax_row(up[::-1]).all()


def test_encode_minmax_records_window():
    bc = encode_minmax(pset([[1, 2, 3, 2, 1], [3, 2, 1, 0, 0]]), window=1)
    assert bc.bits.tolist() == [0, 0, 1, 1, 1, 1, 1, 1, 1, 1]
    assert bc.config == (Encoder.MINMAX, 2, 2, 1)
    with pytest.raises(InvalidWindow):
        encode_minmax(pset([[1, 2, 3, 2, 1]]), window=7)


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, (3, 5), elements=st.floats(0, 100, allow_subnormal=False)),
    st.integers(-20, 20),
)
def test_scale_invariance_power_of_two(rows, exp):
    c = 2.0**exp
    a, b = pset(rows), pset(rows * c)
    assert encode_threshold(a) == encode_threshold(b)
    assert encode_minmax(a, 3) == encode_minmax(b, 3)


def test_scale_invariance_generic_factors(rng):
    for _ in range(50):
        ps = project(rng.random((32, 32)), 8)
        c = rng.uniform(0.01, 100)
        scaled = ProjectionSet(ps.angles, ps.values * c, ps.image_side)
        assert encode_threshold(ps) == encode_threshold(scaled)
        assert encode_minmax(ps) == encode_minmax(scaled)


def test_length_independent_of_content(rng):
    for img in (np.zeros((32, 32)), np.ones((32, 32)), rng.random((32, 32))):
        ps = project(img, 8)
        assert len(encode_threshold(ps)) == len(encode_minmax(ps)) == 376


def test_blank_image_encodes_to_zeros():
    ps = project(np.zeros((32, 32)), 8)
    assert not encode_threshold(ps).bits.any()
    assert not encode_minmax(ps).bits.any()


# hamming


def test_hamming_identity_and_complement(rng):
    x = random_barcode(rng)
    assert hamming(x, x) == 0
    y = Barcode(1 - x.bits, "minmax", 8, 32, 5)
    assert hamming(x, y) == 376


def test_hamming_small_complement():
    a = Barcode([1, 0, 1, 0, 1], "threshold", 1, 2, 0)
    b = Barcode([0, 1, 0, 1, 0], "threshold", 1, 2, 0)
    assert hamming(a, b) == 5


def test_hamming_matches_naive_loop(rng):
    for _ in range(200):
        a, b = random_barcode(rng), random_barcode(rng)
        assert hamming(a, b) == oracles.hamming(a.bits.tolist(), b.bits.tolist())


def test_hamming_rejects_incomparable(rng):
    a = random_barcode(rng)
    for other in (
        random_barcode(rng, "threshold"),
        random_barcode(rng, window=3),
        Barcode(np.zeros(16 * 47), "minmax", 16, 32, 5),
    ):
        with pytest.raises(IncomparableBarcodes):
            hamming(a, other)


def test_metric_axioms(rng):
    for _ in range(300):
        x, y, z = (random_barcode(rng) for _ in range(3))
        assert hamming(x, y) == hamming(y, x)
        assert hamming(x, z) <= hamming(x, y) + hamming(y, z)


# text format


def test_text_round_trip(rng):
    for enc in ("minmax", "threshold"):
        bc = random_barcode(rng, enc)
        assert parse_barcode(barcode_to_string(bc)) == bc


def test_parse_reference_header():
    text = "RBC1;minmax;8;32;5\n" + "\n".join(["01" * 23 + "0"] * 8)
    bc = parse_barcode(text)
    assert bc.bins_per_angle == 47
    assert bc.rows.shape == (8, 47)
    assert bc.config == (Encoder.MINMAX, 8, 32, 5)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "RBC2;minmax;1;2;5\n00000",
        "RBC1;minmax;1;2\n00000",
        "RBC1;median;1;2;5\n00000",
        "RBC1;minmax;1;2;5\n0000",
        "RBC1;minmax;1;2;5\n00200",
        "RBC1;minmax;2;2;5\n00000",
        "RBC1;threshold;1;2;5\n00000",
    ],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(MalformedBarcodeText):
        parse_barcode(text)


def test_pbm_output():
    bc = Barcode([1, 0, 1, 0, 1, 0, 0, 0, 0, 1], "threshold", 2, 2, 0)
    assert barcode_to_pbm(bc) == "P1\n5 2\n1 0 1 0 1\n0 0 0 0 1\n"
