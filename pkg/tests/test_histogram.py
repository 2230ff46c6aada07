from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wsmquant.histogram import (
    ColorHistogram,
    UniversalHashParams,
    build_histogram,
    build_histogram_with_inverse,
    hash_colors,
    histogram_from_points,
    is_prime,
    next_prime,
    universal_hash,
)
from wsmquant.imageio import RgbImage


def test_primes():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert next_prime(131072) == 131101
    assert next_prime(7) == 7


def test_zero_coefficients_hash_to_zero():
    p = UniversalHashParams(11, (0, 0, 0))
    assert universal_hash((12, 200, 7), p) == 0


def test_direct_arithmetic():
    assert universal_hash((255, 255, 255), UniversalHashParams(7, (1, 1, 1))) == 2


def test_params_validation():
    with pytest.raises(ValueError):
        UniversalHashParams(8, (1, 1, 1))
    with pytest.raises(ValueError):
        UniversalHashParams(7, (7, 0, 0))


def test_params_for_image():
    p = UniversalHashParams.for_image(512, 512, seed=3)
    assert p.m == next_prime(2 * 512 * 512 // 4)
    assert p == UniversalHashParams.for_image(512, 512, seed=3)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(2, 10**6).map(next_prime).flatmap(
        lambda m: st.tuples(st.just(m), st.tuples(*[st.integers(0, m - 1)] * 3))
    ),
    st.tuples(*[st.integers(0, 255)] * 3),
)
def test_hash_matches_big_integer_reference(params, color):
    m, a = params
    p = UniversalHashParams(m, a)
    ref = (a[0] * color[0] + a[1] * color[1] + a[2] * color[2]) % m
    assert universal_hash(color, p) == ref
    assert int(hash_colors([color], p)[0]) == ref


def test_single_pixel():
    h = build_histogram(RgbImage(np.array([[[1, 2, 3]]], dtype=np.uint8)))
    assert len(h) == 1
    assert h.weights.tolist() == [1.0]


def test_two_by_two_weights():
    px = np.array([[[0, 0, 0], [0, 0, 0]], [[255, 255, 255], [0, 0, 0]]], dtype=np.uint8)
    h = build_histogram(RgbImage(px))
    assert h.as_dict() == {(0, 0, 0): 3, (255, 255, 255): 1}
    assert sorted(h.weights.tolist()) == [0.25, 0.75]


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20), st.just(3)),
           elements=st.sampled_from([0, 1, 128, 255])),
    st.integers(0, 2**32),
)
def test_counts_match_counter(px, seed):
    img = RgbImage(px)
    params = UniversalHashParams.for_image(img.width, img.height, seed)
    h, inverse = build_histogram_with_inverse(img, params)
    ref = Counter(tuple(int(v) for v in p) for p in img.flat())
    assert h.as_dict() == dict(ref)
    assert len({tuple(c) for c in h.colors.tolist()}) == len(h)
    assert int(h.counts.sum()) == img.n_pixels
    assert abs(h.weights.sum() - 1.0) < 1e-9
    assert np.array_equal(h.colors[inverse], img.flat().astype(float))


def test_tiny_table_forces_long_chains(rng):
    # every color lands in bucket 0; chaining must still separate them
    img = RgbImage(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
    h = build_histogram(img, UniversalHashParams(2, (0, 0, 0)))
    assert h.as_dict() == dict(Counter(tuple(int(v) for v in p) for p in img.flat()))


def test_first_occurrence_order():
    px = np.array([[[9, 9, 9], [1, 1, 1], [9, 9, 9], [5, 5, 5]]], dtype=np.uint8)
    h = build_histogram(RgbImage(px))
    assert h.colors[:, 0].tolist() == [9, 1, 5]


def test_natural_image_unique_colors(astronaut):
    h = build_histogram(astronaut)
    assert len(h) == len(np.unique(astronaut.flat(), axis=0))


def test_csv_and_validation():
    h = histogram_from_points([[1, 2, 3], [4, 5, 6]], [2, 1])
    assert h.to_csv() == "r,g,b,count\n1,2,3,2\n4,5,6,1\n"
    with pytest.raises(ValueError):
        ColorHistogram(np.zeros((1, 3)), np.array([0]), 0)
    with pytest.raises(ValueError):
        ColorHistogram(np.zeros((1, 3)), np.array([2]), 3)
