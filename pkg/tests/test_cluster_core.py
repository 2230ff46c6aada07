import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsmquant.cluster_core import (
    ClusterState,
    KRangeError,
    Palette,
    Termination,
    assign_naive,
    assign_sort_means,
    center_distances,
    init_centers,
    init_centers_from_pixels,
    partial_shuffle,
    run_km_full,
    run_weighted_km,
    run_wsm,
    sorted_order,
    update_centers,
    weighted_sse,
)
from wsmquant.histogram import build_histogram, histogram_from_points
from wsmquant.imageio import RgbImage

from conftest import crop, natural


def reference_kmeans(X, counts, C, iters):
    """Plain weighted Lloyd iterations written from scratch as an oracle."""
    X = np.asarray(X, float)
    C = np.array(C, float)
    out = []
    for _ in range(iters):
        d = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        memb = d.argmin(axis=1)
        new = C.copy()
        for k in range(len(C)):
            sel = memb == k
            if counts[sel].sum() > 0:
                new[k] = (counts[sel, None] * X[sel]).sum(axis=0) / counts[sel].sum()
        empty = [k for k in range(len(C)) if counts[memb == k].sum() == 0]
        if empty:
            far = ((X - new[memb]) ** 2).sum(axis=1)
            for k in empty:
                i = int(np.argmax(far))
                new[k] = X[i]
                far = np.minimum(far, ((X - X[i]) ** 2).sum(axis=1))
        C = new
        out.append((memb, C.copy()))
    return out


def random_hist(rng, n, spread=256):
    X = rng.integers(0, spread, (n, 3)).astype(float)
    X = np.unique(X, axis=0)
    counts = rng.integers(1, 50, len(X))
    return histogram_from_points(X, counts)


# center-distance structures


def test_center_distances_and_order(rng):
    C = rng.uniform(0, 255, (12, 3))
    D = center_distances(C)
    assert np.allclose(D, D.T) and np.all(np.diag(D) == 0)
    M = sorted_order(D)
    for i in range(len(C)):
        assert M[i, 0] == i
        assert sorted(M[i].tolist()) == list(range(len(C)))
        assert np.all(np.diff(D[i, M[i]]) >= 0)


def test_order_with_duplicate_centers_keeps_self_first():
    C = np.array([[1.0, 1, 1], [1, 1, 1], [5, 5, 5]])
    M = sorted_order(center_distances(C))
    assert M[0, 0] == 0 and M[1, 0] == 1


# initialization


def test_init_exhaustive_subset(rng):
    h = random_hist(rng, 20)
    pal = init_centers(h, len(h), seed=1)
    assert sorted(map(tuple, pal.centers.tolist())) == sorted(map(tuple, h.colors.tolist()))


def test_init_is_seeded(rng):
    h = random_hist(rng, 50)
    assert init_centers(h, 5, 9) == init_centers(h, 5, 9)
    assert init_centers(h, 5, 9) != init_centers(h, 5, 10)


def test_init_selection_is_uniform():
    h = histogram_from_points(np.arange(30, dtype=float).reshape(10, 3), np.arange(1, 11))
    freq = np.zeros(10)
    for seed in range(10_000):
        for c in init_centers(h, 3, seed).centers:
            freq[int(c[0]) // 3] += 1
    freq /= 10_000
    assert np.all(np.abs(freq - 0.3) <= 0.02), freq


def test_partial_shuffle_is_distinct(rng):
    idx = partial_shuffle(100, 40, rng)
    assert len(set(idx.tolist())) == 40


def test_init_rejects_bad_k(rng):
    h = random_hist(rng, 5)
    with pytest.raises(KRangeError):
        init_centers(h, 0, 0)
    with pytest.raises(KRangeError):
        init_centers(h, len(h) + 1, 0)


def test_pixel_init_picks_distinct_colors():
    px = np.zeros((10, 10, 3), dtype=np.uint8)
    px[0, :3] = [[1, 1, 1], [2, 2, 2], [3, 3, 3]]
    pal = init_centers_from_pixels(RgbImage(px), 4, seed=0)
    assert len({tuple(c) for c in pal.centers.tolist()}) == 4
    with pytest.raises(KRangeError):
        init_centers_from_pixels(RgbImage(px), 5, seed=0)


# assignment


def test_single_center_takes_everything(rng):
    h = random_hist(rng, 40)
    assert not assign_naive(h, Palette([[7.0, 7, 7]])).any()


def test_coincident_points_map_to_own_center(rng):
    h = random_hist(rng, 30)
    perm = rng.permutation(len(h))
    memb = assign_naive(h, Palette(h.colors[perm]))
    assert np.array_equal(perm[memb], np.arange(len(h)))


def test_naive_tie_goes_to_lower_index():
    h = histogram_from_points([[10.0, 0, 0]])
    C = np.array([[50.0, 50, 50], [0, 0, 0], [90, 90, 90], [80, 80, 80], [200, 200, 200], [20, 0, 0]])
    assert assign_naive(h, Palette(C)).tolist() == [1]


def test_sort_means_skips_at_the_boundary():
    # point at squared distance 1 from its previous center; the other center
    # sits at center-to-center squared distance 4 and is exactly as close
    h = histogram_from_points([[10.0, 0, 0]])
    C = Palette([[11.0, 0, 0], [9.0, 0, 0]])
    state = ClusterState.from_centers(C, [0])
    memb, evals, bad = assign_sort_means(h, C, state, check=True)
    assert memb.tolist() == [0]
    assert evals == 1 and bad == 0


def test_sort_means_boundary_tie_still_prefers_lower_index():
    h = histogram_from_points([[10.0, 0, 0]])
    C = Palette([[9.0, 0, 0], [11.0, 0, 0]])
    state = ClusterState.from_centers(C, [1])
    memb, evals, bad = assign_sort_means(h, C, state, check=True)
    assert memb.tolist() == [0]
    assert evals == 2 and bad == 0


def test_sort_means_single_center_costs_one_eval(rng):
    h = random_hist(rng, 100)
    C = Palette([[100.0, 100, 100]])
    memb, evals, bad = assign_sort_means(h, C, ClusterState.from_centers(C, np.zeros(len(h))), check=True)
    assert not memb.any() and evals == len(h) and bad == 0


def test_sort_means_matches_naive_through_iterations(rng):
    h = random_hist(rng, 1000)
    C = init_centers(h, 16, seed=4)
    memb = assign_naive(h, C)
    for _ in range(20):
        C = update_centers(h, memb, previous=C)
        state = ClusterState.from_centers(C, memb)
        fast, _, bad = assign_sort_means(h, C, state, check=True)
        assert bad == 0
        memb = assign_naive(h, C)
        assert np.array_equal(fast, memb)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([2, 3, 5, 8, 17]), st.integers(1, 8))
def test_sort_means_exact_on_coarse_grids(seed, K, levels):
    # coarse color grids produce many exact distance ties
    rng = np.random.default_rng(seed)
    X = rng.integers(0, levels + 1, (200, 3)).astype(float) * 10
    h = histogram_from_points(np.unique(X, axis=0))
    K = min(K, len(h))
    C = Palette(rng.integers(0, levels + 1, (K, 3)) * 10.0)
    prev = rng.integers(0, K, len(h))
    fast, _, bad = assign_sort_means(h, C, ClusterState.from_centers(C, prev), check=True)
    assert bad == 0
    assert np.array_equal(fast, assign_naive(h, C))


# update and objective


def test_update_single_cluster_is_weighted_mean(rng):
    h = random_hist(rng, 60)
    c = update_centers(h, np.zeros(len(h), int), K=1).centers[0]
    assert np.allclose(c, (h.weights[:, None] * h.colors).sum(axis=0))


def test_update_midpoint_and_weighted_example():
    h = histogram_from_points([[0.0, 0, 0], [10, 20, 30]])
    assert update_centers(h, [0, 0], K=1).centers.tolist() == [[5.0, 10.0, 15.0]]
    h = histogram_from_points([[0.0, 0, 0], [255, 255, 255]], [3, 1])
    assert update_centers(h, [0, 0], K=1).centers.tolist() == [[63.75] * 3]


def test_empty_cluster_moves_to_farthest_point():
    h = histogram_from_points([[0.0, 0, 0], [2, 0, 0], [100, 0, 0]], [5, 5, 1])
    prev = Palette([[1.0, 0, 0], [200, 200, 200]])
    new = update_centers(h, [0, 0, 0], previous=prev)
    assert new.centers[1].tolist() == [100.0, 0, 0]


def test_sse_examples():
    h = histogram_from_points([[1.0, 2, 3], [4, 5, 6]], [1, 3])
    assert weighted_sse(h, Palette(h.colors), [0, 1]) == 0.0
    h = histogram_from_points([[3.0, 0, 0]])
    assert weighted_sse(h, Palette([[0.0, 0, 0]]), [0]) == 9.0


def test_sse_matches_full_image_sum(rng):
    img = RgbImage(rng.integers(0, 8, (30, 40, 3), dtype=np.uint8) * 30)
    h = build_histogram(img)
    C = Palette(rng.uniform(0, 255, (6, 3)))
    memb = assign_naive(h, C)
    px = img.flat().astype(float)
    d = ((px[:, None, :] - C.centers[None]) ** 2).sum(axis=2)
    ref = sum(float(row.min()) for row in d) / img.n_pixels
    assert weighted_sse(h, C, memb) == pytest.approx(ref, rel=1e-12)


# termination


def test_termination_rules():
    fixed = Termination.fixed(3)
    assert not fixed.done(2, [5, 4])
    assert fixed.done(3, [5, 4, 3])
    conv = Termination.convergent(1e-4)
    assert not conv.done(1, [10.0])
    assert conv.done(2, [10.0, 10.0])
    assert not conv.done(2, [10.0, 9.0])
    assert conv.done(1, [0.0])
    assert Termination.convergent(1e-12).done(1000, list(np.linspace(10, 1, 1000)))
    with pytest.raises(ValueError):
        Termination("sometimes")
    with pytest.raises(ValueError):
        Termination.convergent(0.0)


# full runs


def test_k_equals_n_gives_zero_sse(rng):
    h = random_hist(rng, 25)
    _, rep = run_wsm(h, len(h), Termination.fixed(3), seed=0)
    assert rep.sse_history[0] == 0.0


def test_run_wsm_matches_reference_loop(rng):
    h = random_hist(rng, 400)
    init = init_centers(h, 12, 5)
    _, rep = run_wsm(h, 12, Termination.fixed(12), init=init, trace=True)
    ref = reference_kmeans(h.colors, h.counts.astype(float), init.centers, 12)
    for (memb, C), (rmemb, rC) in zip(rep.trace, ref):
        assert np.array_equal(memb, rmemb)
        np.testing.assert_allclose(C, rC, rtol=1e-9, atol=1e-9)


def test_run_wsm_sse_nonincreasing(small_photo):
    h = build_histogram(small_photo)
    for seed in range(3):
        _, rep = run_wsm(h, 32, Termination.convergent(), seed)
        assert np.all(np.diff(rep.sse_history) <= 1e-9)
        assert rep.iterations == len(rep.sse_history)


def test_fixed_mode_iteration_count(small_photo):
    _, rep = run_wsm(build_histogram(small_photo), 8, Termination.fixed(10), 1)
    assert rep.iterations == 10 and rep.method == "wsm"


def test_sort_means_saves_distance_evaluations(small_photo):
    h = build_histogram(small_photo)
    init = init_centers(h, 64, 0)
    _, fast = run_wsm(h, 64, Termination.fixed(10), init=init)
    _, slow = run_weighted_km(h, 64, Termination.fixed(10), init=init)
    assert fast.sse_history == slow.sse_history
    assert fast.distance_evals < slow.distance_evals / 2


def test_km_full_single_color():
    img = RgbImage(np.full((6, 6, 3), 77, dtype=np.uint8))
    pal, rep = run_km_full(img, 1, Termination.fixed(3), 0)
    assert pal.centers.tolist() == [[77.0] * 3]
    assert rep.sse == 0.0


def test_km_full_equals_wsm_on_histogram():
    img = crop(natural("coffee"), 64)
    h = build_histogram(img)
    init = init_centers_from_pixels(img, 16, 3)
    _, full = run_km_full(img, 16, Termination.fixed(10), init=init, trace=True)
    _, wsm = run_wsm(h, 16, Termination.fixed(10), init=init, trace=True)
    for (_, a), (_, b) in zip(full.trace, wsm.trace):
        np.testing.assert_allclose(a, b, atol=1e-6)
    np.testing.assert_allclose(full.sse_history, wsm.sse_history, rtol=1e-9)
    assert np.all(np.diff(full.sse_history) <= 1e-9)


def test_palette_validation():
    with pytest.raises(ValueError):
        Palette(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        Palette([[-5.0, 300, 10]])
    with pytest.raises(ValueError):
        Palette([[np.nan, 0, 0]])
    assert Palette([[-1e-12, 255 + 1e-12, 10]]).centers.tolist() == [[0.0, 255.0, 10.0]]
