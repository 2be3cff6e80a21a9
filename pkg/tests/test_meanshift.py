import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from skm.dataio import DataSet
from skm.kernels import RadialKernelSpec
from skm.meanshift import (
    Clustering,
    cluster_modes,
    discrepancy_index,
    hausdorff_clustering_distance,
    mean_shift_all,
    shift_point,
)
from skm.sparse_mean import fit, full_mean

SIGMA = 0.8
DENS = RadialKernelSpec("gaussian", dim=1, sigma=SIGMA, normalization="density")
DENS2 = RadialKernelSpec("gaussian", dim=2, sigma=SIGMA, normalization="density")


def two_blobs(n=200, separation=8.0, scale=0.5, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    pts = np.vstack([
        scale * rng.standard_normal((half, 2)),
        [separation, 0.0] + scale * rng.standard_normal((n - half, 2)),
    ])
    return DataSet(pts, name="blobs")


def scalar_shift_oracle(x, centers, weights, sigma, gamma, max_iter=500):
    """Direct 1-d fixed-point iteration of the weighted-mean update."""
    centers = np.asarray(centers, dtype=float)
    weights = np.asarray(weights, dtype=float)
    for _ in range(max_iter):
        w = weights * np.exp(-((x - centers) ** 2) / (2 * sigma**2))
        new_x = float(w @ centers / w.sum())
        if abs(new_x - x) < gamma:
            return new_x
        x = new_x
    return x


# ------------------------------------------------------------------ shift_point

def test_shift_single_support_is_fixed_point():
    mean = fit(DataSet(np.array([[2.0]])), DENS, k_max=1, epsilon=0.0,
               density_mode=True)
    out = shift_point([5.0], mean, gamma=1e-6)
    assert_allclose(out, [2.0])


def test_shift_midpoint_of_symmetric_pair_is_fixed():
    mean = full_mean(DataSet(np.array([[-1.0], [1.0]])), DENS)
    out = shift_point([0.0], mean, gamma=1e-9)
    assert_allclose(out, [0.0])


def test_shift_converges_to_nearer_bump():
    data = DataSet(np.array([[0.0], [10.0]]))
    mean = full_mean(data, DENS)
    gamma = 1e-6
    got = shift_point([4.2], mean, gamma=gamma)
    oracle = scalar_shift_oracle(4.2, [0.0, 10.0], [0.5, 0.5], SIGMA, gamma)
    assert_allclose(got, [oracle], atol=1e-12)
    assert abs(got[0] - 0.0) < 1e-3  # nearer bump wins


def test_shift_underflow_far_from_support_warns_and_stays():
    mean = full_mean(DataSet(np.array([[0.0]])), DENS)
    with pytest.warns(UserWarning, match="underflow"):
        out = shift_point([1e6], mean, gamma=1e-6)
    assert_allclose(out, [1e6])


def test_shift_rejects_signed_weights():
    data = DataSet(np.array([[0.0], [1.0], [4.0]]))
    spec = RadialKernelSpec("gaussian", dim=1, sigma=0.3, normalization="density")
    mean = fit(data, spec, k_max=3, epsilon=0.0)  # no simplex projection
    if np.all(mean.alpha >= 0):
        object.__setattr__(mean, "alpha", mean.alpha - 0.5)
    with pytest.raises(ValueError, match="nonnegative"):
        shift_point([0.5], mean, gamma=1e-3)


def test_shift_rejects_non_gaussian():
    spec = RadialKernelSpec("laplacian", dim=1, gamma=1.0, normalization="density")
    mean = full_mean(DataSet(np.array([[0.0]])), spec)
    with pytest.raises(ValueError, match="gaussian"):
        shift_point([0.0], mean, gamma=1e-3)


def test_shift_validates_gamma_and_dimension():
    mean = full_mean(DataSet(np.array([[0.0]])), DENS)
    with pytest.raises(ValueError):
        shift_point([0.0], mean, gamma=0.0)
    with pytest.raises(ValueError, match="dimension"):
        shift_point([0.0, 1.0], mean, gamma=1e-3)


# --------------------------------------------------------------- mean_shift_all

def test_mean_shift_all_single_point_unchanged():
    data = DataSet(np.array([[3.0, 4.0]]))
    result = mean_shift_all(data, full_mean(data, DENS2), gamma=1e-8)
    assert_allclose(result.shifted, data.points)
    assert result.iterations[0] == 1


def test_mean_shift_all_two_blobs_collapse():
    data = two_blobs()
    gamma = 1e-3 * SIGMA
    result = mean_shift_all(data, full_mean(data, DENS2), gamma=gamma)
    assert np.all(result.converged)
    left = result.shifted[data.points[:, 0] < 4.0]
    right = result.shifted[data.points[:, 0] >= 4.0]
    for group in (left, right):
        spread = np.linalg.norm(group - group.mean(axis=0), axis=1).max()
        assert spread < 3.0 * gamma
    assert abs(left[:, 0].mean() - right[:, 0].mean()) > 5.0


def test_mean_shift_sparse_agrees_with_full_on_blobs():
    data = two_blobs()
    gamma = 1e-3 * SIGMA
    full = mean_shift_all(data, full_mean(data, DENS2), gamma=gamma)
    sparse_mean = fit(data, DENS2, k_max=42, epsilon=1e-8, density_mode=True)
    sparse = mean_shift_all(data, sparse_mean, gamma=gamma)
    assert discrepancy_index(full, sparse, 3.0 * SIGMA) == 0.0
    assert sparse.backend == "skm" and full.backend == "full"


def test_mean_shift_final_step_below_gamma():
    data = two_blobs(n=60)
    gamma = 1e-4
    mean = full_mean(data, DENS2)
    result = mean_shift_all(data, mean, gamma=gamma)
    # one more update from every converged point moves by less than gamma
    for row, ok in zip(result.shifted, result.converged):
        assert ok
        again = shift_point(row, mean, gamma=np.inf, max_iter=1)
        assert np.linalg.norm(again - row) < gamma


def test_mean_shift_iterates_stay_in_support_box():
    data = two_blobs(n=80, seed=3)
    mean = fit(data, DENS2, k_max=20, epsilon=1e-8, density_mode=True)
    result = mean_shift_all(data, mean, gamma=1e-5)
    lo = mean.support.min(axis=0) - 1e-12
    hi = mean.support.max(axis=0) + 1e-12
    assert np.all(result.shifted >= lo) and np.all(result.shifted <= hi)


def test_mean_shift_kernel_eval_counter():
    data = two_blobs(n=100)
    mean = fit(data, DENS2, k_max=20, epsilon=1e-8, density_mode=True)
    result = mean_shift_all(data, mean, gamma=1e-3 * SIGMA)
    assert result.kernel_evals == int(result.iterations.sum()) * mean.k0


# ---------------------------------------------------------------- cluster_modes

def test_cluster_modes_all_identical_one_cluster():
    data = DataSet(np.zeros((7, 2)) + 1.5)
    result = mean_shift_all(data, full_mean(data, DENS2), gamma=1e-6)
    clustering = cluster_modes(result, merge_dist=0.5)
    assert clustering.n_clusters == 1
    assert np.all(clustering.labels == 0)


def test_cluster_modes_two_far_groups():
    data = two_blobs()
    result = mean_shift_all(data, full_mean(data, DENS2), gamma=1e-3 * SIGMA)
    clustering = cluster_modes(result, merge_dist=SIGMA)
    assert clustering.n_clusters == 2
    assert clustering.modes.shape == (2, 2)


def test_cluster_modes_chain_merges_single_linkage():
    class FakeShift:
        shifted = np.array([[0.0, 0.0], [0.9, 0.0], [1.8, 0.0]])

    clustering = cluster_modes(FakeShift(), merge_dist=1.0)
    assert clustering.n_clusters == 1  # a-b and b-c close, a-c not


def test_cluster_modes_validates_merge_dist():
    class FakeShift:
        shifted = np.zeros((2, 1))

    with pytest.raises(ValueError):
        cluster_modes(FakeShift(), merge_dist=0.0)


# ----------------------------------------------------------- discrepancy_index

def test_discrepancy_identical_is_zero():
    pts = np.random.default_rng(0).normal(size=(13, 2))
    assert discrepancy_index(pts, pts.copy(), 0.5) == 0.0


def test_discrepancy_all_displaced_is_one():
    pts = np.zeros((8, 2))
    moved = pts + [10.0, 0.0]
    assert discrepancy_index(pts, moved, 1.0) == 1.0


def test_discrepancy_half_displaced():
    pts = np.zeros((10, 1))
    moved = pts.copy()
    moved[:5] += 5.0
    assert discrepancy_index(pts, moved, 1.0) == 0.5


def test_discrepancy_symmetric_and_bounded():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
    d = discrepancy_index(a, b, 0.7)
    assert d == discrepancy_index(b, a, 0.7)
    assert 0.0 <= d <= 1.0


def test_discrepancy_length_mismatch():
    with pytest.raises(ValueError):
        discrepancy_index(np.zeros((3, 1)), np.zeros((4, 1)), 1.0)


# ----------------------------------------------- hausdorff clustering distance

def hausdorff_oracle(labels_a, labels_b):
    """Brute force over all cluster pairs from the definition."""
    n = len(labels_a)
    clusters_a = [set(np.nonzero(labels_a == c)[0]) for c in np.unique(labels_a)]
    clusters_b = [set(np.nonzero(labels_b == c)[0]) for c in np.unique(labels_b)]

    def rho(x, others):
        return min(len(x.symmetric_difference(y)) / n for y in others)

    return max(
        max(rho(a, clusters_b) for a in clusters_a),
        max(rho(b, clusters_a) for b in clusters_b),
    )


def make_clustering(labels):
    labels = np.asarray(labels)
    modes = np.zeros((labels.max() + 1, 1))
    return Clustering(labels=labels, modes=modes)


def test_hausdorff_identical_clusterings_zero():
    a = make_clustering([0, 0, 1, 1, 2])
    b = make_clustering([0, 0, 1, 1, 2])
    assert hausdorff_clustering_distance(a, b) == 0.0


def test_hausdorff_one_big_vs_singletons():
    a = make_clustering([0, 0, 0, 0])
    b = make_clustering([0, 1, 2, 3])
    value = hausdorff_clustering_distance(a, b)
    assert_allclose(value, 0.75)
    assert_allclose(value, hausdorff_oracle(a.labels, b.labels))


def test_hausdorff_invariant_under_relabeling():
    rng = np.random.default_rng(2)
    la = rng.integers(0, 3, size=40)
    lb = rng.integers(0, 4, size=40)
    base = hausdorff_clustering_distance(make_clustering(la), make_clustering(lb))
    perm = np.array([2, 0, 1])
    relabeled = hausdorff_clustering_distance(make_clustering(perm[la]),
                                              make_clustering(lb))
    assert base == relabeled


def test_hausdorff_matches_brute_force_on_random_partitions():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(4, 30))
        la = rng.integers(0, rng.integers(1, 5) + 1, size=n)
        lb = rng.integers(0, rng.integers(1, 5) + 1, size=n)
        la = np.unique(la, return_inverse=True)[1]
        lb = np.unique(lb, return_inverse=True)[1]
        got = hausdorff_clustering_distance(make_clustering(la), make_clustering(lb))
        assert_allclose(got, hausdorff_oracle(la, lb), rtol=1e-12)
        assert 0.0 <= got <= 1.0


def test_hausdorff_symmetric():
    a = make_clustering([0, 0, 1, 1, 1, 2])
    b = make_clustering([0, 1, 1, 0, 0, 1])
    assert hausdorff_clustering_distance(a, b) == hausdorff_clustering_distance(b, a)


def test_hausdorff_zero_iff_equal_partitions():
    # equal as partitions despite different label names -> 0
    a = make_clustering([1, 1, 0, 0])
    b = make_clustering([0, 0, 1, 1])
    assert hausdorff_clustering_distance(a, b) == 0.0
    # different partitions -> strictly positive
    for la, lb in itertools.permutations(
        ([0, 0, 1, 1], [0, 1, 0, 1], [0, 0, 0, 1]), 2
    ):
        d = hausdorff_clustering_distance(make_clustering(np.array(la)),
                                          make_clustering(np.array(lb)))
        assert d > 0.0


def test_hausdorff_mismatched_sizes():
    with pytest.raises(ValueError):
        hausdorff_clustering_distance(make_clustering([0, 1]),
                                      make_clustering([0, 1, 1]))
    with pytest.raises(ValueError, match="data"):
        hausdorff_clustering_distance(make_clustering([0, 1]),
                                      make_clustering([0, 1]),
                                      data=np.zeros((5, 1)))
