"""Mean-shift mode seeking over a Gaussian kernel density, plus clustering
comparison metrics.

Each point is moved to the weighted average of the density's support
points, with Gaussian weights scaled by the support coefficients, until
the move falls below gamma. A sparse density with k0 support points makes
every iteration k0/n times cheaper than the full density. Converged
points are merged into clusters by single linkage, and two runs are
compared by the fraction of points shifted apart (discrepancy index) and
by the empirical Hausdorff distance between the induced partitions.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import _backend
from ._parallel import parallel_map
from .sparse_mean import SparseKernelMean


@dataclass(frozen=True)
class ShiftResult:
    """Converged positions for every input point."""

    shifted: np.ndarray
    iterations: np.ndarray
    backend: str
    kernel_evals: int
    gamma: float
    converged: np.ndarray


@dataclass(frozen=True)
class Clustering:
    """Cluster labels (0..C-1, dense) and one representative point each."""

    labels: np.ndarray
    modes: np.ndarray

    @property
    def n_clusters(self) -> int:
        return self.modes.shape[0]


def _check_backend(mean: SparseKernelMean) -> None:
    if mean.spec.family != "gaussian":
        raise ValueError("mean-shift supports gaussian kernels only")
    if np.any(mean.alpha < 0.0):
        raise ValueError(
            "mean-shift requires nonnegative weights (a density-mode fit); "
            "signed weights would break the weighted-average update"
        )
    if float(mean.alpha.sum()) <= 0.0:
        raise ValueError("mean-shift requires a positive total weight")


def _shift_stats(x0, mean: SparseKernelMean, gamma: float, max_iter: int):
    support = np.ascontiguousarray(mean.support)
    alpha = np.ascontiguousarray(mean.alpha)
    inv_two_sigma_sq = 1.0 / (2.0 * mean.spec.sigma**2)
    x = np.array(x0, dtype=np.float64).ravel().copy()
    out = np.empty_like(x)
    for it in range(1, max_iter + 1):
        wsum = _backend.gaussian_shift_step(support, alpha, x, inv_two_sigma_sq, out)
        if wsum == 0.0:
            warnings.warn(
                "all kernel weights underflowed to zero; point left stationary",
                stacklevel=3,
            )
            return x, it, False
        new_x = out / wsum
        step = float(np.linalg.norm(new_x - x))
        x = new_x
        if step < gamma:
            return x, it, True
    return x, max_iter, False


def shift_point(x0, mean: SparseKernelMean, gamma: float, max_iter: int = 500):
    """Shift one point to its density mode; returns the converged position."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    _check_backend(mean)
    if np.asarray(x0).ravel().shape[0] != mean.spec.dim:
        raise ValueError("point dimension does not match the kernel dimension")
    x, _, _ = _shift_stats(x0, mean, gamma, max_iter)
    return x


def mean_shift_all(data, mean: SparseKernelMean, gamma: float,
                   max_iter: int = 500) -> ShiftResult:
    """Shift every data point; pure per-point work, parallel over points."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    _check_backend(mean)
    pts = np.asarray(data.points, dtype=np.float64)
    if pts.shape[1] != mean.spec.dim:
        raise ValueError("data dimension does not match the kernel dimension")

    results = parallel_map(
        lambda row: _shift_stats(row, mean, gamma, max_iter), pts
    )
    shifted = np.vstack([r[0] for r in results])
    iterations = np.array([r[1] for r in results], dtype=np.int64)
    converged = np.array([r[2] for r in results], dtype=bool)
    backend = "full" if mean.diagnostics.method == "full" else "skm"
    return ShiftResult(
        shifted=shifted,
        iterations=iterations,
        backend=backend,
        kernel_evals=int(iterations.sum()) * mean.k0,
        gamma=float(gamma),
        converged=converged,
    )


def cluster_modes(shift_result: ShiftResult, merge_dist: float) -> Clustering:
    """Single-linkage merge of converged points within merge_dist.

    Chains of nearby points collapse into one cluster. Labels are dense ids
    in order of first appearance; each cluster's mode is the mean of its
    members' converged positions.
    """
    if not merge_dist > 0:
        raise ValueError(f"merge_dist must be positive, got {merge_dist}")
    pts = shift_result.shifted
    n = pts.shape[0]
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    block = 1024
    for start in range(0, n, block):
        rows = pts[start:start + block]
        close = cdist(rows, pts) <= merge_dist
        for local_i, neighbors in enumerate(close):
            i = start + local_i
            for j in np.nonzero(neighbors)[0]:
                if j <= i:
                    continue
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    roots = np.array([find(i) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    # np.unique sorts roots ascending; roots are minimal member indices, so
    # label ids already follow first appearance order.
    n_clusters = labels.max() + 1
    modes = np.vstack([pts[labels == c].mean(axis=0) for c in range(n_clusters)])
    return Clustering(labels=labels, modes=modes)


def _shifted_array(obj) -> np.ndarray:
    arr = getattr(obj, "shifted", obj)
    return np.atleast_2d(np.asarray(arr, dtype=np.float64))


def discrepancy_index(shifted_a, shifted_b, delta: float) -> float:
    """Fraction of points whose two converged positions differ by more than delta."""
    a = _shifted_array(shifted_a)
    b = _shifted_array(shifted_b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.linalg.norm(a - b, axis=1) > delta))


def hausdorff_clustering_distance(clustering_a: Clustering,
                                  clustering_b: Clustering,
                                  data=None) -> float:
    """Empirical Hausdorff distance between two partitions of the same points.

    Cluster-to-cluster distance is the empirical mass of the symmetric
    difference; each cluster is matched to its closest counterpart and the
    worst match over both directions is returned. Invariant under cluster
    relabeling, zero exactly for equal partitions.
    """
    la = np.asarray(clustering_a.labels)
    lb = np.asarray(clustering_b.labels)
    if la.shape != lb.shape:
        raise ValueError(f"clusterings cover {la.shape[0]} vs {lb.shape[0]} points")
    n = la.shape[0]
    if data is not None:
        n_data = np.asarray(getattr(data, "points", data)).shape[0]
        if n_data != n:
            raise ValueError(f"clusterings have {n} points but data has {n_data}")
    n_a = la.max() + 1
    n_b = lb.max() + 1
    contingency = np.zeros((n_a, n_b))
    np.add.at(contingency, (la, lb), 1.0)
    size_a = contingency.sum(axis=1)
    size_b = contingency.sum(axis=0)
    # |A sym-diff B| = |A| + |B| - 2 |A inter B|
    sym_diff = (size_a[:, None] + size_b[None, :] - 2.0 * contingency) / n
    max_a = float(sym_diff.min(axis=1).max())
    max_b = float(sym_diff.min(axis=0).max())
    return max(max_a, max_b)
