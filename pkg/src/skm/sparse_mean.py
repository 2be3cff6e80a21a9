"""Fitting and evaluating sparse kernel means.

A sparse kernel mean approximates the full mean (1/n) sum_i phi(., x_i)
by sum_{i in I} alpha_i phi(., x_i) with |I| = k0 << n. Support points
come from farthest-first traversal, weights from the incremental
least-squares update, and the support stops growing once the relative
error progress falls below epsilon.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kcenter
from ._parallel import parallel_map
from .coefficients import (
    CoeffState,
    extend_state,
    init_state,
    project_simplex,
    solve_direct,
    stop_rule,
)
from .errors import NearSingularError
from .kernels import (
    RadialKernelSpec,
    g_zero,
    gram_at_dist,
    gram_matrix,
    kernel_matrix,
)

logger = logging.getLogger(__name__)

_EVAL_CHUNK = 2048


@dataclass(frozen=True)
class FitDiagnostics:
    e_trace: np.ndarray
    k_max: int
    epsilon: float
    density_projected: bool
    radius_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    skipped: tuple = ()
    method: str = "greedy"


@dataclass(frozen=True)
class SparseKernelMean:
    """Support points, weights and fit diagnostics for one kernel mean."""

    spec: RadialKernelSpec
    support: np.ndarray
    alpha: np.ndarray
    support_indices: Optional[np.ndarray]
    diagnostics: FitDiagnostics

    @property
    def k0(self) -> int:
        return self.support.shape[0]


def default_k_max(n: int) -> int:
    """Sparsity budget floor(3 sqrt(n)), clipped to [1, n]."""
    return max(1, min(n, int(3.0 * math.sqrt(n))))


def _finalize(spec, pts, state, alpha, radius_trace, skipped, k_max, epsilon,
              density_mode, method):
    alpha = np.asarray(alpha, dtype=np.float64)
    projected = False
    if density_mode:
        alpha = project_simplex(alpha)
        projected = True
    diag = FitDiagnostics(
        e_trace=state.e_trace.copy(),
        k_max=int(k_max),
        epsilon=float(epsilon),
        density_projected=projected,
        radius_trace=np.asarray(radius_trace, dtype=np.float64),
        skipped=tuple(skipped),
        method=method,
    )
    return SparseKernelMean(
        spec=spec,
        support=pts[state.indices].copy(),
        alpha=alpha,
        support_indices=state.indices.copy(),
        diagnostics=diag,
    )


def fit(data, spec: RadialKernelSpec, k_max=None, epsilon: float = 1e-8,
        density_mode: bool = False, first=None, seed: int = 0) -> SparseKernelMean:
    """Fit a sparse kernel mean by lockstep selection and weight updates.

    Each round extends the farthest-first selection by one point and
    refreshes the weights; fitting stops at the first support size k0 <=
    k_max whose relative error progress is at most epsilon. Points whose
    sections are numerically dependent on the current support are skipped.
    With density_mode the final weights are projected onto the probability
    simplex.

    Total work is O(n k0 d + k0^3).
    """
    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    if k_max is None:
        k_max = default_k_max(n)
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max must satisfy 1 <= k_max <= n (k_max={k_max}, n={n})")
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")

    sel = kcenter.kcenter_greedy(data, 1, first=first, seed=seed)
    state = init_state(data, spec, int(sel.order[0]))
    banned: set[int] = set()

    while state.m < k_max:
        if sel.coverage_radius == 0.0:
            break  # every point coincides with a center; exact already
        cand = kcenter.peek_next(sel, banned)
        if cand < 0:
            break
        try:
            new_state = extend_state(state, data, spec, cand)
        except NearSingularError:
            logger.info("skipping numerically dependent support candidate %d", cand)
            banned.add(cand)
            continue
        sel = kcenter.extend_selection(sel, data, banned)
        state = new_state
        if stop_rule(state.e_trace, epsilon):
            break

    return _finalize(spec, pts, state, state.alpha, sel.radius_trace, sorted(banned),
                     k_max, epsilon, density_mode, "greedy")


def random_selection_fit(data, spec: RadialKernelSpec, k: int, seed: int = 0,
                         density_mode: bool = False) -> SparseKernelMean:
    """Baseline: support drawn uniformly without replacement, no early stop."""
    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")
    order = np.random.default_rng(seed).choice(n, size=k, replace=False)
    state = init_state(data, spec, int(order[0]))
    skipped = []
    for idx in order[1:]:
        try:
            state = extend_state(state, data, spec, int(idx))
        except NearSingularError:
            logger.info("random baseline: dropping dependent support index %d", idx)
            skipped.append(int(idx))
    return _finalize(spec, pts, state, state.alpha, np.empty(0), skipped,
                     k, 0.0, density_mode, "random")


def fit_with_support(data, spec: RadialKernelSpec, support_indices,
                     density_mode: bool = False, tol: float = 1e-10) -> SparseKernelMean:
    """Weights for a fixed support via a direct solve of K alpha = kappa.

    This is the re-solve path for bandwidth sweeps: the support does not
    depend on the kernel parameters, so only this step has to be repeated.
    """
    from .coefficients import kappa_entry

    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    indices = np.asarray(support_indices, dtype=np.int64).ravel()
    if indices.size == 0:
        raise ValueError("support is empty")
    if np.unique(indices).size != indices.size:
        raise ValueError("support indices contain duplicates")
    gram = gram_matrix(spec, pts[indices])
    kappa = np.array([kappa_entry(data, spec, int(j)) for j in indices])
    alpha = solve_direct(gram, kappa, tol=tol)
    state = CoeffState(
        indices=indices,
        inv_k=np.empty((0, 0)),
        chol=np.empty((0, 0)),
        kappa=kappa,
        alpha=alpha,
        e_trace=np.array([-float(alpha @ kappa)]),
        c=g_zero(spec),
    )
    return _finalize(spec, pts, state, alpha, np.empty(0), (), indices.size,
                     0.0, density_mode, "fixed-support")


def full_mean(data, spec: RadialKernelSpec) -> SparseKernelMean:
    """The exact kernel mean: every point a support point, uniform weights."""
    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    alpha = np.full(n, 1.0 / n)
    diag = FitDiagnostics(
        e_trace=np.empty(0),
        k_max=n,
        epsilon=0.0,
        density_projected=False,
        method="full",
    )
    return SparseKernelMean(
        spec=spec,
        support=pts.copy(),
        alpha=alpha,
        support_indices=np.arange(n, dtype=np.int64),
        diagnostics=diag,
    )


def evaluate(mean: SparseKernelMean, queries) -> np.ndarray:
    """Evaluate sum_i alpha_i phi(q, x_i) at each query row."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != mean.spec.dim:
        raise ValueError(
            f"queries have dimension {queries.shape[1]}, kernel expects {mean.spec.dim}"
        )

    def _chunk(block):
        return kernel_matrix(mean.spec, block, mean.support) @ mean.alpha

    if queries.shape[0] <= _EVAL_CHUNK:
        return _chunk(queries)
    blocks = [queries[i:i + _EVAL_CHUNK] for i in range(0, queries.shape[0], _EVAL_CHUNK)]
    return np.concatenate(parallel_map(_chunk, blocks))


def evaluate_full(data, spec: RadialKernelSpec, queries) -> np.ndarray:
    """Evaluate the full kernel mean (1/n) sum_i phi(q, x_i)."""
    return evaluate(full_mean(data, spec), queries)


def incoherence(data, spec: RadialKernelSpec, support_indices) -> float:
    """min over excluded points of the max inner product with the support.

    For a radial kernel this equals g applied to the coverage radius of the
    support, so it needs one distance scan rather than a double loop.
    """
    pts = np.asarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    indices = np.asarray(support_indices, dtype=np.int64).ravel()
    if indices.size == 0:
        raise ValueError("support is empty")
    outside = np.setdiff1d(np.arange(n), indices)
    if outside.size == 0:
        raise ValueError("support covers every index; incoherence is undefined")
    from scipy.spatial.distance import cdist

    dist_to_set = cdist(pts[outside], pts[indices]).min(axis=1)
    coverage = float(dist_to_set.max())
    return float(gram_at_dist(spec, coverage))


def bound_value(n: int, support_size: int, c: float, nu: float) -> float:
    """Approximation-error bound (1 - k/n) sqrt((C^2 - nu^2) / C)."""
    if not 0 < support_size <= n:
        raise ValueError(f"support size must be in [1, n] (got {support_size}, n={n})")
    if not c > 0:
        raise ValueError(f"C must be positive, got {c}")
    if nu < 0 or nu > c:
        raise ValueError(f"incoherence must satisfy 0 <= nu <= C (nu={nu}, C={c})")
    return (1.0 - support_size / n) * math.sqrt((c * c - nu * nu) / c)


def mean_gram_inner(a: SparseKernelMean, b: SparseKernelMean) -> float:
    """<mean_a, mean_b> = sum_ij alpha_i beta_j g(||x_i - y_j||)."""
    _check_compatible(a, b)
    cross = gram_matrix(a.spec, a.support, b.support)
    return float(a.alpha @ cross @ b.alpha)


def _check_compatible(a: SparseKernelMean, b: SparseKernelMean) -> None:
    if a.spec != b.spec:
        raise ValueError("kernel mismatch: the two means use different kernel specs")


def squared_mean_norm(data, spec: RadialKernelSpec, max_points: int = 5000) -> float:
    """||zbar||^2 by the full O(n^2) Gram sum. Audit paths only."""
    pts = np.asarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    if n > max_points:
        raise ValueError(
            f"refusing the O(n^2) mean-norm computation for n={n} > {max_points}"
        )
    return float(gram_matrix(spec, pts).mean())


def residual_norm(data, spec: RadialKernelSpec, mean: SparseKernelMean,
                  max_points: int = 5000) -> float:
    """||zbar - mean||_H via Gram sums; O(n^2), audit paths only.

    Valid for any weight vector, including simplex-projected ones.
    """
    from .coefficients import kappa_entry

    pts = np.asarray(data.points, dtype=np.float64)
    zbar_sq = squared_mean_norm(data, spec, max_points=max_points)
    if mean.support_indices is not None:
        kappa = np.array([kappa_entry(data, spec, int(j)) for j in mean.support_indices])
    else:
        from . import _backend
        from .kernels import gram_params

        kind, a_, b_, c_ = gram_params(spec)
        kappa = np.array([
            _backend.mean_gram(np.ascontiguousarray(pts), row, kind, a_, b_, c_)
            for row in mean.support
        ])
    gram = gram_matrix(spec, mean.support)
    value = zbar_sq - 2.0 * float(mean.alpha @ kappa) + float(mean.alpha @ gram @ mean.alpha)
    return math.sqrt(max(value, 0.0))
