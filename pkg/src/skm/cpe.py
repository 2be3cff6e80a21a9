"""Class proportion estimation from kernel mean embeddings.

A test sample drawn from a mixture sum_i pi_i P_i of N known class
distributions is matched to the classes by least squares in the embedding
space: minimizing ||test_mean - sum_i pi_i class_mean_i||^2 subject to
sum pi_i = 1 reduces to an (N-1) x (N-1) linear system in the differences
against the last class mean. Nonnegativity is restored afterwards by
simplex projection when needed.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .coefficients import project_simplex, solve_direct
from .errors import SkmError
from .kernels import RadialKernelSpec
from .sparse_mean import (
    SparseKernelMean,
    default_k_max,
    fit,
    fit_with_support,
    full_mean,
    mean_gram_inner,
)

logger = logging.getLogger(__name__)

RCOND_TOL = 1e-12


@dataclass(frozen=True)
class ProportionEstimate:
    """Estimated mixture weights with solve diagnostics."""

    pi_hat: np.ndarray
    was_projected: bool
    residual: float


def mean_inner(mean_a: SparseKernelMean, mean_b: SparseKernelMean) -> float:
    """Inner product of two kernel means, bilinear in the weight vectors."""
    if mean_a.spec.space != "rkhs":
        raise ValueError("mean_inner requires kernels in rkhs space mode")
    return mean_gram_inner(mean_a, mean_b)


def l1_error(pi_true, pi_hat) -> float:
    """sum_i |pi_i - pi_hat_i|."""
    pi_true = np.asarray(pi_true, dtype=np.float64).ravel()
    pi_hat = np.asarray(pi_hat, dtype=np.float64).ravel()
    if pi_true.shape != pi_hat.shape:
        raise ValueError(
            f"length mismatch: {pi_true.shape[0]} vs {pi_hat.shape[0]}"
        )
    return float(np.abs(pi_true - pi_hat).sum())


def dirichlet_sample(n_classes: int, omega: float, seed: int = 0) -> np.ndarray:
    """One draw from the symmetric Dirichlet(omega) law on the simplex."""
    if n_classes < 1:
        raise ValueError("n_classes must be at least 1")
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.full(n_classes, float(omega)))


def _rcond(matrix: np.ndarray) -> float:
    s = np.linalg.svd(matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def _closest_pair(means):
    from .divergences import rkhs_distance

    best = (0, 1)
    best_d = math.inf
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            d = rkhs_distance(means[i], means[j])
            if d < best_d:
                best_d = d
                best = (i, j)
    return best, best_d


def estimate_from_means(train_means, test_mean) -> ProportionEstimate:
    """Solve the proportion system for already-fitted class and test means."""
    n_classes = len(train_means)
    if n_classes < 2:
        raise ValueError("need at least 2 training classes")
    gram = np.empty((n_classes, n_classes))
    for i in range(n_classes):
        for j in range(i, n_classes):
            gram[i, j] = gram[j, i] = mean_inner(train_means[i], train_means[j])
    test_inner = np.array([mean_inner(m, test_mean) for m in train_means])
    test_sq = mean_inner(test_mean, test_mean)

    # Differences against the last class mean.
    last = n_classes - 1
    d_hat = (
        gram[:last, :last]
        - gram[:last, last][:, None]
        - gram[last, :last][None, :]
        + gram[last, last]
    )
    e_hat = test_inner[:last] - gram[:last, last] - test_inner[last] + gram[last, last]

    rcond = _rcond(d_hat)
    if rcond < RCOND_TOL:
        (i, j), dist = _closest_pair(train_means)
        raise SkmError(
            f"proportion system is singular (rcond {rcond:.2e}); training "
            f"classes {i} and {j} have nearly identical embeddings "
            f"(distance {dist:.3e})"
        )
    pi_minus = solve_direct(d_hat, e_hat, tol=1e-12)
    pi_hat = np.append(pi_minus, 1.0 - float(pi_minus.sum()))

    was_projected = False
    if np.any(pi_hat < 0.0):
        pi_hat = project_simplex(pi_hat)
        was_projected = True
    residual = test_sq - 2.0 * float(pi_hat @ test_inner) + float(pi_hat @ gram @ pi_hat)
    return ProportionEstimate(pi_hat=pi_hat, was_projected=was_projected,
                              residual=max(residual, 0.0))


def _fit_means(samples, spec, sparse, epsilon, k_max, seed):
    means = []
    for sample in samples:
        if sparse:
            budget = k_max if k_max is not None else default_k_max(sample.n)
            budget = max(1, min(budget, sample.n))
            means.append(fit(sample, spec, k_max=budget, epsilon=epsilon, seed=seed))
        else:
            means.append(full_mean(sample, spec))
    return means


def estimate_proportions(train, test, spec: RadialKernelSpec, sparse: bool = False,
                         epsilon: float = 1e-10, k_max=None, seed: int = 0) -> ProportionEstimate:
    """Estimate the mixture weights of `test` over the `train` classes.

    With sparse=True the class embeddings are sparsified; the test
    embedding stays full, since the train-test inner products are already
    cheap once the class side is sparse. Sparsify the test yourself and
    call estimate_from_means for full control.
    """
    train = list(train)
    if len(train) < 2:
        raise ValueError("need at least 2 training samples")
    means = _fit_means(train, spec, sparse, epsilon, k_max, seed)
    return estimate_from_means(means, full_mean(test, spec))


def _golden_section(fn, lo: float, hi: float, max_iter: int):
    """Deterministic golden-section minimizer on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    evals = 2
    while evals < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
        evals += 1
    return (c, fc) if fc <= fd else (d, fd)


def _apportion(pi, total: int) -> np.ndarray:
    """Largest-remainder rounding of pi * total to integer counts."""
    raw = np.asarray(pi, dtype=np.float64) * total
    counts = np.floor(raw).astype(int)
    shortfall = total - int(counts.sum())
    if shortfall > 0:
        order = np.argsort(-(raw - counts))
        counts[order[:shortfall]] += 1
    return counts


def search_bandwidth(train, lo: float, hi: float, spec_template: RadialKernelSpec,
                     sparse: bool = False, epsilon: float = 1e-10, k_max=None,
                     max_iter: int = 20, seed: int = 0, omega: float = 1.0,
                     validation_size: int = 1000):
    """Pick a Gaussian bandwidth by minimizing validation recovery error.

    Each training sample is interleave-split; the even halves become the
    class samples and a mixture with known Dirichlet(omega) weights is
    assembled from the odd halves. Golden-section search over log sigma
    minimizes the l1 distance between the known weights and the estimate.

    With sparse fitting the supports are selected once (they do not depend
    on sigma) and only the weights are re-solved per candidate sigma.
    """
    if spec_template.family != "gaussian":
        raise ValueError("bandwidth search applies to gaussian kernels only")
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got ({lo}, {hi})")
    train = list(train)
    n_classes = len(train)
    if n_classes < 2:
        raise ValueError("need at least 2 training samples")

    from .dataio import DataSet

    rng = np.random.default_rng(seed)
    fit_sets, holdout = [], []
    for sample in train:
        pts = np.asarray(sample.points, dtype=np.float64)
        if pts.shape[0] < 4:
            raise ValueError(f"sample {sample.name!r} too small to split")
        fit_sets.append(DataSet(pts[0::2], name=sample.name))
        pool = pts[1::2]
        holdout.append(pool[rng.permutation(pool.shape[0])])

    pi_true = dirichlet_sample(n_classes, omega, seed=seed)
    budget = min(validation_size, sum(h.shape[0] for h in holdout))
    counts = _apportion(pi_true, budget)
    counts = np.minimum(counts, [h.shape[0] for h in holdout])
    pi_true = counts / counts.sum()  # realized mixture weights
    validation = DataSet(
        np.vstack([h[:c] for h, c in zip(holdout, counts) if c > 0]),
        name="validation-mixture",
    )

    supports = None
    if sparse:
        from .kcenter import kcenter_greedy

        supports = []
        for fit_set in fit_sets:
            budget_k = k_max if k_max is not None else default_k_max(fit_set.n)
            budget_k = max(1, min(budget_k, fit_set.n))
            supports.append(kcenter_greedy(fit_set, budget_k, seed=seed).order)

    test_mean_cache = {}

    def objective(log_sigma: float) -> float:
        spec = spec_template.with_sigma(math.exp(log_sigma))
        if sparse:
            means = [fit_with_support(fs, spec, sup)
                     for fs, sup in zip(fit_sets, supports)]
        else:
            means = [full_mean(fs, spec) for fs in fit_sets]
        key = spec.sigma
        if key not in test_mean_cache:
            test_mean_cache[key] = full_mean(validation, spec)
        estimate = estimate_from_means(means, test_mean_cache[key])
        return l1_error(pi_true, estimate.pi_hat)

    best_log, best_err = _golden_section(objective, math.log(lo), math.log(hi),
                                         max_iter=max_iter)
    sigma = math.exp(best_log)
    logger.info("bandwidth search: sigma=%.6g validation l1=%.4g", sigma, best_err)
    return sigma, {"validation_l1": best_err, "pi_true": pi_true,
                   "evaluations": max_iter}
