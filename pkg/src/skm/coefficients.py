"""Optimal coefficients for a growing support set, maintained incrementally.

For support sections z_i = phi(., x_i) the best least-squares weights for
approximating the sample mean zbar = (1/n) sum_j z_j are

    alpha = K^{-1} kappa,   K_il = <z_i, z_l>,   kappa_l = (1/n) sum_j <z_j, z_l>.

The inverse is maintained under support growth by a bordered block update,
so adding one support point costs O(m^2 + nd). The quantity E_m =
-alpha' kappa equals the squared approximation error minus the constant
||zbar||^2; it is nonincreasing in m and drives the stopping rule.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import _backend
from .errors import ConvergenceError, NearSingularError
from .kernels import g_zero, gram_at_dist, gram_params

# q0 denominators at or below this fraction of g(0) signal a (near-)dependent
# support section. Below ~1e-9 the block update amplifies rounding error by
# ~1e9 and the weight vector degrades within a few further steps.
SINGULARITY_REL_TOL = 1e-9

# Computed error indicators must not rise; an increase beyond this relative
# slack means the maintained inverse has lost accuracy.
_E_INCREASE_REL_TOL = 1e-12


@dataclass(frozen=True)
class CoeffState:
    """Inverse Gram, kappa vector, weights and error trace for one support set.

    A lower Cholesky factor of the support Gram matrix is carried along:
    appending a support point extends it by one triangular solve, and the
    weights are solved through it, which stays accurate on support sets
    deep enough that the raw inverse chain loses precision.
    """

    indices: np.ndarray   # support indices, in insertion order
    inv_k: np.ndarray     # (m, m) inverse of the support Gram matrix
    chol: np.ndarray      # (m, m) lower Cholesky factor of the support Gram
    kappa: np.ndarray     # (m,) mean inner products against the whole sample
    alpha: np.ndarray     # (m,) current optimal weights
    e_trace: np.ndarray   # (m,) E_1 .. E_m, E_t = -alpha' kappa at size t
    c: float              # g(0), cached for the singularity tolerance

    @property
    def m(self) -> int:
        return self.indices.shape[0]


def kappa_entry(data, spec, j: int) -> float:
    """(1/n) sum_l <z_l, z_j>, one O(nd) scan."""
    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    kind, a, b, c = gram_params(spec)
    return _backend.mean_gram(pts, pts[int(j)], kind, a, b, c)


def init_state(data, spec, first_index: int) -> CoeffState:
    """Single-point support: K = [C], alpha = kappa / C."""
    c = g_zero(spec)
    if not c > 0.0:
        raise ValueError(f"g(0) must be positive, got {c}")
    kap = kappa_entry(data, spec, first_index)
    kappa = np.array([kap])
    inv_k = np.array([[1.0 / c]])
    alpha = inv_k @ kappa
    e1 = -float(alpha @ kappa)
    return CoeffState(
        indices=np.array([first_index], dtype=np.int64),
        inv_k=inv_k,
        chol=np.array([[math.sqrt(c)]]),
        kappa=kappa,
        alpha=alpha,
        e_trace=np.array([e1]),
        c=c,
    )


def extend_state(state: CoeffState, data, spec, new_index: int) -> CoeffState:
    """Add one support point via the bordered inverse update.

    With b the vector of inner products between the new section and the
    current support, the updated inverse is

        [[K^-1, 0], [0, 0]] + q0 * q q',  q = [-b' K^-1, 1]',
        q0 = 1 / (g(0) - b' K^-1 b).

    Raises NearSingularError when the q0 denominator falls to the
    singularity tolerance (e.g. a duplicate support point), or when the
    update would raise the error indicator, which is impossible in exact
    arithmetic and therefore signals numerical breakdown.
    """
    new_index = int(new_index)
    if new_index in state.indices:
        raise ValueError(f"index {new_index} is already in the support")
    pts = np.asarray(data.points, dtype=np.float64)
    m = state.m
    dists = np.linalg.norm(pts[state.indices] - pts[new_index], axis=1)
    b = gram_at_dist(spec, dists)

    # One forward solve gives both the Cholesky extension and the q0
    # denominator b' K^-1 b = ||w||^2, evaluated stably.
    w = solve_triangular(state.chol, b, lower=True, check_finite=False)
    denom = state.c - float(w @ w)
    if denom <= SINGULARITY_REL_TOL * state.c:
        raise NearSingularError(
            f"support point {new_index} is numerically dependent on the "
            f"current support (q0 denominator {denom:.3e})"
        )
    u = solve_triangular(state.chol.T, w, lower=False, check_finite=False)  # K^-1 b
    q0 = 1.0 / denom
    q = np.concatenate([-u, [1.0]])
    inv_k = np.zeros((m + 1, m + 1))
    inv_k[:m, :m] = state.inv_k
    inv_k += q0 * np.outer(q, q)
    chol = np.zeros((m + 1, m + 1))
    chol[:m, :m] = state.chol
    chol[m, :m] = w
    chol[m, m] = math.sqrt(denom)

    kappa = np.append(state.kappa, kappa_entry(data, spec, new_index))
    alpha = cho_solve((chol, True), kappa, check_finite=False)
    e_new = -float(alpha @ kappa)
    e_old = float(state.e_trace[-1])
    if e_new > e_old + _E_INCREASE_REL_TOL * max(1.0, abs(e_old)):
        raise NearSingularError(
            f"adding support point {new_index} would raise the error "
            f"indicator ({e_old:.12e} -> {e_new:.12e}); the update is no "
            "longer numerically accurate"
        )
    return CoeffState(
        indices=np.append(state.indices, np.int64(new_index)),
        inv_k=inv_k,
        chol=chol,
        kappa=kappa,
        alpha=alpha,
        e_trace=np.append(state.e_trace, e_new),
        c=state.c,
    )


def stop_rule(e_trace, epsilon: float) -> bool:
    """Relative-progress test |E_{m-1} - E_m| / |E_1 - E_m| <= epsilon.

    A flat trace (E_1 == E_m) defines the ratio as 0, i.e. stop: nothing is
    being gained.
    """
    e_trace = np.asarray(e_trace, dtype=np.float64)
    if e_trace.shape[0] < 2:
        raise ValueError("stop rule needs at least two error values")
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    num = abs(float(e_trace[-2] - e_trace[-1]))
    den = abs(float(e_trace[0] - e_trace[-1]))
    ratio = 0.0 if den == 0.0 else num / den
    return ratio <= epsilon


def solve_direct(gram, kappa, tol: float = 1e-10, max_iter=None):
    """Solve K alpha = kappa for a symmetric PSD Gram matrix.

    Jacobi-preconditioned conjugate gradients; a dense solve is the
    fallback for small systems when CG stalls. Guarantees
    ||K alpha - kappa|| <= tol * ||kappa|| or raises ConvergenceError.
    """
    K = np.asarray(gram, dtype=np.float64)
    kappa = np.asarray(kappa, dtype=np.float64).ravel()
    m = kappa.shape[0]
    if K.shape != (m, m):
        raise ValueError(f"gram has shape {K.shape}, expected ({m}, {m})")
    if not np.allclose(K, K.T, rtol=1e-10, atol=1e-12):
        raise ValueError("gram matrix is not symmetric")
    if max_iter is None:
        max_iter = 10 * m
    knorm = float(np.linalg.norm(kappa))
    if knorm == 0.0:
        return np.zeros(m)

    diag = np.diagonal(K).copy()
    precond = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)

    x = np.zeros(m)
    r = kappa.copy()
    z = precond * r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol * knorm:
            return x
        Kp = K @ p
        pKp = float(p @ Kp)
        if pKp <= 0.0:
            break  # lost positive definiteness; try the dense fallback
        step = rz / pKp
        x += step * p
        r -= step * Kp
        z = precond * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    residual = float(np.linalg.norm(K @ x - kappa))
    if residual <= tol * knorm:
        return x
    if m <= 64:
        try:
            x = np.linalg.solve(K, kappa)
        except np.linalg.LinAlgError:
            x = None
        if x is not None:
            residual = float(np.linalg.norm(K @ x - kappa))
            if residual <= tol * knorm:
                return x
    raise ConvergenceError(
        f"linear solve did not reach tol={tol} (residual {residual:.3e})",
        residual=residual,
    )


def project_simplex(values):
    """Euclidean projection onto {v : sum v_i = 1, v_i >= 0}.

    Sort-based O(k log k) algorithm: pivot on the largest prefix whose
    shifted entries stay positive.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a vector with non-finite entries")
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    ranks = np.arange(1, v.size + 1)
    positive = u - (cumulative - 1.0) / ranks > 0.0
    rho = int(np.nonzero(positive)[0][-1])
    theta = (cumulative[rho] - 1.0) / (rho + 1)
    return np.maximum(v - theta, 0.0)
