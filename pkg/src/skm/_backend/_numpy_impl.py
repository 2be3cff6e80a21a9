"""Pure-numpy implementations of the hot inner loops.

Used when the compiled extension is unavailable, or when SKM_BACKEND=numpy.
Signatures match skm._backend._fastcore exactly.
"""

import numpy as np

# Radial shape codes shared by both backends.
SHAPE_SQEXP = 0  # c * exp(-a * r^2)
SHAPE_EXP = 1    # c * exp(-a * r)
SHAPE_POWER = 2  # c * (1 + a * r^2) ** (-b)


def update_sqdist(points, center, sqdist):
    """In place: sqdist[i] = min(sqdist[i], ||points[i] - center||^2)."""
    diff = points - center
    cand = np.einsum("ij,ij->i", diff, diff)
    np.minimum(sqdist, cand, out=sqdist)


def mean_gram(points, y, kind, a, b, c):
    """Mean over rows of the radial shape applied to ||points[i] - y||."""
    diff = points - y
    r2 = np.einsum("ij,ij->i", diff, diff)
    if kind == SHAPE_SQEXP:
        vals = np.exp(-a * r2)
    elif kind == SHAPE_EXP:
        vals = np.exp(-a * np.sqrt(r2))
    elif kind == SHAPE_POWER:
        vals = (1.0 + a * r2) ** (-b)
    else:
        raise ValueError(f"unknown shape kind {kind}")
    return c * float(vals.sum()) / points.shape[0]


def gaussian_shift_step(support, alpha, x, a, out):
    """One mean-shift step: out = sum_i w_i * support[i], returns sum_i w_i.

    Weights are w_i = alpha[i] * exp(-a * ||x - support[i]||^2); the caller
    divides by the returned weight total (and handles total == 0).
    """
    diff = support - x
    w = alpha * np.exp(-a * np.einsum("ij,ij->i", diff, diff))
    out[:] = w @ support
    return float(w.sum())
