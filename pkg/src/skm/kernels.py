"""Radial kernels: pointwise evaluation, section inner products, bandwidths.

A radial kernel has the form phi(x, x') = c * shape(||x - x'||_2). The
constant c is either 1 ("unit" normalization) or chosen so that
phi(., x') integrates to one over R^d ("density" normalization). Sections
phi(., x) live in an inner product space: the kernel's own RKHS ("rkhs"
mode, where <phi(., x), phi(., x')> = phi(x, x') by reproduction) or
L2(R^d) ("l2" mode, restricted to the families with a closed-form L2
inner product: the Gaussian, and the Student family at the Cauchy
exponent (1 + d) / 2).

In every supported case the inner product depends on the anchor points
only through their distance, <phi(., x), phi(., x')> = g(||x - x'||) with
g strictly decreasing, and g(0) = C > 0 is constant over anchors.
"""

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from . import _backend
from .errors import DegenerateDataError, KernelSpecError

FAMILIES = ("gaussian", "laplacian", "student")
NORMALIZATIONS = ("unit", "density")
SPACES = ("rkhs", "l2")

# Parameters each family accepts in the spec grammar.
_FAMILY_PARAMS = {
    "gaussian": ("sigma",),
    "laplacian": ("gamma",),
    "student": ("alpha", "beta"),
}


class ShapeParams(NamedTuple):
    """A radial profile c * shape_kind(r) with shape codes from _backend."""

    kind: int
    a: float
    b: float
    c: float


@dataclass(frozen=True)
class RadialKernelSpec:
    """Kernel family, parameters, normalization and inner-product space.

    dim is the ambient dimension of the anchor points; it enters the
    density-normalization constants and the L2 closed forms.
    """

    family: str
    dim: int
    sigma: float | None = None
    gamma: float | None = None
    alpha: float | None = None
    beta: float | None = None
    normalization: str = "unit"
    space: str = "rkhs"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelSpecError(f"unknown kernel family {self.family!r}")
        if self.normalization not in NORMALIZATIONS:
            raise KernelSpecError(f"unknown normalization {self.normalization!r}")
        if self.space not in SPACES:
            raise KernelSpecError(f"unknown space {self.space!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise KernelSpecError(f"dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        wanted = _FAMILY_PARAMS[self.family]
        for name in ("sigma", "gamma", "alpha", "beta"):
            value = getattr(self, name)
            if name in wanted:
                if value is None or not (value > 0):
                    raise KernelSpecError(
                        f"{self.family} kernel requires {name} > 0, got {value}"
                    )
                object.__setattr__(self, name, float(value))
            elif value is not None:
                raise KernelSpecError(
                    f"{self.family} kernel does not take parameter {name!r}"
                )
        if self.family == "student" and self.normalization == "density":
            if not (self.alpha > self.dim / 2):
                raise KernelSpecError(
                    "density normalization for the student kernel requires "
                    f"alpha > d/2 (alpha={self.alpha}, d={self.dim})"
                )
        if self.space == "l2" and not self._has_l2_closed_form():
            raise KernelSpecError(
                f"no closed-form L2 inner product for {self.family} "
                "(supported: gaussian; student with alpha = (1 + d) / 2)"
            )

    def _has_l2_closed_form(self) -> bool:
        if self.family == "gaussian":
            return True
        if self.family == "student":
            return abs(self.alpha - (1 + self.dim) / 2) <= 1e-12
        return False

    def with_sigma(self, sigma: float) -> "RadialKernelSpec":
        """Copy of this spec with a new Gaussian bandwidth."""
        if self.family != "gaussian":
            raise KernelSpecError("with_sigma applies to gaussian kernels only")
        return replace(self, sigma=float(sigma))


def _density_constant(family: str, dim: int, **params) -> float:
    """c such that c * shape(||x||) integrates to one over R^dim."""
    if family == "gaussian":
        sigma = params["sigma"]
        return (2.0 * math.pi * sigma * sigma) ** (-dim / 2.0)
    if family == "laplacian":
        gamma = params["gamma"]
        # int exp(-||x||/gamma) dx = (2 pi^{d/2} / Gamma(d/2)) Gamma(d) gamma^d
        log_c = (
            math.lgamma(dim / 2.0)
            - math.log(2.0)
            - (dim / 2.0) * math.log(math.pi)
            - math.lgamma(dim)
            - dim * math.log(gamma)
        )
        return math.exp(log_c)
    if family == "student":
        alpha, beta = params["alpha"], params["beta"]
        # int (1 + ||x||^2/beta)^{-alpha} dx = (pi beta)^{d/2} Gamma(alpha - d/2) / Gamma(alpha)
        log_c = (
            math.lgamma(alpha)
            - math.lgamma(alpha - dim / 2.0)
            - (dim / 2.0) * math.log(math.pi * beta)
        )
        return math.exp(log_c)
    raise KernelSpecError(f"unknown kernel family {family!r}")


def _normalization_constant(spec: RadialKernelSpec) -> float:
    if spec.normalization == "unit":
        return 1.0
    params = {name: getattr(spec, name) for name in _FAMILY_PARAMS[spec.family]}
    return _density_constant(spec.family, spec.dim, **params)


def eval_params(spec: RadialKernelSpec) -> ShapeParams:
    """Profile of phi itself: phi(x, x') = c * shape(||x - x'||)."""
    c = _normalization_constant(spec)
    if spec.family == "gaussian":
        return ShapeParams(_backend.SHAPE_SQEXP, 1.0 / (2.0 * spec.sigma**2), 0.0, c)
    if spec.family == "laplacian":
        return ShapeParams(_backend.SHAPE_EXP, 1.0 / spec.gamma, 0.0, c)
    return ShapeParams(_backend.SHAPE_POWER, 1.0 / spec.beta, spec.alpha, c)


def gram_params(spec: RadialKernelSpec) -> ShapeParams:
    """Profile of g: <phi(., x), phi(., x')> = g(||x - x'||)."""
    if spec.space == "rkhs":
        return eval_params(spec)
    c = _normalization_constant(spec)
    d = spec.dim
    if spec.family == "gaussian":
        # c^2 int exp(-(||t-x||^2 + ||t-x'||^2) / (2 sigma^2)) dt
        #   = c^2 (pi sigma^2)^{d/2} exp(-r^2 / (4 sigma^2))
        sigma = spec.sigma
        c_l2 = c * c * (math.pi * sigma * sigma) ** (d / 2.0)
        return ShapeParams(_backend.SHAPE_SQEXP, 1.0 / (4.0 * sigma**2), 0.0, c_l2)
    if spec.family == "student":
        # At the Cauchy exponent the density-normalized section is the
        # isotropic Cauchy law with scale sqrt(beta); convolving two of
        # them doubles the scale, i.e. takes beta to 4 beta.
        beta = spec.beta
        c_dens = _density_constant("student", d, alpha=spec.alpha, beta=beta)
        c_conv = _density_constant("student", d, alpha=spec.alpha, beta=4.0 * beta)
        c_l2 = (c / c_dens) ** 2 * c_conv
        return ShapeParams(_backend.SHAPE_POWER, 1.0 / (4.0 * beta), spec.alpha, c_l2)
    raise KernelSpecError(
        f"no closed-form L2 inner product for {spec.family}"
    )


def _apply_shape(params: ShapeParams, r):
    r = np.asarray(r, dtype=np.float64)
    kind, a, b, c = params
    if kind == _backend.SHAPE_SQEXP:
        return c * np.exp(-a * r * r)
    if kind == _backend.SHAPE_EXP:
        return c * np.exp(-a * r)
    return c * (1.0 + a * r * r) ** (-b)


def kernel_at_dist(spec: RadialKernelSpec, r):
    """phi evaluated at anchor distance r (elementwise over an array)."""
    return _apply_shape(eval_params(spec), r)


def gram_at_dist(spec: RadialKernelSpec, r):
    """Section inner product g evaluated at anchor distance r."""
    return _apply_shape(gram_params(spec), r)


def _check_dim(spec, x, name="point"):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != spec.dim:
        raise ValueError(
            f"{name} has dimension {x.shape[0]}, kernel expects {spec.dim}"
        )
    return x


def kernel_eval(spec: RadialKernelSpec, x, x2) -> float:
    """Pointwise kernel value phi(x, x2)."""
    x = _check_dim(spec, x)
    x2 = _check_dim(spec, x2)
    return float(kernel_at_dist(spec, np.linalg.norm(x - x2)))


def gram_inner(spec: RadialKernelSpec, x, x2) -> float:
    """Inner product <phi(., x), phi(., x2)> in the spec's space."""
    x = _check_dim(spec, x)
    x2 = _check_dim(spec, x2)
    return float(gram_at_dist(spec, np.linalg.norm(x - x2)))


def g_zero(spec: RadialKernelSpec) -> float:
    """The constant C = <phi(., x), phi(., x)>, independent of x."""
    return float(gram_at_dist(spec, 0.0))


def kernel_matrix(spec: RadialKernelSpec, xs, ys=None):
    """Matrix of phi(x_i, y_j) values."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = xs if ys is None else np.atleast_2d(np.asarray(ys, dtype=np.float64))
    return _apply_shape(eval_params(spec), cdist(xs, ys))


def gram_matrix(spec: RadialKernelSpec, xs, ys=None):
    """Matrix of section inner products g(||x_i - y_j||)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = xs if ys is None else np.atleast_2d(np.asarray(ys, dtype=np.float64))
    return _apply_shape(gram_params(spec), cdist(xs, ys))


def _points(data) -> np.ndarray:
    pts = getattr(data, "points", data)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    return pts


def bandwidth_iqr(data) -> float:
    """Per-dimension interquartile range, averaged over dimensions, / 1.35.

    Quartiles use the linear-interpolation convention (numpy's default).
    """
    pts = _points(data)
    if pts.shape[0] < 2:
        raise ValueError("bandwidth_iqr needs at least 2 points")
    q75, q25 = np.percentile(pts, [75.0, 25.0], axis=0)
    bw = float(np.mean(q75 - q25)) / 1.35
    if bw <= 0.0:
        raise DegenerateDataError("data is constant in every dimension")
    return bw


def bandwidth_jaakkola(data, subsample_cap: int = 2000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance over a seeded subsample."""
    pts = _points(data)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("bandwidth_jaakkola needs at least 2 points")
    if subsample_cap < 2:
        raise ValueError("subsample_cap must be at least 2")
    if n > subsample_cap:
        idx = np.random.default_rng(seed).choice(n, subsample_cap, replace=False)
        idx.sort()
        pts = pts[idx]
    bw = float(np.median(pdist(pts)))
    if bw <= 0.0:
        raise DegenerateDataError("median pairwise distance is zero")
    return bw


def parse_kernel_spec(text: str, dim: int) -> RadialKernelSpec:
    """Parse the CLI kernel grammar, e.g. 'gaussian:sigma=1.5:density:rkhs'.

    The first token is the family. Remaining tokens, in any order, are
    key=value parameters plus the optional flags unit/density and rkhs/l2.
    """
    tokens = [t.strip() for t in text.strip().split(":") if t.strip()]
    if not tokens:
        raise KernelSpecError("empty kernel spec")
    family = tokens[0].lower()
    if family not in FAMILIES:
        raise KernelSpecError(f"unknown kernel family {family!r}")
    kwargs: dict = {"family": family, "dim": dim}
    for token in tokens[1:]:
        low = token.lower()
        if low in NORMALIZATIONS:
            if "normalization" in kwargs and kwargs["normalization"] != low:
                raise KernelSpecError(f"conflicting normalization flags in {text!r}")
            kwargs["normalization"] = low
        elif low in SPACES:
            if "space" in kwargs and kwargs["space"] != low:
                raise KernelSpecError(f"conflicting space flags in {text!r}")
            kwargs["space"] = low
        elif "=" in token:
            key, _, raw = token.partition("=")
            key = key.strip().lower()
            if key not in _FAMILY_PARAMS[family]:
                raise KernelSpecError(
                    f"{family} kernel does not take parameter {key!r}"
                )
            try:
                kwargs[key] = float(raw)
            except ValueError:
                raise KernelSpecError(f"bad numeric value in token {token!r}") from None
        else:
            raise KernelSpecError(f"unrecognized kernel spec token {token!r}")
    return RadialKernelSpec(**kwargs)


def format_kernel_spec(spec: RadialKernelSpec) -> str:
    """Canonical string form accepted back by parse_kernel_spec."""
    parts = [spec.family]
    for name in _FAMILY_PARAMS[spec.family]:
        parts.append(f"{name}={getattr(spec, name)!r}")
    parts.append(spec.normalization)
    parts.append(spec.space)
    return ":".join(parts)
