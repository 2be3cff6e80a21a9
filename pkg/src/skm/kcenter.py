"""Greedy farthest-first traversal: a 2-approximation to the k-center problem.

Each iteration scans all points once, so selecting k centers from n points
in d dimensions costs O(nkd). The coverage radius of the greedy selection
is at most twice the optimal radius for the same k.
"""

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.spatial.distance import cdist

from . import _backend


@dataclass(frozen=True)
class Selection:
    """Chosen center indices plus per-point distances to the chosen set.

    order: chosen indices in selection order.
    dist_to_set: Euclidean distance from every point to its nearest center.
    radius_trace: coverage radius (max of dist_to_set) after each step.
    """

    order: np.ndarray
    dist_to_set: np.ndarray
    radius_trace: np.ndarray
    sqdist: np.ndarray  # squared distances; basis for exact incremental updates

    @property
    def m(self) -> int:
        return self.order.shape[0]

    @property
    def coverage_radius(self) -> float:
        return float(self.radius_trace[-1])


def _resolve_first(n: int, first, seed: int) -> int:
    if first is None:
        return int(np.random.default_rng(seed).integers(n))
    first = int(first)
    if not 0 <= first < n:
        raise ValueError(f"first index {first} out of range for n={n}")
    return first


def _next_candidate(sqdist, chosen_mask, banned=None):
    """Index of the unchosen point farthest from the set (ties: lowest index).

    Returns -1 when every point is chosen or banned.
    """
    vals = np.where(chosen_mask, -1.0, sqdist)
    if banned:
        vals[list(banned)] = -1.0
    idx = int(np.argmax(vals))
    if vals[idx] < 0.0:
        return -1
    return idx


def peek_next(sel: Selection, banned=None) -> int:
    """Candidate the next extension would add, without extending; -1 if none."""
    chosen_mask = np.zeros(sel.sqdist.shape[0], dtype=bool)
    chosen_mask[sel.order] = True
    return _next_candidate(sel.sqdist, chosen_mask, banned)


def kcenter_greedy(data, k: int, first=None, seed: int = 0) -> Selection:
    """Select k centers by farthest-first traversal.

    The first center is either the explicit index `first` or is drawn
    uniformly using `seed`. Every later center is the point farthest from
    the current set; ties break toward the lowest index, which makes the
    result independent of how the scan is scheduled.
    """
    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")
    order = np.empty(k, dtype=np.int64)
    radius = np.empty(k, dtype=np.float64)
    sqdist = np.full(n, np.inf, dtype=np.float64)
    chosen_mask = np.zeros(n, dtype=bool)

    cur = _resolve_first(n, first, seed)
    for t in range(k):
        order[t] = cur
        chosen_mask[cur] = True
        _backend.update_sqdist(pts, pts[cur], sqdist)
        radius[t] = math.sqrt(float(np.max(sqdist)))
        if t + 1 < k:
            cur = _next_candidate(sqdist, chosen_mask)
    if k > 1 and radius[k - 2] == 0.0:
        warnings.warn(
            "k exceeds the number of distinct points; selection contains "
            "duplicates of earlier centers",
            stacklevel=2,
        )
    return Selection(order, np.sqrt(sqdist), radius, sqdist)


def extend_selection(sel: Selection, data, banned=None) -> Selection:
    """Append the farthest remaining point and refresh the distances.

    One O(nd) pass: each point's distance is the minimum of its previous
    value and its distance to the new center. Applying this n-1 times to a
    single-point selection reproduces kcenter_greedy with the same first
    index exactly.
    """
    pts = np.ascontiguousarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    if sel.m >= n:
        raise ValueError("selection already covers all points")
    cand = peek_next(sel, banned)
    if cand < 0:
        raise ValueError("no selectable points remain (all chosen or banned)")
    sqdist = sel.sqdist.copy()
    _backend.update_sqdist(pts, pts[cand], sqdist)
    order = np.append(sel.order, np.int64(cand))
    radius = np.append(sel.radius_trace, math.sqrt(float(np.max(sqdist))))
    return Selection(order, np.sqrt(sqdist), radius, sqdist)


def kcenter_brute(data, k: int, max_subsets: int = 1_000_000):
    """Exact k-center by exhaustive enumeration. Test oracle only.

    Returns (best index tuple, optimal coverage radius). Guarded against
    instances with more than max_subsets candidate subsets.
    """
    pts = np.asarray(data.points, dtype=np.float64)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")
    if math.comb(n, k) > max_subsets or n > 4096:
        raise ValueError(
            f"instance too large for brute force (C({n},{k}) subsets)"
        )
    dists = cdist(pts, pts)
    best_w = math.inf
    best = None
    all_idx = np.arange(n)
    for subset in combinations(range(n), k):
        rest = np.setdiff1d(all_idx, subset, assume_unique=True)
        if rest.size == 0:
            w = 0.0
        else:
            w = float(dists[np.ix_(rest, subset)].min(axis=1).max())
        if w < best_w:
            best_w = w
            best = subset
    return best, best_w
