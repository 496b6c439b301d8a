"""Canonical ordering of simplex tuples and the nested boxes that confine their last point.

For a tuple B_0..B_d the boxes live in an orthonormal frame adapted to the
flag aff(B_0) < aff(B_0,B_1) < ...: coordinate 1 runs along B_0B_1, coordinate
j is the distance direction of B_j from aff(B_0..B_{j-1}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geom_core import (
    DegenerateSimplexError,
    is_degenerate,
    simplex_content,
    simplex_measure,
    squared_dist_to_affine_hull_exact,
)

_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class CanonicalOrder:
    permutation: tuple[int, ...]
    heights: tuple[float, ...]  # d_1 (diameter), d_2, ..., at most d_{D-1} in R^D


def _exact(T) -> list[list[Fraction]]:
    return [[v if isinstance(v, Fraction) else Fraction(float(v)) for v in p] for p in T]


def _regular_orders(T, exact: bool):
    """All regular orders of T as index tuples (branching only on ties)."""
    pts = _exact(T) if exact else [np.asarray(p, dtype=float) for p in T]
    n = len(pts)

    def d2(i, j):
        return sum((a - b) ** 2 for a, b in zip(pts[i], pts[j]))

    pair_d = {(i, j): d2(i, j) for i in range(n) for j in range(i + 1, n)}
    top = max(pair_d.values())
    if exact:
        diam = [p for p, v in pair_d.items() if v == top]
    else:
        diam = [p for p, v in pair_d.items() if v >= top * (1 - _TIE_RTOL)]
    out = []

    def extend(prefix):
        # the last point is whatever remains; the greedy rule fixes positions 2..n-2
        if len(prefix) >= n - 1:
            rest = [i for i in range(n) if i not in prefix]
            out.append(tuple(prefix + rest))
            return
        rest = [i for i in range(n) if i not in prefix]
        basis = [pts[i] for i in prefix]
        if exact:
            dist = {i: squared_dist_to_affine_hull_exact(pts[i], basis) for i in rest}
            best = max(dist.values())
            picks = [i for i in rest if dist[i] == best]
        else:
            B = np.array(basis)
            M = (B[1:] - B[0]).T
            dist = {}
            for i in rest:
                coef, *_ = np.linalg.lstsq(M, pts[i] - B[0], rcond=None)
                r = pts[i] - B[0] - M @ coef
                dist[i] = float(r @ r)
            best = max(dist.values())
            picks = [i for i in rest if dist[i] >= best * (1 - _TIE_RTOL)]
        for i in picks:
            extend(prefix + [i])

    for i, j in diam:
        extend([i, j])
        extend([j, i])
    return out


def canonical_permutation(T) -> CanonicalOrder:
    """Diameter first, then repeatedly the farthest point from the current affine hull;
    among all orders satisfying this the lexicographically smallest index vector wins.

    Near-ties in floating point are re-decided in exact rational arithmetic, so the
    result is invariant under exact isometries.
    """
    if len(T) < 2:
        raise ValueError("need at least two points")
    exact_input = any(isinstance(v, Fraction) for p in T for v in p)
    Tf = np.array([[float(v) for v in p] for p in T])
    if len(T) > Tf.shape[1] + 1 or is_degenerate(Tf):
        raise DegenerateSimplexError("tuple is affinely dependent")
    orders = _regular_orders(T, exact=exact_input)
    # float near-ties surface as several candidate orders; settle them exactly
    if not exact_input and len(orders) > 2:
        orders = _regular_orders(T, exact=True)
    perm = min(orders)
    heights = []
    for i in range(1, min(len(T) - 1, Tf.shape[1] - 1) + 1):
        basis = [T[j] for j in perm[:i]]
        d2 = squared_dist_to_affine_hull_exact(_exact([T[perm[i]]])[0], _exact(basis))
        heights.append(math.sqrt(d2))
    return CanonicalOrder(tuple(perm), tuple(heights))


def _flag_frame(B: np.ndarray) -> np.ndarray:
    """Orthonormal rows e_1..e_D adapted to the flag spanned by B_1-B_0, B_2-B_0, ..."""
    D = B.shape[1]
    V = (B[1:] - B[0]).T  # columns
    Q, R = np.linalg.qr(np.c_[V, np.eye(D)], mode="complete")
    Q = Q[:, :D]
    # orient so each B_j has a non-negative j-th coordinate
    signs = np.sign(np.diag(R)[:D])
    signs[signs == 0] = 1
    return (Q * signs).T


@dataclass
class BoxChain:
    """Boxes box_1 .. box_d for an ordered d-tuple B_0..B_{d-1} in R^d."""

    points: np.ndarray  # (d, d) in canonical order
    permutation: tuple[int, ...]
    frame: np.ndarray  # (d, d) orthonormal rows
    heights: np.ndarray  # d_1 .. d_{d-1}
    budget: float

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def last_half_extent(self) -> float:
        """Largest distance from aff(B_0..B_{d-1}) with simplex volume within budget."""
        return math.factorial(self.d) * self.budget / float(np.prod(self.heights))

    @property
    def side_lengths(self) -> np.ndarray:
        return np.r_[self.heights[0], 2 * self.heights[1:], 2 * self.last_half_extent]

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    def coords(self, P) -> np.ndarray:
        return (np.asarray(P, dtype=float) - self.points[0]) @ self.frame.T

    def in_box(self, P, i: int, rtol: float = 1e-9) -> np.ndarray:
        """Projection onto aff(B_0..B_i) lies in box_i (i = 1..d-1), or P in box_d (i = d)."""
        c = np.atleast_2d(self.coords(P))
        tol = rtol * self.heights[0]
        ok = (c[:, 0] >= -tol) & (c[:, 0] <= self.heights[0] + tol)
        for j in range(1, min(i, self.d - 1)):
            ok &= np.abs(c[:, j]) <= self.heights[j] + tol
        if i == self.d:
            ok &= np.abs(c[:, self.d - 1]) <= self.last_half_extent * (1 + rtol) + tol
        return ok

    def contains(self, P, rtol: float = 1e-9) -> np.ndarray:
        return self.in_box(P, self.d, rtol)

    def contains_by_definition(self, P, rtol: float = 1e-9) -> np.ndarray:
        """box_d membership straight from its definition (projection + volume predicate)."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        ok = self.in_box(P, self.d - 1, rtol)
        vol = np.array([simplex_measure(np.vstack([self.points, p])) for p in P])
        return ok & (vol <= self.budget * (1 + rtol))


def box_chain(T_minus, budget: float) -> BoxChain:
    pts = np.asarray(T_minus, dtype=float)
    d = pts.shape[1]
    if pts.shape[0] != d:
        raise ValueError(f"need {d} points in R^{d}")
    if budget <= 0:
        raise ValueError("budget must be positive")
    if is_degenerate(pts):
        raise DegenerateSimplexError("points are affinely dependent")
    order = canonical_permutation(pts)
    B = pts[list(order.permutation)]
    return BoxChain(B, order.permutation, _flag_frame(B), np.array(order.heights), float(budget))


def two_sided_box_volume(d: int, budget: float) -> float:
    return 2 ** (d - 1) * math.factorial(d) * budget


def one_sided_box_volume(d: int, budget: float) -> float:
    return 2 ** (d - 2) * math.factorial(d) * budget


@dataclass
class BoxReport:
    checked: int
    hull_in_S_count: int
    containment_failures: int
    projection_failures: int
    observation_max_rel_err: float
    volume_max_rel_err: float

    def to_json(self) -> dict:
        return self.__dict__.copy()


def verify_box_containment(region, c_S: float, tuples: int, rng: np.random.Generator) -> BoxReport:
    """Sample tuples; check the projection containments for every tuple and the
    last-point containment whenever the hull lies in the region."""
    d = region.d
    budget = region.volume * c_S
    T = region.sample(tuples * (d + 1), rng).reshape(tuples, d + 1, d)
    inside = region.hulls_inside(T, k=d)
    hull_count = proj_fail = cont_fail = 0
    obs_err = vol_err = 0.0
    checked = 0
    for t, ok in zip(T, inside):
        if is_degenerate(t):
            continue
        order = canonical_permutation(t)
        B = t[list(order.permutation)]
        bc = BoxChain(B[:d], order.permutation[:d], _flag_frame(B[:d]), np.array(order.heights), budget)
        checked += 1
        for i in range(1, d):
            proj_fail += int((~bc.in_box(t, i)).sum())
        base = simplex_content(B[:d])
        ref = float(np.prod(order.heights)) / math.factorial(d - 1)
        obs_err = max(obs_err, abs(base - ref) / ref)
        vol_err = max(vol_err, abs(bc.volume - two_sided_box_volume(d, budget)) / two_sided_box_volume(d, budget))
        if ok:
            hull_count += 1
            cont_fail += int(not bc.contains(B[d])[0])
    return BoxReport(checked, hull_count, cont_fail, proj_fail, obs_err, vol_err)


def hull_index_upper_bound(d: int, c_S: float) -> float:
    return 2 ** (d - 2) * math.factorial(d + 1) * c_S


def hull_index_bound_check(region, c_S: float, samples: int, seed: int) -> dict:
    from .estimators import estimate_k_index

    est = estimate_k_index(region, region.d, samples, seed)
    bound = hull_index_upper_bound(region.d, c_S)
    return {"b_d_estimate": est.value, "ci95": [est.ci_low, est.ci_high], "bound": bound,
            "ok": bool(est.ci_high <= bound)}
