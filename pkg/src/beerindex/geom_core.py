"""Low-level geometric primitives in the plane and in R^d.

Orientation signs are exact: a floating-point filter decides the easy cases
and an exact rational evaluation takes over when the filter cannot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

_EPS = 2.0 ** -53
_CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS

# relative volume below which a simplex counts as affinely dependent
DEGENERACY_TOL = 1e-12


class DegenerateSimplexError(ValueError):
    """Raised when a tuple of points is affinely dependent."""


@dataclass(frozen=True)
class Segment:
    a: tuple[float, float]
    b: tuple[float, float]
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        for v in self.a + self.b:
            if not math.isfinite(v):
                raise ValueError("segment coordinates must be finite")

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)

    @property
    def midpoint(self) -> tuple[float, float]:
        return tuple((p + q) / 2.0 for p, q in zip(self.a, self.b))

    def point_at(self, t: float) -> tuple[float, float]:
        return tuple(p + t * (q - p) for p, q in zip(self.a, self.b))

    def reversed(self) -> "Segment":
        return Segment(self.b, self.a, self.closed)


def _orient_exact(ax, ay, bx, by, cx, cy) -> int:
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (ax, ay, bx, by, cx, cy))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def orient2d(p, q, r) -> int:
    """Sign of twice the signed area of triangle pqr (+1 for CCW)."""
    detleft = (q[0] - p[0]) * (r[1] - p[1])
    detright = (q[1] - p[1]) * (r[0] - p[0])
    det = detleft - detright
    bound = _CCW_ERRBOUND * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _orient_exact(p[0], p[1], q[0], q[1], r[0], r[1])


def orient2d_many(px, py, qx, qy, rx, ry) -> np.ndarray:
    """Vectorized exact orientation sign; arguments broadcast against each other."""
    px, py, qx, qy, rx, ry = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (px, py, qx, qy, rx, ry))
    )
    detleft = (qx - px) * (ry - py)
    detright = (qy - py) * (rx - px)
    det = detleft - detright
    bound = _CCW_ERRBOUND * (np.abs(detleft) + np.abs(detright))
    sign = np.zeros(det.shape, dtype=np.int8)
    sign[det > bound] = 1
    sign[-det > bound] = -1
    unsure = np.nonzero(np.abs(det) <= bound)
    for idx in zip(*unsure):
        sign[idx] = _orient_exact(px[idx], py[idx], qx[idx], qy[idx], rx[idx], ry[idx])
    return sign


def _as_points(T) -> np.ndarray:
    pts = np.asarray(T, dtype=float)
    if pts.ndim != 2:
        raise ValueError("expected a sequence of points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("coordinates must be finite")
    return pts


def _scale(pts: np.ndarray) -> float:
    ext = float(np.max(np.ptp(pts, axis=0))) if len(pts) > 1 else 0.0
    return ext if ext > 0 else 1.0


def simplex_measure(T) -> float:
    """Lebesgue measure of the convex hull of d+1 points in R^d."""
    pts = _as_points(T)
    n, d = pts.shape
    if n != d + 1:
        raise ValueError(f"need {d + 1} points in R^{d}, got {n}")
    return abs(float(np.linalg.det(pts[1:] - pts[0]))) / math.factorial(d)


def simplex_content(points) -> float:
    """k-dimensional measure of the simplex spanned by k+1 points in R^d (Gram determinant)."""
    pts = _as_points(points)
    k = len(pts) - 1
    if k == 0:
        return 0.0
    M = pts[1:] - pts[0]
    gram = M @ M.T
    det = float(np.linalg.det(gram))
    return math.sqrt(max(det, 0.0)) / math.factorial(k)


def is_degenerate(T) -> bool:
    """True if the simplex volume is negligible relative to its bounding-box scale."""
    pts = _as_points(T)
    k = len(pts) - 1
    return simplex_content(pts) <= DEGENERACY_TOL * _scale(pts) ** k / math.factorial(k)


def dist_to_affine_hull(P, basis) -> float:
    """Euclidean distance from P to aff(basis)."""
    B = _as_points(basis)
    p = np.asarray(P, dtype=float)
    if len(B) == 1:
        return float(np.linalg.norm(p - B[0]))
    if is_degenerate(B):
        raise DegenerateSimplexError("basis points are affinely dependent")
    M = (B[1:] - B[0]).T
    coef, *_ = np.linalg.lstsq(M, p - B[0], rcond=None)
    return float(np.linalg.norm(p - B[0] - M @ coef))


def barycentric(P, T) -> np.ndarray:
    """Barycentric coordinates of P with respect to a full-dimensional simplex T."""
    pts = _as_points(T)
    n, d = pts.shape
    if n != d + 1:
        raise ValueError(f"need {d + 1} points in R^{d}")
    if is_degenerate(pts):
        raise DegenerateSimplexError("simplex is degenerate")
    M = (pts[1:] - pts[0]).T
    lam = np.linalg.solve(M, np.asarray(P, dtype=float) - pts[0])
    return np.concatenate([[1.0 - lam.sum()], lam])


def point_in_simplex(P, T, closed: bool = True, tol: float = 1e-12) -> bool:
    """Membership of P in the closed (or open) convex hull of T."""
    lam = barycentric(P, T)
    if closed:
        return bool(np.all(lam >= -tol))
    return bool(np.all(lam > tol))


def diameter_pair(points) -> tuple[int, int]:
    """Indices (i, j), i < j, of a farthest pair; ties go to the lexicographically smallest pair."""
    pts = _as_points(points)
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two points")
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    iu, ju = np.triu_indices(n, k=1)
    vals = d2[iu, ju]
    best = int(np.argmax(vals))  # first maximum in row-major order is lexicographically smallest
    return int(iu[best]), int(ju[best])


def convex_hull_2d(points) -> list[tuple[float, float]]:
    """CCW convex hull (Andrew's monotone chain, exact orientation)."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) < 3:
        raise ValueError("need at least three distinct points")

    def half(seq):
        chain: list[tuple[float, float]] = []
        for p in seq:
            while len(chain) >= 2 and orient2d(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise ValueError("points are collinear")
    return hull


def squared_dist_to_affine_hull_exact(P: Sequence, basis: Sequence[Sequence]):
    """Squared distance to aff(basis) by Gram-Schmidt in the coordinates' own arithmetic.

    With Fraction inputs the result is exact, which makes tie-breaking between
    equal distances reliable.
    """
    o = basis[0]
    ortho: list[list] = []
    for b in basis[1:]:
        v = [bi - oi for bi, oi in zip(b, o)]
        for u in ortho:
            uu = sum(x * x for x in u)
            c = sum(x * y for x, y in zip(v, u)) / uu
            v = [x - c * y for x, y in zip(v, u)]
        if any(x != 0 for x in v):
            ortho.append(v)
    w = [pi - oi for pi, oi in zip(P, o)]
    for u in ortho:
        uu = sum(x * x for x in u)
        c = sum(x * y for x, y in zip(w, u)) / uu
        w = [x - c * y for x, y in zip(w, u)]
    return sum(x * x for x in w)
