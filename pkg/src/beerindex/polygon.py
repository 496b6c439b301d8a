"""Simple polygons: membership, segment containment, triangulation, sampling, diagonals."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geom_core import Segment, orient2d, orient2d_many


class InvalidPolygonError(ValueError):
    pass


class NotADiagonalError(ValueError):
    pass


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _strip(verts: list, collinear_tol: float) -> list:
    """Drop repeated and collinear vertices until none are left."""
    out = [tuple(map(float, p)) for p in verts]
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            p, v, q = out[i - 1], out[i], out[(i + 1) % n]
            if v == q:
                out.pop(i)
                changed = True
                break
            if collinear_tol > 0:
                e1 = (v[0] - p[0], v[1] - p[1])
                e2 = (q[0] - v[0], q[1] - v[1])
                cr = _cross(*e1, *e2)
                flat = abs(cr) <= collinear_tol * math.hypot(*e1) * math.hypot(*e2)
            else:
                flat = orient2d(p, v, q) == 0
            if flat:
                out.pop(i)
                changed = True
                break
    return out


def _segments_intersect_closed(p1, p2, q1, q2) -> bool:
    o1 = orient2d(p1, p2, q1)
    o2 = orient2d(p1, p2, q2)
    o3 = orient2d(q1, q2, p1)
    o4 = orient2d(q1, q2, p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


@dataclass
class Triangulation:
    triangles: np.ndarray  # (m, 3) vertex indices
    areas: np.ndarray
    cumulative: np.ndarray

    @property
    def total_area(self) -> float:
        return float(self.cumulative[-1])


class SimplePolygon:
    """A simple polygon stored as a CCW vertex cycle (first vertex not repeated).

    The region is treated as closed: boundary points count as inside.
    """

    def __init__(self, vertices, *, collinear_tol: float = 0.0, validate: bool = True):
        raw = np.asarray(vertices, dtype=float)
        if raw.ndim != 2 or raw.shape[1] != 2:
            raise InvalidPolygonError("vertices must be an (n, 2) array")
        if not np.all(np.isfinite(raw)):
            raise InvalidPolygonError("vertex coordinates must be finite")
        pts = [tuple(p) for p in raw]
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]
        v = np.array(pts, dtype=float)
        if len(v) >= 3 and _signed_area(v) < 0:
            v = v[::-1]
        pts = _strip(list(map(tuple, v)), collinear_tol)
        if len(pts) < 3:
            raise InvalidPolygonError("polygon needs at least 3 non-collinear vertices")
        self.vertices = np.array(pts, dtype=float)
        self.vertices.setflags(write=False)
        self.area = _signed_area(self.vertices)
        if self.area <= 0:
            raise InvalidPolygonError("polygon has non-positive area")
        if validate and not self._is_simple():
            raise InvalidPolygonError("polygon boundary self-intersects")
        self._tri: Triangulation | None = None

    # -- basic structure -------------------------------------------------
    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, SimplePolygon) and np.array_equal(self.vertices, other.vertices)

    def __repr__(self) -> str:
        return f"SimplePolygon(n={len(self)}, area={self.area:.6g})"

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @property
    def scale(self) -> float:
        return float(np.max(np.ptp(self.vertices, axis=0)))

    def _is_simple(self) -> bool:
        v = [tuple(p) for p in self.vertices]
        n = len(v)
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            for j in range(i + 1, n):
                c, d = v[j], v[(j + 1) % n]
                if j == i + 1 or (i == 0 and j == n - 1):
                    # adjacent edges may only share their common vertex
                    shared = b if j == i + 1 else a
                    other = d if j == i + 1 else c
                    far = a if j == i + 1 else b
                    if orient2d(far, shared, other) == 0:
                        # collinear neighbours folding back onto each other
                        if (other[0] - shared[0]) * (far[0] - shared[0]) + (other[1] - shared[1]) * (far[1] - shared[1]) > 0:
                            return False
                    continue
                if _segments_intersect_closed(a, b, c, d):
                    return False
        return True

    def is_convex(self) -> bool:
        v = self.vertices
        n = len(v)
        return all(orient2d(v[i - 1], v[i], v[(i + 1) % n]) >= 0 for i in range(n))

    def reflex_vertices(self) -> list[int]:
        v = self.vertices
        n = len(v)
        return [i for i in range(n) if orient2d(v[i - 1], v[i], v[(i + 1) % n]) < 0]

    # -- membership ------------------------------------------------------
    def contains_point(self, A) -> bool:
        """Closed membership via the winding number with exact orientation."""
        x, y = float(A[0]), float(A[1])
        wn = 0
        v = self.vertices
        n = len(v)
        for i in range(n):
            p, q = v[i], v[(i + 1) % n]
            o = orient2d(p, q, (x, y))
            if o == 0 and min(p[0], q[0]) <= x <= max(p[0], q[0]) and min(p[1], q[1]) <= y <= max(p[1], q[1]):
                return True
            if p[1] <= y:
                if q[1] > y and o > 0:
                    wn += 1
            elif q[1] <= y and o < 0:
                wn -= 1
        return wn != 0

    def locate_points(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (strictly_inside, on_boundary) masks for an (m, 2) array."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        wn = np.zeros(len(pts), dtype=np.int64)
        on = np.zeros(len(pts), dtype=bool)
        P, Q = self.edges
        for (px, py), (qx, qy) in zip(P, Q):
            o = orient2d_many(px, py, qx, qy, x, y)
            on |= (o == 0) & (x >= min(px, qx)) & (x <= max(px, qx)) & (y >= min(py, qy)) & (y <= max(py, qy))
            if py <= qy:
                wn += (py <= y) & (qy > y) & (o > 0)
            else:
                wn -= (py > y) & (qy <= y) & (o < 0)
        inside = (wn != 0) & ~on
        return inside, on

    def contains_points(self, pts) -> np.ndarray:
        inside, on = self.locate_points(pts)
        return inside | on

    def boundary_distance(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        P, Q = self.edges
        best = np.full(len(pts), np.inf)
        for p, q in zip(P, Q):
            e = q - p
            t = np.clip(((pts - p) @ e) / float(e @ e), 0.0, 1.0)
            d = np.linalg.norm(pts - (p + t[:, None] * e), axis=1)
            best = np.minimum(best, d)
        return best

    # -- segment containment ---------------------------------------------
    def _touch_params(self, A, B):
        """Parameters along AB where it meets the boundary, plus collinear overlap intervals.

        Returns None if AB properly crosses an edge.
        """
        params = [0.0, 1.0]
        overlaps = []
        dx, dy = B[0] - A[0], B[1] - A[1]
        L2 = dx * dx + dy * dy
        v = self.vertices
        n = len(v)
        for i in range(n):
            p, q = tuple(v[i]), tuple(v[(i + 1) % n])
            o1 = orient2d(A, B, p)
            o2 = orient2d(A, B, q)
            if o1 == 0 and o2 == 0:
                tp = ((p[0] - A[0]) * dx + (p[1] - A[1]) * dy) / L2
                tq = ((q[0] - A[0]) * dx + (q[1] - A[1]) * dy) / L2
                lo, hi = max(min(tp, tq), 0.0), min(max(tp, tq), 1.0)
                if lo <= hi:
                    params += [lo, hi]
                    overlaps.append((lo, hi))
                continue
            if o1 * o2 > 0:
                continue
            o3 = orient2d(p, q, A)
            o4 = orient2d(p, q, B)
            if o3 * o4 > 0:
                continue
            if o1 * o2 < 0 and o3 * o4 < 0:
                return None
            # touching: an endpoint of one lies on the other
            if o1 == 0:
                t = ((p[0] - A[0]) * dx + (p[1] - A[1]) * dy) / L2
            elif o2 == 0:
                t = ((q[0] - A[0]) * dx + (q[1] - A[1]) * dy) / L2
            else:
                t = 0.0 if o3 == 0 else 1.0
            params.append(min(max(t, 0.0), 1.0))
        return sorted(set(params)), overlaps

    def contains_segment(self, s) -> bool:
        """True iff the closed segment lies in the closed polygon (exact predicates)."""
        A, B = (tuple(map(float, s.a)), tuple(map(float, s.b))) if isinstance(s, Segment) else (tuple(map(float, s[0])), tuple(map(float, s[1])))
        if not (self.contains_point(A) and self.contains_point(B)):
            return False
        if A == B:
            return True
        res = self._touch_params(A, B)
        if res is None:
            return False
        params, overlaps = res
        for t0, t1 in zip(params[:-1], params[1:]):
            if t1 <= t0:
                continue
            if any(lo <= t0 and t1 <= hi for lo, hi in overlaps):
                continue
            tm = 0.5 * (t0 + t1)
            M = (A[0] + tm * (B[0] - A[0]), A[1] + tm * (B[1] - A[1]))
            if not self.contains_point(M):
                return False
        return True

    def segments_inside(self, A, B) -> np.ndarray:
        """Vectorized contains_segment for (m, 2) arrays of endpoints.

        Generic pairs are decided by strict orientation signs; any pair touching
        the boundary is re-decided by the exact scalar routine.
        """
        A = np.asarray(A, dtype=float).reshape(-1, 2)
        B = np.asarray(B, dtype=float).reshape(-1, 2)
        inA, onA = self.locate_points(A)
        inB, onB = self.locate_points(B)
        ok = (inA | onA) & (inB | onB)
        unsure = onA | onB
        ax, ay, bx, by = A[:, 0], A[:, 1], B[:, 0], B[:, 1]
        minx, maxx = np.minimum(ax, bx), np.maximum(ax, bx)
        miny, maxy = np.minimum(ay, by), np.maximum(ay, by)
        P, Q = self.edges
        for (px, py), (qx, qy) in zip(P, Q):
            cand = ok & (maxx >= min(px, qx)) & (minx <= max(px, qx)) & (maxy >= min(py, qy)) & (miny <= max(py, qy))
            idx = np.nonzero(cand)[0]
            if len(idx) == 0:
                continue
            o1 = orient2d_many(ax[idx], ay[idx], bx[idx], by[idx], px, py)
            o2 = orient2d_many(ax[idx], ay[idx], bx[idx], by[idx], qx, qy)
            o3 = orient2d_many(px, py, qx, qy, ax[idx], ay[idx])
            o4 = orient2d_many(px, py, qx, qy, bx[idx], by[idx])
            cross = (o1.astype(np.int16) * o2 < 0) & (o3.astype(np.int16) * o4 < 0)
            degenerate = ((o1 == 0) | (o2 == 0) | (o3 == 0) | (o4 == 0)) & ~cross
            ok[idx[cross]] = False
            unsure[idx[degenerate]] = True
        redo = np.nonzero(unsure & ok)[0]
        for i in redo:
            ok[i] = self.contains_segment(Segment(A[i], B[i]))
        return ok

    # -- triangulation and sampling ---------------------------------------
    def triangulate(self) -> Triangulation:
        if self._tri is not None:
            return self._tri
        v = [tuple(p) for p in self.vertices]
        idx = list(range(len(v)))
        tris = []
        guard = 0
        while len(idx) > 3:
            m = len(idx)
            clipped = False
            for k in range(m):
                i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
                a, b, c = v[i0], v[i1], v[i2]
                if orient2d(a, b, c) <= 0:
                    continue
                blocked = False
                for j in idx:
                    if j in (i0, i1, i2):
                        continue
                    p = v[j]
                    if orient2d(a, b, p) >= 0 and orient2d(b, c, p) >= 0 and orient2d(c, a, p) >= 0:
                        blocked = True
                        break
                if blocked:
                    continue
                tris.append((i0, i1, i2))
                idx.pop(k)
                clipped = True
                break
            guard += 1
            if not clipped or guard > 10 * len(v):
                raise InvalidPolygonError("ear clipping failed; polygon is not simple")
        tris.append(tuple(idx))
        T = np.array(tris, dtype=np.int64)
        pts = self.vertices[T]
        areas = 0.5 * np.abs(
            (pts[:, 1, 0] - pts[:, 0, 0]) * (pts[:, 2, 1] - pts[:, 0, 1])
            - (pts[:, 1, 1] - pts[:, 0, 1]) * (pts[:, 2, 0] - pts[:, 0, 0])
        )
        self._tri = Triangulation(T, areas, np.cumsum(areas))
        return self._tri

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points uniform on the polygon: triangle by area, then a folded unit square."""
        tri = self.triangulate()
        u = rng.random((n, 3))
        k = np.searchsorted(tri.cumulative, u[:, 0] * tri.cumulative[-1], side="right")
        k = np.minimum(k, len(tri.areas) - 1)
        s, t = u[:, 1], u[:, 2]
        fold = s + t > 1.0
        s = np.where(fold, 1.0 - s, s)
        t = np.where(fold, 1.0 - t, t)
        P = self.vertices[tri.triangles[k]]
        return P[:, 0] + s[:, None] * (P[:, 1] - P[:, 0]) + t[:, None] * (P[:, 2] - P[:, 0])

    # -- lines through the polygon ----------------------------------------
    def line_pieces(self, p0, p1, with_points: bool = False):
        """Cut the line X(t) = p0 + t (p1 - p0) at every boundary contact.

        Returns (breaks, states): sorted parameters and, for each piece between
        consecutive breaks, one of "interior", "boundary" or "exterior". With
        with_points, also a dict mapping each break to its contact point (the
        exact vertex when the contact is a vertex).
        """
        p0 = (float(p0[0]), float(p0[1]))
        p1 = (float(p1[0]), float(p1[1]))
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        L2 = dx * dx + dy * dy
        if L2 == 0:
            raise ValueError("degenerate line")
        breaks = []
        overlaps = []
        contact = {}
        v = self.vertices
        n = len(v)

        def proj(p):
            return ((p[0] - p0[0]) * dx + (p[1] - p0[1]) * dy) / L2

        for i in range(n):
            p, q = tuple(v[i]), tuple(v[(i + 1) % n])
            o1 = orient2d(p0, p1, p)
            o2 = orient2d(p0, p1, q)
            if o1 == 0 and o2 == 0:
                tp, tq = proj(p), proj(q)
                breaks += [tp, tq]
                contact[tp], contact[tq] = p, q
                overlaps.append((min(tp, tq), max(tp, tq)))
            elif o1 == 0:
                breaks.append(proj(p))
                contact[breaks[-1]] = p
            elif o2 == 0:
                breaks.append(proj(q))
                contact[breaks[-1]] = q
            elif o1 * o2 < 0:
                ex, ey = q[0] - p[0], q[1] - p[1]
                t = _cross(p[0] - p0[0], p[1] - p0[1], ex, ey) / _cross(dx, dy, ex, ey)
                u = _cross(p[0] - p0[0], p[1] - p0[1], dx, dy) / _cross(dx, dy, ex, ey)
                breaks.append(t)
                contact.setdefault(t, (p[0] + u * ex, p[1] + u * ey))
        breaks = sorted(set(breaks))
        states = []
        for t0, t1 in zip(breaks[:-1], breaks[1:]):
            if any(lo <= t0 and t1 <= hi for lo, hi in overlaps):
                states.append("boundary")
                continue
            tm = 0.5 * (t0 + t1)
            inside, on = self.locate_points([(p0[0] + tm * dx, p0[1] + tm * dy)])
            states.append("interior" if inside[0] else ("boundary" if on[0] else "exterior"))
        if with_points:
            return breaks, states, contact
        return breaks, states

    def ray_exit(self, origin, through) -> float:
        """Largest t >= 1 such that the segment from `origin` to X(t) stays in the polygon,
        where X(t) = origin + t (through - origin) and X(1) = through is assumed inside."""
        breaks, states = self.line_pieces(origin, through)
        t_end = 1.0
        for (t0, t1), st in zip(zip(breaks[:-1], breaks[1:]), states):
            if t1 <= 1.0:
                continue
            if st == "exterior" and t0 >= 1.0 - 1e-15:
                break
            t_end = t1
        return t_end

    def extend_to_diagonal(self, s) -> Segment:
        """Inclusion-maximal closed segment in the polygon that contains s."""
        s = s if isinstance(s, Segment) else Segment(*s)
        if not self._contains_rounded(s):
            raise NotADiagonalError("segment is not contained in the polygon")
        breaks, states, contact = self.line_pieces(s.a, s.b, with_points=True)
        lo, hi = 0.0, 1.0
        pieces = list(zip(breaks[:-1], breaks[1:], states))
        for t0, t1, st in pieces:
            if t1 <= hi:
                continue
            if t0 > hi + 1e-15 or st == "exterior":
                break
            hi = t1
        for t0, t1, st in reversed(pieces):
            if t0 >= lo:
                continue
            if t1 < lo - 1e-15 or st == "exterior":
                break
            lo = t0
        if lo == 0.0 and hi == 1.0:
            return s
        a = s.a if lo == 0.0 else tuple(map(float, contact.get(lo, s.point_at(lo))))
        b = s.b if hi == 1.0 else tuple(map(float, contact.get(hi, s.point_at(hi))))
        return Segment(a, b, s.closed)

    def _contains_rounded(self, s: Segment, rtol: float = 1e-12) -> bool:
        """contains_segment, forgiving endpoints that sit a rounding error outside the boundary
        (as computed chord endpoints do)."""
        if self.contains_segment(s):
            return True
        if s.length == 0 or self.boundary_distance(np.array([s.a, s.b])).max() > rtol * self.scale:
            return False
        return self.contains_segment(Segment(s.point_at(1e-9), s.point_at(1 - 1e-9)))

    def interior_chord(self, s) -> Segment:
        """The open diagonal (chord through the open interior) overlapping s."""
        s = s if isinstance(s, Segment) else Segment(*s)
        if s.length == 0:
            raise NotADiagonalError("degenerate segment")
        breaks, states = self.line_pieces(s.a, s.b)
        hits = [
            (t0, t1)
            for (t0, t1), st in zip(zip(breaks[:-1], breaks[1:]), states)
            if st == "interior" and min(t1, 1.0) - max(t0, 0.0) > 1e-12
        ]
        if not hits:
            raise NotADiagonalError("segment does not pass through the polygon interior")
        if len(hits) > 1:
            raise NotADiagonalError("segment meets several interior chords; pass one of them")
        t0, t1 = hits[0]
        return Segment(s.point_at(t0), s.point_at(t1))

    def _insert_point(self, ring: list, X) -> int:
        """Insert boundary point X into ring (list of tuples), returning its index."""
        X = (float(X[0]), float(X[1]))
        for i, p in enumerate(ring):
            if math.dist(p, X) <= 1e-12 * max(self.scale, 1.0):
                return i
        n = len(ring)
        best, best_d = None, math.inf
        for i in range(n):
            p, q = np.array(ring[i]), np.array(ring[(i + 1) % n])
            e = q - p
            t = float(np.clip(np.dot(np.array(X) - p, e) / np.dot(e, e), 0.0, 1.0))
            d = float(np.linalg.norm(p + t * e - np.array(X)))
            if d < best_d:
                best, best_d = i, d
        if best_d > 1e-9 * max(self.scale, 1.0):
            raise NotADiagonalError("chord endpoint is not on the boundary")
        ring.insert(best + 1, X)
        return best + 1

    def split_by_diagonal(self, ell) -> tuple["RootedPolygon", "RootedPolygon"]:
        """Cut along an interior diagonal into two rooted polygons sharing it as root."""
        chord = self.interior_chord(ell)
        ring = [tuple(p) for p in self.vertices]
        self._insert_point(ring, chord.a)
        self._insert_point(ring, chord.b)
        ia = self._insert_point(ring, chord.a)
        ib = self._insert_point(ring, chord.b)
        n = len(ring)

        def walk(i, j):
            out = [ring[i]]
            while i != j:
                i = (i + 1) % n
                out.append(ring[i])
            return out

        part1 = walk(ia, ib)  # closing edge b -> a
        part2 = walk(ib, ia)  # closing edge a -> b
        r1 = RootedPolygon(SimplePolygon(part1), Segment(ring[ib], ring[ia]))
        r2 = RootedPolygon(SimplePolygon(part2), Segment(ring[ia], ring[ib]))
        return r1, r2

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {"vertices": [[float(x), float(y)] for x, y in self.vertices]}

    @classmethod
    def from_json(cls, data: dict) -> "SimplePolygon":
        return cls(data["vertices"])


def sample_uniform(P: SimplePolygon, rng: np.random.Generator) -> tuple[float, float]:
    x, y = P.sample_points(1, rng)[0]
    return float(x), float(y)


@dataclass
class RootedPolygon:
    """A polygon with a designated root segment lying on one boundary edge.

    `ring` is the vertex cycle with the root endpoints inserted and rotated so
    that ring[0] -> ring[1] is the root, traversed CCW (region on its left).
    """

    polygon: SimplePolygon
    root: Segment
    ring: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = self.polygon
        ring = [tuple(p) for p in P.vertices]
        a, b = self.root.a, self.root.b
        if a == b:
            raise InvalidPolygonError("root must have positive length")
        P._insert_point(ring, a)
        P._insert_point(ring, b)
        ia = P._insert_point(ring, a)  # re-locate: the second insertion may shift indices
        ib = P._insert_point(ring, b)
        n = len(ring)
        if ib == (ia + 1) % n:
            pass
        elif ia == (ib + 1) % n:
            a, b = b, a
            ia, ib = ib, ia
        else:
            raise InvalidPolygonError("root must lie on a single boundary edge")
        ring = ring[ia:] + ring[:ia]
        self.root = Segment(ring[0], ring[1], self.root.closed)
        self.ring = np.array(ring, dtype=float)
        self.ring.setflags(write=False)

    @property
    def area(self) -> float:
        return self.polygon.area

    def signed_height(self, pts) -> np.ndarray:
        """Signed distance to the root's supporting line, positive on the polygon's side."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        a, b = np.array(self.root.a), np.array(self.root.b)
        e = b - a
        return _cross(e[0], e[1], pts[:, 0] - a[0], pts[:, 1] - a[1]) / float(np.hypot(*e))

    def to_json(self) -> dict:
        d = self.polygon.to_json()
        d["root"] = [list(self.root.a), list(self.root.b)]
        return d

    @classmethod
    def from_json(cls, data: dict) -> "RootedPolygon":
        return cls(SimplePolygon(data["vertices"]), Segment(*data["root"]))


def load_shape(path) -> SimplePolygon | RootedPolygon:
    data = json.loads(Path(path).read_text())
    if "root" in data:
        return RootedPolygon.from_json(data)
    return SimplePolygon.from_json(data)
