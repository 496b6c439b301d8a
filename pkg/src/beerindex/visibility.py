"""Weak visibility from a root segment and the level/body decomposition of a rooted polygon."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, Polygon
from shapely.ops import polygonize, unary_union

from .geom_core import Segment, orient2d
from .polygon import InvalidPolygonError, RootedPolygon, SimplePolygon

SLIVER_REL_AREA = 1e-12
_VIS_MIN_LEN = 1e-12  # relative length below which a visible root interval is treated as empty


class StructuralViolationError(RuntimeError):
    """The decomposition disagrees with the structure it is supposed to have."""


class LevelTruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Frame:
    """Isometry sending a root to the x-axis with the body on the side y >= 0."""

    origin: np.ndarray
    u: np.ndarray

    @classmethod
    def from_root(cls, root: Segment) -> "Frame":
        a, b = np.array(root.a), np.array(root.b)
        e = b - a
        return cls(a, e / np.hypot(*e))

    @property
    def n(self) -> np.ndarray:
        return np.array([-self.u[1], self.u[0]])

    def to_local(self, pts) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - self.origin
        return np.stack([d @ self.u, d @ self.n], axis=-1)

    def to_world(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        return self.origin + p[..., :1] * self.u + p[..., 1:2] * self.n


def root_visibility(R: RootedPolygon, pts) -> tuple[np.ndarray, np.ndarray]:
    """For each point, the sub-interval [lo, hi] (arc length from root.a) of the root it sees.

    A root point F is visible from X when the closed segment XF lies in R; every
    boundary edge met transversally by the sight lines blocks an open interval,
    obtained by projecting the edge centrally from X onto the root line. Points
    that see no positive-length part of the root get NaN.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    fr = Frame.from_root(R.root)
    L = R.root.length
    loc = fr.to_local(pts)
    ring = fr.to_local(R.ring)
    m = len(pts)
    x, y = loc[:, 0], loc[:, 1]
    P = ring[1:]  # skip the root edge ring[0] -> ring[1]
    Q = np.vstack([ring[2:], ring[:1]])
    px, py = P[:, 0][None, :], P[:, 1][None, :]
    qx, qy = Q[:, 0][None, :], Q[:, 1][None, :]
    X, Y = x[:, None], y[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        # clip each edge to the slab 0 <= y <= Y (sight lines live there); an end
        # clipped at height Y projects to infinity on the side it lies on
        dy = qy - py
        s0 = (0.0 - py) / dy
        s1 = (Y - py) / dy
        rising, falling = dy > 0, dy < 0
        t_lo = np.where(rising, s0, np.where(falling, s1, 0.0))
        t_hi = np.where(rising, s1, np.where(falling, s0, 1.0))
        top_lo = falling & (t_lo > 0)
        top_hi = rising & (t_hi < 1)
        t_lo = np.maximum(t_lo, 0.0)
        t_hi = np.minimum(t_hi, 1.0)
        flat_out = (dy == 0) & ((py < 0) | (py >= Y))
        t_hi = np.where(flat_out, -1.0, t_hi)
        valid = t_hi > t_lo
        c0x, c0y = px + t_lo * (qx - px), py + t_lo * dy
        c1x, c1y = px + t_hi * (qx - px), py + t_hi * dy
        j0 = np.where(top_lo, np.sign(c0x - X) * np.inf, X + (c0x - X) * Y / (Y - c0y))
        j1 = np.where(top_hi, np.sign(c1x - X) * np.inf, X + (c1x - X) * Y / (Y - c1y))
    # edges through X itself do not block (X on the boundary)
    through = (np.abs((qx - px) * (Y - py) - dy * (X - px)) <= 1e-14 * (np.abs(qx - px) + np.abs(dy)) * (np.abs(X - px) + np.abs(Y - py) + 1.0)) & (
        (X >= np.minimum(px, qx)) & (X <= np.maximum(px, qx)) & (Y >= np.minimum(py, qy)) & (Y <= np.maximum(py, qy))
    )
    # edges lying on the root line never block
    on_line = (py == 0) & (qy == 0)
    valid &= ~through & ~on_line & ~np.isnan(j0) & ~np.isnan(j1)
    blo = np.where(valid, np.minimum(j0, j1), np.inf)
    bhi = np.where(valid, np.maximum(j0, j1), -np.inf)
    blo = np.clip(blo, 0.0, L)
    bhi = np.clip(bhi, 0.0, L)
    empty = ~(bhi > blo)
    blo = np.where(empty, np.inf, blo)
    bhi = np.where(empty, -np.inf, bhi)

    order = np.argsort(blo, axis=1)
    blo = np.take_along_axis(blo, order, axis=1)
    bhi = np.take_along_axis(bhi, order, axis=1)
    reach = np.maximum.accumulate(np.concatenate([np.zeros((m, 1)), bhi], axis=1), axis=1)
    starts = np.concatenate([blo, np.full((m, 1), L)], axis=1)
    starts = np.minimum(starts, L)
    gap = starts - reach  # candidate visible gaps [reach_j, starts_j]
    k = np.argmax(gap, axis=1)
    idx = np.arange(m)
    lo = reach[idx, k]
    hi = starts[idx, k]
    ok = (gap[idx, k] > _VIS_MIN_LEN * L) & (y > 0)
    lo = np.where(ok, lo, np.nan)
    hi = np.where(ok, hi, np.nan)
    return lo, hi


def sees_root(R: RootedPolygon, pts) -> np.ndarray:
    lo, _ = root_visibility(R, pts)
    return np.isfinite(lo)


def _reflex_ring_indices(ring: np.ndarray) -> list[int]:
    n = len(ring)
    return [i for i in range(n) if orient2d(ring[i - 1], ring[i], ring[(i + 1) % n]) < 0]


def _candidate_windows(R: RootedPolygon) -> list[tuple[tuple, tuple]]:
    """Chords from a reflex vertex along a line of sight grazing it from the root."""
    P = R.polygon
    ring = R.ring
    n = len(ring)
    a, b = tuple(ring[0]), tuple(ring[1])
    reflex = _reflex_ring_indices(ring)
    chords = []

    def add(X, v):
        X, v = tuple(X), tuple(v)
        if X == v:
            return
        if not P.contains_segment(Segment(X, v)):
            return
        t = P.ray_exit(X, v)
        if t <= 1.0 + 1e-12:
            return
        end = (X[0] + t * (v[0] - X[0]), X[1] + t * (v[1] - X[1]))
        chords.append((v, end))

    # the root line continued past a reflex root endpoint
    for i, (src, v) in ((0, (b, a)), (1, (a, b))):
        if i in reflex:
            add(src, v)
    for vi in reflex:
        v = tuple(ring[vi])
        if vi in (0, 1):
            continue
        add(a, v)
        add(b, v)
        # lines through v and another reflex vertex u that cross the root
        for ui in reflex:
            if ui == vi or ui in (0, 1):
                continue
            u = tuple(ring[ui])
            o_a, o_b = orient2d(u, v, a), orient2d(u, v, b)
            if o_a * o_b > 0 or (o_a == 0 and o_b == 0):
                continue
            # intersection of line uv with the root line
            ux, uy = u
            dx, dy = v[0] - ux, v[1] - uy
            ex, ey = b[0] - a[0], b[1] - a[1]
            den = dx * ey - dy * ex
            if den == 0:
                continue
            s = ((a[0] - ux) * ey - (a[1] - uy) * ex) / den
            if s >= 0:  # root must lie behind u as seen from v
                continue
            X = (ux + s * dx, uy + s * dy)
            add(X, v)
    return chords


def _ring_poly(coords) -> SimplePolygon:
    return SimplePolygon(coords, collinear_tol=1e-10)


def _largest(geom):
    if isinstance(geom, Polygon):
        return geom
    polys = list(getattr(geom, "geoms", []))
    polys = [g for g in polys if isinstance(g, Polygon)]
    return max(polys, key=lambda g: g.area)


def _window_of(pocket: Polygon, P: SimplePolygon) -> Segment:
    """The part of the pocket boundary interior to P, as a single segment."""
    coords = np.asarray(pocket.exterior.coords)[:-1]
    n = len(coords)
    mids = 0.5 * (coords + np.roll(coords, -1, axis=0))
    tol = 1e-9 * max(P.scale, 1.0)
    interior = P.boundary_distance(mids) > tol
    if not interior.any():
        raise StructuralViolationError("pocket has no window")
    # rotate so the chain of interior edges is contiguous
    start = next(i for i in range(n) if interior[i] and not interior[i - 1]) if not interior.all() else 0
    run = []
    i = start
    while interior[i % n] and len(run) < n:
        run.append(i % n)
        i += 1
    if int(interior.sum()) != len(run):
        raise StructuralViolationError("pocket attaches along more than one window")
    A = coords[run[0]]
    B = coords[(run[-1] + 1) % n]
    return Segment(tuple(A), tuple(B))


def weak_visibility_region(R: RootedPolygon) -> tuple[SimplePolygon, list[tuple[SimplePolygon, Segment]]]:
    """The part of R that sees its root, and the pockets hanging off it (each with its window)."""
    P = R.polygon
    chords = _candidate_windows(R)
    if not chords:
        return P, []
    scale = max(P.scale, 1.0)
    ring = [tuple(p) for p in R.ring] + [tuple(R.ring[0])]
    lines = [LineString(ring)]
    for v, end in chords:
        v, end = np.array(v), np.array(end)
        d = end - v
        lines.append(LineString([v, end + d / np.hypot(*d) * 1e-9 * scale]))
    noded = unary_union(lines)
    base = Polygon(ring)
    faces = [f for f in polygonize(noded) if f.area > 0 and base.buffer(1e-9 * scale).contains(f)]
    reps = np.array([f.representative_point().coords[0] for f in faces])
    visible = sees_root(R, reps)
    tiny = np.array([f.area < SLIVER_REL_AREA * P.area for f in faces])
    hidden = [f for f, vis, t in zip(faces, visible, tiny) if not vis and not t]
    if not hidden:
        return P, []
    pockets_geom = unary_union(hidden)
    pocket_list = [pockets_geom] if isinstance(pockets_geom, Polygon) else list(pockets_geom.geoms)
    region_geom = base.difference(pockets_geom)
    region = _ring_poly(np.asarray(_largest(region_geom).exterior.coords)[:-1])
    out = []
    for g in pocket_list:
        if g.area < SLIVER_REL_AREA * P.area:
            continue
        window = _window_of(g, P)
        out.append((_ring_poly(np.asarray(g.exterior.coords)[:-1]), window))
    return region, out


@dataclass
class Body:
    region: SimplePolygon
    root: Segment
    level: int
    parent: int | None
    rooted: RootedPolygon = field(repr=False)
    index: int = 0

    @property
    def frame(self) -> Frame:
        return Frame.from_root(self.rooted.root)


@dataclass
class BodyTree:
    bodies: list[Body]
    source: RootedPolygon
    truncated: bool = False

    @property
    def root_body(self) -> Body:
        return self.bodies[0]

    @property
    def depth(self) -> int:
        return max(b.level for b in self.bodies)

    def children(self, i: int) -> list[Body]:
        return [b for b in self.bodies if b.parent == i]

    def locate(self, pts) -> np.ndarray:
        """Index of a body containing each point (closed; lowest level wins), -1 if none."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.full(len(pts), -1, dtype=np.int64)
        for b in sorted(self.bodies, key=lambda b: -b.level):
            out[b.region.contains_points(pts)] = b.index
        return out

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "truncated": self.truncated,
            "bodies": [
                {
                    "vertices": b.region.to_json()["vertices"],
                    "root": [list(b.rooted.root.a), list(b.rooted.root.b)],
                    "level": b.level,
                    "parent": b.parent,
                }
                for b in self.bodies
            ],
        }


def level_decomposition(R: RootedPolygon, max_levels: int = 64, *, strict: bool = False) -> BodyTree:
    """Peel R into bodies: level-1 body sees the root, each pocket recurses one level deeper."""
    bodies: list[Body] = []
    truncated = False
    queue = [(R, 1, None)]
    while queue:
        rp, level, parent = queue.pop(0)
        if level > max_levels:
            truncated = True
            continue
        region, pockets = weak_visibility_region(rp)
        body_rp = RootedPolygon(region, rp.root)
        idx = len(bodies)
        bodies.append(Body(region, body_rp.root, level, parent, body_rp, idx))
        for pocket, window in pockets:
            try:
                child = RootedPolygon(pocket, window)
            except InvalidPolygonError as exc:
                raise StructuralViolationError(f"pocket window is not a boundary edge: {exc}") from exc
            queue.append((child, level + 1, idx))
    if truncated and strict:
        raise LevelTruncationError(f"more than {max_levels} levels")
    return BodyTree(bodies, R, truncated)


@dataclass
class BaseSegmentInfo:
    body: Body
    segment: Segment
    level: int
    pieces: list[tuple[int, float, float]]  # (body index, t0, t1) along the query segment


def _body_intervals(region: SimplePolygon, s: Segment) -> list[tuple[float, float]]:
    breaks, states = region.line_pieces(s.a, s.b)
    out: list[list[float]] = []
    for (t0, t1), st in zip(zip(breaks[:-1], breaks[1:]), states):
        if st == "exterior":
            continue
        t0, t1 = max(t0, 0.0), min(t1, 1.0)
        if t1 - t0 <= 1e-12:
            continue
        if out and t0 <= out[-1][1] + 1e-12:
            out[-1][1] = max(out[-1][1], t1)
        else:
            out.append([t0, t1])
    return [tuple(v) for v in out]


def base_segment(tree: BodyTree, s: Segment) -> BaseSegmentInfo:
    """Minimal level met by s, its body and s restricted to it; checks the two-level shape."""
    if not tree.source.polygon.contains_segment(s):
        raise ValueError("segment is not contained in the polygon")
    if s.length == 0:
        i = int(tree.locate([s.a])[0])
        b = tree.bodies[i]
        return BaseSegmentInfo(b, s, b.level, [(i, 0.0, 1.0)])
    pieces = []
    for b in tree.bodies:
        for t0, t1 in _body_intervals(b.region, s):
            pieces.append((b.index, t0, t1))
    if not pieces:
        raise StructuralViolationError("segment meets no body")
    k = min(tree.bodies[i].level for i, _, _ in pieces)
    base = [p for p in pieces if tree.bodies[p[0]].level == k]
    if len({p[0] for p in base}) != 1:
        raise StructuralViolationError("minimal level is met in more than one body")
    bi = base[0][0]
    t0, t1 = min(p[1] for p in base), max(p[2] for p in base)
    if len(base) > 1 and any(b2[1] > b1[2] + 1e-9 for b1, b2 in zip(base[:-1], base[1:])):
        raise StructuralViolationError("base level piece is not connected")
    upper = [p for p in pieces if tree.bodies[p[0]].level != k]
    if any(tree.bodies[i].level != k + 1 for i, _, _ in upper):
        raise StructuralViolationError("segment meets more than two consecutive levels")
    if any(tree.bodies[i].parent != bi for i, _, _ in upper):
        raise StructuralViolationError("upper-level piece not in a child of the base body")
    if len(upper) > 2:
        raise StructuralViolationError("more than two upper-level pieces")
    body = tree.bodies[bi]
    a = s.a if t0 <= 1e-12 else s.point_at(t0)
    b = s.b if t1 >= 1 - 1e-12 else s.point_at(t1)
    return BaseSegmentInfo(body, Segment(a, b), k, pieces)


def _grazing_root_point(b: Body, x):
    """A root point seen from x by a closed sight line that touches the boundary, if any.

    Candidates are the root endpoints and the central projections of the body's
    vertices from x onto the root."""
    fr = b.frame
    L = b.rooted.root.length
    loc = fr.to_local([x])[0]
    cands = [0.0, L]
    for v in fr.to_local(b.region.vertices):
        if v[1] < loc[1]:
            t = loc[0] + (v[0] - loc[0]) * loc[1] / (loc[1] - v[1])
            if 0.0 <= t <= L:
                cands.append(t)
    for t in cands:
        F = fr.to_world(np.array([t, 0.0]))
        if b.region.contains_segment(Segment(tuple(x), tuple(F))):
            return F
    return None


def _step_across(P: SimplePolygon, parent: Body, b: Body, x, F):
    """Nudge the root point F slightly across the window into the parent body, so the
    next link starts from an interior point instead of grazing a reflex vertex."""
    eta = 1e-7 * max(P.scale, 1.0)
    for _ in range(20):
        G = F - eta * b.frame.n
        if parent.region.contains_point(tuple(G)) and P.contains_segment(Segment(tuple(x), tuple(G))):
            return G
        eta *= 0.25
    return F


def link_path(tree: BodyTree, x) -> list[tuple[float, float]]:
    """A polygonal path from x to the source root with one link per level, built by
    stepping through the roots of the bodies containing x and its ancestors."""
    x = np.asarray(x, dtype=float)
    i = int(tree.locate([x])[0])
    if i < 0:
        raise ValueError("point is not in the polygon")
    path = [tuple(x)]
    cur = x
    b = tree.bodies[i]
    while True:
        lo, hi = root_visibility(b.rooted, [cur])
        if not np.isfinite(lo[0]):
            fr = b.frame
            loc = fr.to_local([cur])[0]
            if abs(loc[1]) <= 1e-9 * max(b.region.scale, 1.0):
                nxt = cur  # already on the root
            else:
                # points on a window typically see the parent root in a single point only
                nxt = _grazing_root_point(b, cur)
                if nxt is None:
                    raise StructuralViolationError("body point does not see its root")
        else:
            t = 0.5 * (lo[0] + hi[0])
            nxt = b.frame.to_world(np.array([t, 0.0]))
            if b.parent is not None:
                nxt = _step_across(tree.source.polygon, tree.bodies[b.parent], b, cur, nxt)
        if not np.array_equal(nxt, cur):
            path.append(tuple(nxt))
        cur = nxt
        if b.parent is None:
            break
        b = tree.bodies[b.parent]
    return path
