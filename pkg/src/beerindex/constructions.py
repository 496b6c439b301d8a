"""Extremal instances: the comb polygon, net-punctured boxes, the wedge partition
around a point, and the cone over a planar polygon."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _kernels
from .geom_core import orient2d
from .polygon import SimplePolygon


class NetConstructionError(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class GeneralPositionError(ValueError):
    pass


# -- comb ---------------------------------------------------------------------

def comb_vertices(n: int, delta: float) -> list[tuple[float, float]]:
    """Vertex cycle of the comb, listed from (0,0) up the edge x = 0 (clockwise)."""
    v = [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    for i in range(1, n):
        v += [((2 * i - 1) * delta, delta), (2 * i * delta, delta), (2.0 * i, 1.0), (2.0 * i + 1, 1.0)]
    return v


def comb_polygon(n: int, delta: float) -> SimplePolygon:
    """n thin triangular teeth (0,0),(2i,1),(2i+1,1) joined by a sliver of height delta."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if n > 1 and delta >= 1.0 / (2 * n):
        raise ValueError("delta must be below 1/(2n) for the teeth to stay separate")
    P = SimplePolygon(comb_vertices(n, delta)[::-1])
    assert len(P) == 4 * n - 1
    return P


def comb_tooth(i: int) -> np.ndarray:
    return np.array([(0.0, 0.0), (2.0 * i, 1.0), (2.0 * i + 1, 1.0)])


# -- punctured box --------------------------------------------------------------

def vc_bound(d: int) -> int:
    return math.comb(d + 2, d)


def net_size(d: int, r: int) -> int:
    return 2 * vc_bound(d) * r * math.ceil(math.log2(r))


@dataclass
class PuncturedBox:
    """The open unit box with a finite point set removed."""

    d: int
    r: int
    points: np.ndarray
    seed: int | None = None
    report: dict | None = None
    _grid: tuple | None = field(default=None, repr=False)

    @property
    def v(self) -> int:
        return vc_bound(self.d)

    @property
    def epsilon(self) -> float:
        return self.d**self.d / self.r

    @property
    def volume(self) -> float:
        return 1.0

    @property
    def grid(self):
        if self._grid is None:
            self._grid = _kernels.build_grid(self.points)
        return self._grid

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, self.d))

    def hull_hits(self, T: np.ndarray, naive: bool = False) -> np.ndarray:
        """True where the closed hull of the tuple contains a removed point."""
        T = np.ascontiguousarray(T, dtype=np.float64)
        if len(self.points) == 0:
            return np.zeros(len(T), dtype=bool)
        if naive:
            return _kernels.simplices_hit_naive(T, np.ascontiguousarray(self.points), _kernels.TOL)
        return _kernels.simplices_hit_grid(T, *self.grid, _kernels.TOL)

    def hulls_inside(self, T: np.ndarray, k: int) -> np.ndarray:
        return ~self.hull_hits(T[:, : k + 1])

    def to_json(self) -> dict:
        return {"d": self.d, "r": self.r, "seed": self.seed, "points": self.points.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PuncturedBox":
        pts = np.asarray(data["points"], dtype=float).reshape(-1, data["d"])
        return cls(data["d"], data["r"], pts, data.get("seed"))


def _random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def sample_ellipsoid(d: int, volume: float, rng: np.random.Generator, max_ratio: float = 8.0):
    """Random ellipsoid of the given volume inside (0,1)^d: returns (center, Q, semi_axes).

    Axes are log-uniform in [1, max_ratio] before rescaling; the center is drawn
    only from positions where the ellipsoid fits, so nothing protrudes.
    """
    unit_ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    while True:
        Q = _random_rotation(d, rng)
        rel = np.exp(rng.random(d) * math.log(max_ratio))
        axes = rel * (volume / (unit_ball * np.prod(rel))) ** (1.0 / d)
        half = np.sqrt(((Q * axes) ** 2).sum(axis=1))  # bounding box half-widths
        if np.all(half < 0.5):
            center = half + rng.random(d) * (1 - 2 * half)
            return center, Q, axes


def ellipsoid_contains(center, Q, axes, pts) -> np.ndarray:
    y = (np.asarray(pts) - center) @ Q / axes
    return np.einsum("ij,ij->i", y, y) <= 1.0


def verify_net(B: PuncturedBox, trials: int, rng: np.random.Generator, max_ratio: float = 8.0) -> dict:
    """Count random ellipsoids of volume 1/r that miss every removed point."""
    stabbed = 0
    for _ in range(trials):
        c, Q, ax = sample_ellipsoid(B.d, 1.0 / B.r, rng, max_ratio)
        if len(B.points) and ellipsoid_contains(c, Q, ax, B.points).any():
            stabbed += 1
    return {"trials": trials, "stabbed": stabbed, "violations": trials - stabbed, "max_ratio": max_ratio}


def punctured_box_net(d: int, r: int, seed: int, max_retries: int = 5, trials: int = 1000) -> PuncturedBox:
    if d < 2 or r < 2:
        raise ValueError("need d >= 2 and r >= 2")
    n = net_size(d, r)
    report = None
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(attempt, 0)))
        pts = rng.random((n, d))
        while np.any(pts == 0.0):
            bad = np.any(pts == 0.0, axis=1)
            pts[bad] = rng.random((int(bad.sum()), d))
        B = PuncturedBox(d, r, pts, seed)
        vrng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(attempt, 1)))
        report = verify_net(B, trials, vrng)
        report["attempt"] = attempt
        if report["violations"] == 0:
            B.report = report
            return B
    raise NetConstructionError(f"no verified net after {max_retries} attempts", report)


# -- wedge partition --------------------------------------------------------------

_BOX2 = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))]


def _side(a, b, p):
    """Exact sign of the point p relative to the oriented line ab."""
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _side_float(a, b, p) -> float:
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


def _to_float(poly) -> list[tuple[float, float]]:
    return [(float(x), float(y)) for x, y in poly]


def _clip(poly, a, b, keep_sign):
    """Sutherland-Hodgman clip of a convex Fraction polygon to the side keep_sign of line ab."""
    out = []
    n = len(poly)
    for i in range(n):
        P, Q = poly[i], poly[(i + 1) % n]
        sp, sq = _side(a, b, P) * keep_sign, _side(a, b, Q) * keep_sign
        if sp >= 0:
            out.append(P)
        if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
            t = sp / (sp - sq)
            out.append((P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    # drop repeats
    clean = []
    for p in out:
        if not clean or clean[-1] != p:
            clean.append(p)
    if len(clean) > 1 and clean[0] == clean[-1]:
        clean.pop()
    return clean


def _area(poly) -> Fraction:
    n = len(poly)
    s = sum(poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1] for i in range(n))
    return abs(s) / 2


@dataclass
class PartitionCell:
    vertices: list  # exact (Fraction) vertex cycle for d=2
    area: float
    exact_area: Fraction | None = None

    def is_convex(self) -> bool:
        V = [(float(x), float(y)) for x, y in self.vertices]
        n = len(V)
        signs = {orient2d(V[i - 1], V[i], V[(i + 1) % n]) for i in range(n)}
        return not ({1, -1} <= signs)


def hyperplane_partition(A_pts, N, rng: np.random.Generator | None = None, samples: int = 200000) -> list[PartitionCell]:
    """Cut the unit box by the hyperplanes through A_pts and each B in N into 2|N| convex cells.

    Follows the inductive refinement: the k-th hyperplane meets exactly two existing
    cells (one on each side of aff(A_pts)); the part of each on the far side from the
    origin becomes a new cell. Exact rational clipping in the plane; for d >= 3 the
    cells are identified by Monte Carlo and their volumes are estimates.
    """
    N = np.asarray(N.points if isinstance(N, PuncturedBox) else N, dtype=float)
    A = np.atleast_2d(np.asarray(A_pts, dtype=float))
    d = N.shape[1]
    if A.shape != (d - 1, d):
        raise ValueError(f"need {d - 1} points in R^{d}")
    if d == 2:
        return _partition_2d(A[0], N)
    return _partition_mc(A, N, rng or np.random.default_rng(0), samples)


def _partition_2d(A1, N) -> list[PartitionCell]:
    a = (Fraction(float(A1[0])), Fraction(float(A1[1])))
    Bs = [(Fraction(float(x)), Fraction(float(y))) for x, y in N]
    origin = (Fraction(0), Fraction(0))
    for i, B in enumerate(Bs):
        if B == a:
            raise GeneralPositionError("A1 coincides with a removed point")
        if _side(a, B, origin) == 0:
            raise GeneralPositionError("line through A1 and a removed point passes through the origin")
    # collinear triples: float screen over all pairs, exact test on the near-zero ones
    D = np.asarray(N, dtype=float) - np.asarray(A1, dtype=float)
    cross = np.abs(D[:, None, 0] * D[None, :, 1] - D[:, None, 1] * D[None, :, 0])
    np.fill_diagonal(cross, np.inf)
    for i, j in zip(*np.nonzero(cross <= 1e-9)):
        if _side(a, Bs[i], Bs[j]) == 0:
            raise GeneralPositionError("A1 is collinear with two removed points")
    cells: list[list] = []
    fcells: list[list] = []
    fa = (float(a[0]), float(a[1]))
    for k, B in enumerate(Bs):
        keep = 1 if _side(a, B, origin) > 0 else -1  # origin side is the minus side
        if k == 0:
            cells = [_clip(_BOX2, a, B, keep), _clip(_BOX2, a, B, -keep)]
            fcells = [_to_float(c) for c in cells]
            continue
        hit = []
        fb = (float(B[0]), float(B[1]))
        for ci, cell in enumerate(cells):
            # float signs settle almost every cell; anything close to the line is decided exactly
            s = [_side_float(fa, fb, p) for p in fcells[ci] if p != fa]  # the apex is on every line
            if any(abs(v) <= 1e-9 for v in s):
                s = [_side(a, B, p) for p in cell]
            if any(v > 0 for v in s) and any(v < 0 for v in s):
                hit.append(ci)
        if len(hit) != 2:
            raise GeneralPositionError(f"hyperplane {k} meets {len(hit)} cells instead of 2")
        for ci in hit:
            cell = cells[ci]
            cells[ci] = _clip(cell, a, B, keep)
            cells.append(_clip(cell, a, B, -keep))
            fcells[ci] = _to_float(cells[ci])
            fcells.append(_to_float(cells[-1]))
    out = []
    for c in cells:
        ar = _area(c)
        out.append(PartitionCell(c, float(ar), ar))
    return out


def _partition_mc(A, N, rng, samples) -> list[PartitionCell]:
    d = N.shape[1]
    X = rng.random((samples, d))
    # sign of each sample against each hyperplane aff(A ∪ {B})
    signs = np.empty((samples, len(N)), dtype=np.int8)
    for k, B in enumerate(N):
        M = np.vstack([A, B])
        normal = np.linalg.svd(M[1:] - M[0])[2][-1]
        off = normal @ M[0]
        if abs(off) < 1e-12:
            raise GeneralPositionError("hyperplane passes through the origin")
        s = np.sign(X @ normal - off)
        signs[:, k] = np.where(np.sign(-off) == s, -1, 1)  # -1 on the origin's side
    keys, counts = np.unique(signs, axis=0, return_counts=True)
    return [PartitionCell([tuple(k)], float(c) / samples) for k, c in zip(keys, counts)]


def jensen_check(cells: list[PartitionCell]) -> dict:
    n2 = len(cells)
    total = sum(c.exact_area for c in cells) if all(c.exact_area is not None for c in cells) else sum(c.area for c in cells)
    sq = sum(c.area**2 for c in cells)
    return {"cells": n2, "area_sum": float(total), "sum_sq": sq, "bound": 1.0 / n2, "ok": sq >= 1.0 / n2 * (1 - 1e-12)}


# -- cone -----------------------------------------------------------------------

@dataclass
class ConeSet:
    """{(t x, t y, t) : t in [0,1], (x, y) in base}, a cone in R^3 with apex at the origin."""

    base: SimplePolygon
    d: int = 3

    @property
    def volume(self) -> float:
        return self.base.area / 3.0

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        z = pts[:, 2]
        out = np.all(pts == 0.0, axis=1)
        ok = (z > 0) & (z <= 1)
        if ok.any():
            proj = pts[ok, :2] / z[ok, None]
            out[np.nonzero(ok)[0]] |= self.base.contains_points(proj)
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        t = rng.random(n) ** (1.0 / 3.0)
        xy = self.base.sample_points(n, rng)
        return np.c_[t[:, None] * xy, t]

    def hulls_inside(self, T: np.ndarray, k: int) -> np.ndarray:
        """Hull of the first k+1 points in the cone, via their central projection to z = 1.

        The cone is a union of rays from the apex, so a hull lies in it iff the
        projected hull lies in the base; for a simply connected base that means all
        pairwise projected segments are inside.
        """
        T = np.asarray(T, dtype=float)[:, : k + 1]
        proj = T[..., :2] / T[..., 2:3]
        ok = np.ones(len(T), dtype=bool)
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                idx = np.nonzero(ok)[0]
                ok[idx] = self.base.segments_inside(proj[idx, i], proj[idx, j])
        return ok


def cone_lift(base: SimplePolygon) -> ConeSet:
    return ConeSet(base)


def load_box(path) -> PuncturedBox:
    return PuncturedBox.from_json(json.loads(Path(path).read_text()))
