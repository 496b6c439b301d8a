"""Trapezoid covers of everything a point can see in a rooted polygon, and the crossing-region check."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom_core import Segment
from .polygon import RootedPolygon, SimplePolygon
from .visibility import BodyTree, Frame, level_decomposition, root_visibility

GAMMA_OPT = 0.5186


def cover_coefficient(gamma):
    """Total cover area divided by K, as a function of the shrink factor gamma."""
    g = np.asarray(gamma, dtype=float)
    return 6 / g**2 + 3 / ((1 - g) ** 2 * g**2) + 4 / (1 - g) ** 2 - 1


def coefficient_minimum(n: int = 200001) -> tuple[float, float]:
    g = np.linspace(1e-3, 1 - 1e-3, n)
    c = cover_coefficient(g)
    i = int(np.argmin(c))
    return float(g[i]), float(c[i])


def _quad_area(V: np.ndarray) -> np.ndarray:
    """Shoelace area of (..., 4, 2) vertex arrays."""
    x, y = V[..., 0], V[..., 1]
    return 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1))


def _in_convex_quads(V: np.ndarray, P: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Closed membership of P[i] in the convex quad V[i] (either orientation, degenerate allowed)."""
    E = np.roll(V, -1, axis=1) - V
    W = P[:, None, :] - V
    cr = E[..., 0] * W[..., 1] - E[..., 1] * W[..., 0]
    scale = np.linalg.norm(E, axis=-1) * (np.linalg.norm(W, axis=-1) + np.max(np.abs(E), axis=(1, 2))[:, None])
    tol = rtol * scale
    nonzero = np.linalg.norm(E, axis=-1) > 0
    ccw = np.all((cr >= -tol) | ~nonzero, axis=1)
    cw = np.all((cr <= tol) | ~nonzero, axis=1)
    return ccw | cw


@dataclass(frozen=True)
class Trapezoid:
    vertices: np.ndarray  # (4, 2); repeated vertices allowed for degenerate shapes
    kind: str  # "T1", "T2", "T3" or "root"

    @property
    def area(self) -> float:
        return float(_quad_area(self.vertices))

    def contains(self, P, rtol: float = 1e-9) -> bool:
        return bool(_in_convex_quads(self.vertices[None], np.asarray(P, float)[None], rtol)[0])


@dataclass
class CoverContext:
    K: float
    tree: BodyTree
    gamma: float = GAMMA_OPT

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.K > 0:
            raise ValueError("K must be positive")

    @classmethod
    def for_polygon(cls, R: RootedPolygon, K: float | None = None, gamma: float = GAMMA_OPT, max_levels: int = 64):
        return cls(R.area if K is None else K, level_decomposition(R, max_levels), gamma)


@dataclass
class CoverBatch:
    """Cover trapezoids for many points at once; absent pieces have valid=False."""

    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    valid: np.ndarray  # (m, 3)
    on_root: np.ndarray  # (m,) points lying on their body's root
    root_quads: np.ndarray  # (m, 4, 2) degenerate quads along the root

    def areas(self) -> np.ndarray:
        a = np.stack([_quad_area(self.T1), _quad_area(self.T2), _quad_area(self.T3)], axis=1)
        return np.where(self.valid, a, 0.0)

    def contains(self, B: np.ndarray) -> np.ndarray:
        hit = np.zeros(len(B), dtype=bool)
        for j, T in enumerate((self.T1, self.T2, self.T3)):
            hit |= self.valid[:, j] & _in_convex_quads(T, B)
        hit |= self.on_root & _in_convex_quads(self.root_quads, B)
        return hit


def cover_batch(A, ctx: CoverContext) -> CoverBatch:
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    m = len(A)
    T1 = np.zeros((m, 4, 2))
    T2 = np.zeros((m, 4, 2))
    T3 = np.zeros((m, 4, 2))
    valid = np.zeros((m, 3), dtype=bool)
    on_root = np.zeros(m, dtype=bool)
    rootq = np.zeros((m, 4, 2))
    tree = ctx.tree
    where = tree.locate(A)
    if np.any(where < 0):
        raise ValueError("cover requested for a point outside the polygon")
    g, K = ctx.gamma, ctx.K
    for bi in np.unique(where):
        idx = np.nonzero(where == bi)[0]
        body = tree.bodies[bi]
        fr = body.frame
        loc = fr.to_local(A[idx])
        d = loc[:, 1]
        L = body.rooted.root.length
        scale = max(body.region.scale, 1.0)
        lo, hi = root_visibility(body.rooted, A[idx])
        flat = d <= 1e-12 * scale
        a_pt, b_pt = np.array(body.rooted.root.a), np.array(body.rooted.root.b)
        rootq[idx] = np.array([a_pt, b_pt, b_pt, a_pt])
        on_root[idx] = flat
        ok = np.isfinite(lo) & ~flat
        if np.any(~ok & ~flat):
            raise RuntimeError("point in a body does not see the body root")
        j = idx[ok]
        a, dd, lo_, hi_ = loc[ok], d[ok], lo[ok], hi[ok]
        ax = a[:, 0]
        Hx = 0.5 * (lo_ + hi_)
        w1, w2 = 4 * K / dd, 2 * K / dd
        Tl = np.stack(
            [np.c_[Hx - w2, 0 * Hx], np.c_[Hx + w2, 0 * Hx], np.c_[ax + w1, dd], np.c_[ax - w1, dd]], axis=1
        )
        Tl = a[:, None, :] + (Tl - a[:, None, :]) / g
        T1[j] = fr.to_world(Tl)
        valid[j, 0] = True
        # triangle A C D dilated by 2/(1-gamma), minus the triangle itself
        k = 2 / (1 - g)
        C = np.c_[lo_, 0 * lo_]
        D = np.c_[hi_, 0 * hi_]
        T3l = np.stack([C, D, a + k * (D - a), a + k * (C - a)], axis=1)
        T3[j] = fr.to_world(T3l)
        valid[j, 2] = True
        if body.parent is not None:
            parent = tree.bodies[body.parent]
            pf = parent.frame
            aw = A[j]
            pa = pf.to_local(aw)
            dp = pa[:, 1]
            # line q supports this body's root; expressed in the parent frame
            q0 = pf.to_local(np.array(body.rooted.root.a))
            q1 = pf.to_local(np.array(body.rooted.root.b))
            qd = q1 - q0
            if abs(qd[1]) > 1e-12 * np.hypot(*qd):
                good = dp > 1e-12 * scale
                # O = q at height dp, Q0 = q at height 0
                Ox = q0[0] + (dp - q0[1]) * qd[0] / qd[1]
                Qx = q0[0] + (0.0 - q0[1]) * qd[0] / qd[1]
                # r'-parallel direction pointing away from A across q
                u = np.where(pa[:, 0] < Ox, 1.0, -1.0)
                L1 = 4 * K / ((1 - g) ** 2 * np.where(good, dp, 1.0))
                L2 = L1 / 2
                O = np.c_[Ox, dp]
                T2l = np.stack([O, np.c_[Ox + u * L1, dp], np.c_[Qx + u * L2, 0 * dp], np.c_[Qx + 0 * dp, 0 * dp]], axis=1)
                T2l = O[:, None, :] + (T2l - O[:, None, :]) / g
                T2[j] = pf.to_world(T2l)
                valid[j, 1] = good
    return CoverBatch(T1, T2, T3, valid, on_root, rootq)


def trapezoid_cover(A, ctx: CoverContext) -> list[Trapezoid]:
    cb = cover_batch([A], ctx)
    if cb.on_root[0]:
        return [Trapezoid(cb.root_quads[0], "root")]
    out = []
    for j, (name, T) in enumerate((("T1", cb.T1), ("T2", cb.T2), ("T3", cb.T3))):
        if cb.valid[0, j]:
            out.append(Trapezoid(T[0], name))
    return out


@dataclass
class CoverReport:
    gamma: float
    K: float
    pairs: int
    checked: int
    violations: int
    max_cover_area_ratio: float
    examples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "K": self.K,
            "pairs": self.pairs,
            "checked": self.checked,
            "violations": self.violations,
            "max_cover_area_ratio": self.max_cover_area_ratio,
        }


def verify_cover(R: RootedPolygon, ctx: CoverContext, pairs: int, rng: np.random.Generator,
                 batch: int = 4096, max_draws: int | None = None) -> CoverReport:
    """Test B in T(A) or A in T(B) on `pairs` mutually visible random pairs."""
    P = R.polygon
    checked = violations = 0
    worst = 0.0
    draws = 0
    limit = max_draws if max_draws is not None else 200 * pairs + 10 * batch
    bad = []
    while checked < pairs and draws < limit:
        A = P.sample_points(batch, rng)
        B = P.sample_points(batch, rng)
        draws += batch
        vis = P.segments_inside(A, B)
        A, B = A[vis], B[vis]
        if checked + len(A) > pairs:
            A, B = A[: pairs - checked], B[: pairs - checked]
        if len(A) == 0:
            continue
        ca = cover_batch(A, ctx)
        cb = cover_batch(B, ctx)
        ok = ca.contains(B) | cb.contains(A)
        worst = max(worst, float(ca.areas().sum(axis=1).max()) / ctx.K, float(cb.areas().sum(axis=1).max()) / ctx.K)
        violations += int((~ok).sum())
        for i in np.nonzero(~ok)[0][: max(0, 5 - len(bad))]:
            bad.append((A[i].tolist(), B[i].tolist()))
        checked += len(A)
    return CoverReport(ctx.gamma, ctx.K, pairs, checked, violations, worst, bad)


def align_to_x_axis(S: SimplePolygon, ell: Segment) -> tuple[SimplePolygon, Segment, Frame]:
    """Rigidly move S so that ell lies on the x-axis starting at the origin."""
    fr = Frame.from_root(ell)
    V = fr.to_local(S.vertices)
    e = fr.to_local(np.array([ell.a, ell.b]))
    # rotation leaves rounding noise in y; points on the line are put back on it exactly
    tol = 1e-13 * S.scale
    V[np.abs(V[:, 1]) <= tol, 1] = 0.0
    e[:, 1] = 0.0
    return SimplePolygon(V), Segment(tuple(e[0]), tuple(e[1])), fr


def crossing_region_check(S: SimplePolygon, ell: Segment, A, K: float, samples: int,
                          rng: np.random.Generator) -> dict:
    """Monte Carlo area of {B : AB in S, AB meets ell, |y(A)| >= |y(B)|} against 3K.

    ell must lie on the x-axis.
    """
    if ell.a[1] != 0.0 or ell.b[1] != 0.0:
        raise ValueError("ell must lie on the x-axis; use align_to_x_axis first")
    A = np.asarray(A, dtype=float)
    B = S.sample_points(samples, rng)
    Ar = np.broadcast_to(A, B.shape)
    lo, hi = min(ell.a[0], ell.b[0]), max(ell.a[0], ell.b[0])
    ya, yb = A[1], B[:, 1]
    lower = np.abs(yb) <= abs(ya)
    straddle = ya * yb <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(yb != ya, A[0] + (B[:, 0] - A[0]) * (0 - ya) / (yb - ya), np.nan)
    both_on = (ya == 0) & (yb == 0)
    meets = np.where(
        both_on,
        (np.maximum(np.minimum(A[0], B[:, 0]), lo) <= np.minimum(np.maximum(A[0], B[:, 0]), hi)),
        straddle & (xs >= lo) & (xs <= hi),
    )
    cand = lower & meets
    hit = np.zeros(samples, dtype=bool)
    idx = np.nonzero(cand)[0]
    if len(idx):
        hit[idx] = S.segments_inside(Ar[idx], B[idx])
    p = hit.mean()
    mc = S.area * p
    sigma = S.area * np.sqrt(p * (1 - p) / samples)
    bound = 3 * K
    return {"mc_area": float(mc), "sigma": float(sigma), "bound": float(bound), "ok": bool(mc <= bound + 3 * sigma),
            "samples": samples}
