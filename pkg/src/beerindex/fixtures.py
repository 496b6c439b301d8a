"""Small named polygons used by the tests, the CLI and the examples."""
from __future__ import annotations

import numpy as np
from shapely.geometry import LineString

from .geom_core import Segment
from .polygon import RootedPolygon, SimplePolygon


def unit_square() -> SimplePolygon:
    return SimplePolygon([(0, 0), (1, 0), (1, 1), (0, 1)])


def l_shape() -> SimplePolygon:
    """Unit square minus the top-right quarter."""
    return SimplePolygon([(0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1)])


def t_shape() -> SimplePolygon:
    return SimplePolygon([(0, 0), (3, 0), (3, 1), (2, 1), (2, 3), (1, 3), (1, 1), (0, 1)])


def regular_polygon(n: int, radius: float = 1.0) -> SimplePolygon:
    ang = 2 * np.pi * np.arange(n) / n
    return SimplePolygon(np.c_[radius * np.cos(ang), radius * np.sin(ang)])


def spiral(turns: int = 3, width: float = 1.0, gap: float = 1.0) -> SimplePolygon:
    """Square-spiral corridor of the given width, winding inwards with `turns` full turns."""
    pitch = width + gap
    n_legs = 4 * turns
    pts = [(0.0, 0.0)]
    x = y = 0.0
    length = pitch * (2 * turns + 1)
    dirs = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for k in range(n_legs):
        dx, dy = dirs[k % 4]
        x, y = x + dx * length, y + dy * length
        pts.append((x, y))
        if k % 2 == 0 and k > 0:
            length -= pitch
    poly = LineString(pts).buffer(width / 2, cap_style="flat", join_style="mitre")
    return SimplePolygon(np.asarray(poly.exterior.coords)[:-1], collinear_tol=1e-12)


def rooted_on_edge(P: SimplePolygon, i: int) -> RootedPolygon:
    v = P.vertices
    return RootedPolygon(P, Segment(v[i], v[(i + 1) % len(v)]))


def rooted_square() -> RootedPolygon:
    return RootedPolygon(unit_square(), Segment((0, 0), (1, 0)))


def rooted_l_shape() -> RootedPolygon:
    """L-shape rooted on the end edge of its lower leg."""
    return RootedPolygon(l_shape(), Segment((1, 0), (1, 0.5)))


def rooted_spiral(turns: int = 3) -> RootedPolygon:
    P = spiral(turns)
    # root: the flat cap at the outer start of the corridor (the edge on x = 0)
    v = P.vertices
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        if a[0] == 0.0 and b[0] == 0.0:
            return RootedPolygon(P, Segment(a, b))
    raise RuntimeError("spiral cap not found")


FIXTURES = {
    "square": unit_square,
    "l_shape": l_shape,
    "t_shape": t_shape,
    "spiral": spiral,
}
