"""Independent reference implementations used as test oracles."""
import numpy as np

from beerindex.geom_core import Segment


def oracle_sees(P, root, x):
    """Does x see a positive-length part of the open root?

    Every vertex projected centrally from x onto the root line gives a critical
    parameter; between consecutive critical parameters visibility is constant, so
    testing one midpoint per piece with the exact segment test decides it.
    """
    a, b = np.array(root.a), np.array(root.b)
    e = b - a
    n = np.array([-e[1], e[0]])
    x = np.asarray(x, dtype=float)
    ts = [0.0, 1.0]
    hx = (x - a) @ n
    for v in P.vertices:
        hv = (v - a) @ n
        if abs(hx - hv) < 1e-15:
            continue
        lam = hx / (hx - hv)
        if lam <= 0:
            continue
        p = x + lam * (v - x)
        t = ((p - a) @ e) / (e @ e)
        if 0 < t < 1:
            ts.append(t)
    ts.sort()

    def sees(t):
        # a rounded root point may sit a hair outside a sloped root, so aim just inside it
        F = np.array(root.point_at(t))
        return P.contains_segment(Segment(tuple(x), tuple(F + 1e-9 * (x - F))))

    return any(sees(0.5 * (t0 + t1)) for t0, t1 in zip(ts[:-1], ts[1:]) if t1 - t0 > 1e-13)


def gift_wrap(points):
    """O(n^2) hull vertices for points in general position: endpoints of edges with
    every other point strictly on their left."""
    P = np.asarray(points, dtype=float)
    idx = np.arange(len(P))
    hull = set()
    for i in range(len(P)):
        for j in range(len(P)):
            if i == j:
                continue
            d = P[j] - P[i]
            cr = d[0] * (P[:, 1] - P[i, 1]) - d[1] * (P[:, 0] - P[i, 0])
            if np.all(cr[(idx != i) & (idx != j)] > 0):
                hull.update((i, j))
    return {tuple(P[k]) for k in hull}
