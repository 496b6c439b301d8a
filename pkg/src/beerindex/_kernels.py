"""Compiled inner loops: "does this simplex contain any of the removed points?"

Removed points are bucketed in a uniform grid over the unit box (CSR layout), so a
query only visits the cells overlapping the simplex's bounding box and stops at
the first hit.
"""
from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # avoid probing an outdated TBB; the workqueue layer is always available
    numba.config.THREADING_LAYER = "workqueue"

TOL = 1e-12


def build_grid(points: np.ndarray, res: int | None = None):
    """Bucket points of [0,1]^d into res^d cells; returns (sorted_points, cell_start, res)."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n, d = pts.shape
    if res is None:
        res = max(1, int(round((n / 2.0) ** (1.0 / d))))
    cell = _cell_ids(pts, res)
    order = np.argsort(cell, kind="stable")
    counts = np.bincount(cell, minlength=res**d)
    start = np.zeros(res**d + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return pts[order], start, res


def _cell_ids(pts, res):
    idx = np.clip((pts * res).astype(np.int64), 0, res - 1)
    mult = res ** np.arange(pts.shape[1], dtype=np.int64)
    return idx @ mult


@njit(cache=True)
def _point_in_simplex(p, T0, Minv, Mt, G_inv, k, d, full, tol):
    """Closed membership of p in the k-simplex with first vertex T0."""
    diff = np.empty(d)
    for j in range(d):
        diff[j] = p[j] - T0[j]
    lam = np.zeros(k)
    if full:
        for i in range(k):
            for j in range(d):
                lam[i] += Minv[i, j] * diff[j]
    else:
        # lower-dimensional simplex: least-squares coordinates plus residual
        rhs = np.zeros(k)
        for i in range(k):
            for j in range(d):
                rhs[i] += Mt[j, i] * diff[j]
        for i in range(k):
            for l in range(k):
                lam[i] += G_inv[i, l] * rhs[l]
    s = 0.0
    for i in range(k):
        if lam[i] < -tol:
            return False
        s += lam[i]
    if s > 1.0 + tol:
        return False
    if full:
        return True
    r2 = 0.0
    for j in range(d):
        r = diff[j]
        for i in range(k):
            r -= Mt[j, i] * lam[i]
        r2 += r * r
    return r2 <= tol * tol


@njit(cache=True)
def _prepare(S, k, d):
    """Returns (T0, Minv, Mt, G_inv, ok); ok=False for degenerate simplices."""
    T0 = S[0].copy()
    Mt = np.empty((d, k))
    for i in range(k):
        for j in range(d):
            Mt[j, i] = S[i + 1, j] - T0[j]
    Minv = np.zeros((k, d))
    G_inv = np.zeros((k, k))
    scale = 0.0
    for i in range(k):
        for j in range(d):
            scale = max(scale, abs(Mt[j, i]))
    if scale == 0.0:
        return T0, Minv, Mt, G_inv, False
    if k == d:
        det = np.linalg.det(Mt)
        if abs(det) <= 1e-12 * scale**d:
            return T0, Minv, Mt, G_inv, False
        Minv = np.linalg.inv(Mt)
    else:
        G = Mt.T @ Mt
        det = np.linalg.det(G)
        if abs(det) <= 1e-24 * scale ** (2 * k):
            return T0, Minv, Mt, G_inv, False
        G_inv = np.linalg.inv(G)
    return T0, Minv, Mt, G_inv, True


@njit(cache=True, parallel=True)
def simplices_hit_grid(simplices, pts, start, res, tol):
    """For each (k+1, d) simplex: True if some grid point lies in its closed hull.

    Degenerate simplices report False (they are counted as contained in S).
    """
    m = simplices.shape[0]
    k = simplices.shape[1] - 1
    d = simplices.shape[2]
    out = np.zeros(m, dtype=np.bool_)
    for q in prange(m):
        S = simplices[q]
        T0, Minv, Mt, G_inv, ok = _prepare(S, k, d)
        if not ok:
            continue
        lo = np.empty(d, dtype=np.int64)
        hi = np.empty(d, dtype=np.int64)
        for j in range(d):
            mn = S[0, j]
            mx = S[0, j]
            for i in range(1, k + 1):
                mn = min(mn, S[i, j])
                mx = max(mx, S[i, j])
            lo[j] = min(max(int(np.floor((mn - tol) * res)), 0), res - 1)
            hi[j] = min(max(int(np.floor((mx + tol) * res)), 0), res - 1)
        cur = lo.copy()
        found = False
        while True:
            cid = 0
            mult = 1
            for j in range(d):
                cid += cur[j] * mult
                mult *= res
            for pi in range(start[cid], start[cid + 1]):
                if _point_in_simplex(pts[pi], T0, Minv, Mt, G_inv, k, d, k == d, tol):
                    found = True
                    break
            if found:
                break
            # odometer step over the bounding-box cells
            j = 0
            while j < d:
                cur[j] += 1
                if cur[j] <= hi[j]:
                    break
                cur[j] = lo[j]
                j += 1
            if j == d:
                break
        out[q] = found
    return out


@njit(cache=True, parallel=True)
def simplices_hit_naive(simplices, pts, tol):
    """Reference scan over all points (no grid)."""
    m = simplices.shape[0]
    k = simplices.shape[1] - 1
    d = simplices.shape[2]
    out = np.zeros(m, dtype=np.bool_)
    for q in prange(m):
        T0, Minv, Mt, G_inv, ok = _prepare(simplices[q], k, d)
        if not ok:
            continue
        for pi in range(pts.shape[0]):
            if _point_in_simplex(pts[pi], T0, Minv, Mt, G_inv, k, d, k == d, tol):
                out[q] = True
                break
    return out
