"""Monte Carlo estimates of the Beer index and k-indices, and convexity-ratio witnesses."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .constructions import ConeSet, PuncturedBox, net_size, vc_bound
from .geom_core import Segment
from .polygon import SimplePolygon

Z95 = 1.959963984540054
BATCH = 1 << 16
PLANAR_RATIO_CONSTANT = 180  # twice the crossing-region constant 90 of the planar upper bound


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo, hi = center - half, center + half
    if k == n:
        hi = 1.0
    if k == 0:
        lo = 0.0
    return max(0.0, lo), min(1.0, hi)


@dataclass
class Estimate:
    quantity: str
    value: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int
    elapsed: float
    hits: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        p = self.value
        return math.sqrt(max(p * (1 - p), 0.0) / self.samples)

    def to_json(self) -> dict:
        d = {
            "quantity": self.quantity,
            "estimate": self.value,
            "ci95": [self.ci_low, self.ci_high],
            "samples": self.samples,
            "seed": self.seed,
            "elapsed_ms": round(self.elapsed * 1000, 3),
        }
        d.update(self.extra)
        return d


def _make_estimate(quantity, hits, n, seed, t0, **extra) -> Estimate:
    lo, hi = wilson_interval(int(hits), n)
    return Estimate(quantity, hits / n, lo, hi, n, seed, time.perf_counter() - t0, int(hits), extra)


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    """Counter-based substream for one batch; independent of how batches are scheduled."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


def _batches(samples: int, batch: int):
    return [(b, min(batch, samples - b * batch)) for b in range((samples + batch - 1) // batch)]


def _run(fn, jobs, threads):
    if threads and threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


# -- regions -------------------------------------------------------------------

@dataclass
class PolygonRegion:
    polygon: SimplePolygon
    d: int = 2

    @property
    def volume(self) -> float:
        return self.polygon.area

    def sample(self, n, rng):
        return self.polygon.sample_points(n, rng)

    def hulls_inside(self, T, k):
        """Hull of the first k+1 points inside the polygon (k <= 2): all pairwise segments
        inside suffices, since a simple polygon has no holes."""
        T = np.asarray(T)
        ok = np.ones(len(T), dtype=bool)
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                idx = np.nonzero(ok)[0]
                ok[idx] = self.polygon.segments_inside(T[idx, i], T[idx, j])
        return ok


@dataclass
class UnitBox:
    d: int
    volume: float = 1.0

    def sample(self, n, rng):
        return rng.random((n, self.d))

    def hulls_inside(self, T, k):
        return np.ones(len(T), dtype=bool)


def as_region(S):
    if isinstance(S, SimplePolygon):
        return PolygonRegion(S)
    if isinstance(S, (PuncturedBox, ConeSet, PolygonRegion, UnitBox)):
        return S
    raise TypeError(f"unsupported set type {type(S).__name__}")


# -- estimators --------------------------------------------------------------------

def estimate_beer_index(P: SimplePolygon, samples: int, seed: int, *, batch: int = BATCH,
                        threads: int | None = None) -> Estimate:
    """Fraction of random point pairs whose segment stays inside P."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    t0 = time.perf_counter()

    def job(spec):
        b, m = spec
        pts = P.sample_points(2 * m, batch_rng(seed, b))
        return int(P.segments_inside(pts[0::2], pts[1::2]).sum())

    hits = sum(_run(job, _batches(samples, batch), threads))
    return _make_estimate("beer_index", hits, samples, seed, t0)


def k_chain_acceptance(region, T: np.ndarray, kmax: int) -> np.ndarray:
    """(m, kmax) matrix: column k-1 says whether the hull of the first k+1 points lies in S.

    Columns are nested (a failing prefix fails every longer tuple), which makes the
    chain b_1 >= b_2 >= ... hold sample by sample.
    """
    acc = np.zeros((len(T), kmax), dtype=bool)
    alive = np.ones(len(T), dtype=bool)
    for k in range(1, kmax + 1):
        idx = np.nonzero(alive)[0]
        ok = np.zeros(len(T), dtype=bool)
        if len(idx):
            ok[idx] = region.hulls_inside(T[idx], k)
        alive &= ok
        acc[:, k - 1] = alive
    return acc


def estimate_k_chain(S, samples: int, seed: int, kmax: int | None = None, *, batch: int = BATCH,
                     threads: int | None = None) -> list[Estimate]:
    """Estimates of b_1 .. b_kmax from shared random tuples."""
    region = as_region(S)
    kmax = region.d if kmax is None else kmax
    if not 1 <= kmax <= region.d:
        raise ValueError("need 1 <= k <= d")
    t0 = time.perf_counter()

    def job(spec):
        b, m = spec
        T = region.sample(m * (kmax + 1), batch_rng(seed, b)).reshape(m, kmax + 1, region.d)
        return k_chain_acceptance(region, T, kmax).sum(axis=0)

    hits = np.sum(_run(job, _batches(samples, batch), threads), axis=0)
    return [_make_estimate("k_index", int(h), samples, seed, t0, k=k + 1) for k, h in enumerate(hits)]


def estimate_k_index(S, k: int, samples: int, seed: int, **kw) -> Estimate:
    region = as_region(S)
    if not 1 <= k <= region.d:
        raise ValueError(f"k must lie in 1..{region.d}")
    if isinstance(region, PolygonRegion) and k > 2:
        raise ValueError("polygons support k <= 2")
    t0 = time.perf_counter()
    batch = kw.pop("batch", BATCH)
    threads = kw.pop("threads", None)

    def job(spec):
        b, m = spec
        T = region.sample(m * (k + 1), batch_rng(seed, b)).reshape(m, k + 1, region.d)
        return int(region.hulls_inside(T, k).sum())

    hits = sum(_run(job, _batches(samples, batch), threads))
    return _make_estimate("k_index", hits, samples, seed, t0, k=k)


# -- convexity ratio ------------------------------------------------------------------

@dataclass
class ConvexityRatioBound:
    lower: float
    upper: float
    witness: list
    witness_area: float
    certified_upper: bool = False

    def to_json(self) -> dict:
        return {"quantity": "convexity_ratio", "lower": self.lower, "upper": self.upper,
                "witness": self.witness, "witness_area": self.witness_area}


def _tri_area(T):
    T = np.asarray(T)
    return 0.5 * np.abs((T[..., 1, 0] - T[..., 0, 0]) * (T[..., 2, 1] - T[..., 0, 1])
                        - (T[..., 1, 1] - T[..., 0, 1]) * (T[..., 2, 0] - T[..., 0, 0]))


def _tris_inside(P: SimplePolygon, T: np.ndarray) -> np.ndarray:
    ok = np.ones(len(T), dtype=bool)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        idx = np.nonzero(ok)[0]
        ok[idx] = P.segments_inside(T[idx, i], T[idx, j])
    return ok


def validate_witness(P: SimplePolygon, W, probes: int = 32, seed: int = 0) -> bool:
    """Edges inside plus interior probes inside."""
    W = np.asarray(W, dtype=float)
    n = len(W)
    for i in range(n):
        if not P.contains_segment(Segment(W[i], W[(i + 1) % n])):
            return False
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(n), size=probes)
    return bool(P.contains_points(w @ W).all())


def _convex_quads_inside(P: SimplePolygon, V: np.ndarray):
    best, best_q = 0.0, None
    n = len(V)
    for q in itertools.combinations(range(n), 4):
        Q = V[list(q)]
        # vertex indices increasing along the CCW boundary give the cyclic order
        x, y = Q[:, 0], Q[:, 1]
        cr = [(Q[(i + 1) % 4] - Q[i])[0] * (Q[(i + 2) % 4] - Q[(i + 1) % 4])[1]
              - (Q[(i + 1) % 4] - Q[i])[1] * (Q[(i + 2) % 4] - Q[(i + 1) % 4])[0] for i in range(4)]
        if min(cr) <= 0:
            continue
        a = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        if a <= best:
            continue
        if all(P.contains_segment(Segment(Q[i], Q[(i + 1) % 4])) for i in range(4)):
            best, best_q = a, Q
    return best, best_q


def estimate_convexity_ratio(P: SimplePolygon, effort: int = 1, seed: int = 0, *, quads: bool = False,
                             upper: float = 1.0) -> ConvexityRatioBound:
    """Largest inscribed triangle found by vertex-triple enumeration plus hill climbing.

    The result is a lower bound on the convexity ratio (any contained convex set
    works); the search itself is heuristic and carries no optimality certificate.
    """
    rng = np.random.default_rng(seed)
    V = P.vertices
    n = len(V)
    cands = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    T = V[cands]
    area = _tri_area(T)
    order = np.argsort(-area)
    T, area = T[order], area[order]
    ok = np.zeros(len(T), dtype=bool)
    chunk = 4096
    best_i = None
    for s in range(0, len(T), chunk):
        ok[s:s + chunk] = _tris_inside(P, T[s:s + chunk])
        if ok[s:s + chunk].any():
            best_i = s + int(np.argmax(ok[s:s + chunk]))
            break
    starts = []
    if best_i is not None:
        starts.append(T[best_i])
    # sampled interior triples as extra starts
    m = 2000 * effort
    R = P.sample_points(3 * m, rng).reshape(m, 3, 2)
    inside = _tris_inside(P, R)
    R = R[inside]
    if len(R):
        top = np.argsort(-_tri_area(R))[: 4 * effort]
        starts += list(R[top])
    best_T, best_a = None, 0.0
    scale = P.scale
    for T0 in starts:
        Tc, ac = _hill_climb(P, np.array(T0, dtype=float), rng, scale, iters=150 * effort)
        if ac > best_a:
            best_T, best_a = Tc, ac
    witness, warea = best_T, best_a
    if quads and n <= 40:
        qa, Q = _convex_quads_inside(P, V)
        if qa > warea:
            witness, warea = Q, qa
    if witness is None or not validate_witness(P, witness, seed=seed):
        return ConvexityRatioBound(0.0, upper, [], 0.0)
    return ConvexityRatioBound(min(warea / P.area, upper), upper, np.asarray(witness).tolist(), float(warea))


def _hill_climb(P, T, rng, scale, iters=150):
    a = float(_tri_area(T))
    step = 0.05 * scale
    for _ in range(iters):
        # propose moves of each vertex in a batch of random directions
        props = np.repeat(T[None], 24, axis=0)
        which = rng.integers(0, 3, 24)
        props[np.arange(24), which] += rng.normal(0, step, (24, 2))
        ar = _tri_area(props)
        better = ar > a
        if better.any():
            idx = np.nonzero(better)[0]
            ok = _tris_inside(P, props[idx])
            if ok.any():
                j = idx[ok][np.argmax(ar[idx][ok])]
                T, a = props[j], float(ar[j])
                continue
        step *= 0.8
        if step < 1e-9 * scale:
            break
    return T, a


# -- inequality report ---------------------------------------------------------------

def net_bound_constant(d: int) -> float:
    return 1.0 / (8 * vc_bound(d) * d**d)


def net_lower_bound(d: int, r: int) -> float:
    eps = d**d / r
    return net_bound_constant(d) * eps / math.log2(1 / eps)


def inequality_report(*, b: Estimate | None = None, c: ConvexityRatioBound | None = None,
                      b_d: Estimate | None = None, box: PuncturedBox | None = None, d: int = 2) -> list[dict]:
    """Check each applicable inequality against confidence bounds; one row per inequality."""
    rows = []
    if b is not None and c is not None:
        rows.append({"name": "b >= c_lower^2", "lhs": b.ci_high, "rhs": c.lower**2,
                     "pass": bool(b.ci_high >= c.lower**2)})
        rows.append({"name": f"b <= {PLANAR_RATIO_CONSTANT}*c_upper", "lhs": b.ci_low,
                     "rhs": PLANAR_RATIO_CONSTANT * c.upper, "pass": bool(b.ci_low <= PLANAR_RATIO_CONSTANT * c.upper),
                     "note": "constant derived from proof constants"})
    if b_d is not None and c is not None:
        dd = d if box is None else box.d
        bound = 2 ** (dd - 2) * math.factorial(dd + 1) * c.upper
        rows.append({"name": "b_d <= 2^(d-2)(d+1)! c", "lhs": b_d.ci_low, "rhs": bound, "pass": bool(b_d.ci_low <= bound)})
    if b_d is not None and box is not None:
        n = len(box.points)
        rows.append({"name": "b_d >= 1/(2|N|)", "lhs": b_d.ci_low, "rhs": 1 / (2 * n), "pass": bool(b_d.ci_low >= 1 / (2 * n))})
        tb = net_lower_bound(box.d, box.r)
        rows.append({"name": "b_d >= gamma*eps/log2(1/eps)", "lhs": b_d.ci_low, "rhs": tb, "pass": bool(b_d.ci_low >= tb),
                     "epsilon": box.epsilon, "note": "c(S) <= epsilon by construction"})
        rows.append({"name": "|N| closed form", "lhs": n, "rhs": net_size(box.d, box.r), "pass": n == net_size(box.d, box.r)})
    return rows


def estimate_to_dict(e: Estimate) -> dict:
    return asdict(e)
