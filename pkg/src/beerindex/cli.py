"""Command-line front end: build instances, run estimators and verifiers, print JSON/CSV."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constructions import (
    ConeSet,
    GeneralPositionError,
    NetConstructionError,
    PuncturedBox,
    comb_polygon,
    cone_lift,
    hyperplane_partition,
    jensen_check,
    punctured_box_net,
    verify_net,
)
from .cover2d import GAMMA_OPT, CoverContext, verify_cover
from .estimators import (
    estimate_beer_index,
    estimate_convexity_ratio,
    estimate_k_chain,
    estimate_k_index,
    inequality_report,
)
from .fixtures import FIXTURES
from .geom_core import Segment
from .polygon import InvalidPolygonError, RootedPolygon, SimplePolygon
from .simplex_boxes import verify_box_containment
from .visibility import StructuralViolationError, base_segment, level_decomposition

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- input / output ----------------------------------------------------------------

def load_instance(path):
    """Polygon, rooted polygon or punctured box, decided by the JSON keys."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from None
    if "points" in data:
        return PuncturedBox.from_json(data)
    if "vertices" not in data:
        raise UsageError(f"{path}: expected a 'vertices' or 'points' key")
    try:
        if "root" in data:
            return RootedPolygon.from_json(data)
        return SimplePolygon.from_json(data)
    except InvalidPolygonError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _polygon_of(obj) -> SimplePolygon:
    if isinstance(obj, RootedPolygon):
        return obj.polygon
    if isinstance(obj, SimplePolygon):
        return obj
    raise UsageError("this command needs a polygon input")


def rooted_for_cover(obj) -> RootedPolygon:
    """Rooted input is used as is; a plain polygon is rooted on its longest edge."""
    if isinstance(obj, RootedPolygon):
        return obj
    P = _polygon_of(obj)
    a, b = P.edges
    i = int(np.argmax(np.hypot(*(b - a).T)))
    return RootedPolygon(P, Segment(tuple(a[i]), tuple(b[i])))


def _meta(args, **params) -> dict:
    return {"version": __version__, "command": args.verb, "target": getattr(args, "target", None),
            "seed": getattr(args, "seed", None), "parameters": params}


def _emit(args, payload: dict, rows: list[dict] | None = None):
    fmt = getattr(args, "format", "json")
    if fmt == "csv":
        rows = rows if rows is not None else [payload]
        text = _to_csv(rows, meta=payload.get("meta"))
    else:
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    out = getattr(args, "output", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _to_csv(rows: list[dict], meta: dict | None = None, header: list[str] | None = None) -> str:
    flat = []
    for r in rows:
        r = {k: v for k, v in r.items() if k != "meta"}
        if meta is not None:
            r.setdefault("version", meta.get("version"))
            r.setdefault("seed", meta.get("seed"))
        flat.append({k: (json.dumps(v, default=_json_default) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
    if header is None:
        header = []
        for r in flat:
            header += [k for k in r if k not in header]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(flat)
    return buf.getvalue()


# -- verbs -------------------------------------------------------------------------

def cmd_construct(args):
    t = args.target
    if t == "comb":
        _need(args, "n", "delta")
        try:
            obj = comb_polygon(args.n, args.delta)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        data = obj.to_json()
        params = {"n": args.n, "delta": args.delta}
    elif t == "box":
        _need(args, "d", "r", "seed")
        try:
            obj = punctured_box_net(args.d, args.r, args.seed, max_retries=args.max_retries)
        except NetConstructionError as exc:
            _emit(args, {"meta": _meta(args, d=args.d, r=args.r), "error": str(exc), "report": exc.report})
            return EXIT_FAIL
        data = obj.to_json()
        data["verification"] = obj.report
        params = {"d": args.d, "r": args.r}
    elif t in FIXTURES:
        obj = FIXTURES[t]()
        data = obj.to_json()
        params = {}
    else:
        raise UsageError(f"unknown construct target {t!r}; choose comb, box or one of {sorted(FIXTURES)}")
    data["meta"] = _meta(args, **params)
    if args.output:
        Path(args.output).write_text(json.dumps(data, default=_json_default) + "\n")
        summary = {"meta": data["meta"], "file": args.output}
        if "vertices" in data:
            summary["vertices"] = len(data["vertices"])
        if "points" in data:
            summary["points"] = len(data["points"])
        sys.stdout.write(json.dumps(summary) + "\n")
    else:
        sys.stdout.write(json.dumps(data, default=_json_default) + "\n")
    return EXIT_OK


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.verb} {args.target}: missing {', '.join(missing)}")


def _source(args, cone=False):
    if args.input is None:
        raise UsageError(f"{args.verb} {args.target}: --in is required")
    obj = load_instance(args.input)
    if cone:
        obj = cone_lift(_polygon_of(obj))
    return obj


def cmd_estimate(args):
    _need(args, "seed")
    obj = _source(args, cone=args.cone)
    t = args.target
    samples = args.samples
    if t == "beer":
        est = estimate_beer_index(_polygon_of(obj), samples, args.seed, threads=args.threads).to_json()
    elif t == "k":
        region = obj if isinstance(obj, (PuncturedBox, ConeSet)) else _polygon_of(obj)
        try:
            if args.k is None:
                chain = estimate_k_chain(region, samples, args.seed, threads=args.threads)
                payload = {"meta": _meta(args, samples=samples), "estimates": [e.to_json() for e in chain]}
                _emit(args, payload, rows=payload["estimates"])
                return EXIT_OK
            est = estimate_k_index(region, args.k, samples, args.seed, threads=args.threads).to_json()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif t == "convexity":
        est = estimate_convexity_ratio(_polygon_of(obj), args.effort, args.seed, quads=args.quads).to_json()
    else:
        raise UsageError(f"unknown estimate target {t!r}; choose beer, k or convexity")
    est["meta"] = _meta(args, samples=samples, k=args.k, input=args.input)
    _emit(args, est)
    return EXIT_OK


def cmd_decompose(args):
    obj = _source(args)
    R = rooted_for_cover(obj)
    tree = level_decomposition(R, max_levels=args.max_levels)
    data = tree.to_json()
    data["depth"] = tree.depth
    data["meta"] = _meta(args, max_levels=args.max_levels, input=args.input)
    _emit(args, data, rows=[{"index": i, "level": b["level"], "parent": b["parent"], "vertices": len(b["vertices"])}
                            for i, b in enumerate(data["bodies"])])
    return EXIT_FAIL if tree.truncated else EXIT_OK


def cmd_verify(args):
    _need(args, "seed")
    rng = np.random.default_rng(args.seed)
    t = args.target
    params = {"input": args.input}
    if t == "cover":
        R = rooted_for_cover(_source(args))
        ctx = CoverContext.for_polygon(R, gamma=args.gamma, max_levels=args.max_levels)
        rep = verify_cover(R, ctx, args.pairs, rng)
        out = rep.to_json()
        out["examples"] = rep.examples
        failed = rep.violations > 0 or rep.checked < rep.pairs
        params.update(gamma=args.gamma, pairs=args.pairs)
    elif t == "net":
        B = _source(args)
        if not isinstance(B, PuncturedBox):
            raise UsageError("verify net needs a punctured-box input")
        out = verify_net(B, 1000 if args.trials is None else args.trials, rng)
        failed = out["violations"] > 0
        params.update(trials=out["trials"])
    elif t == "boxes":
        B = _source(args) if args.input else None
        if B is None:
            _need(args, "d")
            from .estimators import UnitBox
            B, c_S = UnitBox(args.d), 1.0
        else:
            c_S = B.epsilon if isinstance(B, PuncturedBox) else 1.0
        rep = verify_box_containment(B, c_S, args.tuples, rng)
        out = rep.to_json()
        failed = rep.containment_failures > 0 or rep.projection_failures > 0 or rep.volume_max_rel_err > 1e-9
        params.update(tuples=args.tuples)
    elif t == "partition":
        B = _source(args)
        if not isinstance(B, PuncturedBox) or B.d != 2:
            raise UsageError("verify partition needs a 2-dimensional punctured box")
        worst = None
        ok = True
        trials = 5 if args.trials is None else args.trials
        done = 0
        while done < trials:
            A1 = rng.random(2)
            try:
                cells = hyperplane_partition([A1], B.points)
            except GeneralPositionError:
                continue
            done += 1
            j = jensen_check(cells)
            ok &= j["ok"] and abs(j["area_sum"] - 1) <= 1e-9
            if worst is None or j["sum_sq"] - j["bound"] < worst["sum_sq"] - worst["bound"]:
                worst = j
        out = {"trials": trials, "ok": bool(ok), "tightest": worst}
        failed = not ok
        params.update(trials=trials)
    elif t == "segments":
        R = rooted_for_cover(_source(args))
        tree = level_decomposition(R, max_levels=args.max_levels)
        P = R.polygon
        checked = violations = 0
        while checked < args.pairs:
            A, Bp = P.sample_points(4096, rng), P.sample_points(4096, rng)
            ok = P.segments_inside(A, Bp)
            for a, b in zip(A[ok], Bp[ok]):
                if checked >= args.pairs:
                    break
                checked += 1
                try:
                    base_segment(tree, Segment(tuple(a), tuple(b)))
                except StructuralViolationError:
                    violations += 1
        out = {"segments": checked, "violations": violations, "bodies": len(tree.bodies)}
        failed = violations > 0
        params.update(pairs=args.pairs)
    else:
        raise UsageError(f"unknown verify target {t!r}; choose cover, net, boxes, partition or segments")
    out["meta"] = _meta(args, **params)
    out["passed"] = not failed
    _emit(args, out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_report(args):
    _need(args, "seed")
    obj = _source(args)
    rows = []
    if isinstance(obj, PuncturedBox):
        b_d = estimate_k_index(obj, obj.d, args.samples, args.seed, threads=args.threads)
        rows = inequality_report(b_d=b_d, box=obj)
        est = {"b_d": b_d.to_json()}
    else:
        P = _polygon_of(obj)
        b = estimate_beer_index(P, args.samples, args.seed, threads=args.threads)
        c = estimate_convexity_ratio(P, args.effort, args.seed)
        rows = inequality_report(b=b, c=c)
        est = {"b": b.to_json(), "c": c.to_json()}
    ok = all(r["pass"] for r in rows)
    _emit(args, {"meta": _meta(args, samples=args.samples, input=args.input), "estimates": est,
                 "inequalities": rows, "passed": ok}, rows=rows)
    return EXIT_OK if ok else EXIT_FAIL


SWEEP_HEADER = ["instance", "quantity", "estimate", "ci_low", "ci_high", "bound", "pass", "seed", "samples", "error"]


def _sweep_rows(inst: dict, threads):
    """All rows for one config entry; raises on malformed entries."""
    if "seed" not in inst:
        raise UsageError("every sweep instance needs an explicit seed")
    seed = int(inst["seed"])
    samples = int(inst.get("samples", 100000))
    kind = inst["type"]
    name = inst.get("name") or f"{kind}"
    rows = []
    if kind == "comb":
        P = comb_polygon(int(inst["n"]), float(inst.get("delta", 1e-4)))
        name = inst.get("name") or f"comb(n={inst['n']})"
        for q in inst.get("quantities", ["beer"]):
            if q == "beer":
                e = estimate_beer_index(P, samples, seed, threads=threads)
                n = int(inst["n"])
                scaled = e.value * n
                rows.append({"quantity": "beer_index", "estimate": e.value, "ci_low": e.ci_low, "ci_high": e.ci_high,
                             "bound": 1 / n, "pass": 0.9 <= scaled <= 1.1})
            elif q == "convexity":
                c = estimate_convexity_ratio(P, int(inst.get("effort", 1)), seed)
                rows.append({"quantity": "convexity_ratio", "estimate": c.lower, "ci_low": c.lower, "ci_high": c.upper,
                             "bound": 1 / int(inst["n"]), "pass": c.lower * int(inst["n"]) <= 1.05})
            else:
                raise UsageError(f"unknown quantity {q!r} for comb")
    elif kind == "box":
        d, r = int(inst.get("d", 2)), int(inst["r"])
        B = punctured_box_net(d, r, seed)
        name = inst.get("name") or f"box(d={d},r={r})"
        e = estimate_k_index(B, d, samples, seed, threads=threads)
        bound = 1 / (2 * len(B.points))
        rows.append({"quantity": f"k_index(k={d})", "estimate": e.value, "ci_low": e.ci_low, "ci_high": e.ci_high,
                     "bound": bound, "pass": e.ci_low >= bound})
    elif kind in FIXTURES:
        P = FIXTURES[kind]()
        e = estimate_beer_index(P, samples, seed, threads=threads)
        rows.append({"quantity": "beer_index", "estimate": e.value, "ci_low": e.ci_low, "ci_high": e.ci_high,
                     "bound": "", "pass": True})
    else:
        raise UsageError(f"unknown instance type {kind!r}")
    for r in rows:
        r.update(instance=name, seed=seed, samples=samples, error="")
    return rows


def cmd_sweep(args):
    if args.config is None:
        raise UsageError("sweep: --config is required")
    try:
        cfg = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise UsageError(f"config not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: not valid JSON ({exc})") from None
    instances = cfg.get("instances", []) if isinstance(cfg, dict) else cfg
    rows, failed = [], False
    for inst in instances:
        try:
            rows += _sweep_rows(inst, args.threads)
        except Exception as exc:  # partial failure: flag the row, keep going
            failed = True
            rows.append({"instance": inst.get("name", inst.get("type", "?")), "quantity": "", "pass": False,
                         "seed": inst.get("seed", ""), "error": f"{type(exc).__name__}: {exc}"})
    failed |= any(r.get("pass") is False for r in rows)
    text = f"# version={__version__} config={args.config}\n" + _to_csv(rows, header=SWEEP_HEADER)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_FAIL if failed else EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beerindex", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, target=True):
        if target:
            sp.add_argument("target")
        sp.add_argument("--in", dest="input", help="input JSON (polygon, rooted polygon or punctured box)")
        sp.add_argument("-o", "--output", help="write output here instead of stdout")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int, default=100000)
        sp.add_argument("--threads", type=int, default=os.cpu_count())
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--gamma", type=float, default=GAMMA_OPT)
        sp.add_argument("--n", type=int)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--d", type=int)
        sp.add_argument("--r", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--pairs", type=int, default=10000)
        sp.add_argument("--max-levels", type=int, default=64)
        return sp

    common(sub.add_parser("construct", help="build comb, punctured box or a fixture")).add_argument(
        "--max-retries", type=int, default=5)
    est = common(sub.add_parser("estimate", help="beer, k or convexity"))
    est.add_argument("--effort", type=int, default=1)
    est.add_argument("--quads", action="store_true", help="also try convex quadrilateral witnesses")
    est.add_argument("--cone", action="store_true", help="estimate on the cone over the input polygon")
    common(sub.add_parser("decompose", help="level/body decomposition"), target=False)
    ver = common(sub.add_parser("verify", help="cover, net, boxes, partition or segments"))
    ver.add_argument("--trials", type=int, default=None, help="net: 1000 ellipsoids; partition: 5 random A1")
    ver.add_argument("--tuples", type=int, default=10000)
    rep = common(sub.add_parser("report", help="inequality report"), target=False)
    rep.add_argument("--effort", type=int, default=1)
    sw = sub.add_parser("sweep", help="run a JSON config, one CSV row per (instance, quantity)")
    sw.add_argument("--config")
    sw.add_argument("-o", "--output")
    sw.add_argument("--threads", type=int, default=os.cpu_count())
    return p


COMMANDS = {"construct": cmd_construct, "estimate": cmd_estimate, "decompose": cmd_decompose,
            "verify": cmd_verify, "report": cmd_report, "sweep": cmd_sweep}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.verb](args)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"beerindex {args.verb}: error: {exc}\n")
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
