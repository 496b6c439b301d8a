import csv
import io
import json

import numpy as np
import pytest

from beerindex.cli import run
from beerindex.polygon import load_shape


def call(capsys, *argv):
    code = run(list(map(str, argv)))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def comb8(tmp_path, capsys):
    f = tmp_path / "comb8.json"
    code, out, _ = call(capsys, "construct", "comb", "--n", 8, "--delta", 1e-4, "-o", f)
    assert code == 0 and json.loads(out)["vertices"] == 31
    return f


def test_construct_round_trip(comb8):
    data = json.loads(comb8.read_text())
    assert len(data["vertices"]) == 31
    assert data["meta"]["parameters"] == {"n": 8, "delta": 1e-4}
    P = load_shape(comb8)
    assert np.array_equal(P.vertices, np.array(data["vertices"]))


def test_estimate_beer(capsys, comb8):
    code, out, _ = call(capsys, "estimate", "beer", "--in", comb8, "--samples", 200000, "--seed", 7)
    d = json.loads(out)
    assert code == 0
    assert d["quantity"] == "beer_index" and abs(d["estimate"] - 0.125) < 0.01
    assert d["meta"]["seed"] == 7 and "version" in d["meta"]


def test_estimate_csv(capsys, comb8):
    code, out, _ = call(capsys, "estimate", "convexity", "--in", comb8, "--seed", 1, "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["quantity"] == "convexity_ratio" and rows[0]["seed"] == "1"


def test_verify_cover(capsys, comb8):
    code, out, _ = call(capsys, "verify", "cover", "--in", comb8, "--gamma", 0.5186, "--pairs", 10000, "--seed", 7)
    d = json.loads(out)
    assert code == 0 and d["violations"] == 0 and d["passed"]


def test_construct_box_verify_net_and_partition(capsys, tmp_path):
    f = tmp_path / "box.json"
    code, out, _ = call(capsys, "construct", "box", "--d", 2, "--r", 8, "--seed", 3, "-o", f)
    assert code == 0 and json.loads(out)["points"] == 2 * 6 * 8 * 3
    code, out, _ = call(capsys, "verify", "net", "--in", f, "--trials", 200, "--seed", 1)
    assert code == 0 and json.loads(out)["violations"] == 0
    code, out, _ = call(capsys, "verify", "partition", "--in", f, "--trials", 3, "--seed", 1)
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = call(capsys, "estimate", "k", "--in", f, "--k", 2, "--samples", 20000, "--seed", 1)
    assert code == 0 and json.loads(out)["k"] == 2
    code, out, _ = call(capsys, "report", "--in", f, "--samples", 50000, "--seed", 1)
    assert code == 0 and json.loads(out)["passed"]


def test_verify_boxes_in_cube(capsys):
    code, out, _ = call(capsys, "verify", "boxes", "--d", 3, "--tuples", 300, "--seed", 1)
    d = json.loads(out)
    assert code == 0 and d["containment_failures"] == 0


def test_decompose_and_segments(capsys, tmp_path):
    f = tmp_path / "sp.json"
    call(capsys, "construct", "spiral", "-o", f)
    code, out, _ = call(capsys, "decompose", "--in", f)
    d = json.loads(out)
    assert code == 0 and d["depth"] >= 3
    code, out, _ = call(capsys, "decompose", "--in", f, "--max-levels", 2)
    assert code == 1
    code, out, _ = call(capsys, "verify", "segments", "--in", f, "--pairs", 300, "--seed", 2)
    assert code == 0 and json.loads(out)["violations"] == 0


def test_estimate_cone(capsys, tmp_path):
    f = tmp_path / "sq.json"
    call(capsys, "construct", "square", "-o", f)
    code, out, _ = call(capsys, "estimate", "k", "--in", f, "--cone", "--samples", 2000, "--seed", 1)
    d = json.loads(out)
    assert code == 0 and [e["estimate"] for e in d["estimates"]] == [1.0, 1.0, 1.0]


def test_usage_errors(capsys, tmp_path):
    assert call(capsys, "bogus")[0] == 2
    assert call(capsys, "construct", "comb", "--n", 4)[0] == 2
    code, _, err = call(capsys, "estimate", "beer", "--in", tmp_path / "missing.json", "--seed", 1)
    assert code == 2 and "not found" in err
    assert call(capsys, "construct", "comb", "--n", 4, "--delta", 0.5)[0] == 2
    assert call(capsys, "estimate", "beer", "--in", tmp_path / "x.json")[0] == 2  # no seed
    assert call(capsys, "--version")[0] == 0


def test_sweeps(capsys, tmp_path):
    cfg = tmp_path / "empty.json"
    cfg.write_text(json.dumps({"instances": []}))
    code, out, _ = call(capsys, "sweep", "--config", cfg)
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert code == 0 and lines == ["instance,quantity,estimate,ci_low,ci_high,bound,pass,seed,samples,error"]

    cfg.write_text(json.dumps({"instances": [
        {"type": "comb", "n": n, "delta": 1e-4, "seed": 7, "samples": 100000} for n in (4, 8, 16)]}))
    code, out, _ = call(capsys, "sweep", "--config", cfg)
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in out.splitlines() if not l.startswith("#")))))
    assert code == 0 and len(rows) == 3
    for r, n in zip(rows, (4, 8, 16)):
        assert 0.9 <= float(r["estimate"]) * n <= 1.1

    cfg.write_text(json.dumps({"instances": [
        {"type": "box", "d": 2, "r": r, "seed": 1, "samples": 100000} for r in (8, 16, 32)]}))
    code, out, _ = call(capsys, "sweep", "--config", cfg)
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in out.splitlines() if not l.startswith("#")))))
    assert code == 0 and len(rows) == 3 and all(r["pass"] == "True" for r in rows)

    cfg.write_text(json.dumps({"instances": [{"type": "comb", "n": 4}, {"type": "nope", "seed": 1}]}))
    code, out, _ = call(capsys, "sweep", "--config", cfg)
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in out.splitlines() if not l.startswith("#")))))
    assert code == 1 and len(rows) == 2 and all(r["error"] for r in rows)
