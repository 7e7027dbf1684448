import csv
import json
from fractions import Fraction

import pytest

from graphs import bs, f2, theta, two_vertex_gbs
from gtd.cli import main
from gtd.core import graph_to_json
from gtd.section import rose


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out.strip(), out.err


def test_length_example(tmp_path, capsys):
    path = write(tmp_path, "bs23.json", graph_to_json(bs(2, 3)))
    code, out, _ = run(capsys, "length", path, "t a t a^-1")
    assert code == 0
    assert out == '{"classification":"hyperbolic","length":"2"}'


def test_simplex_example(tmp_path, capsys):
    path = write(tmp_path, "tree.json", graph_to_json(rose(["x", "y", "z"], (1, 1, 2))))
    code, out, _ = run(capsys, "simplex", path)
    assert code == 0
    assert out == '{"barycentric":["1/4","1/4","1/2"],"volume":"4"}'


def test_validate_broken(tmp_path, capsys):
    broken = {
        "vertices": [{"id": "v", "group": "Z", "generator": "a"}],
        "edges": [{"id": "t", "from": "v", "to": "v", "index_from": 0, "index_to": 3, "length": "1"}],
    }
    code, out, err = run(capsys, "validate", write(tmp_path, "broken.json", broken))
    assert code == 1
    assert out == '{"error":"ZeroIndex","edge":"t"}'
    assert err


def test_validate_ok(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", write(tmp_path, "g.json", graph_to_json(bs(2, 3))))
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["length"])
    assert info.value.code == 2
    code, out, _ = run(capsys, "validate", tmp_path / "missing.json")
    assert code == 2
    assert json.loads(out)["error"] == "UsageError"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out, _ = run(capsys, "simplex", bad)
    assert code == 2


def test_ball_and_dot(tmp_path, capsys):
    path = write(tmp_path, "bs.json", graph_to_json(bs(2, 3)))
    code, out, _ = run(capsys, "ball", path, "-r", "1", "--emit-dot", tmp_path / "dots")
    rep = json.loads(out)
    assert code == 0 and rep["vertices"] == 6
    assert (tmp_path / "dots" / "ball.dot").read_text().startswith("graph")


def test_ball_cap(tmp_path, capsys):
    path = write(tmp_path, "bs.json", graph_to_json(bs(2, 3)))
    code, out, _ = run(capsys, "--cap", "10", "ball", path, "-r", "3")
    assert code == 1
    assert json.loads(out)["error"] == "BallTooLarge"
    code, out, _ = run(capsys, "ball", path, "-r", "3", "--cap", "10")
    assert code == 1


def test_basepoint(tmp_path, capsys):
    path = write(tmp_path, "f2.json", graph_to_json(f2()))
    code, out, _ = run(capsys, "basepoint", path)
    rep = json.loads(out)
    assert code == 0 and rep["value"] == "1/2" and rep["point"] == {"vertex": "1"}
    code, out, _ = run(capsys, "basepoint", path, "-S", "x")
    assert code == 1 and json.loads(out)["error"] == "LocusTruncated"


def test_collapse_and_expand_round_trip(tmp_path, capsys):
    path = write(tmp_path, "g.json", graph_to_json(two_vertex_gbs()))
    out_path = tmp_path / "collapsed.json"
    code, out, _ = run(capsys, "collapse", path, "-e", "e1", "-o", out_path)
    rep = json.loads(out)
    assert code == 0
    assert rep["record"]["volume_after"] == "1"
    (edge,) = rep["tree"]["edges"]
    assert (edge["index_from"], edge["index_to"]) == (6, 5)
    spec = write(tmp_path, "spec.json", rep["record"]["inverse"])
    code, out, _ = run(capsys, "expand", out_path, "-v", "v", "--spec", spec)
    assert code == 0
    assert json.loads(out)["record"]["volume_after"] == "2"


def test_collapse_loop(tmp_path, capsys):
    code, out, _ = run(capsys, "collapse", write(tmp_path, "f2.json", graph_to_json(f2())), "-e", "x")
    assert code == 1 and json.loads(out)["error"] == "LoopCollapse"


def test_reduced(tmp_path, capsys):
    code, out, _ = run(capsys, "reduced", write(tmp_path, "t.json", graph_to_json(theta())))
    assert json.loads(out) == {"reduced": False, "witness": "e1"}


def test_profile_compare(tmp_path, capsys):
    a = write(tmp_path, "a.json", graph_to_json(f2()))
    b = write(tmp_path, "b.json", graph_to_json(f2((Fraction(2), Fraction(3)))))
    marked_bs = bs(2, 3).with_marking({"x": "a_v", "y": "t"})
    c = write(tmp_path, "c.json", graph_to_json(marked_bs))
    code, out, _ = run(capsys, "profile-compare", a, b)
    assert code == 0 and json.loads(out)["agree"] is True
    code, out, _ = run(capsys, "profile-compare", a, c, "-S", "x y,x")
    rep = json.loads(out)
    assert rep["agree"] is False and rep["witness"] == "x"


def _morphism_file(tmp_path):
    dom = graph_to_json(rose(["a", "b"], (1, 2)))
    rng = graph_to_json(rose(["a", "c"], (1, 1)).with_marking({"a": "a", "b": "a c"}))
    return write(tmp_path, "m.json", {"domain": dom, "range": rng, "edge_images": {"a": "a", "b": "a c"}})


def test_fold(tmp_path, capsys):
    path = _morphism_file(tmp_path)
    code, out, _ = run(capsys, "fold", path, "-t", "1/2")
    rep = json.loads(out)
    assert code == 0 and rep["fold_depth"] == "1"
    assert sorted(rep["edge_lengths"].values()) == ["1/2", "1/2", "3/2"]


def test_fold_profile_csv(tmp_path, capsys):
    path = _morphism_file(tmp_path)
    words = tmp_path / "words.txt"
    words.write_text("a\nb\na b\n")
    csv_path = tmp_path / "p.csv"
    code, out, _ = run(capsys, "fold", path, "--profile", words, "--times", "0,1/2,1", "--emit-csv", csv_path)
    rep = json.loads(out)
    assert code == 0
    assert rep["profile"]["b"] == ["2", "2", "2"]
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["word", "0", "1/2", "1"] and len(rows) == 4


def test_fold_length_mismatch(tmp_path, capsys):
    dom = graph_to_json(rose(["a", "b"], (1, 2)))
    rng = graph_to_json(rose(["a", "c"], (1, 1)).with_marking({"a": "a", "b": "a c"}))
    path = write(tmp_path, "m.json", {"domain": dom, "range": rng, "edge_images": {"a": "a", "b": "a c a"}})
    code, out, _ = run(capsys, "fold", path)
    assert code == 1 and json.loads(out)["error"] == "LengthMismatch"


def test_approx_identity_check_thicken(tmp_path, capsys):
    left = write(tmp_path, "l.json", graph_to_json(f2()))
    right = write(tmp_path, "r.json", graph_to_json(f2((Fraction(3, 5), Fraction(2, 5)))))
    code, out, _ = run(capsys, "approx", "identity", left, right, "-r", "1", "--grid", "2", "-S", "x,y")
    assert code == 0
    rel = write(tmp_path, "rel.json", json.loads(out))
    code, out, _ = run(capsys, "approx", "check", rel)
    assert code == 0 and json.loads(out)["ok"] is True
    code, out, _ = run(capsys, "approx", "thicken", rel, "-d", "1/8")
    rep = json.loads(out)
    assert code == 0 and rep["check"]["ok"] is True


def test_approx_violation(tmp_path, capsys):
    tree = write(tmp_path, "rose.json", graph_to_json(rose(["x", "y"], (1, 1))))
    rel = {
        "left": tree,
        "right": tree,
        "epsilon": "1/2",
        "pairs": [[{"vertex": "1"}, {"vertex": "1"}], [{"vertex": "1"}, {"vertex": "x"}]],
    }
    code, out, _ = run(capsys, "approx", "check", write(tmp_path, "rel.json", rel))
    rep = json.loads(out)
    assert rep["ok"] is False and rep["violation"] == "DistortionViolation"


def test_section(tmp_path, capsys):
    base = write(tmp_path, "base.json", graph_to_json(rose(["x", "y"])))
    target = write(tmp_path, "target.json", graph_to_json(rose(["x", "y"], (2, 3))))
    code, out, _ = run(capsys, "section", "--base", base, "--target", target)
    assert code == 0 and json.loads(out)["edge_lengths"] == {"x": "2", "y": "3"}
    bad = write(tmp_path, "theta.json", graph_to_json(theta()))
    code, out, _ = run(capsys, "section", "--base", bad, "--target", target)
    assert code == 1 and json.loads(out)["error"] == "BaseNotReduced"


def test_contract(tmp_path, capsys):
    base = write(tmp_path, "base.json", graph_to_json(rose(["x", "y"])))
    Y = rose(["x", "y"]).with_marking({"x": "x", "y": "x y"})
    target = write(tmp_path, "target.json", graph_to_json(Y))
    csv_path = tmp_path / "c.csv"
    code, out, _ = run(
        capsys, "contract", "--base", base, "--target", target, "-t", "0,1/2,1",
        "--emit-csv", csv_path, "--emit-dot", tmp_path / "dot",
    )
    rep = json.loads(out)
    assert code == 0
    assert rep["t0_in_LT"] and rep["t1_matches_target"]
    assert all(s["elliptic"] == [] for s in rep["steps"])
    assert [s["t"] for s in rep["steps"]] == ["0", "1/2", "1"]
    assert next(csv.reader(csv_path.open())) == ["t", "edge", "length"]
    assert sorted(p.name for p in (tmp_path / "dot").iterdir()) == ["step_0.dot", "step_1.dot", "step_2.dot"]
