from __future__ import annotations

import json
import subprocess
import sys

import pytest

from arcgeom.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from arcgeom.incidence import POINT_LINE, IncidenceStructure, from_json, to_json


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def verdict(text: str) -> str:
    return text.strip().splitlines()[-1]


@pytest.fixture
def files(tmp_path, capsys):
    paths = {}
    for name, argv in {
        "as3": ["construct", "as-gq", "--q", "3"],
        "w3": ["construct", "wq", "--q", "3"],
        "lag3": ["construct", "laguerre-classical", "--q", "3"],
        "pc23": ["construct", "pseudo-conic", "--n", "2", "--q", "3"],
    }.items():
        p = tmp_path / f"{name}.txt"
        assert run(argv + ["--out", str(p)], capsys)[0] == EXIT_OK
        paths[name] = p
    return paths


def test_construct_verify_as_gq(files, capsys, tmp_path):
    code, out, _ = run(["verify", "gq", str(files["as3"])], capsys)
    assert code == EXIT_OK and verdict(out) == "pass GQ order (2,4)"
    w3d = tmp_path / "w3d.json"
    code, out, _ = run(["derive", "payne", str(files["w3"]), "--point", "0", "--out", str(w3d)], capsys)
    assert code == EXIT_OK and "GQ order (2,4)" in out
    code, out, _ = run(["iso", "compare", str(files["as3"]), str(w3d), "--out", str(tmp_path / "map.json")], capsys)
    assert code == EXIT_OK and verdict(out) == "pass isomorphic"


def test_artifact_to_stdout_verdict_to_stderr(capsys):
    code, out, err = run(["construct", "wq", "--q", "2"], capsys)
    assert code == EXIT_OK
    S = from_json(out)
    assert (S.num_points, len(S.lines)) == (15, 15)
    assert err.startswith("pass ")


def test_round_trip_is_byte_stable(tmp_path, capsys):
    for what, extra in [("t2", ["--q", "3"]), ("laguerre-classical", ["--q", "4"]), ("gq-pseudo-arc", ["--n", "2", "--q", "2"])]:
        a, b = tmp_path / f"{what}-a.json", tmp_path / f"{what}-b.json"
        run(["construct", what, *extra, "--out", str(a)], capsys)
        run(["construct", what, *extra, "--out", str(b)], capsys)
        assert a.read_bytes() == b.read_bytes()
        assert to_json(from_json(a.read_text())) + "\n" == a.read_text()


def test_verify_laguerre_and_miquel(files, capsys):
    code, out, _ = run(["verify", "laguerre", str(files["lag3"]), "--miquel", "200", "--seed", "4"], capsys)
    assert code == EXIT_OK and "Laguerre plane of order 3" in out and "Miquel holds" in out
    code, out, _ = run(["verify", "gq", str(files["lag3"])], capsys)
    assert code == EXIT_USAGE


def test_verify_failures_exit_1(tmp_path, capsys):
    tri = tmp_path / "tri.json"
    tri.write_text(to_json(IncidenceStructure.make(POINT_LINE, 3, [(0, 1), (1, 2), (0, 2)])))
    code, out, _ = run(["verify", "gq", str(tri)], capsys)
    assert code == EXIT_FAIL and verdict(out).startswith("fail unique-collinear")
    code, out, _ = run(["derive", "payne", str(tri)], capsys)
    assert code == EXIT_FAIL


def test_pseudo_arc_and_oa(files, tmp_path, capsys):
    code, out, _ = run(["verify", "pseudo-arc", str(files["pc23"])], capsys)
    assert code == EXIT_OK and "pseudo-oval of size 10 in PG(5,3)" in out
    oa = tmp_path / "oa.txt"
    code, out, _ = run(["oa", "extract", str(files["lag3"]), "--out", str(oa)], capsys)
    assert code == EXIT_OK
    code, out, _ = run(["verify", "oa", str(oa)], capsys)
    assert code == EXIT_OK and "strength 3, index 1" in out
    bad = tmp_path / "bad.txt"
    lines = oa.read_text().splitlines()
    row = lines[1].split()
    row[0] = str((int(row[0]) + 1) % 3)
    lines[1] = " ".join(row)
    bad.write_text("\n".join(lines) + "\n")
    code, out, _ = run(["verify", "oa", str(bad)], capsys)
    assert code == EXIT_FAIL


def test_oa_extend_near_plane(tmp_path, capsys):
    from arcgeom.constructions import classical_laguerre
    from arcgeom.incidence import delete_line

    N = tmp_path / "near.json"
    N.write_text(to_json(delete_line(classical_laguerre(5), 0)))
    code, out, _ = run(["oa", "extend", str(N), "--out", str(tmp_path / "ext.json")], capsys)
    assert code == EXIT_OK and verdict(out) == "pass extensions 1 (unique)"
    code, out, _ = run(["oa", "extend", str(N), "--budget", "1", "--out", str(tmp_path / "x.json")], capsys)
    assert code == EXIT_BUDGET and verdict(out).startswith("budget ")


def test_search_audit(tmp_path, capsys):
    code, out, _ = run(["search", "audit", "--n", "2", "--q", "2", "--size", "4", "--out", str(tmp_path / "r.json")], capsys)
    assert code == EXIT_OK and verdict(out).startswith("pass complete-count 0")
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["claim_holds"] and report["complete"] == 0
    code, out, err = run(["search", "audit", "--n", "3", "--q", "2", "--size", "8", "--budget", "20", "--json"], capsys)
    assert code == EXIT_BUDGET and json.loads(out)["exhaustive"] is False
    line = json.loads(err.strip().splitlines()[-1])
    assert line["status"] == "budget" and "non-exhaustive" in line["verdict"]


def test_search_output_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["search", "pseudo-arcs", "--n", "2", "--q", "2", "--size", "5", "--symmetry", "frame", "--stable"]
    assert run(argv + ["--out", str(a)], capsys)[0] == EXIT_OK
    assert run(argv + ["--out", str(b), "--shards", "2"], capsys)[0] == EXIT_OK
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert da["arcs"] == db["arcs"]
    assert run(argv + ["--out", str(b)], capsys)[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_search_main_theorem(tmp_path, capsys):
    from arcgeom.fieldred import canonical_pseudo_conic
    from arcgeom.pseudoarcs import pseudo_arc_to_text

    K = tmp_path / "k.txt"
    K.write_text(pseudo_arc_to_text(canonical_pseudo_conic(2, 3).without(3)))
    code, out, _ = run(["search", "main-theorem", str(K), "--out", str(tmp_path / "m.json")], capsys)
    assert code == EXIT_OK and "extensions 1, all pseudo-conics" in out
    even = tmp_path / "even.txt"
    even.write_text(pseudo_arc_to_text(canonical_pseudo_conic(2, 2).without(0)))
    code, out, _ = run(["search", "main-theorem", str(even)], capsys)
    assert code == EXIT_FAIL and "precondition" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["construct"],
        ["construct", "nonsense", "--q", "3"],
        ["construct", "wq", "--q", "6"],
        ["construct", "t2star", "--q", "3"],
        ["verify", "gq", "/nonexistent/file.json"],
        ["search", "audit", "--n", "2"],
        ["search", "main-theorem"],
        ["search", "audit", "--n", "2", "--q", "2", "--size", "4", "--shards", "0"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv, capsys)[0] == EXIT_USAGE


def test_malformed_input_is_usage_error(tmp_path, capsys):
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run(["verify", "gq", str(junk)], capsys)[0] == EXIT_USAGE
    assert run(["verify", "pseudo-arc", str(junk)], capsys)[0] == EXIT_USAGE
    assert run(["verify", "oa", str(junk)], capsys)[0] == EXIT_USAGE


def test_console_process_boundary(tmp_path):
    p = subprocess.run(
        [sys.executable, "-m", "arcgeom.cli", "construct", "wq", "--q", "2", "--out", str(tmp_path / "w.json")],
        capture_output=True,
        text=True,
    )
    assert p.returncode == 0 and p.stdout.startswith("pass ")
    p = subprocess.run([sys.executable, "-m", "arcgeom.cli", "bogus"], capture_output=True, text=True)
    assert p.returncode == 2
