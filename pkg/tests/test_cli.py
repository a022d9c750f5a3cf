import csv
import io
import json
from fractions import Fraction

import pytest

from exclusion.cli import main


@pytest.fixture
def files(tmp_path):
    star3 = tmp_path / "star3.json"
    star3.write_text('{"num_vertices": 3, "edges": [[0, 1], [0, 2]]}')
    path4 = tmp_path / "path4.txt"
    path4.write_text("4\n0 1\n1 2\n2 3\n")
    broken = tmp_path / "broken.json"
    broken.write_text('{"num_vertices": 3, "edges": [[0, 1], [0, 2]], "rates": [1, 0, 1]}')
    return {"star3": str(star3), "path4": str(path4), "broken": str(broken), "dir": tmp_path}


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exact_star(files, capsys):
    code, out, err = run_cli(capsys, "exact", "--graph", files["star3"], "--k", "1")
    assert code == 0
    rows = table(out)
    assert [r["p_exact"] for r in rows] == ["1/2", "1/4", "1/4", "1"]
    assert rows[-1]["vertex"] == "sum" and rows[-1]["sum_rule"] == "ok"
    assert rows[0]["p"] == "0.5"
    assert err.startswith("manifest: ")


def test_exact_path(files, capsys):
    code, out, _ = run_cli(capsys, "exact", "--graph", files["path4"], "--k", "2")
    assert [r["p_exact"] for r in table(out)][:4] == ["5/13", "8/13", "8/13", "5/13"]
    assert table(out)[1]["p"] == "0.615384615385"


def test_exact_log_mode_has_no_fractions(files, capsys):
    code, out, _ = run_cli(capsys, "exact", "--graph", files["path4"], "--k", "2", "--mode", "log")
    rows = table(out)
    assert code == 0 and all(r["p_exact"] == "" for r in rows)
    assert float(rows[0]["p"]) == pytest.approx(5 / 13, abs=1e-12)


def test_exact_k_zero(files, capsys):
    code, _, err = run_cli(capsys, "exact", "--graph", files["path4"], "--k", "0")
    assert code == 2
    assert "K must satisfy 0 < K <= N" in err


def test_exact_cap(files, capsys):
    code, _, err = run_cli(capsys, "exact", "--graph", files["path4"], "--k", "2", "--cap", "3", "--method", "enumerate")
    assert code == 2 and "cap" in err


def test_closed_form_star_all_k(capsys):
    code, out, _ = run_cli(capsys, "closed-form", "--family", "star", "--n", "25", "--all-k")
    rows = table(out)
    assert code == 0 and len(rows) == 25
    ratios = [Fraction(r["ratio_exact"]) for r in rows]
    steps = {b - a for a, b in zip(ratios, ratios[1:])}
    assert len(steps) == 1
    assert rows[0]["ratio_exact"] == "1/24" and rows[-1]["ratio_exact"] == "1"


def test_closed_form_path_and_star_full(capsys):
    _, out, _ = run_cli(capsys, "closed-form", "--family", "path", "--n", "25", "--k", "12")
    row = table(out)[0]
    assert float(row["p_end"]) == pytest.approx(0.32174, abs=5e-6)
    assert float(row["p_interior"]) == pytest.approx(0.49376, abs=5e-6)
    _, out, _ = run_cli(capsys, "closed-form", "--family", "star", "--n", "3", "--k", "3")
    row = table(out)[0]
    assert row["p_center_exact"] == row["p_leaf_exact"] == "1"


def test_closed_form_path_n2_has_no_interior(capsys):
    code, out, _ = run_cli(capsys, "closed-form", "--family", "path", "--n", "2", "--all-k")
    rows = table(out)
    assert code == 0 and [r["p_end_exact"] for r in rows] == ["1/2", "1"]
    assert all(r["p_interior"] == "" for r in rows)


def test_simulate_star(files, capsys):
    code, out, _ = run_cli(capsys, "simulate", "--graph", files["star3"], "--k", "1", "--horizon", "1e5", "--seed", "42")
    rows = table(out)
    assert code == 0
    for r, want in zip(rows[:3], [0.5, 0.25, 0.25]):
        assert float(r["p_exact"]) == want
        assert abs(float(r["p_hat"]) - want) < 5 * float(r["stderr"])


def test_simulate_full(files, capsys):
    _, out, _ = run_cli(capsys, "simulate", "--graph", files["path4"], "--k", "4", "--horizon", "100")
    rows = table(out)[:4]
    assert all(r["p_hat"] == "1" and r["stderr"] == "0" for r in rows)


def test_simulate_bad_horizon(files, capsys):
    code, _, err = run_cli(capsys, "simulate", "--graph", files["star3"], "--k", "1", "--horizon", "0")
    assert code == 2


def test_simulate_manifest_written_to_file(files, capsys):
    out = files["dir"] / "sim.csv"
    code, _, _ = run_cli(capsys, "simulate", "--graph", files["star3"], "--k", "1", "--horizon", "1e3", "--output", str(out))
    manifest = json.loads((files["dir"] / "sim.csv.manifest.json").read_text())
    assert code == 0
    assert manifest["command"] == "simulate"
    assert manifest["parameters"]["seed"] == 0
    assert manifest["parameters"]["burn_in"] == 10.0
    assert manifest["weight_mode"] == "rational"
    assert "PCG64" in manifest["rng"]


def test_simulate_manifest_on_failure(files, capsys):
    target = files["dir"] / "fail.json"
    code, _, _ = run_cli(capsys, "simulate", "--graph", files["star3"], "--k", "9", "--manifest", str(target))
    assert code == 2
    assert json.loads(target.read_text())["status"] == "error"


def test_seed_auto_is_reported(files, capsys):
    out = files["dir"] / "auto.csv"
    code, _, err = run_cli(capsys, "simulate", "--graph", files["star3"], "--k", "1", "--horizon", "1e3",
                           "--seed", "auto", "--output", str(out))
    seed = int(err.split("seed: ")[1].split()[0])
    manifest = json.loads((files["dir"] / "auto.csv.manifest.json").read_text())
    assert manifest["parameters"]["seed"] == seed


def test_sweep_star_exact_only(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--family", "star", "--n", "25", "--horizon", "0")
    rows = table(out)
    assert code == 0 and len(rows) == 50
    assert {r["class"] for r in rows} == {"deg=1", "deg=24"}
    center12 = next(r for r in rows if r["K"] == "12" and r["class"] == "deg=24")
    assert float(center12["p_exact"]) == pytest.approx(288 / 301, abs=1e-12)
    assert center12["p_sim"] == ""


def test_sweep_grid_classes(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--family", "grid", "--rows", "5", "--cols", "5", "--horizon", "2e3")
    rows = table(out)
    assert code == 0 and len(rows) == 75
    assert {(r["class"], r["size"]) for r in rows} == {("deg=2", "4"), ("deg=3", "12"), ("deg=4", "9")}
    assert all(r["p_exact"] and r["p_sim"] for r in rows)


def test_sweep_path2(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--family", "path", "--n", "2", "--horizon", "0")
    rows = table(out)
    assert [(r["K"], r["p_exact"]) for r in rows] == [("1", "0.5"), ("2", "1")]


def test_sweep_per_vertex(files, capsys):
    _, out, _ = run_cli(capsys, "sweep", "--graph", files["path4"], "--horizon", "0", "--per-vertex")
    assert len(table(out)) == 16


def test_verify_path4(files, capsys):
    code, out, _ = run_cli(capsys, "verify", "--graph", files["path4"])
    rows = table(out)
    assert code == 0
    assert all(r["status"] == "PASS" for r in rows)
    checks = {r["check"] for r in rows}
    assert {"irreducibility", "detailed_balance", "oracle_tv", "sum_rule", "log_concavity"} <= checks


def test_verify_star3_sequence(files, capsys):
    code, out, _ = run_cli(capsys, "verify", "--graph", files["star3"])
    mono = next(r for r in table(out) if r["check"] == "monotonicity(1,0)")
    assert code == 0 and mono["detail"] == "1/2 3/4 1"


def test_verify_rejects_corrupted_rates(files, capsys):
    code, out, err = run_cli(capsys, "verify", "--graph", files["broken"])
    assert code == 2 and out == ""
    assert "nonpositive rate at vertex 1" in err


def test_verify_skips_above_oracle_cap(files, capsys):
    code, out, _ = run_cli(capsys, "verify", "--graph", files["path4"], "--oracle-cap", "3")
    rows = table(out)
    skipped = [r for r in rows if r["status"] == "SKIP"]
    assert code == 0 and skipped and all("oracle cap" in r["detail"] for r in skipped)


def test_pretty_output(files, capsys):
    _, out, _ = run_cli(capsys, "exact", "--graph", files["star3"], "--k", "1", "--pretty")
    lines = out.splitlines()
    assert lines[0].split() == ["K", "vertex", "degree", "rate", "D", "p", "p_exact", "sum_rule"]
    assert "," not in out


def test_replay_reproduces(files, capsys):
    first = files["dir"] / "a.csv"
    again = files["dir"] / "b.csv"
    main(["sweep", "--graph", files["star3"], "--horizon", "1e4", "--seed", "5", "--output", str(first)])
    main(["replay", str(first) + ".manifest.json", "--output", str(again)])
    capsys.readouterr()
    assert first.read_bytes() == again.read_bytes()


def test_invalid_graph_file(files, capsys):
    bad = files["dir"] / "bad.txt"
    bad.write_text("3\n0 1\n0 7\n")
    code, _, err = run_cli(capsys, "exact", "--graph", str(bad), "--k", "1")
    assert code == 2 and "line 3" in err
