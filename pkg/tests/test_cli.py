import csv
import json

import pytest

from saddleloop.cli import main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_abelian_row_count_and_manifest(tmp_path, capsys):
    out = tmp_path / "ab.csv"
    code, stdout, _ = run(["abelian", "--a", "1",
                           "--t-grid=-1.9:-1e-4:50", "--out", str(out)], capsys)
    assert code == 0
    assert str(out) in stdout
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "j_minus1", "j0", "j1",
                       "err_minus1", "err0", "err1", "converged"]
    assert len(rows) == 51
    man = json.loads((tmp_path / "ab.csv.manifest.json").read_text())
    assert man["config"]["a"] == 1.0
    assert man["config"]["t_grid"] == "-1.9:-1e-4:50"
    assert man["artifacts"] == [str(out)]
    assert man["wall_time_s"] >= 0.0
    assert not man["degraded"]
    assert "version" in man


def test_space_separated_negative_grid(tmp_path, capsys):
    # argparse alone rejects a leading-dash value; the wrapper merges it
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    code1, _, _ = run(["abelian", "--a", "1", "--t-grid", "-1.0:-0.5:5",
                       "--out", str(a)], capsys)
    code2, _, _ = run(["abelian", "--a", "1", "--t-grid=-1.0:-0.5:5",
                       "--out", str(b)], capsys)
    assert code1 == code2 == 0
    assert a.read_bytes() == b.read_bytes()


def test_reruns_byte_identical(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(["centroid", "--a", "1", "--annulus", "plus",
                          "--n", "12", "--out", str(path)], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_pf_json_payload(tmp_path, capsys):
    out = tmp_path / "pf.json"
    code, _, _ = run(["pf", "--a", "0.5", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    for key in ("a", "A1", "A0", "B", "log_coefficient", "p_const",
                "p_lin", "q"):
        assert key in doc, key
    assert doc["a"] == 0.5
    assert len(doc["A1"]) == 3 and len(doc["A1"][0]) == 3


def test_melnikov_both_families(tmp_path, capsys):
    out1 = tmp_path / "mel_app.csv"
    code, _, _ = run(["melnikov", "--family", "appendix", "--mu2", "0.01",
                      "--h-grid=-1.0:-0.1:4", "--out", str(out1)], capsys)
    assert code == 0
    rows = list(csv.reader(out1.open()))
    assert rows[0] == ["h", "value"] and len(rows) == 5

    out2 = tmp_path / "mel_nf.csv"
    code, _, _ = run(["melnikov", "--family", "normal", "--a", "1",
                      "--alpha", "0.3", "--beta", "-0.2",
                      "--t-grid=-1.5:-0.1:4", "--out", str(out2)], capsys)
    assert code == 0
    rows = list(csv.reader(out2.open()))
    assert rows[0][:2] == ["t", "value"] and len(rows) == 5


def test_melnikov_validation(tmp_path, capsys):
    code, _, err = run(["melnikov", "--family", "appendix", "--mu2", "0.01",
                        "--h-grid=-2.0:-0.1:4",
                        "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 2
    assert "(-4/3, 0)" in err

    code, _, err = run(["melnikov", "--family", "appendix", "--a", "1",
                        "--mu2", "0.0", "--h-grid=-1:-0.1:3",
                        "--out", str(tmp_path / "y.csv")], capsys)
    assert code == 2
    assert "a not applicable to family=appendix" in err


def test_sim_traj_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = run(["sim", "--family", "normal", "--a", "1", "--eps", "0",
                      "--traj", "--start", "1.0,0.5", "--T", "5",
                      "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "x", "y", "H"]
    assert len(rows) > 10
    h0 = float(rows[1][3])
    assert all(abs(float(r[3]) - h0) < 1e-7 for r in rows[1:])


def test_sim_census_json(tmp_path, capsys):
    out = tmp_path / "census.json"
    code, _, _ = run(["sim", "--family", "normal", "--a", "1",
                      "--eps", "0.001",
                      "--f", "0.3,-0.1,0.2,0.05,-0.4,0.15",
                      "--g", "-0.2,0.1,0.3,-0.25,0.05,-0.1",
                      "--census", "--n", "100", "--T", "60",
                      "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["family"] == "normal"
    assert doc["epsilon"] == 0.001
    assert doc["grid_size"] == 100
    assert isinstance(doc["cycles"], list)
    for c in doc["cycles"]:
        assert set(c) == {"section_coordinate", "energy", "stability",
                          "return_derivative"}


def test_sim_requires_exactly_one_mode(tmp_path, capsys):
    base = ["sim", "--family", "normal", "--a", "1", "--eps", "0.001",
            "--out", str(tmp_path / "x.json")]
    code, _, err = run(base, capsys)
    assert code == 2 and "exactly one of" in err
    code, _, err = run(base + ["--census", "--traj"], capsys)
    assert code == 2 and "exactly one of" in err


def test_sim_family_validation(tmp_path, capsys):
    code, _, err = run(["sim", "--family", "appendix", "--a", "1",
                        "--eps", "1e-3", "--census",
                        "--out", str(tmp_path / "x.json")], capsys)
    assert code == 2
    assert "a not applicable to family=appendix" in err


def test_config_file_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"a": 0.5}))
    out = tmp_path / "c.csv"
    code, _, _ = run(["centroid", "--a", "1", "--annulus", "plus",
                      "--n", "8", "--config", str(cfg),
                      "--out", str(out)], capsys)
    assert code == 0
    man = json.loads((tmp_path / "c.csv.manifest.json").read_text())
    assert man["config"]["a"] == 0.5
    # curve starts at the a=0.5 center energy, t0 = -2.5
    first = next(csv.reader(out.open()))
    rows = list(csv.reader(out.open()))
    assert float(rows[1][0]) == pytest.approx(-2.5, abs=1e-3)


def test_config_unknown_field(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(["centroid", "--a", "1", "--config", str(cfg),
                        "--out", str(tmp_path / "c.csv")], capsys)
    assert code == 2
    assert "unknown field 'bogus'" in err


def test_grid_syntax_error(tmp_path, capsys):
    code, _, err = run(["abelian", "--a", "1", "--t-grid=-1:-0.5",
                        "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 2
    assert "LO:HI:N" in err


def test_out_dir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SADDLELOOP_OUT_DIR", str(tmp_path / "envout"))
    code, stdout, _ = run(["pf", "--a", "1.5"], capsys)
    assert code == 0
    assert (tmp_path / "envout" / "pf.json").exists()
    assert (tmp_path / "envout" / "pf.json.manifest.json").exists()


def test_verify_subcommand(tmp_path, capsys):
    out = tmp_path / "ver.json"
    code, stdout, _ = run(["verify", "--criteria", "3,5",
                           "--out", str(out)], capsys)
    assert code == 0
    assert "2/2 criteria passed" in stdout
    doc = json.loads(out.read_text())
    assert [r["number"] for r in doc["results"]] == [3, 5]
    assert all(r["passed"] for r in doc["results"])


def test_verify_rejects_bad_criterion(capsys):
    code, _, err = run(["verify", "--criteria", "3,99"], capsys)
    assert code == 2
