import json
import math

import pytest
import yaml

import main
from solvers import suites
from tools import formats


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("HSPINOR_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("HSPINOR_TOL", raising=False)
    monkeypatch.delenv("HSPINOR_LOG_LEVEL", raising=False)


def _run_json(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main.main([*argv, "--format", "json", "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_eval_scalar_f5_decays(tmp_path):
    code, body = _run_json(tmp_path, "eval", "--equation", "scalar", "--variant", "F5")
    assert code == 0
    rows = body["rows"]
    assert len(rows) == 512
    peak = max(r["abs_f"] for r in rows)
    assert rows[-1]["abs_f"] < 1e-6 * peak
    assert body["metadata"]["labels"] == ["f", "phi"]


def test_eval_axial_dirac_has_unit_envelope(tmp_path):
    code, body = _run_json(tmp_path, "eval", "--k1", "0", "--k2", "0", "--points", "64")
    assert code == 0
    for row in body["rows"]:
        assert row["abs_f1"] * math.exp(-row["z"]) == pytest.approx(1.0, abs=1e-10)
        assert row["abs_f2"] == 0


def test_eval_csv_is_deterministic(capsys):
    argv = ["eval", "--equation", "weyl", "--helicity", "-", "--points", "32"]
    assert main.main(argv) == 0
    first = capsys.readouterr().out
    assert main.main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    meta = formats.read_csv_metadata(first)
    columns, rows = formats.read_csv_rows(first)
    assert meta["command"] == "eval"
    assert meta["config"]["helicity"] == "-"
    assert columns[:5] == ["z", "re_h1", "im_h1", "abs_h1", "phase_h1"]
    assert len(rows) == 32


def test_metadata_reproduces_run(tmp_path):
    code, body = _run_json(
        tmp_path, "eval", "--rep", "hankel", "--type", "II", "--epsilon", "4", "--points", "48", name="a.json"
    )
    assert code == 0
    config = tmp_path / "rerun.yaml"
    config.write_text(yaml.safe_dump({"run": body["metadata"]["config"]}))
    code, again = _run_json(tmp_path, "eval", "--config", str(config), name="b.json")
    assert code == 0
    assert again["rows"] == body["rows"]
    assert again["metadata"] == body["metadata"]


def test_reflection_scan(tmp_path):
    code, body = _run_json(tmp_path, "reflection", "--scan", "1.5", "1000", "5")
    assert code == 0
    assert len(body["rows"]) == 5
    assert all(r["abs_R_minus_1"] < 1e-8 for r in body["rows"])
    assert body["metadata"]["max_deviation"] < 1e-8


def test_reflection_cached_rerun_matches(tmp_path):
    _, first = _run_json(tmp_path, "reflection", name="a.json")
    _, second = _run_json(tmp_path, "reflection", name="b.json")
    assert first == second
    assert [r["epsilon"] for r in first["rows"]] == [1.01, 2.0, 5.0, 100.0]


def test_reflection_rejects_bound_energy(tmp_path):
    code, _ = _run_json(tmp_path, "reflection", "--epsilons", "2,1.0")
    assert code == 2


@pytest.mark.parametrize("sign,helicity", [("-", -1), ("+", 1)])
def test_table7(tmp_path, sign, helicity):
    code, body = _run_json(tmp_path, "table7", "--helicity", sign)
    assert code == 0
    assert len(body["rows"]) == 12
    assert all(r["matches"] for r in body["rows"])
    assert body["metadata"]["helicity_tabulated"] == helicity
    assert body["metadata"]["helicity_flip_residual"] < 1e-9
    hankel = [r for r in body["rows"] if (r["rep"], r["type"]) == ("hankel", "I")]
    assert [r["large"] for r in hankel] == ["e^{-X}", "e^{-X}"]
    assert hankel[0]["small"] == ("e^{-ipz}" if helicity < 0 else "e^{+ipz}")


def test_flatlimit(tmp_path):
    code, body = _run_json(tmp_path, "flatlimit")
    assert code == 0
    assert len(body["rows"]) == 6
    assert body["metadata"]["k3"] == pytest.approx(math.sqrt(16 - 0.02))
    assert body["metadata"]["reference"] == "k3"
    assert body["metadata"]["secondary_reference"] == "p0"
    assert "error_vs_p0" in body["rows"][0]


def test_verify_detects_perturbed_factor(tmp_path):
    code, body = _run_json(
        tmp_path, "verify", "dirac", "--perturb-factor", "0.01", "--points", "128", "--no-cache"
    )
    assert code == 1
    assert "dirac.first_order_residual" in body["metadata"]["failed"]
    names = [r["name"] for r in body["rows"]]
    assert names == suites.select_checks("dirac")


def test_verify_list(capsys):
    assert main.main(["verify", "--list"]) == 0
    listed = capsys.readouterr().out.split()
    assert listed == list(suites.AVAILABLE_CHECKS)


def test_bad_points_exit_code(tmp_path):
    code, body = _run_json(tmp_path, "eval", "--points", "4")
    assert code == 2
    assert body is None


def test_unknown_config_key(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("run:\n  colour: blue\n")
    assert main.main(["eval", "--config", str(config)]) == 2


def test_missing_config_file(tmp_path):
    assert main.main(["eval", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_tolerance_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HSPINOR_TOL", "1e-7")
    _, body = _run_json(tmp_path, "reflection", name="env.json")
    assert body["metadata"]["config"]["tol"] == 1e-7
    _, body = _run_json(tmp_path, "reflection", "--tol", "1e-9", name="flag.json")
    assert body["metadata"]["config"]["tol"] == 1e-9


def test_helicity_parsing():
    assert main.parse_helicity("+1") == 1
    assert main.parse_helicity("-") == -1
    with pytest.raises(main.ConfigError):
        main.parse_helicity("up")
