import json

import pytest

from ncsg.cli import EXIT_FAIL, EXIT_INVALID, EXIT_OK, main
from ncsg.scenario import ScenarioError, builtin_scenario, catalogue, parse_scenario

SMALL = {
    "name": "small",
    "seed": 5,
    "suites": ["dilation", "ergodic", "squarefn"],
    "systems": [{
        "name": "schur_m2",
        "algebra": {"blocks": [2], "weights": [1.0]},
        "generator": {"variant": "schur", "vectors": [[0.0], [1.0]]},
    }],
    "chain": {"P": [[0.7, 0.3], [0.2, 0.8]], "T": 3},
    "params": {"p_list": [1.5, 3.0], "seeds": 2},
}


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2) if isinstance(doc, dict) else doc)
    return str(path)


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "imaginary_power:u" in out and "schur" in out
    main(["list"])
    assert capsys.readouterr().out == out


def test_catalogue_sorted():
    cat = catalogue()
    assert list(cat["generators"]) == sorted(cat["generators"])
    assert list(cat["suites"]) == sorted(cat["suites"])


def test_builtin_validates(capsys):
    assert main(["validate", "tour"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["valid"] is True


def test_run_writes_report(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, SMALL), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    assert {r["suite"] for r in report["results"]} == set(SMALL["suites"])
    assert (out / "dilation_dilation_residuals.csv").exists()
    assert (out / "ergodic_witness_table.csv").exists()


def test_parallel_is_deterministic(tmp_path):
    path = write(tmp_path, SMALL)
    main(["run", path, "--out", str(tmp_path / "a")])
    main(["run", path, "--out", str(tmp_path / "b"), "--parallel", "3"])
    for name in ("report.json", "squarefn_square_function_ratios.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override(tmp_path, monkeypatch):
    path = write(tmp_path, SMALL)
    monkeypatch.setenv("NCSG_SEED", "11")
    main(["run", path, "--out", str(tmp_path / "a")])
    assert json.loads((tmp_path / "a" / "report.json").read_text())["seed"] == 11
    monkeypatch.delenv("NCSG_SEED")
    main(["run", path, "--out", str(tmp_path / "b")])
    assert json.loads((tmp_path / "b" / "report.json").read_text())["seed"] == 5


def test_empty_suites(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, {"suites": []}), "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "report.json").read_text())["results"] == []


def test_angle_violation(tmp_path, capsys):
    doc = dict(SMALL, suites=["maximal"], params={"p_list": [3.0], "psi": 1.2})
    path = write(tmp_path, doc)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "sector angle hypothesis" in err
    line = [k for k, s in enumerate(open(path).read().splitlines(), 1) if '"psi"' in s][0]
    assert f"line {line}:" in err


def test_syntax_error(tmp_path, capsys):
    assert main(["validate", write(tmp_path, '{\n  "suites": [,]\n}')]) == EXIT_INVALID
    assert "line 2" in capsys.readouterr().err


def test_failing_check_exit_code(tmp_path):
    doc = dict(SMALL, suites=["squarefn"], params={"p_list": [3.0], "seeds": 1,
                                                  "equivalence_window": [10.0, 20.0]})
    assert main(["run", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == EXIT_FAIL


@pytest.mark.parametrize("patch,key", [
    ({"suites": ["nope"]}, "suites"),
    ({"params": {"p_list": [1.0]}, "suites": ["squarefn"]}, "p_list"),
    ({"params": {"bogus": 1}}, "params"),
    ({"chain": {"P": [[0.5, 0.6], [0.5, 0.5]]}, "suites": ["dilation"]}, "chain"),
])
def test_invalid_scenarios(patch, key):
    text = json.dumps(dict(SMALL, **patch), indent=2)
    with pytest.raises(ScenarioError, match=r"^line \d+"):
        parse_scenario(text)


def test_unknown_builtin():
    with pytest.raises(ScenarioError):
        builtin_scenario("missing")


def test_digest_tracks_seed():
    text = json.dumps(SMALL)
    assert parse_scenario(text).digest != parse_scenario(text, 6).digest
    assert parse_scenario(text).digest == parse_scenario(text).digest
