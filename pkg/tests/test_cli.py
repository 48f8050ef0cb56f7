import json
import math

import pytest

from quadcoh import acceptance
from quadcoh.cli import (
    EXIT_CONVERGENCE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SELFTEST,
    EXIT_UNSUPPORTED,
    RunConfig,
    main,
    parse_csv,
    render,
)
from quadcoh.errors import ContractError


@pytest.fixture
def state_file(tmp_path):
    def write(doc, name="state.json"):
        path = tmp_path / name
        path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(path)

    return write


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_coherence_thermal(capsys, state_file):
    code, out, _ = run(capsys, ["coherence", "--state", state_file({"type": "thermal", "n_mean": 1})])
    assert code == EXIT_OK
    (row,) = parse_csv(out)
    assert row["C"] == pytest.approx(1.4472025, abs=5e-8)
    assert row["S_reg"] == pytest.approx(-0.1111969, abs=5e-8)
    assert row["C_method"] == "analytic"
    assert out.splitlines()[0] == "C,C_err,C_method,S_reg,S_method"


def test_coherence_vacuum_json(capsys, state_file):
    code, out, _ = run(capsys, ["coherence", "--state", state_file({"type": "gaussian"}), "--format", "json"])
    assert code == EXIT_OK
    (row,) = json.loads(out)
    assert row["C"] == pytest.approx(2.5066283, abs=5e-8)
    assert row["S_reg"] == pytest.approx(0.7257914, abs=5e-8)


def test_coherence_numeric_row(capsys, state_file):
    doc = {"type": "fock_matrix", "entries": [[0.5, 0], [0, 0.5]]}
    code, out, _ = run(capsys, ["coherence", "--state", state_file(doc)])
    assert code == EXIT_OK
    (row,) = parse_csv(out)
    assert row["C_method"] == "numeric_kernel" and row["S_method"] == "numeric"
    assert 0 < row["C_err"] < 1e-6 * row["C"]


def test_malformed_json_exit_2(capsys, state_file):
    code, _, err = run(capsys, ["coherence", "--state", state_file("{oops")])
    assert code == EXIT_PARSE
    assert "malformed" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["nonsense"],
        ["fig1", "--nmax", "x"],
        ["fig1", "--comparator", "thermal"],
        ["fig1", "--grid-points", "64"],
        ["fig1", "--tolerance", "-1"],
        ["fig1", "--nmax", "0"],
        ["sweep", "squeeze", "--state", "missing.json"],
    ],
)
def test_parse_errors_exit_2(capsys, argv):
    assert run(capsys, argv)[0] == EXIT_PARSE


def test_convergence_failure_exit_3(capsys, state_file):
    path = state_file({"type": "fock_vector", "coefficients": [0, 1]})
    code, out, err = run(capsys, ["coherence", "--state", path, "--tolerance", "1e-17"])
    assert code == EXIT_CONVERGENCE
    assert "convergence" in err and out == ""


def test_fig1_partial_output_on_convergence_failure(capsys):
    code, out, _ = run(capsys, ["fig1", "--nmax", "3", "--tolerance", "1e-17"])
    assert code == EXIT_CONVERGENCE
    rows = parse_csv(out)
    assert len(rows) == 1 and rows[0]["n"] == 0


def test_beamsplit_mixed_exit_4(capsys, state_file):
    a = state_file({"type": "thermal", "n_mean": 1}, "a.json")
    b = state_file({"type": "gaussian"}, "b.json")
    assert run(capsys, ["beamsplit", "--state", a, "--state2", b])[0] == EXIT_UNSUPPORTED


def test_beamsplit_rows(capsys, state_file):
    v = state_file({"type": "gaussian"}, "v.json")
    f1 = state_file({"type": "fock_vector", "coefficients": [0, 1]}, "f1.json")
    code, out, _ = run(capsys, ["beamsplit", "--state", f1, "--state2", v])
    assert code == EXIT_OK
    (row,) = parse_csv(out)
    assert row["C_before"] == pytest.approx(8.0, abs=1e-4)
    assert row["C_after"] == pytest.approx(8.0, abs=1e-4)
    code, out, _ = run(capsys, ["beamsplit", "--state", v, "--state2", v, "--theta", "0.7"])
    (row,) = parse_csv(out)
    assert row["C_before"] == pytest.approx(2 * math.pi, rel=1e-8)
    assert row["C_after"] == pytest.approx(2 * math.pi, rel=1e-8)
    code, out, _ = run(capsys, ["beamsplit", "--state", f1, "--state2", v, "--theta", "0"])
    (row,) = parse_csv(out)
    assert row["abs_diff"] < 1e-8


def test_fig1_curve(capsys):
    code, out, _ = run(capsys, ["fig1", "--nmax", "20"])
    assert code == EXIT_OK
    rows = parse_csv(out)
    ratios = [r["ratio"] for r in rows]
    assert [r["n"] for r in rows] == list(range(21))
    assert ratios[0] == 1.0
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[1] == pytest.approx((8 / math.sqrt(2 * math.pi)) / (math.sqrt(2 * math.pi) * (1 + math.sqrt(2))), rel=1e-8)


def test_fig1_coherent_comparator(capsys):
    code, out, _ = run(capsys, ["fig1", "--nmax", "4", "--comparator", "coherent"])
    rows = parse_csv(out)
    assert all(r["C_gauss"] == pytest.approx(math.sqrt(2 * math.pi), rel=1e-8) for r in rows)
    assert rows[-1]["ratio"] > 1


def test_csv_round_trip_is_byte_identical(capsys):
    _, out, _ = run(capsys, ["fig1", "--nmax", "6"])
    assert "\r" not in out
    assert render(parse_csv(out), "csv") == out


def test_sweep_squeeze(capsys, state_file):
    path = state_file({"type": "fock_vector", "coefficients": [0, 1]})
    code, out, _ = run(capsys, ["sweep", "squeeze", "--state", path, "--param", "0.5,1,2"])
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert [r["lambda"] for r in rows] == [0.5, 1.0, 2.0]
    for r in rows:
        assert r["C_over_lambda"] == pytest.approx(3.1915383, abs=1e-4)
    s0 = rows[1]["S_reg"]
    assert all(r["S_minus_ln_lambda"] == pytest.approx(s0, abs=1e-7) for r in rows)


def test_sweep_single_lambda_flag(capsys, state_file):
    path = state_file({"type": "gaussian"})
    _, out, _ = run(capsys, ["sweep", "squeeze", "--state", path, "--lambda", "3"])
    (row,) = parse_csv(out)
    assert row["C"] == pytest.approx(3 * math.sqrt(2 * math.pi), rel=1e-8)


def test_sweep_rotate_matches_curve(capsys, state_file):
    path = state_file({"type": "gaussian", "delta_x": 1.0})
    code, out, _ = run(capsys, ["sweep", "rotate", "--state", path])
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert len(rows) == 16
    for r in rows:
        c, s = math.cos(r["tau"]), math.sin(r["tau"])
        expected = 2 * math.sqrt(2 * math.pi) * math.sqrt(c * c * 1.0 + s * s / 16)
        assert r["C"] == pytest.approx(expected, rel=1e-8)


def test_sweep_displace(capsys, state_file):
    path = state_file({"type": "fock_vector", "coefficients": [0, 0, 1]})
    code, out, _ = run(capsys, ["sweep", "displace", "--state", path, "--param", "2:0,0:2,1:-3"])
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert [(r["x0"], r["y0"]) for r in rows] == [(2, 0), (0, 2), (1, -3)]
    assert max(r["C"] for r in rows) - min(r["C"] for r in rows) < 1e-8


def test_sweep_sigma(capsys, state_file):
    path = state_file({"type": "gaussian"})
    code, out, _ = run(capsys, ["sweep", "sigma", "--state", path, "--param", "0.5,0.1"])
    assert code == EXIT_OK
    for r in parse_csv(out):
        assert r["C"] == pytest.approx(r["C_analytic"], rel=1e-6)
        assert r["C_analytic"] == pytest.approx(2 * math.sqrt(2 * math.pi) * r["sigma"], rel=1e-8)
    rows = parse_csv(out)
    target = -0.5 * (1 + math.log(2 * math.pi * 0.25))
    assert abs(rows[1]["chi_limit"] - target) < abs(rows[0]["chi_limit"] - target)


def test_sweep_bad_params(capsys, state_file):
    path = state_file({"type": "gaussian"})
    assert run(capsys, ["sweep", "squeeze", "--state", path, "--param", "-1"])[0] == EXIT_PARSE
    assert run(capsys, ["sweep", "displace", "--state", path, "--param", "1,2"])[0] == EXIT_PARSE


def test_sweep_product_unsupported(capsys, state_file):
    path = state_file({"type": "product", "factors": [{"type": "gaussian"}, {"type": "gaussian"}]})
    assert run(capsys, ["sweep", "squeeze", "--state", path])[0] == EXIT_UNSUPPORTED


def test_config_file_and_override(capsys, state_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"output_format": "json", "comparator": "coherent"}))
    _, out, _ = run(capsys, ["fig1", "--nmax", "2", "--config", str(cfg)])
    rows = json.loads(out)
    assert rows[2]["C_gauss"] == pytest.approx(math.sqrt(2 * math.pi), rel=1e-8)
    _, out, _ = run(capsys, ["fig1", "--nmax", "2", "--config", str(cfg), "--format", "csv", "--comparator", "squeezed_vacuum"])
    rows = parse_csv(out)
    assert rows[1]["ratio"] == pytest.approx(0.5273, abs=1e-3)


def test_bad_config_exit_2(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid_points": 10}))
    assert run(capsys, ["fig1", "--config", str(cfg)])[0] == EXIT_PARSE
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run(capsys, ["fig1", "--config", str(cfg)])[0] == EXIT_PARSE


def test_run_config_validation():
    with pytest.raises(ContractError):
        RunConfig(tolerance=0)
    with pytest.raises(ContractError):
        RunConfig(grid_points=127)
    assert RunConfig().options().tolerance == 1e-6


def test_output_file(capsys, tmp_path):
    out_path = tmp_path / "fig1.csv"
    code, out, _ = run(capsys, ["fig1", "--nmax", "2", "--out", str(out_path)])
    assert code == EXIT_OK and out == ""
    assert out_path.read_text().startswith("n,C_fock,C_gauss,ratio\n")


def test_output_independent_of_thread_count(capsys, state_file, monkeypatch):
    path = state_file({"type": "fock_matrix", "entries": [[0.5, 0], [0, 0.5]]})
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("QUADCOH_THREADS", threads)
        outs.append(run(capsys, ["coherence", "--state", path])[1])
    assert outs[0] == outs[1]


@pytest.fixture
def quick_criteria(monkeypatch):
    # Fock 1 coherence and the chi limit: both fast
    monkeypatch.setattr(acceptance, "CRITERIA", [acceptance.CRITERIA[2], acceptance.CRITERIA[11]])


def test_selftest_report(capsys, quick_criteria):
    code, out, _ = run(capsys, ["selftest"])
    assert code == EXIT_OK
    assert out.count("[PASS]") == 2
    code, out, _ = run(capsys, ["selftest", "--json"])
    doc = json.loads(out)
    assert code == EXIT_OK and doc["passed"]
    assert {"name", "expected", "got", "tol"} <= set(doc["criteria"][0])


def test_selftest_tight_tolerance_fails(capsys, quick_criteria):
    code, out, err = run(capsys, ["selftest", "--tolerance", "1e-17"])
    assert code == EXIT_SELFTEST
    assert "[FAIL]" in out and "failed criteria" in err
