import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cvbell.cli import main


def run_cli(argv):
    return main(argv)


class TestEval:
    def test_functional_six_modes(self, capsys):
        assert run_cli(["eval", "--ineq", "functional", "--n", "6", "--r", "3",
                        "--eta", "1", "--p", "1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ratio"] > 1
        assert payload["violated"] is True
        assert payload["order"] == 256

    def test_cfrd_nine_modes_below_bound(self, capsys):
        assert run_cli(["eval", "--ineq", "cfrd", "--n", "9", "--r", "4"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ratio"] <= 1
        assert payload["ratio"] == pytest.approx(64 / 81, rel=1e-10)

    def test_mk_three_modes(self, capsys):
        assert run_cli(["eval", "--ineq", "mk", "--n", "3", "--r", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ratio"] == pytest.approx(1.0159, abs=1e-4)

    def test_noncanonical_split_uses_numeric_path(self, capsys):
        assert run_cli(["eval", "--ineq", "functional", "--n", "4", "--r", "1",
                        "--order", "64"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ratio"] <= 1
        assert payload["order"] == 64

    def test_out_file_json(self, tmp_path, capsys):
        out = tmp_path / "res.json"
        assert run_cli(["eval", "--ineq", "mk", "--n", "3", "--out", str(out)]) == 0
        capsys.readouterr()
        data = json.loads(out.read_text())
        assert data["inequality"] == "mk"
        meta = json.loads((tmp_path / "res.json.meta.json").read_text())
        assert meta["command"] == "eval"
        assert meta["config"]["order"] == 256

    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli(["eval", "--ineq", "bogus", "--n", "3"])
        assert err.value.code == 2
        capsys.readouterr()

    def test_semantic_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli(["eval", "--ineq", "functional", "--n", "6", "--eta", "1.5"])
        assert err.value.code == 2
        capsys.readouterr()


@pytest.fixture(scope="module")
def fig1(tmp_path_factory):
    out = tmp_path_factory.mktemp("f1") / "fig1.csv"
    code = run_cli(["figure1", "--n-min", "4", "--n-max", "20",
                    "--out", str(out)])
    assert code == 0
    return out


class TestFigure1:

    def test_columns_and_crossings(self, fig1, capsys):
        capsys.readouterr()
        lines = fig1.read_text().splitlines()
        assert lines[0] == "N,B_optimal,B_cfrd"
        table = {int(row.split(",")[0]): tuple(map(float, row.split(",")[1:]))
                 for row in lines[1:]}
        assert table[4][0] <= 1 < table[5][0]
        assert table[9][1] <= 1 < table[10][1]
        for n, (b_opt, b_cfrd) in table.items():
            assert b_opt >= b_cfrd

    def test_exponential_trend(self, fig1):
        lines = fig1.read_text().splitlines()[1:]
        ns = np.array([int(r.split(",")[0]) for r in lines])
        bs = np.array([float(r.split(",")[1]) for r in lines])
        slope = np.polyfit(ns, np.log(bs), 1)[0]
        assert slope > 0

    def test_deterministic_output(self, fig1, tmp_path, capsys):
        out2 = tmp_path / "fig1_again.csv"
        assert run_cli(["figure1", "--n-min", "4", "--n-max", "20",
                        "--out", str(out2)]) == 0
        capsys.readouterr()
        assert out2.read_bytes() == fig1.read_bytes()

    def test_metadata_sidecar_records_order(self, fig1):
        meta = json.loads((fig1.parent / (fig1.name + ".meta.json")).read_text())
        assert meta["config"]["order"] == 256
        assert meta["command"] == "figure1"

    def test_line_endings(self, fig1):
        raw = fig1.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


@pytest.fixture(scope="module")
def fig2(tmp_path_factory):
    out = tmp_path_factory.mktemp("f2") / "fig2.csv"
    code = run_cli(["figure2", "--n-min", "3", "--n-max", "10",
                    "--out", str(out)])
    assert code == 0
    return out


class TestFigure2:

    def test_contents(self, fig2, capsys):
        capsys.readouterr()
        lines = fig2.read_text().splitlines()
        assert lines[0] == "inequality,N,eta_crit,p_crit,no_violation"
        rows = {}
        for row in lines[1:]:
            ineq, n, eta_c, p_c, flag = row.split(",")
            rows[(ineq, int(n))] = (eta_c, p_c, flag)

        eta_c, p_c, flag = rows[("functional", 4)]
        assert eta_c == "" and p_c == "" and flag == "eta+p"
        eta_c, _, flag = rows[("functional", 10)]
        assert flag == ""
        assert abs(float(eta_c) - 0.80) < 0.01
        eta_c, _, _ = rows[("mk", 3)]
        assert abs(float(eta_c) - 0.98954) < 1e-4
        eta_c, _, flag = rows[("cfrd", 10)]
        assert flag == ""

    def test_single_inequality_selection(self, tmp_path, capsys):
        out = tmp_path / "mk_only.csv"
        assert run_cli(["figure2", "--n-min", "3", "--n-max", "5",
                        "--ineq", "mk", "--out", str(out)]) == 0
        capsys.readouterr()
        body = out.read_text().splitlines()[1:]
        assert len(body) == 3
        assert all(row.startswith("mk,") for row in body)


class TestOracleCheck:
    def test_default_grid_passes(self, capsys):
        assert run_cli(["oracle-check", "--n-min", "3", "--n-max", "5"]) == 0
        report = capsys.readouterr().out
        assert "status: OK" in report
        assert "r-sweep" in report

    def test_perturbed_epsilon_detected(self, capsys):
        code = run_cli(["oracle-check", "--n-min", "4", "--n-max", "4",
                        "--perturb-eps", "0.1"])
        report = capsys.readouterr().out
        assert code == 1
        assert "BREACH" in report

    def test_report_file(self, tmp_path, capsys):
        out = tmp_path / "report.txt"
        assert run_cli(["oracle-check", "--n-min", "3", "--n-max", "3",
                        "--out", str(out)]) == 0
        capsys.readouterr()
        assert "status: OK" in out.read_text()


class TestOptimize:
    def test_five_mode_run(self, tmp_path, capsys):
        out = tmp_path / "opt.csv"
        code = run_cli(["optimize", "--n", "5", "--out", str(out)])
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert payload["converged"] is True
        assert payload["fit_relative_l2_error"] < 1e-3
        assert payload["epsilon_deviation"] < 1e-3
        lines = out.read_text().splitlines()
        assert lines[0] == "node,f_value"
        assert len(lines) > 10
        summary = json.loads((tmp_path / "opt.csv.summary.json").read_text())
        assert summary == payload

    def test_init_sweep_consistency(self, tmp_path, capsys):
        ratios = []
        for init in ("identity", "signbin"):
            out = tmp_path / f"opt_{init}.csv"
            assert run_cli(["optimize", "--n", "5", "--init", init,
                            "--out", str(out)]) == 0
            ratios.append(json.loads(capsys.readouterr().out)["ratio"])
        assert abs(ratios[0] - ratios[1]) < 1e-6


class TestEntryPoint:
    def test_module_invocation(self):
        env = dict(os.environ)
        env["PYTHONPATH"] = os.pathsep.join(
            [os.path.join(os.path.dirname(__file__), "..", "src"),
             env.get("PYTHONPATH", "")])
        proc = subprocess.run(
            [sys.executable, "-m", "cvbell.cli", "eval", "--ineq", "mk",
             "--n", "3", "--order", "64"],
            capture_output=True, text=True, env=env)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["ratio"] > 1
