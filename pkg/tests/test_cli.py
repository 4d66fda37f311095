import csv
import io
import json
import subprocess
import sys

import pytest

from shadowcorr.cli import CSV_HEADER, ScenarioError, main, parse_grid, parse_scenario

import oracles


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv, "--format", "json")
    assert code == 0, err
    return json.loads(out)


def csv_rows(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


@pytest.fixture
def scenario_file(tmp_path):
    def write(obj):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj, encoding="utf-8")
        return str(path)
    return write


class TestMap:
    def test_table_one_midpoint(self):
        rec = run_json("map", "--eps1", "1e-4", "--eps2", "1e-4", "--rho-h", "0.5")
        assert rec["rho"] == pytest.approx(0.0232, abs=5e-5)
        assert rec["eps1"] == pytest.approx(1e-4, rel=1e-12)

    def test_independent_medians(self):
        rec = run_json("map", "--beta1", "0", "--beta2", "0", "--rho-h", "0")
        assert rec["rho"] == 0.0
        assert rec["joint_failure"] == 0.25

    def test_budget_link(self, scenario_file):
        path = scenario_file({
            "links": [{"p_t_dbm": 23, "p_l_db": 100, "p_th_dbm": -100, "sigma_db": 8}, {"beta": 1.0}],
            "rho_h": 0.3,
        })
        rec = run_json("map", "--scenario", path)
        assert rec["beta1"] == 2.875
        assert rec["beta2"] == 1.0

    def test_scenario_echo_round_trips(self, scenario_file):
        doc = {"links": [{"epsilon": 0.01}, {"beta": 2.0}], "rho_h": 0.4}
        rec = run_json("map", "--scenario", scenario_file(doc))
        assert parse_scenario(rec["scenario"]).to_json() == doc
        assert {"beta1", "beta2", "eps1", "eps2", "joint_failure", "rho", "rho_h"} <= set(rec)

    def test_flags_override_file(self, scenario_file):
        path = scenario_file({"links": [{"epsilon": 0.01}, {"epsilon": 0.01}], "rho_h": 0.4})
        rec = run_json("map", "--scenario", path, "--eps2", "0.1", "--rho-h", "0.2")
        assert rec["eps1"] == pytest.approx(0.01, rel=1e-12)
        assert rec["eps2"] == pytest.approx(0.1, rel=1e-12)
        assert rec["rho_h"] == 0.2

    def test_plain_table_output(self):
        code, out, _ = run("map", "--eps1", "0.1", "--eps2", "0.1", "--rho-h", "0.5")
        assert code == 0
        fields = dict(line.split() for line in out.strip().splitlines())
        assert float(fields["joint_failure"]) == pytest.approx(
            float(oracles.orthant_mp(1.2815515655446004, 1.2815515655446004, 0.5)), rel=1e-5)

    def test_precision(self):
        _, out3, _ = run("map", "--eps1", "1e-4", "--eps2", "1e-4", "--rho-h", "0.5",
                         "--format", "csv", "--precision", "3")
        _, out12, _ = run("map", "--eps1", "1e-4", "--eps2", "1e-4", "--rho-h", "0.5",
                          "--format", "csv", "--precision", "12")
        header, (row3,) = csv_rows(out3)
        _, (row12,) = csv_rows(out12)
        rho = header.index("rho")
        assert row3[rho] == 0.0232
        assert row12[rho] == pytest.approx(oracles.TABLE_ONE_EXACT[0.5][1], rel=1e-11)


class TestMalformedInput:
    @pytest.mark.parametrize("doc,field", [
        ({"links": [{"beta": 1, "epsilon": 0.1}, {"beta": 1}], "rho_h": 0}, "links[0]"),
        ({"links": [{"beta": 1}, {"beta": 1, "gain": 3}], "rho_h": 0}, "links[1]"),
        ({"links": [{"beta": 1}], "rho_h": 0}, "links"),
        ({"links": [{"beta": 1}, {"beta": 1}], "rho_h": 1.5}, "rho_h"),
        ({"links": [{"beta": 1}, {"beta": 1}], "rho_h": 0, "extra": 1}, "extra"),
        ({"links": [{"beta": 1}, {"p_t_dbm": 1, "p_l_db": 1}], "rho_h": 0}, "links[1]"),
        ({"links": [{"beta": "1"}, {"beta": 1}], "rho_h": 0}, "links[0].beta"),
        ({"links": [{"beta": 1}, {"beta": 1}], "rho_h": 0, "sim": {"n_samples": 1.5}}, "sim.n_samples"),
    ])
    def test_exit_2_names_field(self, scenario_file, doc, field):
        code, out, err = run("map", "--scenario", scenario_file(doc))
        assert code == 2
        assert out == ""
        assert field in err

    def test_invalid_json(self, scenario_file):
        code, _, err = run("map", "--scenario", scenario_file("{not json"))
        assert code == 2 and "JSON" in err

    def test_missing_file(self, tmp_path):
        assert run("map", "--scenario", str(tmp_path / "nope.json"))[0] == 2

    def test_conflicting_flags(self):
        code, _, err = run("map", "--eps1", "0.1", "--beta1", "1", "--eps2", "0.1", "--rho-h", "0")
        assert code == 2 and "--eps1" in err

    def test_missing_rho_h(self):
        code, _, err = run("map", "--eps1", "0.1", "--eps2", "0.1")
        assert code == 2 and "rho_h" in err

    def test_unknown_subcommand(self):
        assert run("frobnicate")[0] == 2

    @pytest.mark.parametrize("eps", ["0", "1"])
    def test_degenerate_exit_3(self, eps):
        code, out, err = run("map", "--eps1", eps, "--eps2", "0.1", "--rho-h", "0.5")
        assert code == 3
        assert out == "" and err


class TestInvert:
    def test_table_one_row(self):
        rec = run_json("invert", "--eps1", "1e-4", "--eps2", "1e-4", "--rho", "0.1")
        assert rec["rho_h"] == pytest.approx(0.7, abs=0.01)
        assert rec["rho_target"] == 0.1

    def test_zero_target(self):
        rec = run_json("invert", "--eps1", "1e-4", "--eps2", "0.3", "--rho", "0")
        assert rec["rho_h"] == 0.0

    def test_unattainable_exit_4(self):
        code, out, err = run("invert", "--eps1", "1e-4", "--eps2", "1e-2", "--rho", "0.99")
        assert code == 4
        assert out == ""
        assert "0.0995" in err


class TestTable:
    def test_default_layout(self):
        code, out, _ = run("table")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        assert lines[0].split()[0] == "rho_h" and lines[1].split()[0] == "rho"
        rho_h = [float(v) for v in lines[0].split()[1:]]
        rho = [float(v) for v in lines[1].split()[1:]]
        assert rho_h == [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0]
        assert rho[0] == pytest.approx(0.0001, abs=5e-5)
        assert rho[5] == pytest.approx(0.0232, abs=5e-5)
        assert rho[7] == 1.0

    def test_json(self):
        rows = run_json("table")
        assert len(rows) == 8
        assert rows[-1]["rho"] == 1.0

    def test_csv_matches_sweep_bitwise(self):
        _, table, _ = run("table", "--format", "csv", "--precision", "17")
        _, sweep, _ = run("sweep", "--eps1", "1e-4", "--eps2", "1e-4",
                          "--grid", "0.05,0.1,0.2,0.3,0.4,0.5,0.7,1", "--precision", "17")
        assert table == sweep
        assert table.splitlines()[0] == "rho_h,eps1,eps2,joint_failure,rho"


class TestSweep:
    def test_header_is_byte_exact(self):
        _, out, _ = run("sweep", "--eps1", "0.1", "--eps2", "0.1", "--grid", "0")
        assert out.encode().split(b"\n", 1)[0] == b"rho_h,eps1,eps2,joint_failure,rho"
        assert tuple(out.splitlines()[0].split(",")) == CSV_HEADER

    def test_endpoints_and_midpoint(self):
        _, out, _ = run("sweep", "--eps1", "1e-4", "--eps2", "1e-4", "--grid", "0:1:0.5")
        _, rows = csv_rows(out)
        assert [r[0] for r in rows] == [0.0, 0.5, 1.0]
        assert rows[0][4] == pytest.approx(0.0, abs=1e-9)
        assert rows[1][4] == pytest.approx(0.0232, abs=5e-5)
        assert rows[2][4] == 1.0

    def test_median_links(self):
        _, out, _ = run("sweep", "--eps1", "0.5", "--eps2", "0.5", "--grid", "0")
        _, rows = csv_rows(out)
        assert len(rows) == 1 and rows[0][3] == 0.25

    def test_table_one_row(self):
        _, out, _ = run("sweep", "--eps1", "1e-4", "--eps2", "1e-4", "--grid", "0.3")
        _, rows = csv_rows(out)
        assert rows[0][4] == pytest.approx(0.004, abs=5e-4)

    def test_deterministic(self):
        argv = ("sweep", "--eps1", "0.02", "--eps2", "0.3", "--grid", "-0.9:0.9:0.1")
        assert run(*argv) == run(*argv)

    @pytest.mark.parametrize("grid", ["", "a,b", "0:1", "0:1:0", "1:0:0.1", "0,2", "nan"])
    def test_bad_grid_exit_2(self, grid):
        code, out, _ = run("sweep", "--eps1", "0.1", "--eps2", "0.1", "--grid", grid)
        assert code == 2 and out == ""

    def test_parse_grid_inclusive(self):
        assert parse_grid("-1:1:0.25") == [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]
        with pytest.raises(ScenarioError):
            parse_grid(",")


class TestSimulate:
    def test_eps_01(self):
        rec = run_json("simulate", "--eps1", "0.1", "--eps2", "0.1", "--rho-h", "0.5",
                       "--samples", "1000000", "--seed", "42")
        assert abs(rec["mc_z"]) <= 3
        assert rec["mc_std_error"] > 0
        assert rec["scenario"]["sim"] == {
            "n_samples": 1_000_000, "seed": 42, "method": "plain", "batch_count": 64}

    def test_comonotone(self):
        rec = run_json("simulate", "--eps1", "0.1", "--eps2", "0.1", "--rho-h", "1",
                       "--samples", "10000")
        assert rec["mc_rho"] == 1.0
        assert rec["mc_rho_z"] == 0.0

    def test_insufficient_events_exit_5(self):
        code, out, err = run("simulate", "--eps1", "1e-4", "--eps2", "1e-4", "--rho-h", "0.5",
                             "--samples", "10000", "--method", "plain")
        assert code == 5
        assert out == ""
        assert "failure" in err

    def test_importance_from_scenario(self, scenario_file):
        path = scenario_file({
            "links": [{"epsilon": 1e-4}, {"epsilon": 1e-4}], "rho_h": 0.5,
            "sim": {"n_samples": 200000, "seed": 3, "method": "importance", "batch_count": 16},
        })
        rec = run_json("simulate", "--scenario", path)
        assert abs(rec["mc_z"]) <= 4
        assert "mc_rho" not in rec

    def test_workers_do_not_change_output(self):
        argv = ("simulate", "--eps1", "0.2", "--eps2", "0.05", "--rho-h", "0.3", "--samples", "150000")
        assert run(*argv, "--workers", "1") == run(*argv, "--workers", "3")

    def test_bad_config_exit_2(self):
        code, _, err = run("simulate", "--eps1", "0.1", "--eps2", "0.1", "--rho-h", "0",
                           "--samples", "10", "--batches", "64")
        assert code == 2 and "batch_count" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "shadowcorr", "sweep", "--eps1", "0.5", "--eps2", "0.5", "--grid", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "rho_h,eps1,eps2,joint_failure,rho"
