"""Scenario parsing, CLI contracts, and report round-trips."""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from squidlev import QuadrupoleField, SpectralDensity, trap_frequencies
from squidlev.cli import main
from squidlev.report import (
    read_timeseries_csv,
    validate_report,
    write_report,
    write_timeseries_csv,
)
from squidlev.scenario import ScenarioError, load_scenario, parse_scenario

REFERENCE = Path(__file__).resolve().parent.parent / "scenarios" / "reference_trap.yaml"


def minimal_sim_yaml(tmp_path, name="mini.yaml", duration=2.0, seed=99):
    text = f"""
sphere:
  R: 50e-6
  rho: 10.9e3
mode:
  f0: 212.0
  Q: 100.0
  T0: 15e-3
  mass: 5.6e-9
simulate:
  dt: 9e-5
  duration: {duration}
  seed: {seed}
"""
    path = tmp_path / name
    path.write_text(text)
    return path


class TestScenarioParsing:
    def test_reference_scenario_loads(self):
        sc = load_scenario(REFERENCE)
        assert sc.sphere.radius == pytest.approx(50e-6)
        # YAML 1.2 float forms like 10.9e3 must parse as numbers
        assert sc.sphere.density == pytest.approx(10.9e3)
        assert sc.quad.b_z == pytest.approx(-147.0)
        assert sc.mode.f0 == pytest.approx(212.0)
        assert sc.circuit.M == pytest.approx(2.3e-9)
        assert sc.pickup.turns == 88
        assert len(sc.stack) == 3
        assert sc.filter_kappa == pytest.approx(0.036)
        assert sc.sim["seed"] == 20260819

    def test_unknown_key_is_named(self):
        with pytest.raises(ScenarioError, match=r"sphere\.color"):
            parse_scenario({"sphere": {"R": 1e-6, "rho": 1e4, "color": 1}},
                           source="t")

    def test_negative_value_is_named(self):
        with pytest.raises(ScenarioError, match=r"sphere\.R"):
            parse_scenario({"sphere": {"R": -1e-6, "rho": 1e4}}, source="t")

    def test_missing_required_key_is_named(self):
        with pytest.raises(ScenarioError, match=r"mode\.T0"):
            parse_scenario({"mode": {"f0": 212.0}}, source="t")

    def test_field_wants_exactly_one_of_gradients_or_coils(self):
        field = {
            "gradients": {"b_x": 57.0, "b_y": 90.0, "b_z": -147.0},
            "coils": {"a": 1e-3, "b": 1e-3, "separation": 1e-3,
                      "turns": 10, "current": 1.0},
        }
        with pytest.raises(ScenarioError, match="exactly one"):
            parse_scenario({"field": field}, source="t")

    def test_readout_wants_one_coupling_spec(self):
        readout = {"L_S": 15e-12, "L_I": 0.53e-6, "L_W": 1e-7,
                   "M": 2.3e-9, "k": 0.8, "sqrt_S_phiphi_phi0": 5.2e-8}
        with pytest.raises(ScenarioError):
            parse_scenario({"readout": readout}, source="t")

    def test_filter_wants_kappa_or_rl(self):
        with pytest.raises(ScenarioError):
            parse_scenario({"filter": {"kappa": 0.036, "R_C": 1.0,
                                       "L_C": 1.0}}, source="t")
        sc = parse_scenario({"filter": {"R_C": 0.036, "L_C": 1.0}}, source="t")
        assert sc.filter_kappa == pytest.approx(0.036)

    def test_noise_tables_become_densities(self):
        noise = {"S_epseps": {"f": [1.0, 100.0], "psd": [1e-18, 1e-22]}}
        sc = parse_scenario({"noise": noise}, source="t")
        dens = sc.noise["S_epseps"]
        assert isinstance(dens, SpectralDensity)
        assert dens(10.0) == pytest.approx(1e-20, rel=1e-9)

    def test_json_scenario(self, tmp_path):
        payload = {"sphere": {"R": 50e-6, "rho": 10.9e3}}
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(payload))
        sc = load_scenario(path)
        assert sc.sphere.radius == pytest.approx(50e-6)

    def test_require_names_missing_section(self):
        sc = parse_scenario({"sphere": {"R": 1e-6, "rho": 1e4}}, source="t")
        with pytest.raises(ScenarioError, match="isolation"):
            sc.require("isolation")


class TestCliContracts:
    def run(self, argv, capsys=None):
        rc = main(argv)
        if capsys is None:
            return rc, None, None
        captured = capsys.readouterr()
        return rc, captured.out, captured.err

    def test_frequencies_outputs_and_roundtrip(self, tmp_path, capsys):
        rc, out, _ = self.run(["frequencies", "--scenario", str(REFERENCE),
                               "--out", str(tmp_path)], capsys)
        assert rc == 0
        csv_path = tmp_path / "frequencies.csv"
        json_path = tmp_path / "frequencies.json"
        assert csv_path.exists() and json_path.exists()
        assert out == csv_path.read_text()
        report = json.loads(json_path.read_text())
        validate_report(report)  # schema round-trip
        quad = QuadrupoleField(57.0, 90.0, -147.0)
        expected = trap_frequencies(quad, 10.9e3)
        by_axis = {row[0]: row[2] for row in
                   report["tables"]["frequencies"]["rows"]}
        assert by_axis["x"] == pytest.approx(expected[0], rel=1e-9)
        assert by_axis["z"] == pytest.approx(expected[2], rel=1e-9)

    def test_json_echo(self, tmp_path, capsys):
        rc, out, _ = self.run(["frequencies", "--scenario", str(REFERENCE),
                               "--out", str(tmp_path), "--format", "json"],
                              capsys)
        assert rc == 0
        assert out == (tmp_path / "frequencies.json").read_text()
        validate_report(json.loads(out))

    @pytest.mark.filterwarnings("ignore:stage 0 wires")
    def test_outputs_are_idempotent(self, tmp_path, capsys):
        argv = ["isolation", "--scenario", str(REFERENCE),
                "--out", str(tmp_path)]
        assert main(argv) == 0
        capsys.readouterr()
        first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        assert main(argv) == 0
        capsys.readouterr()
        second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        assert first.keys() == second.keys()
        for name, blob in first.items():
            assert second[name] == blob, f"{name} changed between runs"

    def test_validation_failure_names_key(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("sphere:\n  R: -50e-6\n  rho: 10.9e3\n")
        rc, _, err = self.run(["frequencies", "--scenario", str(bad),
                               "--out", str(tmp_path)], capsys)
        assert rc == 1
        assert "sphere.R" in err

    def test_numerical_failure_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "inside.yaml"
        bad.write_text(
            "sphere:\n  R: 50e-6\n  rho: 10.9e3\n"
            "field:\n  gradients: {b_x: 57.0, b_y: 90.0, b_z: -147.0}\n"
            "pickup:\n  r_in: 5e-6\n  N: 2\n  w: 0.5e-6\n"
            "  spacing: 0.25e-6\n  Z: 10e-6\n"
        )
        rc, _, err = self.run(["coupling", "--scenario", str(bad),
                               "--out", str(tmp_path)], capsys)
        assert rc == 2
        assert "LoopInsideSphere" in err

    def test_missing_scenario_file(self, tmp_path, capsys):
        rc, _, err = self.run(["frequencies", "--scenario",
                               str(tmp_path / "none.yaml"),
                               "--out", str(tmp_path)], capsys)
        assert rc == 1

    def test_constants_listing(self, capsys):
        rc, out, _ = self.run(["--constants"], capsys)
        assert rc == 0
        assert "Phi_0" in out
        assert "2.067833848e-15" in out

    def test_no_command_is_an_error(self, capsys):
        rc, _, _ = self.run([], capsys)
        assert rc == 1


class TestCliCommands:
    def test_coupling_report(self, tmp_path, capsys):
        assert main(["coupling", "--scenario", str(REFERENCE),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "coupling.json").read_text())
        validate_report(report)
        res = report["results"]
        assert res["nu_Wb_per_m"] != 0.0
        assert abs(res["eta_Phi0_per_m"]) > 0.0
        assert res["sqrt_S_nn_m_per_sqrtHz"] > 0.0
        assert "coupling_vs_standoff.png" in report["figures"]
        assert (tmp_path / "coupling_vs_standoff.png").exists()

    @pytest.mark.filterwarnings("ignore:stage 0 wires")
    def test_isolation_report(self, tmp_path, capsys):
        assert main(["isolation", "--scenario", str(REFERENCE),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "isolation.json").read_text())
        validate_report(report)
        modes = [row[1] for row in report["tables"]["normal_modes"]["rows"]]
        assert_allclose(modes, [6.523, 18.276, 26.410], rtol=1e-3)
        assert report["results"]["transmissibility_200Hz"] == pytest.approx(
            1.59e-7, rel=0.01)
        assert report["results"]["dc_transmissibility"] == 1.0

    def test_budget_report(self, tmp_path, capsys):
        assert main(["budget", "--scenario", str(REFERENCE),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "budget.json").read_text())
        validate_report(report)
        res = report["results"]
        assert res["thermal_force_N_per_sqrtHz"] == pytest.approx(4.9e-19,
                                                                  rel=0.03)
        assert res["noise_equivalent_temperature_K"] == pytest.approx(
            24e-3, rel=0.03)

    def test_filter_report(self, tmp_path, capsys):
        assert main(["filter", "--scenario", str(REFERENCE),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "filter.json").read_text())
        validate_report(report)
        assert report["results"]["amplitude_dB_200Hz"] == pytest.approx(
            -91.0, abs=0.5)
        assert report["results"]["psd_dB_200Hz"] == pytest.approx(
            2.0 * report["results"]["amplitude_dB_200Hz"], rel=1e-12)
        assert "step_response" in report["tables"]

    def test_optimize_pickup_report(self, tmp_path, capsys):
        assert main(["optimize-pickup", "--scenario", str(REFERENCE),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "optimize-pickup.json").read_text())
        validate_report(report)
        res = report["results"]
        assert res["turns"] >= 1
        assert res["z_m"] >= 50e-6 * (1 - 1e-12)
        assert res["sqrt_S_nn_m_per_sqrtHz"] < 1e-14

    def test_simulate_single_run(self, tmp_path, capsys):
        scenario = minimal_sim_yaml(tmp_path)
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "simulate.json").read_text())
        validate_report(report)
        assert report["results"]["seed"] == 99
        meta, header, data = read_timeseries_csv(tmp_path / "timeseries.csv")
        assert header == ["t", "x", "y_meas"]
        assert meta["seed"] == "99"
        rms = math.sqrt(np.mean(data[len(data) // 4:, 1] ** 2))
        assert report["results"]["x_rms_m"] == pytest.approx(rms, rel=1e-6)
        for name in ("psd.csv", "timeseries.png", "psd.png"):
            assert (tmp_path / name).exists()

    def test_simulate_seed_override(self, tmp_path, capsys):
        scenario = minimal_sim_yaml(tmp_path)
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(tmp_path), "--seed", "123"]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "simulate.json").read_text())
        assert report["results"]["seed"] == 123

    def test_sweep_is_deterministic(self, tmp_path, capsys):
        scenario = minimal_sim_yaml(tmp_path)
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        for out in (a_dir, b_dir):
            assert main(["simulate", "--scenario", str(scenario),
                         "--out", str(out), "--sweep", "3"]) == 0
            capsys.readouterr()
        assert ((a_dir / "simulate.csv").read_bytes()
                == (b_dir / "simulate.csv").read_bytes())

    def test_sweep_workers_agree(self, tmp_path, capsys):
        scenario = minimal_sim_yaml(tmp_path)
        serial, parallel = tmp_path / "s", tmp_path / "p"
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(serial), "--sweep", "3",
                     "--workers", "1"]) == 0
        capsys.readouterr()
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(parallel), "--sweep", "3",
                     "--workers", "2"]) == 0
        capsys.readouterr()
        assert ((serial / "simulate.csv").read_bytes()
                == (parallel / "simulate.csv").read_bytes())

    def test_analyze_simulated_series(self, tmp_path, capsys):
        scenario = minimal_sim_yaml(tmp_path, duration=30.0)
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        assert main(["analyze", "--input", str(tmp_path / "timeseries.csv"),
                     "--out", str(tmp_path), "--band", "190", "230"]) == 0
        capsys.readouterr()
        report = json.loads((tmp_path / "analyze.json").read_text())
        validate_report(report)
        assert report["results"]["f0_Hz"] == pytest.approx(212.0, rel=0.02)
        assert (tmp_path / "analyze_psd.png").exists()


class TestReportFiles:
    def sample_report_args(self, tmp_path):
        return dict(
            path=tmp_path / "r.json",
            command="frequencies",
            version="0.0.0",
            inputs={"scenario": "s.yaml"},
            results={"f_Hz": 92.0, "ok": True, "note": "fine"},
            tables={"frequencies": (["axis", "f_Hz"],
                                    [["x", 92.0], ["y", 144.0]])},
            figures=["a.png"],
        )

    def test_roundtrip(self, tmp_path):
        args = self.sample_report_args(tmp_path)
        write_report(**args)
        validate_report(json.loads(args["path"].read_text()))

    def test_rejects_nonfinite_results(self, tmp_path):
        args = self.sample_report_args(tmp_path)
        args["results"] = {"bad": float("nan")}
        with pytest.raises(ValueError):
            write_report(**args)

    def test_validate_rejects_wrong_schema(self, tmp_path):
        args = self.sample_report_args(tmp_path)
        write_report(**args)
        report = json.loads(args["path"].read_text())
        report["schema"] = "something/2"
        with pytest.raises(ValueError):
            validate_report(report)

    def test_validate_rejects_ragged_table(self, tmp_path):
        args = self.sample_report_args(tmp_path)
        write_report(**args)
        report = json.loads(args["path"].read_text())
        report["tables"]["frequencies"]["rows"][0] = ["x"]
        with pytest.raises(ValueError):
            validate_report(report)

    def test_validate_rejects_missing_results(self, tmp_path):
        args = self.sample_report_args(tmp_path)
        write_report(**args)
        report = json.loads(args["path"].read_text())
        del report["results"]
        with pytest.raises(ValueError):
            validate_report(report)

    def test_validate_rejects_unknown_top_level_key(self, tmp_path):
        args = self.sample_report_args(tmp_path)
        write_report(**args)
        report = json.loads(args["path"].read_text())
        report["extras"] = {}
        with pytest.raises(ValueError):
            validate_report(report)

    def test_timeseries_roundtrip(self, tmp_path):
        from squidlev import TimeSeries
        dt = 1e-3
        x = TimeSeries(dt, np.arange(5, dtype=float))
        y = TimeSeries(dt, np.arange(5, dtype=float) ** 2)
        path = tmp_path / "ts.csv"
        write_timeseries_csv(path, {"x": x, "y": y}, {"seed": 7})
        meta, header, data = read_timeseries_csv(path)
        assert header == ["t", "x", "y"]
        assert meta["seed"] == "7"
        assert_allclose(data[:, 0], dt * np.arange(5))
        assert_allclose(data[:, 2], np.arange(5.0) ** 2)

    def test_timeseries_requires_shared_timebase(self, tmp_path):
        from squidlev import TimeSeries
        a = TimeSeries(1e-3, np.zeros(5))
        b = TimeSeries(2e-3, np.zeros(5))
        with pytest.raises(ValueError):
            write_timeseries_csv(tmp_path / "bad.csv", {"a": a, "b": b}, {})
