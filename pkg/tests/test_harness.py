"""Scenario schema strictness, the run loop, file outputs, sweeps, CLI."""

import json
import math

import numpy as np
import pytest

from kslogistic.cli import main
from kslogistic.harness import (
    CSV_COLUMNS,
    HarnessError,
    emit_plot_data,
    run,
    run_experiment,
    sweep,
    write_sweep_csv,
)
from kslogistic.scenario import (
    Scenario,
    ScenarioError,
    bundled_scenario_names,
    bundled_scenario_path,
    load_scenario,
    scenario_from_dict,
    with_value,
)

TINY = {
    "schema_version": 1,
    "name": "tiny",
    "grid": {"dim": 1, "n": 64, "half_width": 10.0},
    "params": {"chi": 0.3, "a": 1.0, "b": 1.0},
    "ic": {"kind": "gaussian", "amplitude": 2.0, "width": 1.5},
    "control": {"dt": 0.01, "t_end": 0.5},
    "diagnostics": {"sample_interval": 0.1},
    "checks": {"sandwich": {}, "mass_growth": {"r": 1.0, "tol": 1e-6}},
}


def tiny(**patch) -> Scenario:
    data = json.loads(json.dumps(TINY))
    for key, val in patch.items():
        if isinstance(val, dict) and key in data:
            data[key].update(val)
        else:
            data[key] = val
    return scenario_from_dict(data)


class TestSchema:
    def test_round_trip_preserves_normalized_form(self):
        sc = tiny()
        again = scenario_from_dict(sc.to_dict())
        assert again == sc

    @pytest.mark.parametrize("name", bundled_scenario_names())
    def test_bundled_scenarios_load(self, name):
        sc = load_scenario(bundled_scenario_path(name))
        assert sc.name == name
        assert scenario_from_dict(sc.to_dict()) == sc

    def test_bundled_unknown_name(self):
        with pytest.raises(ScenarioError, match="no bundled scenario"):
            bundled_scenario_path("nope")

    def test_unknown_top_level_key(self):
        data = dict(TINY, extra=1)
        with pytest.raises(ScenarioError, match="extra"):
            scenario_from_dict(data)

    def test_unknown_nested_key_named(self):
        with pytest.raises(ScenarioError, match="refinement"):
            tiny(grid={"refinement": 2})

    def test_missing_required_section(self):
        data = {k: v for k, v in TINY.items() if k != "params"}
        with pytest.raises(ScenarioError, match="params"):
            scenario_from_dict(data)

    def test_wrong_schema_version(self):
        with pytest.raises(ScenarioError, match="schema_version"):
            tiny(schema_version=2)

    def test_number_field_rejects_string(self):
        with pytest.raises(ScenarioError, match="chi"):
            tiny(params={"chi": "big"})

    def test_number_field_rejects_bool(self):
        with pytest.raises(ScenarioError, match="chi"):
            tiny(params={"chi": True})

    def test_sample_interval_must_divide_evenly(self):
        with pytest.raises(ScenarioError, match="sample_interval"):
            tiny(diagnostics={"sample_interval": 0.03})

    def test_t_end_must_be_sample_multiple(self):
        with pytest.raises(ScenarioError, match="t_end"):
            tiny(control={"dt": 0.01, "t_end": 0.55})

    def test_zero_growth_needs_explicit_front_level(self):
        with pytest.raises(ScenarioError, match="front_level"):
            tiny(params={"a": 0.0})

    def test_unknown_check_name(self):
        with pytest.raises(ScenarioError, match="telepathy"):
            tiny(checks={"telepathy": {}})

    def test_check_param_typo_named(self):
        with pytest.raises(ScenarioError, match="tolerance"):
            tiny(checks={"mass_growth": {"tolerance": 1e-6}})

    def test_speed_range_requires_bounds(self):
        with pytest.raises(ScenarioError, match="min"):
            tiny(checks={"speed_range": {"max": 2.0}})

    def test_parse_error_carries_line_info(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("name: x\ngrid: {dim: 1, n: 64\n")
        with pytest.raises(ScenarioError, match="line"):
            load_scenario(bad)

    def test_params_validation_is_wrapped(self):
        with pytest.raises(ScenarioError, match="chi"):
            tiny(params={"chi": -0.5})


class TestWithValue:
    def test_dotted_paths_hit_each_section(self):
        sc = tiny()
        assert with_value(sc, "params.chi", 0.7).params.chi == 0.7
        assert with_value(sc, "control.dt", 0.005).control.dt == 0.005
        assert with_value(sc, "grid.n", 128).grid.n == 128
        assert with_value(sc, "ic.amplitude", 1.0).ic.amplitude == 1.0

    def test_bare_name_resolves_when_unique(self):
        assert with_value(tiny(), "chi", 0.1).params.chi == 0.1

    def test_ambiguous_bare_name_rejected(self):
        # both grid and params carry a dim field
        with pytest.raises(ScenarioError, match="ambiguous"):
            with_value(tiny(), "dim", 2)

    def test_unknown_axis_rejected(self):
        with pytest.raises(ScenarioError, match="no field"):
            with_value(tiny(), "params.xi", 0.1)

    def test_integer_axis_rejects_fraction(self):
        with pytest.raises(ScenarioError, match="integer"):
            with_value(tiny(), "grid.n", 96.5)

    def test_invalid_value_rejected_by_field_validation(self):
        with pytest.raises(ScenarioError, match="rejected"):
            with_value(tiny(), "params.chi", -1.0)


class TestRun:
    def test_sampling_cadence_and_columns(self):
        rep = run(tiny())
        assert rep.times == pytest.approx([0.1 * i for i in range(6)])
        for name in CSV_COLUMNS[1:]:
            assert len(rep.series[name]) == 6
        assert rep.abort is None
        assert rep.ok
        assert {v.name for v in rep.checks} == {"sandwich", "mass_growth"}

    def test_report_is_deterministic_modulo_wall_time(self):
        sc = tiny()
        first = run(sc).to_json(include_wall_time=False)
        second = run(sc).to_json(include_wall_time=False)
        assert first == second

    def test_report_json_is_strict(self):
        doc = json.loads(run(tiny()).to_json())
        assert doc["ok"] is True
        assert doc["scenario"]["name"] == "tiny"
        assert isinstance(doc["wall_time"], float)
        # non-finite floats must have been mapped to null
        assert "Infinity" not in run(tiny()).to_json()

    def test_regime_echo_matches_params(self):
        rep = run(tiny())
        assert rep.regime["global_bounded"] is True
        assert rep.regime["spreading"] is True
        assert rep.cstar_floor == pytest.approx(1.0832864634654802)

    def test_blowup_abort_is_recorded_not_raised(self):
        sc = tiny(control={"dt": 0.01, "t_end": 0.5, "blowup_threshold": 1.0})
        rep = run(sc)
        assert rep.abort is not None
        assert rep.abort["kind"] == "BlowupError"
        assert not rep.ok
        assert any(e["kind"] == "abort" for e in rep.events)
        assert len(rep.times) < 6

    def test_partial_check_config_gets_defaults(self):
        sc = tiny(checks={"mass_growth": {}})
        rep = run(sc)
        assert rep.scenario["checks"]["mass_growth"]["tol"] == 1e-6
        assert rep.ok

    def test_equilibrium_on_exact_fixed_point(self):
        sc = tiny(
            params={"chi": 0.4, "a": 1.0, "b": 1.0},
            ic={"kind": "constant", "amplitude": 1.0},
            checks={"equilibrium": {"tol": 1e-3}},
        )
        rep = run(sc)
        verdict = next(v for v in rep.checks if v.name == "equilibrium")
        assert verdict.passed and verdict.asserted
        assert not any(e["kind"] == "front_beyond_guard" for e in rep.events)

    def test_envelope_not_asserted_when_chi_exceeds_b(self):
        sc = tiny(
            params={"chi": 2.0, "a": 1.0, "b": 1.0},
            control={"dt": 0.01, "t_end": 0.1},
            checks={"envelope": {}},
        )
        rep = run(sc)
        verdict = next(v for v in rep.checks if v.name == "envelope")
        assert verdict.passed and not verdict.asserted
        assert "chi <= b" in verdict.detail

    def test_growth_exponent_beyond_safe_range_is_informational(self):
        sc = tiny(
            params={"chi": 2.0, "a": 1.0, "b": 1.0},
            control={"dt": 0.01, "t_end": 0.1},
            checks={"mass_growth": {"r": 3.0, "tol": 1e-6}},
        )
        rep = run(sc)
        verdict = next(v for v in rep.checks if v.name == "mass_growth")
        assert not verdict.asserted
        assert "l3" in rep.series

    def test_dt_advisory_becomes_event(self):
        sc = tiny(control={"dt": 0.25, "t_end": 0.5},
                  diagnostics={"sample_interval": 0.25})
        rep = run(sc)
        kinds = {e["kind"] for e in rep.events}
        assert "dt_advisory_reaction" in kinds


class TestOutputs:
    def test_run_experiment_writes_everything(self, tmp_path):
        rep, paths = run_experiment(tiny(), outdir=tmp_path)
        assert paths["report"].is_file()
        assert paths["series"].is_file()
        assert (paths["plots"] / "manifest.json").is_file()
        assert (paths["plots"] / "series_mass.dat").is_file()
        doc = json.loads(paths["report"].read_text())
        assert doc["ok"] is True
        header, first, *rest = paths["series"].read_text().splitlines()
        assert header == ",".join(CSV_COLUMNS)
        assert len(rest) + 1 == len(rep.times)
        row = dict(zip(CSV_COLUMNS, first.split(",")))
        assert float(row["t"]) == 0.0
        assert float(row["mass"]) == pytest.approx(rep.series["mass"][0])

    def test_overwrite_needs_force(self, tmp_path):
        run_experiment(tiny(), outdir=tmp_path)
        with pytest.raises(HarnessError, match="force"):
            run_experiment(tiny(), outdir=tmp_path)
        run_experiment(tiny(), outdir=tmp_path, force=True)

    def test_outdir_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KSLOGISTIC_OUTDIR", str(tmp_path / "env_out"))
        _, paths = run_experiment(tiny())
        assert str(paths["dir"]).startswith(str(tmp_path / "env_out"))

    def test_emit_plot_data_snapshots(self, tmp_path):
        sc = tiny(diagnostics={"sample_interval": 0.1, "snapshot_every": 2})
        rep = run(sc)
        assert len(rep.snapshots) == 3  # samples 0, 2, 4
        manifest = emit_plot_data(rep, tmp_path)
        assert len(manifest["snapshot_files"]) == 3
        snap = (tmp_path / manifest["snapshot_files"][0]["file"]).read_text()
        cols = snap.splitlines()[2].split()
        assert len(cols) == 3  # x u v
        with pytest.raises(HarnessError, match="force"):
            emit_plot_data(rep, tmp_path)


class TestSweep:
    def test_rows_and_csv(self, tmp_path):
        rows = sweep(tiny(), "params.chi", [0.0, 0.3])
        assert [r["status"] for r in rows] == ["ok", "ok"]
        assert rows[0]["value"] == 0.0
        assert rows[0]["final_mass"] > 0
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, "params.chi", path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("value(params.chi),status,passed")

    def test_failed_run_recorded_and_sweep_continues(self):
        rows = sweep(
            tiny(), "control.blowup_threshold", [1e9, 1.0]
        )
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"] == "abort"
        assert not rows[1]["passed"]
        assert "threshold" in rows[1]["message"]

    def test_invalid_axis_value_fails_fast(self):
        with pytest.raises(ScenarioError, match="rejected"):
            sweep(tiny(), "params.chi", [0.1, -0.1])

    def test_empty_values_rejected(self):
        with pytest.raises(ScenarioError, match="nonempty"):
            sweep(tiny(), "params.chi", [])

    def test_parallel_workers_agree_with_serial(self):
        serial = sweep(tiny(), "params.chi", [0.0, 0.2], workers=1)
        parallel = sweep(tiny(), "params.chi", [0.0, 0.2], workers=2)
        for a, b in zip(serial, parallel):
            assert a["final_mass"] == b["final_mass"]
            assert a["status"] == b["status"]


class TestCli:
    def write_tiny(self, tmp_path):
        path = tmp_path / "tiny.yaml"
        import yaml

        path.write_text(yaml.safe_dump(TINY))
        return path

    def test_scenarios_listing(self, capsys):
        assert main(["scenarios"]) == 0
        out = capsys.readouterr().out.split()
        assert "fisher_1d" in out and "spreading_1d" in out

    def test_classify_text_and_json(self, capsys):
        assert main(["classify", "--chi", "0.4", "--a", "1", "--b", "1"]) == 0
        text = capsys.readouterr().out
        assert "spreading" in text and "max_safe_r" in text
        assert main(["classify", "--chi", "0.4", "--a", "1", "--b", "1",
                     "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["stability"] is True
        assert doc["cstar_floor"] is not None

    def test_run_writes_and_exits_zero(self, tmp_path, capsys):
        path = self.write_tiny(tmp_path)
        code = main(["run", str(path), "--out", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "overall: ok" in out
        assert (tmp_path / "out" / "tiny" / "report.json").is_file()

    def test_run_json_mode(self, tmp_path, capsys):
        path = self.write_tiny(tmp_path)
        code = main(["run", str(path), "--out", str(tmp_path / "o"), "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["scenario"]["name"] == "tiny"

    def test_run_missing_file_is_error_exit(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.yaml")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_run_refuses_overwrite(self, tmp_path, capsys):
        path = self.write_tiny(tmp_path)
        out = str(tmp_path / "out")
        assert main(["run", str(path), "--out", out]) == 0
        assert main(["run", str(path), "--out", out]) == 2
        assert main(["run", str(path), "--out", out, "--force"]) == 0

    def test_sweep_smoke(self, tmp_path, capsys):
        path = self.write_tiny(tmp_path)
        code = main(["sweep", str(path), "--axis", "params.chi",
                     "--values", "0.0,0.3", "--out", str(tmp_path / "out")])
        assert code == 0
        csv_path = tmp_path / "out" / "tiny_sweep_params_chi" / "sweep.csv"
        assert csv_path.is_file()
        assert len(csv_path.read_text().splitlines()) == 3

    def test_failing_run_exits_nonzero(self, tmp_path):
        data = json.loads(json.dumps(TINY))
        data["control"]["blowup_threshold"] = 1.0
        path = tmp_path / "doomed.yaml"
        import yaml

        path.write_text(yaml.safe_dump(data))
        assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 1
