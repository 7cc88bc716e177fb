import json

import pytest
from click.testing import CliRunner

from convergema.cli import main
from convergema.io import read_observations, write_observations
from convergema import (AnchoringStrategy, GeneratorSpec, LearningTrace,
                        PowerLawCurve, drift_perturbations, generate)


@pytest.fixture
def runner():
    return CliRunner()


def spec_file(tmp_path, **overrides):
    payload = {"a": 300.0, "b": 0.6, "c": 96.0, "levels": 20, "seed": 7}
    payload.update(overrides)
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(payload))
    return path


class TestSimulate:
    def test_deterministic(self, runner, tmp_path):
        spec = spec_file(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert runner.invoke(main, ["simulate", str(spec), "--out", str(out1)]).exit_code == 0
        assert runner.invoke(main, ["simulate", str(spec), "--out", str(out2)]).exit_code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_noiseless_matches_truth(self, runner, tmp_path):
        spec = spec_file(tmp_path, noise_sd=0.0)
        out = tmp_path / "o.csv"
        runner.invoke(main, ["simulate", str(spec), "--out", str(out)])
        log = read_observations(out)
        assert len(log) == 20
        first = log.entries[0]
        assert first.x == 5000
        assert first.accuracy == pytest.approx(96.0 - 300.0 * 5000 ** -0.6)

    def test_spikes_present(self, runner, tmp_path):
        plain_spec = spec_file(tmp_path)
        spike_path = tmp_path / "spike.json"
        payload = json.loads(plain_spec.read_text())
        payload["perturbations"] = [[5, -0.5]]
        spike_path.write_text(json.dumps(payload))
        p_out, s_out = tmp_path / "p.csv", tmp_path / "s.csv"
        runner.invoke(main, ["simulate", str(plain_spec), "--out", str(p_out)])
        runner.invoke(main, ["simulate", str(spike_path), "--out", str(s_out)])
        plain = read_observations(p_out)
        spiked = read_observations(s_out)
        diff = [s.accuracy - p.accuracy for s, p in zip(spiked, plain)]
        assert diff[4] == pytest.approx(-0.5)

    def test_env_seed_override(self, runner, tmp_path, monkeypatch):
        spec = spec_file(tmp_path, noise_sd=0.1, seed=1)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        runner.invoke(main, ["simulate", str(spec), "--out", str(out1)])
        monkeypatch.setenv("CONVERGEMA_SEED", "99")
        runner.invoke(main, ["simulate", str(spec), "--out", str(out2)])
        assert out1.read_bytes() != out2.read_bytes()


def observations_csv(tmp_path, levels=40, name="obs.csv", strategy_ready=True):
    spec = GeneratorSpec(truth=PowerLawCurve(8 * 5000.0 ** 0.7, 0.7, 97.0),
                         levels=levels, noise_sd=1e-4, seed=1)
    log = generate(spec)
    path = tmp_path / name
    write_observations(log, path)
    return path


class TestAnalyze:
    def test_converged_exit_zero_and_replayable(self, runner, tmp_path):
        obs = observations_csv(tmp_path)
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        args = [str(obs), "--strategy", "fixed:100", "--condition", "absolute",
                "--tau", "6.5"]
        r1 = runner.invoke(main, ["analyze", *args, "--out", str(out1)])
        assert r1.exit_code == 0, r1.output
        assert "clevel:" in r1.output
        r2 = runner.invoke(main, ["analyze", *args, "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_not_converged_exit_two(self, runner, tmp_path):
        obs = observations_csv(tmp_path, levels=25)
        result = runner.invoke(main, ["analyze", str(obs), "--strategy",
                                      "fixed:100", "--tau", "1e-9"])
        assert result.exit_code == 2
        assert "not converged" in result.output

    def test_too_few_rows(self, runner, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("level,size,accuracy\n1,5000,80.0\n2,10000,85.0\n")
        result = runner.invoke(main, ["analyze", str(path), "--tau", "1.0"])
        assert result.exit_code != 0

    def test_parse_error_carries_line_number(self, runner, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("level,size,accuracy\n1,5000,80.0\n2,10000,oops\n")
        result = runner.invoke(main, ["analyze", str(path), "--tau", "1.0"])
        assert result.exit_code != 0
        assert ":3:" in str(result.output) + str(result.exception)

    def test_increasing_backbone_not_decreasing_diagnostic(self, runner, tmp_path):
        pert = drift_perturbations(30, -1.0, 0.15)
        spec = GeneratorSpec(truth=PowerLawCurve(5 * 5000.0 ** 0.6, 0.6, 96.0),
                             levels=30, perturbations=pert, seed=0)
        path = tmp_path / "inc.csv"
        write_observations(generate(spec), path)
        result = runner.invoke(main, ["analyze", str(path), "--strategy", "none",
                                      "--condition", "absolute", "--tau", "0.5"])
        assert result.exit_code == 1
        assert "fixed anchoring" in result.output

    def test_series_csv(self, runner, tmp_path):
        obs = observations_csv(tmp_path)
        series = tmp_path / "series.csv"
        result = runner.invoke(main, ["analyze", str(obs), "--strategy", "fixed:100",
                                      "--tau", "6.5", "--series", str(series)])
        assert result.exit_code == 0
        header = series.read_text().splitlines()[0]
        assert header == "level,epsilon,is_rupture,put"

    def test_validation_rejects_bad_nu(self, runner, tmp_path):
        obs = observations_csv(tmp_path, levels=12)
        result = runner.invoke(main, ["analyze", str(obs), "--tau", "1.0",
                                      "--nu", "2.0"])
        assert result.exit_code != 0


class TestTune:
    def test_tune_runs_and_reports(self, runner, tmp_path):
        # horizon = longer stream; observations = a prefix
        from convergema import epsilon_sequence, TraceParams
        spec = GeneratorSpec(truth=PowerLawCurve(2.0 * 5000.0 ** 0.85, 0.85, 99.3),
                             levels=80, seed=5,
                             perturbations=drift_perturbations(80, 0.8, 0.15))
        log = generate(spec)
        horizon_path = tmp_path / "horizon.csv"
        write_observations(log, horizon_path)
        from convergema import ObservationLog
        prefix = ObservationLog(log.entries[:50])
        obs_path = tmp_path / "obs.csv"
        write_observations(prefix, obs_path)

        fixed = LearningTrace.from_log(log, AnchoringStrategy.fixed(100.0),
                                       TraceParams())
        records = epsilon_sequence(fixed)
        tau = records[int(len(records) * 0.3)].epsilon
        out = tmp_path / "tuning.json"
        result = runner.invoke(main, ["tune", str(obs_path), "--horizon",
                                      str(horizon_path), "--tau", str(tau),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "selected look-ahead" in result.output
        payload = json.loads(out.read_text())
        assert payload["selected"]["look_ahead"] >= 2
        rcs = [c["rc"] for c in payload["candidates"] if c["rc"] is not None]
        assert payload["selected"]["rc"] == pytest.approx(min(rcs))

    def test_missing_horizon_is_error(self, runner, tmp_path):
        obs = observations_csv(tmp_path)
        result = runner.invoke(main, ["tune", str(obs), "--tau", "1.0"])
        assert result.exit_code != 0

    def test_prefix_mismatch_rejected(self, runner, tmp_path):
        obs = observations_csv(tmp_path, name="obs.csv")
        other = GeneratorSpec(truth=PowerLawCurve(9 * 5000.0 ** 0.7, 0.7, 96.0),
                              levels=50, seed=2)
        horizon_path = tmp_path / "other.csv"
        write_observations(generate(other), horizon_path)
        result = runner.invoke(main, ["tune", str(obs), "--horizon",
                                      str(horizon_path), "--tau", "1.0"])
        assert result.exit_code != 0


class TestEvaluate:
    def test_frame_report(self, runner, tmp_path):
        spec = GeneratorSpec(truth=PowerLawCurve(2.0 * 5000.0 ** 0.85, 0.85, 99.3),
                             levels=70, seed=5,
                             perturbations=drift_perturbations(70, 0.8, 0.15))
        log = generate(spec)
        obs_path = tmp_path / "frame_obs.csv"
        write_observations(log, obs_path)
        plain = LearningTrace.from_log(log, AnchoringStrategy.none())
        entries = plain.backbone()
        gaps = sorted(abs(cur.alpha - prev.alpha)
                      for prev, cur in zip(entries, entries[1:]))
        frame = {"observations": str(obs_path), "tau_r": gaps[int(len(gaps) * 0.6)],
                 "strategies": ["none", "canonical", "fixed:100"],
                 "conditions": ["absolute", "relative"]}
        frame_path = tmp_path / "frame.json"
        frame_path.write_text(json.dumps(frame))
        prefix = tmp_path / "report"
        result = runner.invoke(main, ["evaluate", str(frame_path), "--out",
                                      str(prefix)])
        assert result.exit_code == 0, result.output
        payload = json.loads((tmp_path / "report.json").read_text())
        assert len(payload["rows"]) == 6
        csv_lines = (tmp_path / "report.csv").read_text().splitlines()
        assert csv_lines[0].startswith("strategy,condition,tau,plevel,clevel")
        assert len(csv_lines) == 7
