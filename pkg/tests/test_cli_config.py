"""Tests for config parsing and the command-line front end."""

import json
import math
import os

import numpy as np
import pytest

import driftband.checks as checks
from driftband.cli import main
from driftband.config import (
    BudgetRule,
    load_config,
    load_preset,
    parse_config,
    preset_text,
)
from driftband.environments import EnvSpec
from driftband.errors import ConfigurationError
from driftband.harness import run_episode, write_trace_csv
from driftband.policies import PolicySpec


@pytest.fixture(autouse=True)
def scrub_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("DRIFTBAND_"):
            monkeypatch.delenv(key)


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return str(path)


def _small_config(tmp_path, **extra):
    payload = {
        "environment": {"kind": "sinusoidal", "dim": 2, "budget": 1.0,
                        "noise_scale": 0.1},
        "policies": [{"kind": "swucb", "window_mode": "known_budget"}],
        "horizons": [300],
        "seeds": 2,
        "master_seed": 0,
        "out": str(tmp_path / "out"),
    }
    payload.update(extra)
    return _write(tmp_path, "config.json", payload)


class TestConfigParsing:
    def test_fig1_preset_loads(self):
        cfg = load_preset("fig1")
        assert cfg.horizons == tuple(30000 * k for k in range(1, 9))
        assert cfg.seeds == 20
        assert [p.default_name() for p in cfg.policies] == ["swucb_known",
                                                            "exp3s"]
        assert cfg.budget == BudgetRule(kind="fixed", value=1.0)

    def test_fig2_preset_budget_scales_with_horizon(self):
        cfg = load_preset("fig2")
        assert [p.default_name() for p in cfg.policies] == ["adaptive_window",
                                                            "swucb_unknown"]
        for t in (30000, 240000):
            assert cfg.env_spec_for(t).budget == pytest.approx(
                float(t) ** (1.0 / 3.0))

    def test_preset_text_is_valid_json(self):
        for name in ("fig1", "fig2"):
            assert isinstance(json.loads(preset_text(name)), dict)

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigurationError):
            load_preset("fig3")

    def test_env_spec_injects_horizon(self, tmp_path):
        cfg = load_config(_small_config(tmp_path))
        spec = cfg.env_spec_for(912)
        assert spec == EnvSpec(kind="sinusoidal", horizon=912, dim=2,
                               budget=1.0, noise_scale=0.1)

    def test_unknown_top_level_key_reports_line(self):
        text = ('{\n "environment": {"kind": "sinusoidal", "budget": 1.0},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [100],\n'
                ' "bogus": 1\n}')
        with pytest.raises(ConfigurationError, match="line 5.*bogus"):
            parse_config(text)

    def test_unknown_environment_key_reports_line(self):
        text = ('{\n "environment": {"kind": "sinusoidal", "budget": 1.0,\n'
                '   "wavelength": 3},\n "policies": [{"kind": "random"}],\n'
                ' "horizons": [100]\n}')
        with pytest.raises(ConfigurationError, match="line 3.*wavelength"):
            parse_config(text)

    def test_unknown_policy_key_rejected(self):
        text = ('{\n "environment": {"kind": "sinusoidal", "budget": 1.0},\n'
                ' "policies": [{"kind": "random", "arms": 7}],\n'
                ' "horizons": [100]\n}')
        with pytest.raises(ConfigurationError, match="arms"):
            parse_config(text)

    def test_missing_required_key_rejected(self):
        text = '{"environment": {"kind": "sinusoidal", "budget": 1.0}}'
        with pytest.raises(ConfigurationError, match="missing required"):
            parse_config(text)

    def test_json_syntax_error_reports_line(self):
        with pytest.raises(ConfigurationError, match="line 2.*invalid JSON"):
            parse_config('{\n "environment": }\n}')

    def test_budget_fraction_string(self):
        text = ('{\n "environment": {"kind": "sinusoidal",\n'
                '   "budget": {"power_of_T": "2/3"}},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [1000]\n}')
        cfg = parse_config(text)
        assert cfg.env_spec_for(1000).budget == pytest.approx(100.0)

    def test_budget_rejects_extra_keys(self):
        text = ('{\n "environment": {"kind": "sinusoidal",\n'
                '   "budget": {"power_of_T": 0.5, "offset": 1}},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [100]\n}')
        with pytest.raises(ConfigurationError, match="power_of_T"):
            parse_config(text)

    def test_budget_rejects_unparseable_fraction(self):
        text = ('{\n "environment": {"kind": "sinusoidal",\n'
                '   "budget": {"power_of_T": "a/b"}},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [100]\n}')
        with pytest.raises(ConfigurationError, match="exponent"):
            parse_config(text)

    def test_horizons_must_be_positive_integers(self):
        text = ('{\n "environment": {"kind": "sinusoidal", "budget": 1.0},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [100, 0]\n}')
        with pytest.raises(ConfigurationError, match="horizons"):
            parse_config(text)

    def test_check_toggles_collect_enabled_suites(self):
        text = ('{\n "environment": {"kind": "sinusoidal", "budget": 1.0},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [100],\n'
                ' "checks": {"bias": true, "deviation": false}\n}')
        assert parse_config(text).checks == ("bias",)

    def test_unknown_check_suite_rejected(self):
        text = ('{\n "environment": {"kind": "sinusoidal", "budget": 1.0},\n'
                ' "policies": [{"kind": "random"}],\n "horizons": [100],\n'
                ' "checks": {"spectral": true}\n}')
        with pytest.raises(ConfigurationError, match="spectral"):
            parse_config(text)

    def test_policy_env_combination_validated_early(self):
        # a budget-needing policy on a budget-free environment must fail at
        # parse time, before any episode starts
        text = ('{\n "environment": {"kind": "constant", "theta": [0.5]},\n'
                ' "policies": [{"kind": "exp3s"}],\n "horizons": [100]\n}')
        with pytest.raises(ConfigurationError, match="budget"):
            parse_config(text)

    def test_overrides_replace_fields(self, tmp_path):
        cfg = load_config(_small_config(tmp_path))
        new = cfg.with_overrides(seeds=7, master_seed=3, out="elsewhere")
        assert (new.seeds, new.master_seed, new.out) == (7, 3, "elsewhere")
        assert cfg.seeds == 2

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="cannot read"):
            load_config(tmp_path / "absent.json")


class TestCliRun:
    def test_singleton_arm_trace_is_zero(self, tmp_path, capsys):
        path = _write(tmp_path, "mini.json", {
            "environment": {"kind": "constant", "theta": [0.7],
                            "noise_scale": 0.0},
            "policies": [{"kind": "random"}],
            "horizons": [25],
            "seeds": 1,
            "out": str(tmp_path / "out"),
        })
        assert main(["run", "--config", path]) == 0
        lines = (tmp_path / "out" / "trace_random_T25_seed0.csv")
        rows = lines.read_text().splitlines()
        assert rows[0] == "t,action,reward,inst_regret,cum_regret"
        assert all(row.split(",")[3] == "0.0" for row in rows[1:])

    def test_trace_files_match_direct_episode(self, tmp_path):
        path = _small_config(tmp_path)
        assert main(["run", "--config", path]) == 0
        cfg = load_config(path)
        spec = cfg.env_spec_for(300)
        env = spec.build()
        policy = cfg.policies[0].build(default_budget=spec.budget)
        trace = run_episode(env, policy, seed=1, master_seed=0)
        expected = tmp_path / "expected.csv"
        write_trace_csv(trace, expected)
        produced = tmp_path / "out" / "trace_swucb_known_T300_seed1.csv"
        assert produced.read_text() == expected.read_text()

    def test_missing_key_exits_two(self, tmp_path, capsys):
        path = _write(tmp_path, "broken.json",
                      {"environment": {"kind": "sinusoidal", "budget": 1.0}})
        assert main(["run", "--config", path]) == 2
        assert "config error" in capsys.readouterr().err

    def test_config_and_preset_conflict(self, tmp_path, capsys):
        path = _small_config(tmp_path)
        assert main(["run", "--config", path, "--preset", "fig1"]) == 2

    def test_missing_config_source_exits_two(self, capsys):
        assert main(["run"]) == 2
        assert "config" in capsys.readouterr().err


class TestCliSweep:
    def test_single_horizon_summary_rows(self, tmp_path, capsys):
        path = _write(tmp_path, "grid1.json", {
            "environment": {"kind": "sinusoidal", "budget": 1.0},
            "policies": [{"kind": "random"}, {"kind": "swucb",
                                              "window_mode": "known_budget"}],
            "horizons": [200],
            "seeds": 2,
            "out": str(tmp_path / "sw"),
        })
        assert main(["sweep", "--config", path, "--workers", "1"]) == 0
        data = json.loads((tmp_path / "sw" / "summary.json").read_text())
        assert set(data["policies"]) == {"random", "swucb_known"}
        for entry in data["policies"].values():
            assert entry["horizons"] == [200]
            assert entry["slope"] is None

    def test_sweep_is_reproducible(self, tmp_path):
        path = _small_config(tmp_path, horizons=[200, 400])
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["sweep", "--config", path, "--out", str(out_a),
                     "--workers", "1"]) == 0
        assert main(["sweep", "--config", path, "--out", str(out_b),
                     "--workers", "1"]) == 0
        assert (out_a / "sweep.csv").read_text() == \
            (out_b / "sweep.csv").read_text()
        assert (out_a / "summary.json").read_text() == \
            (out_b / "summary.json").read_text()

    def test_worker_pool_matches_serial_output(self, tmp_path):
        path = _small_config(tmp_path, horizons=[200, 400])
        serial = tmp_path / "serial"
        pooled = tmp_path / "pooled"
        assert main(["sweep", "--config", path, "--out", str(serial),
                     "--workers", "1"]) == 0
        assert main(["sweep", "--config", path, "--out", str(pooled),
                     "--workers", "2"]) == 0
        assert (serial / "sweep.csv").read_text() == \
            (pooled / "sweep.csv").read_text()

    def test_seed_flag_overrides_env_var(self, tmp_path, monkeypatch):
        path = _small_config(tmp_path)
        monkeypatch.setenv("DRIFTBAND_SEEDS", "3")
        out = tmp_path / "enved"
        assert main(["sweep", "--config", path, "--out", str(out),
                     "--workers", "1"]) == 0
        rows = (out / "sweep.csv").read_text().splitlines()
        assert len(rows) == 1 + 3
        out2 = tmp_path / "flagged"
        assert main(["sweep", "--config", path, "--out", str(out2),
                     "--seeds", "1", "--workers", "1"]) == 0
        assert len((out2 / "sweep.csv").read_text().splitlines()) == 2

    def test_bad_env_var_exits_two(self, tmp_path, monkeypatch, capsys):
        path = _small_config(tmp_path)
        monkeypatch.setenv("DRIFTBAND_SEEDS", "plenty")
        assert main(["sweep", "--config", path]) == 2
        assert "DRIFTBAND_SEEDS" in capsys.readouterr().err


class TestCliCheck:
    def test_bias_suite_passes(self, capsys):
        assert main(["check", "bias"]) == 0
        assert "bias: pass" in capsys.readouterr().out

    def test_unknown_suite_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["check", "spectral"])
        assert err.value.code == 2

    def test_corrupted_estimator_fails_suite(self, monkeypatch, capsys):
        class SkewedRidge(checks.SlidingWindowRidge):
            def estimate(self):
                return super().estimate() + 5.0

        monkeypatch.setattr(checks, "SlidingWindowRidge", SkewedRidge)
        assert main(["check", "deviation"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_config_toggles_select_suites(self, tmp_path, capsys):
        path = _small_config(tmp_path, checks={"bias": True,
                                               "monotonicity": False})
        assert main(["check", "--config", path]) == 0
        out = capsys.readouterr().out
        assert "bias:" in out
        assert "monotonicity" not in out
