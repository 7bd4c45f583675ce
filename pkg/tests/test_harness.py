"""Experiment harness: configs, CSV schema, manifests, references, CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from gmfg import (
    EnvironmentParams,
    ExperimentConfig,
    Schedules,
    build_reference,
    constant,
    full_info_decay,
    kl_metric,
    load_config,
    load_reference,
    make_environment,
    preset,
    run_experiment,
    run_single,
    save_config,
    save_reference,
)
from gmfg.harness import CSV_HEADER, records_to_csv, resolve_out_dir
from gmfg.solvers import RunRecord


def smoke_config(**overrides):
    base = dict(
        environment=EnvironmentParams(name="congestion"),
        solver="full_info",
        lam=0.5,
        schedules=full_info_decay(0.5),
        iterations=10,
        record_every=1,
        seeds=(1,),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_round_trip_through_file(self, tmp_path):
        config = smoke_config(seeds=(1, 2, 3), out_dir="somewhere")
        path = tmp_path / "config.json"
        save_config(config, path)
        assert load_config(path) == config

    def test_round_trip_through_manifest(self, tmp_path):
        config = smoke_config(out_dir=str(tmp_path / "out"))
        manifest = run_experiment(config, jobs=1)
        assert ExperimentConfig.from_dict(manifest["config"]) == config

    def test_validation_catches_mismatches(self):
        with pytest.raises(ValueError):
            smoke_config(solver="bandit").validate()  # gamma missing
        with pytest.raises(ValueError):
            smoke_config(seeds=()).validate()
        with pytest.raises(ValueError):
            smoke_config(solver="sgd").validate()
        with pytest.raises(ValueError):
            smoke_config(solver="fictitious_play", lam=0.1).validate()
        with pytest.raises(ValueError):
            smoke_config(solver="linear",
                         schedules=Schedules(eta=constant(0.1), gamma=constant(0.1)),
                         ).validate()

    def test_unsupported_schema_version(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"schema_version": 99, "config": {}}))
        with pytest.raises(ValueError):
            load_config(path)


class TestCsv:
    def test_header_and_empty_kl_column(self):
        records = [RunRecord(1, 0.5, None, 0, 7), RunRecord(2, 0.25, None, 0, 7)]
        text = records_to_csv(records)
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        assert lines[1] == "1,0.5,,0,7"
        assert text.endswith("\n") and "\r" not in text

    def test_full_precision_round_trip(self):
        value = 0.1234567890123456789
        text = records_to_csv([RunRecord(1, value, value, 0, 0)])
        cell = text.splitlines()[1].split(",")[1]
        assert float(cell) == value

    def test_iterations_must_increase(self):
        records = [RunRecord(2, 0.5, None, 0, 0), RunRecord(2, 0.4, None, 0, 0)]
        with pytest.raises(ValueError):
            records_to_csv(records)


class TestRunExperiment:
    def test_smoke_layout(self, tmp_path):
        config = smoke_config(out_dir=str(tmp_path / "out"))
        manifest = run_experiment(config, jobs=1)
        out = tmp_path / "out"
        assert (out / "manifest.json").exists()
        csv_path = out / "seed_1.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + config.iterations  # cadence 1
        assert manifest["runs"][0]["rows"] == config.iterations

    def test_bytewise_determinism(self, tmp_path):
        blobs = []
        for run_dir in ("a", "b"):
            config = smoke_config(out_dir=str(tmp_path / run_dir), seeds=(3,))
            run_experiment(config, jobs=1)
            blobs.append((tmp_path / run_dir / "seed_3.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_parallel_matches_serial(self, tmp_path):
        config = smoke_config(seeds=(1, 2), iterations=5)
        run_experiment(config, jobs=1, out_dir=str(tmp_path / "serial"))
        run_experiment(config, jobs=2, out_dir=str(tmp_path / "parallel"))
        for seed in (1, 2):
            serial = (tmp_path / "serial" / f"seed_{seed}.csv").read_bytes()
            parallel = (tmp_path / "parallel" / f"seed_{seed}.csv").read_bytes()
            assert serial == parallel

    def test_manifest_checksums_match_files(self, tmp_path):
        import hashlib

        config = smoke_config(out_dir=str(tmp_path / "out"), seeds=(1, 2))
        manifest = run_experiment(config, jobs=1)
        for entry in manifest["runs"]:
            blob = (tmp_path / "out" / entry["csv"]).read_bytes()
            assert hashlib.sha256(blob).hexdigest() == entry["sha256"]

    def test_out_dir_resolution_order(self, tmp_path, monkeypatch):
        config = smoke_config(out_dir=None)
        monkeypatch.setenv("GMFG_OUT_DIR", str(tmp_path / "from_env"))
        assert resolve_out_dir(None, config) == tmp_path / "from_env"
        config = smoke_config(out_dir=str(tmp_path / "from_config"))
        assert resolve_out_dir(None, config) == tmp_path / "from_config"
        assert resolve_out_dir(str(tmp_path / "cli"), config) == tmp_path / "cli"

    def test_linear_solver_through_the_harness(self, tmp_path):
        config = ExperimentConfig(
            environment=EnvironmentParams(
                name="linear_synthetic",
                constants={"dim": 4, "seed": 3},
            ),
            solver="linear",
            lam=0.05,
            schedules=Schedules(eta=constant(0.1), gamma=constant(0.1)),
            iterations=8,
            record_every=4,
            seeds=(1,),
            out_dir=str(tmp_path / "out"),
        )
        manifest = run_experiment(config, jobs=1)
        assert manifest["runs"][0]["rows"] == 3  # t = 1, 4, 8

    def test_paper_preset_shape(self):
        config = preset("paper-beach-bar")
        assert config.solver == "bandit"
        assert config.schedules.eta == constant(0.1)
        assert config.schedules.gamma == constant(0.1)
        assert len(config.seeds) == 5
        config.validate()

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset("paper-chess")


class TestReference:
    def test_build_requires_full_info_and_positive_lam(self):
        with pytest.raises(ValueError):
            build_reference(
                smoke_config(solver="bandit",
                             schedules=Schedules(eta=constant(0.1), gamma=constant(0.1)))
            )
        with pytest.raises(ValueError):
            build_reference(smoke_config(lam=0.0, schedules=Schedules(eta=constant(0.1))))

    def test_round_trip_and_kl_wiring(self, tmp_path):
        config = smoke_config(iterations=300)
        reference = build_reference(config)
        assert reference.provenance["solver"] == "full_info"
        assert reference.provenance["iterations"] == 300
        assert reference.provenance["lam"] == 0.5
        path = tmp_path / "reference.json"
        save_reference(reference, path)
        model = make_environment(config.environment)
        loaded = load_reference(path, model=model)
        assert np.array_equal(loaded.policy.table, reference.policy.table)
        # A run pointed at the stored reference fills the KL column.
        run_config = smoke_config(iterations=5, reference_path=str(path))
        records = run_single(run_config, seed=1)
        assert all(r.kl_to_reference is not None for r in records)
        assert records[-1].kl_to_reference >= 0.0

    def test_cross_seed_references_agree(self):
        values = []
        for seed in (1, 2):
            config = smoke_config(iterations=20_000, seeds=(seed,))
            values.append(build_reference(config))
        model = make_environment(smoke_config().environment)
        d = kl_metric(values[0].policy, values[1], model.grid)
        assert d < 1e-3


class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "gmfg.cli", *args],
            capture_output=True,
            text=True,
        )

    def test_run_with_config_file(self, tmp_path):
        config = smoke_config(out_dir=str(tmp_path / "out"))
        path = tmp_path / "config.json"
        save_config(config, path)
        result = self.run_cli("run", "--config", str(path), "--jobs", "1")
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "out" / "seed_1.csv").exists()

    def test_run_with_preset(self, tmp_path):
        result = self.run_cli(
            "run", "--preset", "smoke", "--jobs", "1", "--out-dir", str(tmp_path / "o")
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "o" / "manifest.json").exists()

    def test_reference_command(self, tmp_path):
        config = smoke_config(iterations=50)
        path = tmp_path / "config.json"
        save_config(config, path)
        out = tmp_path / "ref.json"
        result = self.run_cli("reference", "--config", str(path), "--out", str(out))
        assert result.returncode == 0, result.stderr
        assert out.exists()

    def test_probe_monotone_command(self, tmp_path):
        config = smoke_config()
        path = tmp_path / "config.json"
        save_config(config, path)
        result = self.run_cli(
            "probe-monotone", "--config", str(path), "--pairs", "20"
        )
        assert result.returncode == 0, result.stderr
        assert "frac_nonnegative=1.0000" in result.stdout

    def test_bad_config_returns_nonzero(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{}")
        result = self.run_cli("run", "--config", str(path))
        assert result.returncode != 0
        assert "error:" in result.stderr
