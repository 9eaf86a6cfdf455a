"""Pipeline orchestration and CLI tests on the reduced-size config."""

import numpy as np
import pytest

from mdcl.cli import main
from mdcl.config import serialize_config
from mdcl.fileio import read_matrix
from mdcl.groundtruth import groundtruth_corners
from mdcl.pipeline import run_activity, run_pipeline, sweep_noise, sweep_summary
from conftest import small_config


def write_small_config(tmp_path, **overrides):
    cfg = small_config()
    for dotted, value in overrides.items():
        section, key = dotted.split(".")
        setattr(getattr(cfg, section), key, value)
    cfg.validate()
    path = tmp_path / "config.txt"
    path.write_text(serialize_config(cfg), encoding="utf-8")
    return cfg, path


EXPECTED_FILES = {
    "echo.mdcm", "rtm.mdcm", "dtm.mdcm", "r2tm.mdcm", "d2tm.mdcm",
    "pc_r.csv", "pc_d.csv", "pc_rd.csv", "metrics.csv",
}


class TestRunPipeline:
    def test_single_activity_inventory(self, tmp_path):
        cfg, _ = write_small_config(tmp_path, **{"run.activities": "S8"})
        manifest = run_pipeline(cfg, tmp_path / "out")
        assert manifest.status == "ok"
        names = {rel.split("/")[-1] for rel in manifest.artifacts if "/" in rel}
        assert EXPECTED_FILES <= names
        out = tmp_path / "out"
        assert (out / "manifest.txt").exists()
        assert (out / "S8" / "echo.mdcm").exists()

    def test_manifest_covers_every_artifact_file(self, tmp_path):
        cfg, _ = write_small_config(tmp_path, **{"run.activities": "S1,S8"})
        manifest = run_pipeline(cfg, tmp_path / "out")
        on_disk = {str(p.relative_to(tmp_path / "out"))
                   for p in (tmp_path / "out").rglob("*") if p.is_file()}
        listed = set(manifest.artifacts) | {"manifest.txt", "run.log"}
        assert on_disk == listed

    def test_rerun_identical_digests(self, tmp_path):
        cfg, _ = write_small_config(tmp_path, **{"run.activities": "S5",
                                                 "noise.enabled": True})
        m1 = run_pipeline(cfg, tmp_path / "a")
        m2 = run_pipeline(cfg, tmp_path / "b")
        assert m1.artifacts == m2.artifacts
        assert m1.text() == m2.text()

    def test_empty_scene_runs(self, tmp_path):
        cfg, _ = write_small_config(tmp_path, **{"run.activities": "S1",
                                                 "noise.enabled": True})
        manifest = run_pipeline(cfg, tmp_path / "out")
        assert manifest.status == "ok"

    def test_groundtruth_cardinality(self, cfg_small):
        res = run_activity(cfg_small, "S8", 0)
        assert res.truth.cloud_r.shape == (30, 2)
        assert res.truth.cloud_d.shape == (30, 2)
        assert len(res.pc_r) == len(res.pc_d) == 30
        assert res.pc_rd.points.shape == (60, 3)

    def test_s1_placeholder_grid(self, cfg_small):
        from mdcl.activities import activity
        truth = groundtruth_corners(cfg_small.scene_params(), activity("S1"),
                                    cfg_small.radar_config(),
                                    None, None)
        assert truth.cloud_r.shape == (30, 2)
        assert np.array_equal(truth.cloud_r, truth.cloud_d)


class TestSweep:
    def test_zero_drop_reproduces_baseline(self, cfg_small):
        cfg = small_config()
        cfg.run.activities = "S8"
        cfg.evaluation.sweep_seeds = 2
        cfg.validate()
        results = {"S8": run_activity(cfg, "S8", 0)}
        rows = sweep_noise(cfg, results, drops=[0.0, 4.0], n_seeds=2)
        base = [r for r in rows if r["drop_db"] == 0.0]
        assert base[0]["emd"] == pytest.approx(results["S8"].metrics["emd_r"])
        assert base[1]["emd"] == pytest.approx(results["S8"].metrics["emd_d"])
        summary = sweep_summary(rows)
        assert set(summary) == {0.0, 4.0}


class TestCli:
    def test_staged_chain(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path, **{"run.activities": "S8"})
        out = tmp_path / "out"
        for command in ("simulate", "preprocess", "square", "extract",
                        "fuse", "evaluate"):
            code = main([command, "--config", str(cfg_path),
                         "--out", str(out), "--activity", "S8"])
            assert code == 0, command
        assert (out / "S8" / "pc_rd.csv").exists()
        metrics = (out / "S8" / "metrics.csv").read_text()
        assert "emd_r" in metrics

    def test_run_subcommand(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path, **{"run.activities": "S5"})
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "manifest.txt").exists()

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("[radar]\nbandwidth_hz = 0\n")
        assert main(["run", "--config", str(bad)]) == 2

    def test_unknown_activity_exit_code(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path)
        assert main(["simulate", "--config", str(cfg_path),
                     "--out", str(tmp_path / "o"), "--activity", "S99"]) == 2

    def test_missing_stage_input_exit_code(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path)
        assert main(["preprocess", "--config", str(cfg_path),
                     "--out", str(tmp_path / "empty"), "--activity", "S8"]) == 3

    def test_render(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path, **{"run.activities": "S8"})
        out = tmp_path / "out"
        main(["simulate", "--config", str(cfg_path), "--out", str(out),
              "--activity", "S8"])
        main(["preprocess", "--config", str(cfg_path), "--out", str(out),
              "--activity", "S8"])
        code = main(["render", str(out / "S8" / "rtm.mdcm"),
                     str(tmp_path / "rtm.pgm")])
        assert code == 0
        assert (tmp_path / "rtm.pgm").read_bytes()[:2] == b"P5"

    def test_mncp_verify_exit(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path)
        assert main(["mncp-verify", "--config", str(cfg_path)]) == 0

    def test_seed_override_changes_noise(self, tmp_path):
        _, cfg_path = write_small_config(tmp_path, **{"run.activities": "S8",
                                                      "noise.enabled": True})
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(cfg_path), "--out", str(out_a),
              "--activity", "S8", "--seed", "1"])
        main(["simulate", "--config", str(cfg_path), "--out", str(out_b),
              "--activity", "S8", "--seed", "2"])
        a = read_matrix(out_a / "S8" / "echo.mdcm")
        b = read_matrix(out_b / "S8" / "echo.mdcm")
        assert not np.array_equal(a, b)
