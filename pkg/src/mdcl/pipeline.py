"""End-to-end orchestration: simulate -> preprocess -> square -> extract ->
fuse -> evaluate, artifact persistence, and the noise-robustness sweep.

Activities run in a small worker pool (bounded by MDCL_THREADS); each
activity's stage chain is sequential and owns its output files, and the
manifest is assembled deterministically after all workers join.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mdcl import __version__
from mdcl.activities import activity
from mdcl.config import PipelineConfig, config_digest, serialize_config
from mdcl.corners import (CornerSet, DetectorConfig, PointCloudRD,
                          extract_corners, fuse_pc_rd)
from mdcl.echo import EchoFrame, synth_frame
from mdcl.fileio import axis_sidecar, write_csv, write_matrix, write_pgm
from mdcl.groundtruth import GroundTruth, groundtruth_corners, rasterize_dtm, rasterize_rtm
from mdcl.maps import ProfileMap
from mdcl.metrics import add_image_noise, emd_distance, psnr
from mdcl.motion import KeyPoint
from mdcl.preprocess import preprocess_frame
from mdcl.squaring import decimate_rows, resample_rows, square_doppler_axis, square_range_axis


class StageError(RuntimeError):
    def __init__(self, stage: str, activity_label: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed for {activity_label}: {cause}")
        self.stage = stage
        self.activity_label = activity_label


@dataclass
class ActivityResult:
    label: str
    frame: EchoFrame
    rtm: ProfileMap
    dtm: ProfileMap
    r2tm: ProfileMap
    d2tm: ProfileMap
    pc_r: CornerSet
    pc_d: CornerSet
    pc_rd: PointCloudRD
    truth: GroundTruth
    gt_r2tm: ProfileMap
    gt_d2tm: ProfileMap
    metrics: dict[str, float]
    timings: dict[str, float] = field(default_factory=dict)


def detector_config(cfg: PipelineConfig) -> DetectorConfig:
    d = cfg.detector
    return DetectorConfig(orientations=d.orientations, sigma=d.sigma_px,
                          anisotropy=d.anisotropy, nms_radius=d.nms_radius_px,
                          corners=d.corners)


def run_activity(cfg: PipelineConfig, label: str,
                 activity_index: int) -> ActivityResult:
    """Full stage chain for one activity, kept in memory."""
    scene = cfg.scene_params()
    radar = cfg.radar_config()
    act = activity(label)
    det = detector_config(cfg)
    timings: dict[str, float] = {}

    def staged(stage, fn):
        start = time.perf_counter()
        try:
            out = fn()
        except Exception as exc:
            raise StageError(stage, label, exc) from exc
        timings[stage] = time.perf_counter() - start
        return out

    frame = staged("simulate", lambda: synth_frame(
        scene, act, radar, cfg.noise_config(activity_index)))
    rtm, dtm = staged("preprocess", lambda: preprocess_frame(
        frame, sum_mode=cfg.preprocessing.dtm_sum_mode,
        emd_params=cfg.preprocessing.emd_params()))
    r2tm, d2tm = staged("square", lambda: square_maps(cfg, rtm, dtm))
    pc_r = staged("extract_r", lambda: extract_corners(r2tm, f"{label}/r2tm", det))
    pc_d = staged("extract_d", lambda: extract_corners(d2tm, f"{label}/d2tm", det))
    pc_rd = staged("fuse", lambda: fuse_pc_rd(pc_r, pc_d, r2tm, d2tm))
    truth, gt_r2, gt_d2, metrics = staged("evaluate", lambda: evaluate_activity(
        cfg, label, rtm.axis, dtm.axis, r2tm, d2tm, pc_r, pc_d))
    return ActivityResult(label, frame, rtm, dtm, r2tm, d2tm, pc_r, pc_d,
                          pc_rd, truth, gt_r2, gt_d2, metrics, timings)


def square_maps(cfg: PipelineConfig, rtm: ProfileMap,
                dtm: ProfileMap) -> tuple[ProfileMap, ProfileMap]:
    """Decimate, square and render both maps onto the detection grid."""
    pre = cfg.preprocessing.predecimate_rows
    rows = cfg.detector.render_rows
    r2 = resample_rows(square_range_axis(decimate_rows(rtm, pre)), rows)
    d2 = resample_rows(square_doppler_axis(decimate_rows(dtm, pre)), rows)
    return r2, d2


def evaluate_activity(cfg: PipelineConfig, label: str,
                      range_axis, doppler_axis,
                      r2tm: ProfileMap, d2tm: ProfileMap,
                      pc_r: CornerSet, pc_d: CornerSet):
    """Analytic truth, ground-truth rasters and the per-activity metrics."""
    scene = cfg.scene_params()
    radar = cfg.radar_config()
    act = activity(label)
    truth = groundtruth_corners(scene, act, radar, r2tm.axis, d2tm.axis)
    gt_rtm = rasterize_rtm(scene, act, radar, range_axis)
    gt_dtm = rasterize_dtm(scene, act, radar, doppler_axis)
    gt_r2, gt_d2 = square_maps(cfg, gt_rtm, gt_dtm)
    metrics = {
        "emd_r": emd_distance(pc_r.uv(), truth.cloud_r),
        "emd_d": emd_distance(pc_d.uv(), truth.cloud_d),
        "psnr_r2tm_db": psnr(r2tm.data, gt_r2.data),
        "psnr_d2tm_db": psnr(d2tm.data, gt_d2.data),
        "gt_clamped": float(truth.clamped),
    }
    return truth, gt_r2, gt_d2, metrics


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _map_files(outdir: Path, name: str, pm: ProfileMap) -> list[Path]:
    mat = outdir / f"{name}.mdcm"
    write_matrix(mat, pm.data)
    sidecar = outdir / f"{name}.axis.txt"
    axis_sidecar(sidecar, pm.axis.kind, pm.rows, pm.cols,
                 pm.axis.lo, pm.axis.hi, pm.window)
    return [mat, sidecar]


def _corner_rows(cs: CornerSet) -> list[list]:
    return [[cs.map_id, c.row, c.col, c.u, c.v, c.response, int(c.padded)]
            for c in cs.corners]


def _keypoint_rows(points: tuple[KeyPoint, ...], kind: str) -> list[list]:
    return [[kp.node.value, kp.t, kp.value, kind] for kp in points]


def write_activity_artifacts(outdir: Path, res: ActivityResult,
                             stage_dump: bool = False) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []

    echo_path = outdir / "echo.mdcm"
    write_matrix(echo_path, res.frame.data.astype(np.complex64))
    files.append(echo_path)

    for name, pm in (("rtm", res.rtm), ("dtm", res.dtm),
                     ("r2tm", res.r2tm), ("d2tm", res.d2tm),
                     ("gt_r2tm", res.gt_r2tm), ("gt_d2tm", res.gt_d2tm)):
        files += _map_files(outdir, name, pm)

    header = ["map_id", "row", "col", "u", "v", "response", "padded"]
    for name, cs in (("pc_r", res.pc_r), ("pc_d", res.pc_d)):
        path = outdir / f"{name}.csv"
        write_csv(path, header, _corner_rows(cs))
        files.append(path)

    rd_path = outdir / "pc_rd.csv"
    write_csv(rd_path, ["index", "u", "v", "w", "source"],
              [[i, *map(float, row), src] for i, (row, src) in
               enumerate(zip(res.pc_rd.points, res.pc_rd.source))])
    files.append(rd_path)

    gt_path = outdir / "gt_corners.csv"
    gt_rows = [["r2", *map(float, row)] for row in res.truth.cloud_r]
    gt_rows += [["d2", *map(float, row)] for row in res.truth.cloud_d]
    write_csv(gt_path, ["map", "u", "v"], gt_rows)
    files.append(gt_path)

    kp_path = outdir / "gt_keypoints.csv"
    write_csv(kp_path, ["node", "t_seconds", "value", "map"],
              _keypoint_rows(res.truth.keypoints_r, "r2")
              + _keypoint_rows(res.truth.keypoints_d, "d2"))
    files.append(kp_path)

    metrics_path = outdir / "metrics.csv"
    write_csv(metrics_path, ["activity", "metric", "value", "seed"],
              [[res.label, k, float(v), ""] for k, v in sorted(res.metrics.items())])
    files.append(metrics_path)

    overlay_r = outdir / "r2tm_corners.pgm"
    write_pgm(overlay_r, np.flipud(res.r2tm.data),
              [(res.r2tm.rows - 1 - c.row, c.col) for c in res.pc_r.corners])
    overlay_d = outdir / "d2tm_corners.pgm"
    write_pgm(overlay_d, np.flipud(res.d2tm.data),
              [(res.d2tm.rows - 1 - c.row, c.col) for c in res.pc_d.corners])
    files += [overlay_r, overlay_d]

    if stage_dump:
        for name, pm in (("rtm", res.rtm), ("dtm", res.dtm),
                         ("r2tm", res.r2tm), ("d2tm", res.d2tm)):
            path = outdir / f"{name}.pgm"
            write_pgm(path, np.flipud(pm.data))
            files.append(path)
    return files


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    config_hash: str
    version: str
    status: str
    artifacts: dict[str, str]           # relative path -> sha256
    timings: dict[str, dict[str, float]]
    failed_stage: str | None = None

    def text(self) -> str:
        lines = [
            "[manifest]",
            f"tool_version = {self.version}",
            f"config_sha256 = {self.config_hash}",
            f"status = {self.status}",
        ]
        if self.failed_stage:
            lines.append(f"failed_stage = {self.failed_stage}")
        lines.append("")
        lines.append("[artifacts]")
        for rel in sorted(self.artifacts):
            lines.append(f"{rel} = sha256:{self.artifacts[rel]}")
        lines.append("")
        return "\n".join(lines)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _summary_report(outputs) -> str:
    """Per-activity metric table: corner-cloud distances and map PSNRs."""
    lines = ["activity   emd_r   emd_d  psnr_r2tm_db  psnr_d2tm_db"]
    for label, res, _ in sorted(outputs, key=lambda o: int(o[0][1:])):
        m = res.metrics
        lines.append(f"{label:<8} {m['emd_r']:7.4f} {m['emd_d']:7.4f} "
                     f"{m['psnr_r2tm_db']:13.2f} {m['psnr_d2tm_db']:13.2f}")
    lines.append("")
    return "\n".join(lines)


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path | None = None) -> RunManifest:
    """Execute all selected activities and persist every artifact.

    Per-stage wall-clock timings go to ``run.log`` (not part of the
    manifest, which must be bit-identical across reruns of one config).
    """
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = cfg.activity_list()
    workers = int(os.environ.get("MDCL_THREADS", "0")) or min(4, os.cpu_count() or 1)
    workers = max(1, min(workers, len(labels) or 1))

    artifacts: dict[str, str] = {}
    timings: dict[str, dict[str, float]] = {}
    status, failed_stage = "ok", None
    outputs: list = []

    def job(item):
        idx, label = item
        res = run_activity(cfg, label, idx)
        files = write_activity_artifacts(out / label, res,
                                         stage_dump=cfg.run.stage_dump)
        return label, res, files

    try:
        if workers == 1:
            outputs = [job(item) for item in enumerate(labels)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outputs = list(pool.map(job, enumerate(labels)))
        for label, res, files in outputs:
            timings[label] = res.timings
            for path in files:
                artifacts[str(path.relative_to(out))] = _sha256(path)
    except StageError as exc:
        status, failed_stage = "failed", f"{exc.activity_label}:{exc.stage}"

    config_path = out / "config.txt"
    config_path.write_text(serialize_config(cfg), encoding="utf-8")
    artifacts["config.txt"] = _sha256(config_path)

    if status == "ok" and outputs:
        report_path = out / "report.txt"
        report_path.write_text(_summary_report(outputs), encoding="utf-8")
        artifacts["report.txt"] = _sha256(report_path)

    manifest = RunManifest(config_digest(cfg), __version__, status,
                           artifacts, timings, failed_stage)
    (out / "manifest.txt").write_text(manifest.text(), encoding="utf-8")
    log_lines = [f"{label} {stage} {dt:.3f}s"
                 for label, stages in sorted(timings.items())
                 for stage, dt in stages.items()]
    (out / "run.log").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# noise-robustness sweep
# ---------------------------------------------------------------------------

def sweep_noise(cfg: PipelineConfig,
                results: dict[str, ActivityResult] | None = None,
                drops: list[float] | None = None,
                n_seeds: int | None = None) -> list[dict]:
    """Re-extract corners from noise-degraded squared maps.

    Lowers the image SNR of both squared maps by each configured drop,
    reruns detection and reports the earth mover's distance to the analytic
    truth per (activity, map, drop, seed).  A zero drop reproduces the
    baseline exactly.
    """
    labels = [a for a in cfg.activity_list() if a != "S1"]
    if results is None:
        results = {label: run_activity(cfg, label, i)
                   for i, label in enumerate(cfg.activity_list())}
    drops = cfg.snr_drops() if drops is None else drops
    if 0.0 not in drops:
        drops = [0.0] + list(drops)
    n_seeds = cfg.evaluation.sweep_seeds if n_seeds is None else n_seeds
    det = detector_config(cfg)
    rows: list[dict] = []
    for label in labels:
        res = results[label]
        for which, pm, truth in (("r2tm", res.r2tm, res.truth.cloud_r),
                                 ("d2tm", res.d2tm, res.truth.cloud_d)):
            for drop in drops:
                seeds = [0] if drop == 0.0 else range(n_seeds)
                for seed in seeds:
                    if drop == 0.0:
                        noisy = pm
                    else:
                        rng = np.random.Generator(np.random.Philox(
                            np.random.SeedSequence((cfg.run.seed, seed, int(drop * 10)))))
                        data = add_image_noise(pm.data, drop, rng)
                        noisy = ProfileMap(data, pm.axis, pm.window).normalized_copy()
                    cs = extract_corners(noisy, f"{label}/{which}", det)
                    emd = emd_distance(cs.uv(), truth)
                    rows.append({"activity": label, "map": which,
                                 "drop_db": drop, "seed": seed, "emd": emd})
    return rows


def sweep_summary(rows: list[dict]) -> dict[float, dict[str, float]]:
    """Mean EMD (and its standard error) per SNR drop over both maps."""
    by_drop: dict[float, list[float]] = {}
    for row in rows:
        by_drop.setdefault(row["drop_db"], []).append(row["emd"])
    out = {}
    for drop, values in sorted(by_drop.items()):
        v = np.asarray(values)
        out[drop] = {"mean": float(v.mean()),
                     "sem": float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0,
                     "count": int(v.size)}
    return out
