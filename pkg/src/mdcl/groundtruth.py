"""Analytic ground truth: 30-point corner clouds and reference raster maps.

Corner clouds come straight from the kinematic curves (key-point times and
values mapped onto the rendered squared axes).  Reference maps rasterize
the same curves onto the RTM/DTM grids and push them through the identical
axis-squaring path the measured pipeline uses, so widths and geometry
match pixel for pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mdcl.activities import ActivitySpec
from mdcl.echo import C_LIGHT, RadarConfig
from mdcl.maps import AxisSpec, ProfileMap, normalize
from mdcl.motion import (KeyPoint, activity_keypoints, node_distance,
                         node_velocity_sq, distance_slope_sign)
from mdcl.scene import ALL_NODES, SceneParams


@dataclass(frozen=True)
class GroundTruth:
    """Per-activity analytic truth on the rendered map grids."""

    cloud_r: np.ndarray          # 30 x 2, (u, v) normalized
    cloud_d: np.ndarray          # 30 x 2
    keypoints_r: tuple[KeyPoint, ...]
    keypoints_d: tuple[KeyPoint, ...]
    clamped: int                 # points that fell off an axis and were clamped


def _uniform_grid() -> np.ndarray:
    """Deterministic 30-point placeholder lattice for the empty scene."""
    u = np.linspace(0.1, 0.9, 6)
    v = np.linspace(0.2, 0.8, 5)
    uu, vv = np.meshgrid(u, v)
    return np.column_stack([uu.ravel(), vv.ravel()])


def _to_cloud(points: list[KeyPoint], window: float, axis: AxisSpec,
              value_scale: float) -> tuple[np.ndarray, int]:
    uv = np.empty((len(points), 2))
    clamped = 0
    for i, kp in enumerate(points):
        value = kp.sign * kp.value * value_scale
        if not (axis.lo <= value <= axis.hi):
            clamped += 1
        row = int(axis.value_to_row(value))
        uv[i] = (kp.t / window, row / (axis.n - 1))
    return uv, clamped


def groundtruth_corners(p: SceneParams, act: ActivitySpec, cfg: RadarConfig,
                        r2_axis: AxisSpec, d2_axis: AxisSpec) -> GroundTruth:
    """Exactly 30 analytic corner points on each squared map.

    Distance values land on the range^2 axis directly; velocity-squared
    values are scaled by (2 fc / c)^2 onto the signed Doppler^2 axis.
    """
    if act.is_empty:
        grid = _uniform_grid()
        return GroundTruth(grid, grid.copy(), (), (), 0)
    kp_r = activity_keypoints(p, act, "r2")
    kp_d = activity_keypoints(p, act, "d2")
    doppler_scale = (2.0 * cfg.carrier / C_LIGHT) ** 2
    cloud_r, clamp_r = _to_cloud(kp_r, p.window, r2_axis, 1.0)
    cloud_d, clamp_d = _to_cloud(kp_d, p.window, d2_axis, doppler_scale)
    return GroundTruth(cloud_r, cloud_d, tuple(kp_r), tuple(kp_d),
                       clamp_r + clamp_d)


# ---------------------------------------------------------------------------
# reference raster maps
# ---------------------------------------------------------------------------

def _mti_gain(freq: np.ndarray, pri: float) -> np.ndarray:
    """Two-pulse canceller amplitude response |1 - e^{-j 2 pi f Ts}|."""
    return np.abs(2.0 * np.sin(np.pi * freq * pri))


def rasterize_rtm(p: SceneParams, act: ActivitySpec, cfg: RadarConfig,
                  range_axis: AxisSpec) -> ProfileMap:
    """Trajectory raster on the RTM grid.

    Node brightness combines the reflectivity with the clutter filter's
    response at the node's instantaneous Doppler, so nodes the measured
    pipeline cancels (static ones) stay dark here too.
    """
    m = cfg.slow_samples
    t = np.arange(m) * cfg.pri
    img = np.zeros((range_axis.n, m))
    bin_width = (range_axis.hi - range_axis.lo) / range_axis.n
    cols = np.arange(m)
    if not act.is_empty:
        for node in ALL_NODES:
            eta = cfg.reflectivity.get(node, 0.0)
            if eta == 0.0:
                continue
            rng = node_distance(node, p, act, t)
            doppler = (2.0 * cfg.carrier / C_LIGHT) * np.gradient(rng, t)
            amp = eta * _mti_gain(doppler, cfg.pri)
            frac = (rng - range_axis.lo) / bin_width
            lo = np.floor(frac).astype(int)
            w_hi = frac - lo
            for rows, weights in ((lo, 1.0 - w_hi), (lo + 1, w_hi)):
                ok = (rows >= 0) & (rows < range_axis.n)
                np.maximum.at(img, (rows[ok], cols[ok]), (amp * weights)[ok])
    return ProfileMap(normalize(img), range_axis, p.window, normalized=True)


def rasterize_dtm(p: SceneParams, act: ActivitySpec, cfg: RadarConfig,
                  doppler_axis: AxisSpec) -> ProfileMap:
    """Signed radial-velocity-squared raster on the DTM grid.

    The velocity curve of each node is drawn at the Doppler frequency of
    magnitude 2 fc sqrt(chi^2) / c on the half of the axis matching the
    sign of its range rate.
    """
    m = cfg.slow_samples
    t = np.arange(m) * cfg.pri
    img = np.zeros((doppler_axis.n, m))
    bin_width = (doppler_axis.hi - doppler_axis.lo) / doppler_axis.n
    cols = np.arange(m)
    if not act.is_empty:
        for node in ALL_NODES:
            eta = cfg.reflectivity.get(node, 0.0)
            if eta == 0.0:
                continue
            chi = np.sqrt(node_velocity_sq(node, p, act, t))
            sign = distance_slope_sign(node, p, act, t)
            freq = sign * 2.0 * cfg.carrier * chi / C_LIGHT
            amp = eta * _mti_gain(freq, cfg.pri)
            frac = (freq - doppler_axis.lo) / bin_width
            lo = np.floor(frac).astype(int)
            w_hi = frac - lo
            for rows, weights in ((lo, 1.0 - w_hi), (lo + 1, w_hi)):
                ok = (rows >= 0) & (rows < doppler_axis.n)
                np.maximum.at(img, (rows[ok], cols[ok]), (amp * weights)[ok])
    return ProfileMap(normalize(img), doppler_axis, p.window, normalized=True)
