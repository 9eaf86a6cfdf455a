"""Blob-sensitive corner detection and point-cloud fusion.

The detector convolves the map with a bank of second-order anisotropic
Gaussian directional-derivative filters and combines the squared
orientation responses through their geometric mean, which peaks on blobs
and vanishes on straight ridges.  Non-maximum suppression keeps the 30
strongest responses; degenerate maps are padded to keep the fixed
cardinality the fused 60x3 cloud requires.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.ndimage import maximum_filter

from mdcl.maps import ProfileMap


@dataclass(frozen=True)
class DetectorConfig:
    orientations: int = 8
    sigma: float = 3.0          # derivative-direction scale, pixels
    anisotropy: float = 1.5     # cross-direction elongation factor
    nms_radius: int = 7         # pixels, Euclidean
    corners: int = 30


@dataclass(frozen=True)
class Corner:
    row: int
    col: int
    response: float
    u: float            # col / (cols-1)
    v: float            # row / (rows-1)
    padded: bool = False


@dataclass(frozen=True)
class CornerSet:
    corners: tuple[Corner, ...]
    map_id: str
    shape: tuple[int, int]

    def __post_init__(self):
        if any(not (0 <= c.row < self.shape[0] and 0 <= c.col < self.shape[1])
               for c in self.corners):
            raise ValueError("corner outside the map")

    def __len__(self) -> int:
        return len(self.corners)

    def uv(self) -> np.ndarray:
        return np.array([[c.u, c.v] for c in self.corners])


@dataclass(frozen=True)
class PointCloudRD:
    """60x3 fused cloud: columns (slow-time u, range_sq v, doppler_sq w)."""

    points: np.ndarray
    source: tuple[str, ...]                 # "R" or "D" per row
    flagged: tuple[bool, ...] = field(default=())

    def __post_init__(self):
        if self.points.shape != (60, 3):
            raise ValueError("PC-RD must be 60x3")
        if np.any(self.points < 0) or np.any(self.points > 1):
            raise ValueError("PC-RD coordinates must be normalized to [0, 1]")


def _kernels(cfg: DetectorConfig) -> list[np.ndarray]:
    sig_u = cfg.sigma
    sig_v = cfg.sigma * cfg.anisotropy
    radius = int(np.ceil(3.0 * max(sig_u, sig_v)))
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    kernels = []
    for k in range(cfg.orientations):
        ang = np.pi * k / cfg.orientations
        u = xx * np.cos(ang) + yy * np.sin(ang)
        v = -xx * np.sin(ang) + yy * np.cos(ang)
        g = np.exp(-0.5 * (u ** 2 / sig_u ** 2 + v ** 2 / sig_v ** 2))
        kern = (u ** 2 - sig_u ** 2) / sig_u ** 4 * g
        kern -= kern.mean()                 # exactly zero response on constants
        kern /= np.abs(kern).sum()
        kernels.append(kern)
    return kernels


_KERNEL_FFT_CACHE: dict[tuple, tuple] = {}


def _kernel_ffts(cfg: DetectorConfig, padded_shape: tuple[int, int]):
    key = (cfg, padded_shape)
    cached = _KERNEL_FFT_CACHE.get(key)
    if cached is None:
        kernels = _kernels(cfg)
        k = kernels[0].shape[0]
        full = (padded_shape[0] + k - 1, padded_shape[1] + k - 1)
        fast = (sfft.next_fast_len(full[0]), sfft.next_fast_len(full[1]))
        ffts = [sfft.rfft2(kern, fast) for kern in kernels]
        cached = (k, fast, ffts)
        _KERNEL_FFT_CACHE[key] = cached
    return cached


def _support(cfg: DetectorConfig) -> int:
    return 2 * int(np.ceil(3.0 * cfg.sigma * max(1.0, cfg.anisotropy))) + 1


def corner_response(pm: ProfileMap | np.ndarray,
                    cfg: DetectorConfig = DetectorConfig()) -> np.ndarray:
    """Geometric mean of squared directional second-derivative responses.

    Implemented as one FFT of the symmetric-padded map against a cached
    bank of kernel transforms (equivalent to per-kernel same-mode
    convolution with reflected borders, so constant maps respond exactly
    zero everywhere and edges grow no artificial gradients).
    """
    img = pm.data if isinstance(pm, ProfileMap) else np.asarray(pm, dtype=float)
    support = _support(cfg)
    if min(img.shape) < support:
        raise ValueError(
            f"map {img.shape} smaller than the {support}x{support} filter support")
    pad = (support - 1) // 2
    padded = np.pad(img, pad, mode="symmetric")
    _, fast, kernel_ffts = _kernel_ffts(cfg, padded.shape)
    img_fft = sfft.rfft2(padded, fast)
    r0, r1 = 2 * pad, 2 * pad + img.shape[0]
    c0, c1 = 2 * pad, 2 * pad + img.shape[1]
    log_sum = None
    sq_max = 0.0
    sq_all = []
    for kf in kernel_ffts:
        conv = sfft.irfft2(img_fft * kf, fast)[r0:r1, c0:c1]
        sq = conv * conv
        sq_all.append(sq)
        sq_max = max(sq_max, float(sq.max(initial=0.0)))
    eps = 1e-12 * sq_max + 1e-300
    for sq in sq_all:
        term = np.log(sq + eps)
        log_sum = term if log_sum is None else log_sum + term
    resp = np.exp(log_sum / len(sq_all)) - eps
    return np.clip(resp, 0.0, None)


def _local_maxima(resp: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    footprint = (yy * yy + xx * xx) <= radius * radius
    peak = maximum_filter(resp, footprint=footprint, mode="constant", cval=0.0)
    # the relative floor discards float-epsilon dust in empty map regions
    floor = 1e-9 * resp.max(initial=0.0)
    rows, cols = np.nonzero((resp == peak) & (resp > floor))
    return rows, cols


_PAD_OFFSETS = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (-1, -1), (1, -1), (-1, 1))


def extract_corners(pm: ProfileMap, map_id: str,
                    cfg: DetectorConfig = DetectorConfig(),
                    k: int | None = None,
                    response: np.ndarray | None = None) -> CornerSet:
    """Top-k NMS corners, strongest first; padded with jittered duplicates
    of the strongest maxima when the map has fewer than k maxima."""
    k = cfg.corners if k is None else k
    resp = corner_response(pm, cfg) if response is None else response
    rows, cols = _local_maxima(resp, cfg.nms_radius)
    order = np.lexsort((cols, rows, -resp[rows, cols]))
    pool_size = max(4 * k, 64)
    order = order[:pool_size] if order.size > pool_size else order

    accepted: list[tuple[int, int, float]] = []
    acc_rc = np.empty((0, 2))
    r2 = cfg.nms_radius ** 2
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        if acc_rc.size:
            d2 = (acc_rc[:, 0] - r) ** 2 + (acc_rc[:, 1] - c) ** 2
            if d2.min() < r2:
                continue
        accepted.append((r, c, float(resp[r, c])))
        acc_rc = np.vstack([acc_rc, [r, c]])
        if len(accepted) >= k:
            break

    nr, nc = pm.data.shape
    corners = [Corner(r, c, v, c / (nc - 1), r / (nr - 1)) for r, c, v in accepted]
    corners += _pad_corners(accepted, k - len(corners), (nr, nc))
    return CornerSet(tuple(corners[:k]), map_id, (nr, nc))


def _pad_corners(anchors: list[tuple[int, int, float]], need: int,
                 shape: tuple[int, int]) -> list[Corner]:
    """Deterministic jittered duplicates; a center-anchored grid when the
    map yielded no maxima at all (flat input)."""
    if need <= 0:
        return []
    nr, nc = shape
    out: list[Corner] = []
    if not anchors:
        grid_r = np.linspace(0.2, 0.8, 5)
        grid_c = np.linspace(0.1, 0.9, 6)
        for r in grid_r:
            for c in grid_c:
                row, col = int(round(r * (nr - 1))), int(round(c * (nc - 1)))
                out.append(Corner(row, col, 0.0, col / (nc - 1), row / (nr - 1),
                                  padded=True))
                if len(out) >= need:
                    return out
        return out[:need]
    i = 0
    while len(out) < need:
        r0, c0, v = anchors[i % len(anchors)]
        dr, dc = _PAD_OFFSETS[(i // len(anchors)) % len(_PAD_OFFSETS)]
        step = 1 + i // (len(anchors) * len(_PAD_OFFSETS))
        row = int(np.clip(r0 + dr * step, 0, nr - 1))
        col = int(np.clip(c0 + dc * step, 0, nc - 1))
        out.append(Corner(row, col, v, col / (nc - 1), row / (nr - 1), padded=True))
        i += 1
    return out


def _column_peak(pm: ProfileMap, col_frac: float) -> tuple[float, bool]:
    """Normalized argmax row of the column nearest to ``col_frac``.

    All-zero columns answer with the axis center, flagged.  Ties resolve to
    the lower row index.
    """
    col = int(round(col_frac * (pm.cols - 1)))
    column = pm.data[:, col]
    if not column.any():
        return 0.5, True
    return int(np.argmax(column)) / (pm.rows - 1), False


def fuse_pc_rd(pc_r: CornerSet, pc_d: CornerSet,
               r2tm: ProfileMap, d2tm: ProfileMap) -> PointCloudRD:
    """Fuse PC-R and PC-D into the 60x3 cloud.

    Each PC-R corner gains the Doppler of the strongest D2TM cell in its
    slow-time column; each PC-D corner gains the range of the strongest
    R2TM cell in its column.
    """
    if len(pc_r) != 30 or len(pc_d) != 30:
        raise ValueError("fusion expects two 30-corner sets")
    rows = []
    flags = []
    source = []
    for c in pc_r.corners:
        w, flagged = _column_peak(d2tm, c.u)
        rows.append((c.u, c.v, w))
        flags.append(flagged)
        source.append("R")
    for c in pc_d.corners:
        v, flagged = _column_peak(r2tm, c.u)
        rows.append((c.u, v, c.v))      # corner's v is the Doppler coordinate
        flags.append(flagged)
        source.append("D")
    pts = np.asarray(rows, dtype=float)
    return PointCloudRD(pts, tuple(source), tuple(flags))
