"""Corner detection and fusion tests on synthetic blob images."""

import numpy as np
import pytest

from mdcl.corners import (CornerSet, DetectorConfig, corner_response,
                          extract_corners, fuse_pc_rd)
from mdcl.maps import AxisSpec, ProfileMap

CFG = DetectorConfig()


def blob_image(centers, shape=(200, 200), sigma=4.0, amps=None):
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    img = np.zeros(shape)
    amps = [1.0] * len(centers) if amps is None else amps
    for (r, c), a in zip(centers, amps):
        img += a * np.exp(-((yy - r) ** 2 + (xx - c) ** 2) / (2 * sigma ** 2))
    return img


def as_map(img, kind="range_sq"):
    lo = -1.0 if kind == "doppler_sq" else 0.0
    return ProfileMap(img, AxisSpec(kind, lo, 1.0, img.shape[0]), 4.0)


class TestResponse:
    def test_blob_center_is_global_max(self):
        img = blob_image([(100, 120)])
        resp = corner_response(img, CFG)
        r, c = np.unravel_index(np.argmax(resp), resp.shape)
        assert abs(r - 100) <= 1 and abs(c - 120) <= 1

    def test_constant_image_zero_response(self):
        resp = corner_response(np.full((64, 64), 0.7), CFG)
        assert np.allclose(resp, 0.0, atol=1e-18)

    def test_amplitude_ordering(self):
        img = blob_image([(60, 60), (140, 140)], amps=[1.0, 0.5])
        resp = corner_response(img, CFG)
        assert resp[60, 60] > resp[140, 140] > 0

    def test_ridge_suppressed_vs_blob(self):
        yy, xx = np.mgrid[0:200, 0:200]
        ridge = np.exp(-((yy - 100) ** 2) / (2 * 4.0 ** 2))   # horizontal ridge
        blob = blob_image([(100, 100)])
        r_ridge = corner_response(ridge, CFG)[100, 100]
        r_blob = corner_response(blob, CFG)[100, 100]
        assert r_blob > 10 * r_ridge

    def test_small_map_rejected(self):
        with pytest.raises(ValueError):
            corner_response(np.zeros((8, 8)), CFG)


class TestExtract:
    def test_thirty_separated_blobs_recovered(self):
        rows = [30 + 28 * i for i in range(5)]
        cols = [30 + 24 * j for j in range(6)]
        centers = [(r, c) for r in rows for c in cols]
        cs = extract_corners(as_map(blob_image(centers, shape=(200, 200))), "m", CFG)
        assert len(cs) == 30
        assert not any(c.padded for c in cs.corners)
        found = {(c.row, c.col) for c in cs.corners}
        for r, c in centers:
            assert any(abs(fr - r) <= 1 and abs(fc - c) <= 1 for fr, fc in found)

    def test_forty_blobs_top_thirty_by_amplitude(self):
        rows = [25 + 30 * i for i in range(5)]
        cols = [25 + 21 * j for j in range(8)]
        centers = [(r, c) for r in rows for c in cols]
        amps = np.linspace(1.0, 0.22, 40)
        img = blob_image(centers, shape=(200, 200), amps=list(amps))
        cs = extract_corners(as_map(img), "m", CFG)
        found = {(c.row, c.col) for c in cs.corners}
        strongest = centers[:30]
        hits = sum(any(abs(fr - r) <= 1 and abs(fc - c) <= 1
                       for fr, fc in found) for r, c in strongest)
        assert hits >= 28     # allow boundary ties between amplitudes 30/31

    def test_flat_image_all_padded(self):
        cs = extract_corners(as_map(np.zeros((128, 128))), "m", CFG)
        assert len(cs) == 30
        assert all(c.padded for c in cs.corners)

    def test_single_blob_padded_to_thirty(self):
        cs = extract_corners(as_map(blob_image([(64, 64)], shape=(128, 128))), "m", CFG)
        assert len(cs) == 30
        assert sum(not c.padded for c in cs.corners) >= 1
        assert sum(c.padded for c in cs.corners) >= 20
        assert all(0 <= c.row < 128 and 0 <= c.col < 128 for c in cs.corners)

    def test_nms_separation(self):
        rng = np.random.default_rng(0)
        img = rng.random((200, 200))
        cs = extract_corners(as_map(img), "m", CFG)
        pts = [(c.row, c.col) for c in cs.corners if not c.padded]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d2 = (pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2
                assert d2 >= CFG.nms_radius ** 2

    def test_translation_equivariance(self):
        centers = [(60, 50), (120, 90), (80, 140)]
        img_a = blob_image(centers, shape=(220, 220))
        dr, dc = 9, 13
        img_b = blob_image([(r + dr, c + dc) for r, c in centers], shape=(220, 220))
        cs_a = extract_corners(as_map(img_a), "a", CFG, k=3)
        cs_b = extract_corners(as_map(img_b), "b", CFG, k=3)
        a = sorted((c.row, c.col) for c in cs_a.corners)
        b = sorted((c.row, c.col) for c in cs_b.corners)
        for (ra, ca), (rb, cb) in zip(a, b):
            assert rb - ra == dr and cb - ca == dc

    def test_monotone_map_invariance(self):
        centers = [(50, 50), (100, 140), (150, 70)]
        img = 0.2 + 0.6 * blob_image(centers, shape=(200, 200), amps=[1.0, 0.8, 0.6])
        warped = img ** 1.5 + 0.3 * img
        cs_a = extract_corners(as_map(img), "a", CFG, k=3)
        cs_b = extract_corners(as_map(warped), "b", CFG, k=3)
        a = sorted((c.row, c.col) for c in cs_a.corners)
        b = sorted((c.row, c.col) for c in cs_b.corners)
        assert a == b

    def test_determinism(self):
        rng = np.random.default_rng(3)
        img = rng.random((150, 150))
        cs_a = extract_corners(as_map(img), "m", CFG)
        cs_b = extract_corners(as_map(img), "m", CFG)
        assert [(c.row, c.col, c.response) for c in cs_a.corners] == \
               [(c.row, c.col, c.response) for c in cs_b.corners]


class TestFusion:
    def _sets(self, n_rows=128, n_cols=128):
        img = blob_image([(40 + (17 * k) % 60, (4 * k + 7) % n_cols)
                          for k in range(40)], shape=(n_rows, n_cols), sigma=2.5)
        r2 = as_map(img)
        d2 = as_map(img.T.copy(), kind="doppler_sq")
        pc_r = extract_corners(r2, "r", CFG)
        pc_d = extract_corners(d2, "d", CFG)
        return pc_r, pc_d, r2, d2

    def test_cardinality_and_range(self):
        pc_r, pc_d, r2, d2 = self._sets()
        cloud = fuse_pc_rd(pc_r, pc_d, r2, d2)
        assert cloud.points.shape == (60, 3)
        assert np.all(cloud.points >= 0) and np.all(cloud.points <= 1)
        assert cloud.source[:30] == tuple("R" * 30)
        assert cloud.source[30:] == tuple("D" * 30)

    def test_third_coordinate_is_column_argmax(self):
        pc_r, pc_d, r2, d2 = self._sets()
        cloud = fuse_pc_rd(pc_r, pc_d, r2, d2)
        for i, corner in enumerate(pc_r.corners):
            col = int(round(corner.u * (d2.cols - 1)))
            expected = np.argmax(d2.data[:, col]) / (d2.rows - 1)
            assert cloud.points[i, 2] == pytest.approx(expected)

    def test_zero_column_flagged_center(self):
        rng = np.random.default_rng(5)
        img = rng.random((64, 64))
        r2 = as_map(img)
        dead = img.copy()
        dead[:, 10] = 0.0
        d2 = as_map(dead, kind="doppler_sq")
        pc_r = CornerSet(tuple([type(extract_corners(r2, "x", CFG).corners[0])(
            row=5, col=10, response=1.0, u=10 / 63, v=5 / 63)] * 30), "r", (64, 64))
        pc_d = extract_corners(d2, "d", CFG)
        cloud = fuse_pc_rd(pc_r, pc_d, r2, d2)
        assert cloud.points[0, 2] == pytest.approx(0.5)
        assert cloud.flagged[0]

    def test_tie_breaks_to_lower_row(self):
        img = np.zeros((64, 64))
        img[20, :] = 1.0
        img[40, :] = 1.0
        d2 = as_map(img, kind="doppler_sq")
        from mdcl.corners import Corner
        pc_r = CornerSet(tuple(Corner(1, c, 1.0, c / 63, 1 / 63)
                               for c in range(0, 60, 2)), "r", (64, 64))
        pc_d = CornerSet(tuple(Corner(1, c, 1.0, c / 63, 1 / 63)
                               for c in range(0, 60, 2)), "d", (64, 64))
        cloud = fuse_pc_rd(pc_r, pc_d, as_map(img), d2)
        assert np.allclose(cloud.points[:30, 2], 20 / 63)

    def test_wrong_cardinality_rejected(self):
        pc_r, pc_d, r2, d2 = self._sets()
        short = CornerSet(pc_r.corners[:10], "r", pc_r.shape)
        with pytest.raises(ValueError):
            fuse_pc_rd(short, pc_d, r2, d2)
