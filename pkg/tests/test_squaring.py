"""Axis-squaring tests: exact stretch conformance, row-count laws, provenance."""

import numpy as np
import pytest

from mdcl.maps import AxisSpec, ProfileMap
from mdcl.squaring import (decimate_rows, resample_rows, square_doppler_axis,
                           square_range_axis, stretch_rows_squared)


def range_map(col, n_cols=1):
    col = np.asarray(col, dtype=float)
    data = np.tile(col[:, None], (1, n_cols))
    axis = AxisSpec("range", 0.0, float(len(col)), len(col))
    return ProfileMap(data, axis, 4.0)


def doppler_map(col, n_cols=1):
    col = np.asarray(col, dtype=float)
    data = np.tile(col[:, None], (1, n_cols))
    axis = AxisSpec("doppler", -float(len(col)) / 2, float(len(col)) / 2, len(col))
    return ProfileMap(data, axis, 4.0)


class TestRangeSquaring:
    def test_three_row_hand_execution(self):
        # [a, b, c] -> [a, b,b,b, c,c,c,c,c]
        out = square_range_axis(range_map([0.0, 1.0, 0.5]))
        expected = [0.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5]
        assert out.data[:, 0].tolist() == expected

    def test_single_row_identity(self):
        out = square_range_axis(range_map([1.0]), do_normalize=False)
        assert out.data.shape[0] == 1
        assert out.data[0, 0] == 1.0

    def test_constant_map_normalizes_to_zero(self):
        out = square_range_axis(range_map([0.7, 0.7, 0.7]))
        assert np.all(out.data == 0.0)

    def test_row_count_law(self):
        for l in range(1, 65):
            out = square_range_axis(range_map(np.linspace(0, 1, l)),
                                    do_normalize=False)
            assert out.rows == l * l

    def test_pixel_provenance(self):
        # output row c equals source row floor(sqrt(c)) before normalization
        for l in (2, 5, 17, 64):
            col = np.linspace(0.0, 1.0, l)
            out = square_range_axis(range_map(col), do_normalize=False)
            for c in range(l * l):
                assert out.data[c, 0] == col[int(np.floor(np.sqrt(c)))]

    def test_monotone_source_index(self):
        src = np.floor(np.sqrt(np.arange(64 * 64))).astype(int)
        assert np.all(np.diff(src) >= 0)

    def test_argmax_column_preserved(self):
        rng = np.random.default_rng(0)
        data = rng.random((8, 32))
        axis = AxisSpec("range", 0.0, 8.0, 8)
        pm = ProfileMap(data, axis, 4.0)
        out = square_range_axis(pm, do_normalize=False)
        assert np.array_equal(np.argmax(data, axis=0) ** 2 <= 64,
                              np.ones(32, dtype=bool))
        # squaring only stretches rows: column-wise argmax maps to the
        # stretched block of the same source row
        src = np.floor(np.sqrt(np.arange(64))).astype(int)
        for col in range(32):
            assert src[np.argmax(out.data[:, col])] == np.argmax(data[:, col])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            stretch_rows_squared(np.zeros((0, 4)))


class TestDopplerSquaring:
    def test_q4_hand_execution(self):
        # [w, x, y, z] -> [w,w,w, x, y, z,z,z]
        out = square_doppler_axis(doppler_map([1.0, 0.25, 0.5, 0.0]),
                                  do_normalize=False)
        expected = [1.0, 1.0, 1.0, 0.25, 0.5, 0.0, 0.0, 0.0]
        assert out.data[:, 0].tolist() == expected

    def test_row_count_law(self):
        for q in range(2, 65):
            out = square_doppler_axis(doppler_map(np.linspace(0, 1, q)),
                                      do_normalize=False)
            assert out.rows == 2 * ((q + 1) // 2) ** 2

    def test_symmetric_input_symmetric_output(self):
        col = np.array([0.1, 0.7, 0.7, 0.1])
        out = square_doppler_axis(doppler_map(col), do_normalize=False)
        assert np.allclose(out.data[:, 0], out.data[::-1, 0])

    def test_center_ridge_stays_centered(self):
        col = np.zeros(8)
        col[3:5] = 1.0      # hot band around zero Doppler
        out = square_doppler_axis(doppler_map(col), do_normalize=False)
        n = out.rows
        hot = np.nonzero(out.data[:, 0] == 1.0)[0]
        assert set(hot) == {n // 2 - 1, n // 2}

    def test_odd_q_outer_negative_ring_zero(self):
        out = square_doppler_axis(doppler_map([0.3, 0.6, 0.9]), do_normalize=False)
        # q=3: halves of ceil(3/2)^2 = 4 rows; positive half [0.6, 0.9 x3],
        # negative half [0.3] padded with a zero outer ring
        assert out.rows == 8
        assert out.data[:, 0].tolist() == [0.0, 0.0, 0.0, 0.3, 0.6, 0.9, 0.9, 0.9]

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            square_doppler_axis(doppler_map([1.0]))


class TestRenderGrid:
    def test_decimate_block_max(self):
        data = np.arange(8, dtype=float)[:, None]
        pm = ProfileMap(data, AxisSpec("range", 0.0, 8.0, 8), 4.0)
        out = decimate_rows(pm, 4)
        assert out.data[:, 0].tolist() == [1.0, 3.0, 5.0, 7.0]

    def test_decimate_noop_when_small(self):
        pm = range_map([1.0, 2.0])
        assert decimate_rows(pm, 4) is pm

    def test_doppler_decimation_keeps_center_boundary(self):
        col = np.zeros(16)
        col[8] = 1.0        # first positive-half row
        pm = doppler_map(col)
        out = decimate_rows(pm, 8)
        assert out.rows == 8
        assert np.argmax(out.data[:, 0]) == 4      # still first positive row

    def test_resample_preserves_normalized_positions(self):
        rng = np.random.default_rng(1)
        data = rng.random((100, 4))
        pm = ProfileMap(data, AxisSpec("range_sq", 0.0, 1.0, 100), 4.0)
        out = resample_rows(pm, 50)
        assert out.rows == 50
        # block max: every output row dominates its source block
        for i in range(50):
            assert out.data[i, 0] == max(data[2 * i, 0], data[2 * i + 1, 0])

    def test_resample_upsamples_by_repeat(self):
        pm = range_map([1.0, 2.0])
        out = resample_rows(pm, 4)
        assert out.data[:, 0].tolist() == [1.0, 1.0, 2.0, 2.0]
