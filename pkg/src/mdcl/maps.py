"""Profile-map containers with physical axis metadata."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class AxisSpec:
    """Physical meaning of a map's row axis.

    kind: one of range, doppler, range_sq, doppler_sq.
    lo/hi: physical extents of the axis.  Range axes start at lo = 0;
    Doppler axes are symmetric about zero; squared Doppler axes carry the
    signed square sign*f^2.
    """

    kind: str
    lo: float
    hi: float
    n: int

    def value_to_row(self, value: float | np.ndarray) -> np.ndarray:
        """Nearest row index of a physical value, clipped into the axis."""
        frac = (np.asarray(value, dtype=float) - self.lo) / (self.hi - self.lo)
        rows = np.floor(frac * self.n).astype(int)
        return np.clip(rows, 0, self.n - 1)

    def row_to_value(self, row: int | np.ndarray) -> np.ndarray:
        """Physical value at the lower edge of a row."""
        return self.lo + (np.asarray(row, dtype=float) / self.n) * (self.hi - self.lo)


@dataclass(frozen=True)
class ProfileMap:
    """Real non-negative matrix: value axis (rows) x slow time (columns)."""

    data: np.ndarray
    axis: AxisSpec
    window: float            # slow-time extent, seconds
    normalized: bool = False

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("profile map must be 2-D")
        if self.data.shape[0] != self.axis.n:
            raise ValueError("row count does not match the axis spec")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def normalized_copy(self) -> "ProfileMap":
        return replace(self, data=normalize(self.data), normalized=True)


def normalize(a: np.ndarray) -> np.ndarray:
    """Min-max normalization onto [0, 1]; constant inputs map to zeros."""
    a = np.asarray(a, dtype=float)
    lo = a.min()
    hi = a.max()
    if hi == lo:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)
