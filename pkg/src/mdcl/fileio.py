"""Self-describing binary matrix files, PGM heatmaps and CSV tables.

Matrix format "MDCM": magic, version byte, flags byte (bit 0 set for
complex-interleaved payloads), little-endian u32 rows/cols, then row-major
32-bit IEEE-754 little-endian floats.  Bit-exact across platforms.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"MDCM"
VERSION = 1
FLAG_COMPLEX = 0x01
_HEADER = struct.Struct("<4sBBII")


class MatrixFormatError(ValueError):
    pass


def write_matrix(path: str | Path, a: np.ndarray) -> None:
    a = np.asarray(a)
    if a.ndim != 2:
        raise MatrixFormatError("only 2-D matrices are supported")
    complex_payload = np.iscomplexobj(a)
    flags = FLAG_COMPLEX if complex_payload else 0
    rows, cols = a.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, flags, rows, cols))
        if complex_payload:
            inter = np.empty((rows, 2 * cols), dtype="<f4")
            inter[:, 0::2] = a.real
            inter[:, 1::2] = a.imag
            f.write(inter.tobytes())
        else:
            f.write(a.astype("<f4").tobytes())


def read_matrix(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise MatrixFormatError(f"{path}: truncated header")
    magic, version, flags, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MatrixFormatError(f"{path}: unsupported version {version}")
    n_floats = rows * cols * (2 if flags & FLAG_COMPLEX else 1)
    payload = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if payload.size != n_floats:
        raise MatrixFormatError(f"{path}: payload size mismatch")
    if flags & FLAG_COMPLEX:
        payload = payload.reshape(rows, 2 * cols)
        return (payload[:, 0::2] + 1j * payload[:, 1::2]).astype(complex)
    return payload.reshape(rows, cols).astype(float)


def axis_sidecar(path: str | Path, kind: str, rows: int, cols: int,
                 lo: float, hi: float, window: float) -> None:
    """Text header describing a map's axis next to its matrix file."""
    lines = [
        f"kind = {kind}",
        f"rows = {rows}",
        f"cols = {cols}",
        f"value_lo = {lo!r}",
        f"value_hi = {hi!r}",
        f"window_s = {window!r}",
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


# ---------------------------------------------------------------------------
# PGM rendering
# ---------------------------------------------------------------------------

def write_pgm(path: str | Path, img: np.ndarray,
              corners: list[tuple[int, int]] | None = None) -> None:
    """Binary 8-bit PGM of a [0, 1] map; rows are written as given.

    Optional corners are burned in as 3x3 white crosses, clipped at the
    borders.
    """
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("heatmap must be 2-D")
    gray = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    if corners:
        nr, nc = gray.shape
        for r, c in corners:
            for dr, dc in ((0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < nr and 0 <= cc < nc:
                    gray[rr, cc] = 255
    with open(path, "wb") as f:
        f.write(f"P5\n{gray.shape[1]} {gray.shape[0]}\n255\n".encode("ascii"))
        f.write(gray.tobytes())


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------

def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    def fmt(v) -> str:
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
