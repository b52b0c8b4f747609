"""Minimal binary netpbm (PGM/PPM) reader and writer.

Only the 8-bit binary variants are supported: P5 for grayscale and P6 for
RGB.  Arrays are exchanged in ``(x, y[, c])`` order with the origin at the
top-left corner and x running horizontally, so the raster rows in the file
correspond to the second axis.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_netpbm(path) -> np.ndarray:
    """Read a binary PGM or PPM file.

    Returns:
        float64 array in [0, 1] of shape (width, height) for P5 or
        (width, height, 3) for P6.
    """
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported netpbm magic {magic!r} in {path}")
    width_tok, pos = _read_token(data, pos)
    height_tok, pos = _read_token(data, pos)
    maxval_tok, pos = _read_token(data, pos)
    width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    if not 0 < maxval <= 255:
        raise ValueError(f"only 8-bit netpbm supported, maxval={maxval}")
    pos += 1  # single whitespace byte after the header
    channels = 3 if magic == b"P6" else 1
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height * channels, offset=pos)
    raster = raster.reshape((height, width, channels))
    out = raster.astype(np.float64) / maxval
    out = np.transpose(out, (1, 0, 2))  # file rows are y; we index (x, y)
    return out[:, :, 0] if channels == 1 else out


def write_netpbm(path, pixels: np.ndarray) -> None:
    """Write an array in [0, 1] as binary PGM (2-D) or PPM (3-D, C=3).

    Values are clipped to [0, 1] and quantized to 8 bits.
    """
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected (x, y) or (x, y, 3) array, got {arr.shape}")
    magic = b"P6" if arr.shape[2] == 3 else b"P5"
    width, height = arr.shape[0], arr.shape[1]
    quantized = np.round(np.clip(arr, 0.0, 1.0) * 255).astype(np.uint8)
    raster = np.transpose(quantized, (1, 0, 2))  # back to row-major y, x
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (width, height))
        fh.write(raster.tobytes())
