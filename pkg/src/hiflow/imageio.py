"""Minimal binary PPM/PGM reading and writing."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import as_grid


class FormatError(ValueError):
    """A file did not match the expected binary layout."""


def to_bytes(g) -> np.ndarray:
    """Quantise a [0, 1] grid to uint8 RGB rows: clamp, scale, round half up."""
    g = as_grid(g)
    if g.shape[0] == 1:
        g = np.repeat(g, 3, axis=0)
    elif g.shape[0] != 3:
        raise ValueError(f"PPM output needs 1 or 3 channels, got {g.shape[0]}")
    q = np.floor(np.clip(g, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    return np.ascontiguousarray(q.transpose(1, 2, 0))


def write_ppm(path, g) -> None:
    rgb = to_bytes(g)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def _tokens(data: bytes, count: int) -> tuple[list[int], int]:
    # Header fields separated by whitespace, '#' comments allowed
    out: list[int] = []
    pos = 0
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PNM header")
        try:
            out.append(int(data[start:pos]))
        except ValueError as exc:
            raise FormatError(f"bad PNM header field {data[start:pos]!r}") from exc
    return out, pos + 1


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6) file into a [0, 1] grid."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: not a binary PGM/PPM file")
    (w, h, maxval), offset = _tokens(data[2:], 3)
    offset += 2
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: bad PNM header")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    n = w * h * channels
    body = data[offset:offset + n * dtype.itemsize]
    if len(body) != n * dtype.itemsize:
        raise FormatError(f"{path}: truncated pixel data")
    px = np.frombuffer(body, dtype=dtype).astype(np.float64).reshape(h, w, channels)
    return px.transpose(2, 0, 1) / maxval
