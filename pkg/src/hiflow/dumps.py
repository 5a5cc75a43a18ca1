"""Binary dumps of trajectories (``HFT1``) and reference flows (``HFR1``).

Layout, little endian::

    magic[4]
    u32 steps, u32 grids_per_step, u32 channels, u32 height, u32 width
    u8 element_bytes (4 or 8), u8 has_final, u8 method_code, u8 reserved
    steps x { f64 t, grids_per_step x grid }
    [final grid]

Each grid is row-major (channel, y, x). Trajectory steps hold ``x_t, v,
x0_pred, x1_pred`` and, for guided runs, ``v_raw, x0_raw``; the final grid is
the terminal sample. Reference steps hold the upsampled clean sample and the
final grid is the upsampled low resolution terminal.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .imageio import FormatError
from .sampler import StepRecord, Trajectory

_HEADER = struct.Struct("<4sIIIIIBBBB")
_METHODS = {None: 0, "nearest": 1, "bilinear": 2, "bicubic": 3}
_METHOD_NAMES = {v: k for k, v in _METHODS.items()}


def _dtype(precision: str) -> np.dtype:
    if precision == "f64":
        return np.dtype("<f8")
    if precision == "f32":
        return np.dtype("<f4")
    raise ValueError(f"precision must be 'f32' or 'f64', got {precision!r}")


def _write(path, magic, steps, final, dims, precision, method=None) -> None:
    dt = _dtype(precision)
    per_step = len(steps[0][1]) if steps else 0
    c, h, w = dims
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, len(steps), per_step, c, h, w, dt.itemsize,
                              final is not None, _METHODS[method], 0))
        for t, grids in steps:
            fh.write(struct.pack("<d", t))
            for g in grids:
                fh.write(np.ascontiguousarray(g, dtype=dt).tobytes())
        if final is not None:
            fh.write(np.ascontiguousarray(final, dtype=dt).tobytes())


def _read(path, magic):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: file too short for a dump header")
    got, n, per_step, c, h, w, nbytes, has_final, mcode, _ = _HEADER.unpack_from(data)
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    if nbytes not in (4, 8) or mcode not in _METHOD_NAMES or min(c, h, w) < 1:
        raise FormatError(f"{path}: corrupt header")
    dt = np.dtype("<f4" if nbytes == 4 else "<f8")
    size = c * h * w
    expected = _HEADER.size + n * (8 + per_step * size * nbytes) + has_final * size * nbytes
    if len(data) != expected:
        raise FormatError(f"{path}: {len(data)} bytes, header implies {expected}")
    pos = _HEADER.size

    def grid():
        nonlocal pos
        g = np.frombuffer(data, dt, size, pos).astype(np.float64).reshape(c, h, w)
        pos += size * nbytes
        return g

    steps = []
    for _ in range(n):
        (t,) = struct.unpack_from("<d", data, pos)
        pos += 8
        steps.append((t, [grid() for _ in range(per_step)]))
    final = grid() if has_final else None
    return steps, final, (c, h, w), _METHOD_NAMES[mcode]


def save_trajectory(path, traj: Trajectory, precision: str = "f64") -> None:
    if not traj.records:
        raise ValueError("cannot dump an empty trajectory")
    guided = traj.records[0].v_raw is not None
    steps = []
    for r in traj.records:
        grids = [r.x_t, r.v, r.x0_pred, r.x1_pred]
        if guided:
            grids += [r.v_raw, r.x0_raw]
        steps.append((r.t, grids))
    _write(path, b"HFT1", steps, traj.x_final, traj.records[0].x_t.shape, precision)


def load_trajectory(path) -> Trajectory:
    steps, final, _, _ = _read(path, b"HFT1")
    records = []
    for t, grids in steps:
        if len(grids) not in (4, 6):
            raise FormatError(f"{path}: trajectory steps need 4 or 6 grids, found {len(grids)}")
        rec = StepRecord(t, grids[0], grids[1], grids[2])
        if len(grids) == 6:
            rec.v_raw, rec.x0_raw = grids[4], grids[5]
        records.append(rec)
    return Trajectory(records, final)


def save_reference(path, ref, precision: str = "f64") -> None:
    steps = [(t, [g]) for t, g in zip(ref.times, ref.x0_ref)]
    _write(path, b"HFR1", steps, ref.anchor, ref.dims, precision, ref.method)


def load_reference(path):
    from .reference import ReferenceFlow

    steps, final, dims, method = _read(path, b"HFR1")
    return ReferenceFlow(tuple(t for t, _ in steps), [g[0] for _, g in steps], final, method)


def sniff(path) -> bytes:
    """Return the 4-byte magic of a dump file."""
    with open(path, "rb") as fh:
        return fh.read(4)
