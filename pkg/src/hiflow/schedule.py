"""Time grids, noise mixing and coordinate-indexed Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import as_grid, check_same_dims

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class TimeSchedule:
    """Strictly decreasing times from 1 down to 0."""

    times: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if len(ts) < 2:
            raise ValueError("a schedule needs at least two times")
        if ts[0] != 1.0 or ts[-1] != 0.0:
            raise ValueError("schedule must start at 1 and end at 0")
        if any(b >= a for a, b in zip(ts, ts[1:])):
            raise ValueError("schedule times must be strictly decreasing")
        object.__setattr__(self, "times", ts)

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def index_of(self, t: float, tol: float = 1e-12) -> int:
        """Position of grid time ``t``; raises if ``t`` is not on the grid."""
        for i, ti in enumerate(self.times):
            if abs(ti - t) <= tol:
                return i
        raise ValueError(f"time {t!r} is not a node of the schedule")

    def suffix(self, start_t: float) -> tuple[float, ...]:
        return self.times[self.index_of(start_t):]


def make_schedule(steps: int, shape: str = "uniform", shift: float = 1.0) -> TimeSchedule:
    """Uniform grid ``i/steps``, optionally warped by ``t -> s t / (1 + (s-1) t)``."""
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    steps = int(steps)
    uniform = [i / steps for i in range(steps, -1, -1)]
    if shape == "uniform":
        return TimeSchedule(tuple(uniform))
    if shape == "shift":
        if not shift > 0:
            raise ValueError(f"shift must be positive, got {shift}")
        warped = [shift * t / (1.0 + (shift - 1.0) * t) for t in uniform]
        warped[0], warped[-1] = 1.0, 0.0  # rounding can push the ends off by an ulp
        return TimeSchedule(tuple(warped))
    raise ValueError(f"unknown schedule shape {shape!r}")


def mix_noise(x0, noise, t: float) -> np.ndarray:
    """Point on the straight path between a clean sample and noise: ``t*noise + (1-t)*x0``."""
    x0 = as_grid(x0, "x0")
    noise = as_grid(noise, "noise")
    check_same_dims(x0, noise)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return x0.copy()
    if t == 1.0:
        return noise.copy()
    return t * noise + (1.0 - t) * x0


# --------------------------------------------------------------------------
# noise


def _mix(x: np.ndarray) -> np.ndarray:
    z = x + _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class NoiseSpec:
    """Seed and stage index addressing one reproducible standard-normal field."""

    seed: int
    stage: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if int(self.stage) < 0:
            raise ValueError("stage must be non-negative")


def _coordinate_words(spec: NoiseSpec, dims: tuple[int, int, int]) -> np.ndarray:
    c, h, w = dims
    key = _mix(np.array([spec.seed], dtype=np.uint64))
    key = _mix(key ^ np.uint64(spec.stage))
    ch = _mix(key ^ np.arange(c, dtype=np.uint64))[:, None, None]
    yy = np.arange(h, dtype=np.uint64)[None, :, None]
    xx = np.arange(w, dtype=np.uint64)[None, None, :]
    hy = _mix(ch ^ yy)
    return _mix(hy ^ xx)


def sample_noise(spec: NoiseSpec, dims) -> np.ndarray:
    """Standard normal field; each value depends only on (seed, stage, channel, y, x).

    Two SplitMix64 words per coordinate feed a Box-Muller transform.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"dims must be (channels, height, width), got {dims}")
    w1 = _coordinate_words(spec, dims)
    w2 = _mix(w1)
    scale = 1.0 / float(1 << 53)
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * scale  # (0, 1]
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * scale  # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
