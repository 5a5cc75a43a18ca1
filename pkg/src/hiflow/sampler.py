"""Explicit Euler sampling of a rectified flow, with per-step recording."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import VelocityField
from .grid import as_grid, check_same_dims
from .schedule import TimeSchedule


@dataclass(eq=False)
class StepRecord:
    """State at one grid time.

    ``v`` is the velocity actually used for the step and ``x0_pred`` the clean
    sample consistent with it. Guided runs also keep the raw field output in
    ``v_raw``/``x0_raw``.
    """

    t: float
    x_t: np.ndarray
    v: np.ndarray
    x0_pred: np.ndarray
    v_raw: Optional[np.ndarray] = None
    x0_raw: Optional[np.ndarray] = None

    @property
    def x1_pred(self) -> np.ndarray:
        return self.x0_pred + self.v

    def residual(self) -> float:
        """Largest deviation from ``v = (x_t - x0_pred) / t``."""
        return float(np.max(np.abs(self.v - (self.x_t - self.x0_pred) / self.t)))


@dataclass(eq=False)
class Trajectory:
    records: list = field(default_factory=list)
    x_final: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.records)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(r.t for r in self.records)

    def record_at(self, t: float, tol: float = 1e-12) -> StepRecord:
        for r in self.records:
            if abs(r.t - t) <= tol:
                return r
        raise KeyError(f"no record at t={t}")


def predict_clean(x_t, v, t: float) -> np.ndarray:
    if not t > 0:
        raise ValueError(f"predict_clean needs t > 0, got {t}")
    x_t = as_grid(x_t, "x_t")
    v = as_grid(v, "v")
    check_same_dims(x_t, v)
    return x_t - t * v


def euler_step(x_t, v, t_i: float, t_prev: float) -> np.ndarray:
    """Advance from ``t_i`` to the smaller time ``t_prev``."""
    if not t_prev < t_i:
        raise ValueError(f"Euler step needs t_prev < t_i, got {t_prev} >= {t_i}")
    x_t = as_grid(x_t, "x_t")
    v = as_grid(v, "v")
    check_same_dims(x_t, v)
    return x_t + v * (t_prev - t_i)


def sample(
    field: VelocityField,
    schedule: TimeSchedule,
    init,
    start_t: float = 1.0,
    record: bool = True,
) -> Trajectory:
    """Integrate from ``start_t`` (a node of ``schedule``) down to 0."""
    x = as_grid(init, "init")
    if x.shape != field.dims:
        raise ValueError(f"init dims {x.shape} do not match field dims {field.dims}")
    times = schedule.suffix(start_t)
    traj = Trajectory()
    for t_i, t_prev in zip(times, times[1:]):
        v = field.evaluate(x, t_i)
        if record:
            traj.records.append(StepRecord(t_i, x, v, predict_clean(x, v, t_i)))
        x = euler_step(x, v, t_i, t_prev)
    traj.x_final = x
    return traj
