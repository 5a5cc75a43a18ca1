"""Reference flow in the high resolution space, built from a low resolution trajectory.

Only the upsampled predicted clean samples are stored. The reference flow's
noisy states are never needed: the velocity change between two grid times
cancels them out and depends on the clean samples alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import as_grid, upsample
from .sampler import Trajectory


@dataclass(eq=False)
class ReferenceFlow:
    times: tuple
    x0_ref: list
    anchor: Optional[np.ndarray] = None
    method: Optional[str] = None

    def __post_init__(self):
        self.times = tuple(float(t) for t in self.times)
        if not self.times or len(self.times) != len(self.x0_ref):
            raise ValueError("reference needs one clean sample per time")
        if any(b >= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("reference times must be strictly decreasing")
        shape = self.x0_ref[0].shape
        if any(g.shape != shape for g in self.x0_ref):
            raise ValueError("reference grids must share dims")
        if self.anchor is not None and self.anchor.shape != shape:
            raise ValueError("anchor dims differ from reference dims")

    def __len__(self):
        return len(self.times)

    @property
    def dims(self) -> tuple:
        return self.x0_ref[0].shape

    def index_of(self, t: float, tol: float = 1e-12) -> int:
        for k, tk in enumerate(self.times):
            if abs(tk - t) <= tol:
                return k
        raise ValueError(f"reference has no entry at t={t}")

    def at(self, t: float) -> np.ndarray:
        return self.x0_ref[self.index_of(t)]

    @classmethod
    def constant(cls, times, anchor) -> "ReferenceFlow":
        """A reference whose clean sample is ``anchor`` at every time."""
        anchor = as_grid(anchor, "anchor")
        return cls(tuple(times), [anchor] * len(times), anchor, None)


def _scale_factor(src: tuple, dst: tuple) -> int:
    if len(dst) != 3 or src[0] != dst[0]:
        raise ValueError(f"target dims {dst} incompatible with source {src}")
    fy, ry = divmod(dst[1], src[1])
    fx, rx = divmod(dst[2], src[2])
    if ry or rx or fy != fx or fy < 1:
        raise ValueError(f"target dims {dst} are not an integer multiple of {src}")
    return fy


def build_reference(low_traj: Trajectory, target_dims, method: str = "bicubic") -> ReferenceFlow:
    if not low_traj.records:
        raise ValueError("low resolution trajectory is empty")
    target_dims = tuple(int(d) for d in target_dims)
    factor = _scale_factor(low_traj.records[0].x0_pred.shape, target_dims)
    entries = [upsample(r.x0_pred, factor, method) for r in low_traj.records]
    anchor = None if low_traj.x_final is None else upsample(low_traj.x_final, factor, method)
    return ReferenceFlow(low_traj.times, entries, anchor, method)


def ref_velocity_delta(ref: ReferenceFlow, k: int) -> np.ndarray:
    """Reference velocity change from entry ``k - 1`` to the later entry ``k``.

    Equals ``-(x0_ref[k] - x0_ref[k-1]) / t[k]``.
    """
    if not 1 <= k < len(ref):
        raise ValueError(f"entry index must lie in [1, {len(ref) - 1}], got {k}")
    t_next = ref.times[k]
    if not t_next > 0:
        raise ValueError("velocity change into t = 0 is undefined")
    return -(ref.x0_ref[k] - ref.x0_ref[k - 1]) / t_next
