"""Flow-aligned guidance: initialization, direction and acceleration alignment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import VelocityField
from .grid import FilterMask, as_grid, butterworth_mask, check_same_dims, lowpass_swap
from .reference import ReferenceFlow, ref_velocity_delta
from .sampler import StepRecord, Trajectory, euler_step, predict_clean
from .schedule import NoiseSpec, TimeSchedule, mix_noise, sample_noise


def parse_weight_schedule(text: str) -> tuple[str, float]:
    """``linear``, ``off`` or ``constant:W`` -> (kind, value)."""
    text = str(text).strip()
    if text in ("linear", "off"):
        return text, 0.0
    if text.startswith("constant:"):
        w = float(text.split(":", 1)[1])
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"constant weight must lie in [0, 1], got {w}")
        return "constant", w
    raise ValueError(f"unknown weight schedule {text!r}")


@dataclass
class GuidanceConfig:
    tau: float = 0.6
    cutoff: float = 0.4
    order: int = 4
    alpha: str = "linear"
    beta: str = "linear"
    g_i: bool = True
    g_d: bool = True
    g_a: bool = True

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0.0 < self.cutoff <= 1.0:
            raise ValueError(f"cutoff must lie in (0, 1], got {self.cutoff}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"filter order must be a positive integer, got {self.order}")
        parse_weight_schedule(self.alpha)
        parse_weight_schedule(self.beta)

    def alpha_at(self, t: float) -> float:
        return schedule_weight(self.alpha, t, self.tau)

    def beta_at(self, t: float) -> float:
        return schedule_weight(self.beta, t, self.tau)


def guidance_weight(t: float, tau: float) -> float:
    """Linearly decaying weight ``t / tau``: 1 at the entry time, 0 at t = 0."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    if t < 0.0 or t > tau:
        raise ValueError(f"guidance weight needs 0 <= t <= tau, got t={t}, tau={tau}")
    return t / tau


def schedule_weight(spec: str, t: float, tau: float) -> float:
    kind, value = parse_weight_schedule(spec)
    if kind == "off":
        return 0.0
    if kind == "constant":
        return value
    return guidance_weight(min(max(t, 0.0), tau), tau)


def init_align(ref: ReferenceFlow, tau: float, noise) -> np.ndarray:
    """Starting state at ``tau``: the reference clean sample noised to level ``tau``."""
    return mix_noise(ref.at(tau), noise, tau)


def direction_align(x0_high, x0_ref, mask: FilterMask, alpha_t: float) -> np.ndarray:
    """Swap ``alpha_t`` of the low band of ``x0_high`` for that of ``x0_ref``."""
    return lowpass_swap(x0_high, x0_ref, mask, alpha_t)


def accel_align(v_cur, v_prev, ref_delta, beta_t: float) -> np.ndarray:
    """Pull the velocity change ``v_cur - v_prev`` towards the reference's change.

    Returns ``v_cur + beta_t * (ref_delta - (v_cur - v_prev))``.
    """
    v_cur = as_grid(v_cur, "v_cur")
    v_prev = as_grid(v_prev, "v_prev")
    ref_delta = as_grid(ref_delta, "ref_delta")
    check_same_dims(v_cur, v_prev)
    check_same_dims(v_cur, ref_delta)
    if not 0.0 <= beta_t <= 1.0:
        raise ValueError(f"beta_t must lie in [0, 1], got {beta_t}")
    if beta_t == 0.0:
        return v_cur.copy()
    return v_cur + beta_t * (ref_delta - (v_cur - v_prev))


def guided_sample(
    field_high: VelocityField,
    schedule: TimeSchedule,
    ref: ReferenceFlow,
    config: GuidanceConfig,
    noise_spec: NoiseSpec,
    *,
    anchor_mode: str = "reference",
    mask: Optional[FilterMask] = None,
    record: bool = True,
) -> Trajectory:
    """High resolution sampling guided by ``ref``.

    Per step: evaluate the field, align the predicted clean sample's low band
    with the time-matched reference (``g_d``), blend the velocity change with
    the reference's (``g_a``, from the second step on), then take an Euler
    step. With ``anchor_mode="constant"`` the fixed upsampled low resolution
    terminal replaces the time-matched reference and acceleration alignment
    is not applied.
    """
    if anchor_mode not in ("reference", "constant"):
        raise ValueError(f"unknown anchor mode {anchor_mode!r}")
    dims = field_high.dims
    if ref.dims != dims:
        raise ValueError(f"reference dims {ref.dims} do not match field dims {dims}")
    times = schedule.suffix(config.tau)
    tau = times[0]
    for t in times[:-1]:
        try:
            ref.index_of(t)
        except ValueError:
            raise ValueError(f"reference flow is missing an entry at t={t}") from None
    if mask is None:
        mask = butterworth_mask(dims[1], dims[2], config.cutoff, config.order)
    use_accel = config.g_a and anchor_mode == "reference"

    noise = sample_noise(noise_spec, dims)
    if config.g_i:
        x = init_align(ref, tau, noise)
    else:
        if ref.anchor is None:
            raise ValueError("reference has no terminal anchor for the unaligned start")
        x = mix_noise(ref.anchor, noise, tau)

    traj = Trajectory()
    v_prev, t_last = None, None
    for t_i, t_next in zip(times, times[1:]):
        v_raw = field_high.evaluate(x, t_i)
        x0_raw = predict_clean(x, v_raw, t_i)
        v = v_raw
        alpha = config.alpha_at(t_i) if config.g_d else 0.0
        if alpha > 0.0:
            source = ref.anchor if anchor_mode == "constant" else ref.at(t_i)
            x0_hat = direction_align(x0_raw, source, mask, alpha)
            v = (x - x0_hat) / t_i
        if use_accel and v_prev is not None:
            k = ref.index_of(t_i)
            if k < 1 or abs(ref.times[k - 1] - t_last) > 1e-12:
                raise ValueError(f"reference times are not aligned with the schedule at t={t_i}")
            delta = ref_velocity_delta(ref, k)
            v = accel_align(v, v_prev, delta, config.beta_at(t_i))
        if record:
            x0_used = x0_raw if v is v_raw else predict_clean(x, v, t_i)
            traj.records.append(StepRecord(t_i, x, v, x0_used, v_raw, x0_raw))
        x = euler_step(x, v, t_i, t_next)
        v_prev, t_last = v, t_i
    traj.x_final = x
    return traj
