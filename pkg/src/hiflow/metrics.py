"""Spectral consistency metrics used in place of perceptual scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import apply_mask, as_grid, butterworth_mask, check_same_dims, forward_fft, radial_frequency
from .reference import ReferenceFlow, ref_velocity_delta
from .sampler import Trajectory

PSNR_CAP = 99.0


def mse(a, b) -> float:
    a, b = as_grid(a, "a"), as_grid(b, "b")
    check_same_dims(a, b)
    return float(np.mean((a - b) ** 2))


def lowband_mse(a, b, cutoff: float = 0.4, order: int = 4) -> float:
    """MSE between the Butterworth low-passed versions of ``a`` and ``b``."""
    a, b = as_grid(a, "a"), as_grid(b, "b")
    check_same_dims(a, b)
    mask = butterworth_mask(a.shape[1], a.shape[2], cutoff, order)
    return float(np.mean(apply_mask(a - b, mask) ** 2))


def highband_energy_ratio(g, cutoff: float = 0.4, order: int = 4) -> float:
    """Share of non-DC spectral energy that falls outside the low-pass band."""
    g = as_grid(g)
    power = np.abs(forward_fft(g)) ** 2
    power[:, 0, 0] = 0.0
    total = power.sum()
    if total == 0.0:
        return 0.0
    mask = butterworth_mask(g.shape[1], g.shape[2], cutoff, order).values
    return float((power * (1.0 - mask) ** 2).sum() / total)


def radial_spectrum(g, bins: int = 16) -> np.ndarray:
    """Mean spectral power per normalised radial-frequency bin, averaged over channels.

    Bins split [0, 1] evenly; bins that contain no FFT sample report 0.
    """
    g = as_grid(g)
    if bins < 1:
        raise ValueError("bins must be positive")
    power = (np.abs(forward_fft(g)) ** 2).mean(axis=0)
    f = radial_frequency(g.shape[1], g.shape[2])
    idx = np.minimum((f * bins).astype(int), bins - 1).ravel()
    sums = np.bincount(idx, weights=power.ravel(), minlength=bins)
    counts = np.bincount(idx, minlength=bins)
    out = np.zeros(bins)
    np.divide(sums, counts, out=out, where=counts > 0)
    return out


def psnr(a, b, peak: float = 1.0) -> float:
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(peak**2 / err)))


def log_spectral_distance(a, b, bins: int = 16) -> float:
    """RMS difference in dB between the radial power spectra of ``a`` and ``b``.

    A floor of 1e-12 times the largest bin power keeps empty bins finite.
    """
    pa, pb = radial_spectrum(a, bins), radial_spectrum(b, bins)
    floor = 1e-12 * max(pa.max(), pb.max())
    if floor == 0.0:
        return 0.0
    return float(np.sqrt(np.mean((10.0 * np.log10((pa + floor) / (pb + floor))) ** 2)))


def detail_distance(traj: Trajectory, ref: ReferenceFlow, bins: int = 16) -> float:
    """Mean per-step log-spectral distance between the run's velocity changes and the reference's.

    The velocity change between consecutive records is the step's
    acceleration times the step width, i.e. what content that step adds;
    the reference change at the same times comes from its clean samples.
    """
    dists = []
    for prev, cur in zip(traj.records, traj.records[1:]):
        ref_delta = ref_velocity_delta(ref, ref.index_of(cur.t))
        dists.append(log_spectral_distance(cur.v - prev.v, ref_delta, bins))
    if not dists:
        raise ValueError("need at least two records to measure velocity changes")
    return float(np.mean(dists))


@dataclass
class MetricReport:
    values: dict = field(default_factory=dict)
    spectrum: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for k, v in self.values.items():
            if not np.isfinite(v):
                raise ValueError(f"metric {k} is not finite")
        if self.values.get("lowband_mse", 0.0) < 0:
            raise ValueError("lowband_mse must be non-negative")


def report(output, reference, cutoff: float = 0.4, order: int = 4, bins: int = 16) -> MetricReport:
    """Metrics of ``output`` against ``reference`` (usually the upsampled low resolution result)."""
    return MetricReport(
        {
            "lowband_mse": lowband_mse(output, reference, cutoff, order),
            "highband_energy_ratio": highband_energy_ratio(output, cutoff, order),
            "psnr_vs_reference": psnr(output, reference),
        },
        radial_spectrum(output, bins),
    )
