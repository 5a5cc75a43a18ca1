"""Independent reference computations for the tests.

Nothing here calls into numpy.fft or the package's own interpolation code.
"""

from __future__ import annotations

import cmath
import math

import numpy as np


def brute_dft(g: np.ndarray) -> np.ndarray:
    """Direct O(N^2) 2D DFT per channel."""
    c, h, w = g.shape
    out = np.zeros((c, h, w), dtype=complex)
    for ch in range(c):
        for u in range(h):
            for v in range(w):
                acc = 0j
                for y in range(h):
                    for x in range(w):
                        acc += g[ch, y, x] * cmath.exp(-2j * math.pi * (u * y / h + v * x / w))
                out[ch, u, v] = acc
    return out


def brute_idft(s: np.ndarray) -> np.ndarray:
    c, h, w = s.shape
    out = np.zeros((c, h, w), dtype=complex)
    for ch in range(c):
        for y in range(h):
            for x in range(w):
                acc = 0j
                for u in range(h):
                    for v in range(w):
                        acc += s[ch, u, v] * cmath.exp(2j * math.pi * (u * y / h + v * x / w))
                out[ch, y, x] = acc / (h * w)
    return out


def bin_frequency(u: int, v: int, h: int, w: int) -> float:
    us = u if u <= h / 2 else u - h
    vs = v if v <= w / 2 else v - w
    return math.sqrt((us / (h / 2)) ** 2 + (vs / (w / 2)) ** 2) / math.sqrt(2)


def butterworth_value(f: float, cutoff: float, order: int) -> float:
    return 1.0 / (1.0 + (f / cutoff) ** (2 * order))


def butterworth_table(h: int, w: int, cutoff: float, order: int) -> np.ndarray:
    return np.array([[butterworth_value(bin_frequency(u, v, h, w), cutoff, order) for v in range(w)]
                     for u in range(h)])


def bilinear_point(img2d: np.ndarray, sy: float, sx: float) -> float:
    """Straight-line interpolation between the four samples around (sy, sx), coordinates clamped."""
    h, w = img2d.shape
    sy = min(max(sy, 0.0), h - 1.0)
    sx = min(max(sx, 0.0), w - 1.0)
    y0, x0 = int(math.floor(sy)), int(math.floor(sx))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = sy - y0, sx - x0
    top = img2d[y0, x0] + fx * (img2d[y0, x1] - img2d[y0, x0])
    bot = img2d[y1, x0] + fx * (img2d[y1, x1] - img2d[y1, x0])
    return top + fy * (bot - top)


def bilinear_upsample(g: np.ndarray, factor: int) -> np.ndarray:
    c, h, w = g.shape
    out = np.zeros((c, h * factor, w * factor))
    for ch in range(c):
        for yy in range(h * factor):
            for xx in range(w * factor):
                out[ch, yy, xx] = bilinear_point(g[ch], (yy + 0.5) / factor - 0.5, (xx + 0.5) / factor - 0.5)
    return out


def brute_radial_spectrum(g: np.ndarray, bins: int) -> np.ndarray:
    c, h, w = g.shape
    spec = brute_dft(g)
    sums = [0.0] * bins
    counts = [0] * bins
    for u in range(h):
        for v in range(w):
            b = min(int(bin_frequency(u, v, h, w) * bins), bins - 1)
            sums[b] += sum(abs(spec[ch, u, v]) ** 2 for ch in range(c)) / c
            counts[b] += 1
    return np.array([s / n if n else 0.0 for s, n in zip(sums, counts)])


def gaussian_conditional_velocity_qmc(mu0: float, sigma0: float, t: float, x: float, log2n: int = 20,
                                      seed: int = 0) -> float:
    """Velocity from 2^log2n quasi-random joint samples of (X0, X1), conditioned by linear regression."""
    from scipy.stats import norm, qmc

    z = norm.ppf(qmc.Sobol(2, scramble=True, seed=seed).random_base2(log2n))
    x0 = mu0 + sigma0 * z[:, 0]
    xt = t * z[:, 1] + (1 - t) * x0
    cov = np.cov(x0, xt)
    expected = x0.mean() + cov[0, 1] / cov[1, 1] * (x - xt.mean())
    return (x - expected) / t


def virtual_reference_delta(x0_ref: list, times, start_state: np.ndarray, k: int) -> np.ndarray:
    """Velocity change of the reference flow by explicit Euler integration of its noisy states.

    ``start_state`` is an arbitrary noisy state at ``times[0]``; the reference
    velocity at each time is ``(x - x0_ref) / t``.
    """
    x = start_state.copy()
    velocities = []
    for i in range(k + 1):
        v = (x - x0_ref[i]) / times[i]
        velocities.append(v)
        if i < k:
            x = x + v * (times[i + 1] - times[i])
    return velocities[k] - velocities[k - 1]


def acceleration_space_align(v_cur, v_prev, x0_ref_prev, x0_ref_cur, t_prev, t_cur, beta):
    """Blend accelerations rather than velocities, then convert back.

    The step runs from the larger time ``t_prev`` to ``t_cur``. Accelerations
    are velocity changes per unit time; the reference's comes from its clean
    samples, scaled by the later time.
    """
    dt = t_cur - t_prev
    a_high = (v_cur - v_prev) / dt
    a_ref = -(x0_ref_cur - x0_ref_prev) / (t_cur * dt)
    a_hat = (1.0 - beta) * a_high + beta * a_ref
    return v_prev + a_hat * dt
