"""Dense image grids and the frequency-domain tools used for guidance.

Grids are plain ``float64`` numpy arrays of shape ``(channels, height, width)``.
Spectra are the complex arrays returned by :func:`forward_fft`, with the DC
coefficient at index ``(0, 0)`` of every channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METHODS = ("nearest", "bilinear", "bicubic")


def as_grid(a, name: str = "grid") -> np.ndarray:
    """Validate ``a`` as a (C, H, W) float64 grid and return it as such."""
    g = np.asarray(a, dtype=np.float64)
    if g.ndim != 3 or min(g.shape) < 1:
        raise ValueError(f"{name} must have shape (channels, height, width), got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError(f"{name} contains non-finite values")
    return g


def check_same_dims(a: np.ndarray, b: np.ndarray, what: str = "grids") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what} differ in dims: {a.shape} vs {b.shape}")


def constant(channels: int, height: int, width: int, value: float) -> np.ndarray:
    return np.full((channels, height, width), float(value))


# --------------------------------------------------------------------------
# resampling


def _cubic_weights(frac: np.ndarray, a: float = -0.5) -> np.ndarray:
    # Keys cubic convolution kernel evaluated at offsets -1, 0, 1, 2
    d = np.stack([1.0 + frac, frac, 1.0 - frac, 2.0 - frac], axis=-1)
    w = np.where(
        d <= 1.0,
        (a + 2.0) * d**3 - (a + 3.0) * d**2 + 1.0,
        a * d**3 - 5.0 * a * d**2 + 8.0 * a * d - 4.0 * a,
    )
    return w


def _interp_matrix(n_in: int, factor: int, method: str) -> np.ndarray:
    """Row-stochastic (n_in*factor, n_in) matrix mapping samples to the finer grid.

    Pixel centres sit at half-integer positions; out-of-range taps are clamped
    to the border sample.
    """
    n_out = n_in * factor
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    if method == "nearest":
        m[rows, rows // factor] = 1.0
        return m
    src = (rows + 0.5) / factor - 0.5
    base = np.floor(src).astype(int)
    frac = src - base
    if method == "bilinear":
        taps = [(0, 1.0 - frac), (1, frac)]
    else:
        w = _cubic_weights(frac)
        taps = [(k - 1, w[:, k]) for k in range(4)]
    for offset, weight in taps:
        idx = np.clip(base + offset, 0, n_in - 1)
        np.add.at(m, (rows, idx), weight)
    return m


def upsample(g, factor: int, method: str = "bicubic") -> np.ndarray:
    """Enlarge ``g`` by an integer ``factor`` along both spatial axes."""
    g = as_grid(g)
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"upsample factor must be a positive integer, got {factor!r}")
    if method not in METHODS:
        raise ValueError(f"unknown interpolation method {method!r}; expected one of {METHODS}")
    if factor == 1:
        return g.copy()
    if method == "nearest":
        return np.repeat(np.repeat(g, factor, axis=1), factor, axis=2)
    my = _interp_matrix(g.shape[1], factor, method)
    mx = _interp_matrix(g.shape[2], factor, method)
    return my @ g @ mx.T


def downsample(g, factor: int) -> np.ndarray:
    """Box-filter average over ``factor`` x ``factor`` blocks."""
    g = as_grid(g)
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"downsample factor must be a positive integer, got {factor!r}")
    c, h, w = g.shape
    if h % factor or w % factor:
        raise ValueError(f"dims {h}x{w} are not divisible by {factor}")
    if factor == 1:
        return g.copy()
    return g.reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))


# --------------------------------------------------------------------------
# spectra


def forward_fft(g) -> np.ndarray:
    """Unnormalised per-channel 2D DFT."""
    return np.fft.fft2(as_grid(g), axes=(-2, -1))


def inverse_fft(s) -> np.ndarray:
    """Inverse of :func:`forward_fft` (divides by H*W); imaginary residue is dropped."""
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 3 or min(s.shape) < 1:
        raise ValueError(f"spectrum must have shape (channels, height, width), got {s.shape}")
    return np.fft.ifft2(s, axes=(-2, -1)).real


def signed_frequencies(n: int) -> np.ndarray:
    """FFT bin index k mapped to its signed frequency (k, or k - n past n/2)."""
    k = np.arange(n)
    return np.where(k <= n / 2, k, k - n).astype(np.float64)


def radial_frequency(height: int, width: int) -> np.ndarray:
    """Normalised radial frequency per FFT bin; 0 at DC, 1 at the spectrum corner."""
    fy = signed_frequencies(height) / (height / 2.0)
    fx = signed_frequencies(width) / (width / 2.0)
    return np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class FilterMask:
    """A per-bin low-pass weight in [0, 1], laid out like the FFT output."""

    values: np.ndarray
    cutoff: float
    order: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def complement(self) -> np.ndarray:
        return 1.0 - self.values


def butterworth_mask(height: int, width: int, cutoff: float = 0.4, order: int = 4) -> FilterMask:
    """Squared-magnitude Butterworth low-pass, ``1 / (1 + (f/D)^(2n))``.

    The response is exactly 0.5 where the normalised radial frequency equals
    the cutoff.
    """
    if height < 1 or width < 1:
        raise ValueError("mask dims must be positive")
    if not 0.0 < cutoff <= 1.0:
        raise ValueError(f"cutoff must lie in (0, 1], got {cutoff}")
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    f = radial_frequency(height, width)
    values = 1.0 / (1.0 + (f / cutoff) ** (2 * int(order)))
    return FilterMask(values, float(cutoff), int(order))


def ideal_mask(height: int, width: int, cutoff: float) -> FilterMask:
    """Binary low-pass keeping bins with normalised frequency <= cutoff.

    Unlike the Butterworth mask it is a projection, so band swaps with it are
    idempotent. ``order`` is reported as 0.
    """
    if not 0.0 < cutoff <= 1.0:
        raise ValueError(f"cutoff must lie in (0, 1], got {cutoff}")
    values = (radial_frequency(height, width) <= cutoff).astype(np.float64)
    return FilterMask(values, float(cutoff), 0)


def all_pass_mask(height: int, width: int) -> FilterMask:
    return FilterMask(np.ones((height, width)), 1.0, 0)


def apply_mask(g, mask: FilterMask) -> np.ndarray:
    """Filter every channel of ``g`` with ``mask`` in the frequency domain."""
    g = as_grid(g)
    if mask.shape != g.shape[1:]:
        raise ValueError(f"mask shape {mask.shape} does not match grid {g.shape[1:]}")
    return inverse_fft(forward_fft(g) * mask.values)


def lowpass_swap(target, source, mask: FilterMask, weight: float) -> np.ndarray:
    """Move the masked band of ``target`` towards that of ``source`` by ``weight``.

    Returns ``target + weight * (lowpass(source) - lowpass(target))``.
    """
    target = as_grid(target, "target")
    source = as_grid(source, "source")
    check_same_dims(target, source)
    if mask.shape != target.shape[1:]:
        raise ValueError(f"mask shape {mask.shape} does not match grid {target.shape[1:]}")
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {weight}")
    if weight == 0.0:
        return target.copy()
    band = inverse_fft(forward_fft(source) * mask.values) - inverse_fft(forward_fft(target) * mask.values)
    return target + weight * band


def gaussian_blur(g, sigma: float) -> np.ndarray:
    """Periodic Gaussian blur with standard deviation ``sigma`` pixels, done in Fourier space."""
    g = as_grid(g)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return g.copy()
    _, h, w = g.shape
    fy = signed_frequencies(h) / h
    fx = signed_frequencies(w) / w
    gain = np.exp(-2.0 * np.pi**2 * sigma**2 * (fy[:, None] ** 2 + fx[None, :] ** 2))
    return inverse_fft(forward_fft(g) * gain)
