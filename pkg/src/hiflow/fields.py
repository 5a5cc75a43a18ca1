"""Velocity fields standing in for a pretrained flow network.

Every field maps a state ``x`` at time ``t`` in (0, 1] to a velocity of the
same shape. All of them are unconditional.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import as_grid, butterworth_mask, downsample, gaussian_blur, upsample
from .imageio import FormatError
from .schedule import NoiseSpec, sample_noise


def _check_time(t: float) -> float:
    t = float(t)
    if not 0.0 < t <= 1.0:
        raise ValueError(f"velocity is defined for t in (0, 1], got {t}")
    return t


class VelocityField:
    """Base class; subclasses implement :meth:`_velocity`."""

    kind = "abstract"

    def __init__(self, dims):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"field dims must be (channels, height, width), got {dims}")
        self.dims = dims

    def evaluate(self, x, t: float) -> np.ndarray:
        x = as_grid(x, "x")
        if x.shape != self.dims:
            raise ValueError(f"state dims {x.shape} do not match field dims {self.dims}")
        return self._velocity(x, _check_time(t))

    def _velocity(self, x: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims})"


class GaussianField(VelocityField):
    """Exact marginal velocity when data ~ N(mu0, sigma0^2) and noise ~ N(0, 1), independently coupled."""

    kind = "gaussian"

    def __init__(self, dims, mu0: float = 0.0, sigma0: float = 1.0):
        super().__init__(dims)
        if not sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        self.mu0 = float(mu0)
        self.sigma0 = float(sigma0)

    def expected_clean(self, x: np.ndarray, t: float) -> np.ndarray:
        var0 = self.sigma0**2
        s2 = (1.0 - t) ** 2 * var0 + t**2
        m = (1.0 - t) * self.mu0
        return self.mu0 + (1.0 - t) * var0 * (x - m) / s2

    def _velocity(self, x, t):
        return (x - self.expected_clean(x, t)) / t


class AnchoredField(VelocityField):
    """Points straight at a fixed target: the predicted clean sample never changes."""

    kind = "anchored"

    def __init__(self, target):
        target = as_grid(target, "target")
        super().__init__(target.shape)
        self.target = target

    def _velocity(self, x, t):
        return (x - self.target) / t


class CoarseToFineField(VelocityField):
    """Predicts the target blurred by ``blur0 * t * height`` pixels.

    Early (large t) predictions carry only coarse structure; detail appears as
    t shrinks. ``blur0`` is a fraction of the image height so the same value
    gives matching content across resolutions.
    """

    kind = "coarse2fine"

    def __init__(self, target, blur0: float = 0.05):
        target = as_grid(target, "target")
        super().__init__(target.shape)
        if not blur0 > 0:
            raise ValueError("blur0 must be positive")
        self.target = target
        self.blur0 = float(blur0)

    def predicted_clean(self, t: float) -> np.ndarray:
        return gaussian_blur(self.target, self.blur0 * t * self.dims[1])

    def _velocity(self, x, t):
        return (x - self.predicted_clean(t)) / t


# --------------------------------------------------------------------------
# tiny MLP


@dataclass(eq=False)
class MlpWeights:
    """Dense tanh network; ``layers[k] = (W, b)`` with ``W`` shaped (out, in), float32."""

    layers: list = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        fixed = []
        prev = None
        for w, b in self.layers:
            w = np.ascontiguousarray(w, dtype="<f4")
            b = np.ascontiguousarray(b, dtype="<f4")
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError("layer weight/bias shapes disagree")
            if prev is not None and w.shape[1] != prev:
                raise ValueError("consecutive layer sizes disagree")
            prev = w.shape[0]
            fixed.append((w, b))
        if fixed[0][0].shape[1] != 4 or prev != 1:
            raise ValueError("MLP must map 4 input features to 1 output")
        self.layers = fixed

    def sizes(self) -> list[tuple[int, int]]:
        return [(w.shape[1], w.shape[0]) for w, _ in self.layers]

    def forward(self, features: np.ndarray) -> np.ndarray:
        """Apply the network to rows of ``features`` (n, 4); returns (n,)."""
        h = features
        last = len(self.layers) - 1
        for k, (w, b) in enumerate(self.layers):
            h = h @ w.astype(np.float64).T + b.astype(np.float64)
            if k != last:
                h = np.tanh(h)
        return h[:, 0]

    def to_bytes(self) -> bytes:
        parts = [b"HFW1", struct.pack("<I", len(self.layers))]
        parts += [struct.pack("<II", i, o) for i, o in self.sizes()]
        for w, b in self.layers:
            parts += [w.tobytes(), b.tobytes()]
        body = b"".join(parts)
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "MlpWeights":
        if len(data) < 12 or data[:4] != b"HFW1":
            raise FormatError("not an HFW1 weight file")
        body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
        if zlib.crc32(body) != crc:
            raise FormatError("weight file checksum mismatch")
        (count,) = struct.unpack_from("<I", body, 4)
        pos = 8
        if count < 1 or len(body) < pos + 8 * count:
            raise FormatError("weight file header truncated")
        sizes = [struct.unpack_from("<II", body, pos + 8 * k) for k in range(count)]
        pos += 8 * count
        expected = pos + sum(4 * (i * o + o) for i, o in sizes)
        if expected != len(body):
            raise FormatError(f"weight file size mismatch: {len(body)} bytes, header implies {expected}")
        layers = []
        for i, o in sizes:
            w = np.frombuffer(body, "<f4", i * o, pos).reshape(o, i)
            pos += 4 * i * o
            b = np.frombuffer(body, "<f4", o, pos)
            pos += 4 * o
            layers.append((w.copy(), b.copy()))
        try:
            return cls(layers)
        except ValueError as exc:
            raise FormatError(str(exc)) from exc


def save_mlp_weights(path, weights: MlpWeights) -> None:
    Path(path).write_bytes(weights.to_bytes())


def load_mlp_weights(path) -> MlpWeights:
    return MlpWeights.from_bytes(Path(path).read_bytes())


def random_mlp_weights(hidden=(16,), seed: int = 0, scale: float = 0.5) -> MlpWeights:
    """Seeded random network, handy as a fixture."""
    rng = np.random.default_rng(seed)
    sizes = [4, *hidden, 1]
    layers = [
        (rng.normal(0.0, scale, (o, i)), rng.normal(0.0, 0.1 * scale, o))
        for i, o in zip(sizes, sizes[1:])
    ]
    return MlpWeights(layers)


class MlpField(VelocityField):
    """Per-pixel MLP on (value, x, y, t); channels are processed independently."""

    kind = "mlp"

    def __init__(self, dims, weights: MlpWeights):
        super().__init__(dims)
        self.weights = weights
        _, h, w = self.dims
        yy, xx = np.meshgrid((np.arange(h) + 0.5) / h, (np.arange(w) + 0.5) / w, indexing="ij")
        self._coords = np.stack([xx.ravel(), yy.ravel()], axis=1)

    def _velocity(self, x, t):
        c, h, w = self.dims
        out = np.empty_like(x)
        tcol = np.full((h * w, 1), t)
        for ch in range(c):
            feats = np.hstack([x[ch].reshape(-1, 1), self._coords, tcol])
            out[ch] = self.weights.forward(feats).reshape(h, w)
        return out


# --------------------------------------------------------------------------
# procedural targets


def procedural_scene(dims, seed: int = 0, blobs: int = 6) -> np.ndarray:
    """Smooth colour blobs over a gradient, defined in continuous coordinates.

    The same seed yields the same picture at every resolution, sampled at
    pixel centres.
    """
    c, h, w = (int(d) for d in dims)
    rng = np.random.default_rng(seed)
    yy = ((np.arange(h) + 0.5) / h)[:, None]
    xx = ((np.arange(w) + 0.5) / w)[None, :]
    base = rng.uniform(0.2, 0.5, c)
    tilt = rng.uniform(-0.2, 0.2, (c, 2))
    img = base[:, None, None] + tilt[:, 0, None, None] * (yy - 0.5) + tilt[:, 1, None, None] * (xx - 0.5)
    for _ in range(blobs):
        cy, cx = rng.uniform(0.15, 0.85, 2)
        width = rng.uniform(0.06, 0.18)
        colour = rng.uniform(-0.35, 0.45, c)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * width**2))
        img = img + colour[:, None, None] * bump
    return img


def detail_texture(dims, seed: int = 0, amplitude: float = 0.1, cutoff: float = 0.4) -> np.ndarray:
    """Seeded broadband texture with its content weighted towards high frequencies."""
    dims = tuple(int(d) for d in dims)
    noise = sample_noise(NoiseSpec(seed, stage=1 << 20), dims)
    mask = butterworth_mask(dims[1], dims[2], cutoff, 2)
    spec = np.fft.fft2(noise, axes=(-2, -1)) * (1.0 - 0.5 * mask.values)
    return amplitude * np.fft.ifft2(spec, axes=(-2, -1)).real


def _fit_target(target: np.ndarray, dims: tuple, method: str) -> np.ndarray:
    """Resize a supplied target by a uniform integer factor: interpolate up, box-average down."""
    if target.shape == dims:
        return target
    (c, h, w), (_, th, tw) = dims, target.shape
    if target.shape[0] != c:
        raise ValueError(f"target has {target.shape[0]} channels, field needs {c}")
    if h % th == 0 and w % tw == 0 and h // th == w // tw:
        return upsample(target, h // th, method)
    if th % h == 0 and tw % w == 0 and th // h == tw // w:
        return downsample(target, th // h)
    raise ValueError(f"target dims {target.shape} are not a uniform integer rescale of {dims}")


def make_field(kind: str, dims, **params) -> VelocityField:
    """Build a field from a family name and keyword parameters.

    ``anchored``/``coarse2fine`` accept ``target`` (a grid), or ``scene_seed``
    plus optional ``texture_amp``/``texture_seed``/``base_height`` for a
    procedural target. When ``dims`` is finer than ``base_height``, the
    procedural target gains the seeded detail texture, giving the high
    resolution field content the low resolution one does not have.
    """
    dims = tuple(int(d) for d in dims)
    if kind == "gaussian":
        return GaussianField(dims, params.get("mu0", 0.0), params.get("sigma0", 1.0))
    if kind == "mlp":
        weights = params.get("weights")
        if weights is None:
            raise ValueError("mlp field needs weights")
        if not isinstance(weights, MlpWeights):
            weights = load_mlp_weights(weights)
        return MlpField(dims, weights)
    if kind not in ("anchored", "coarse2fine"):
        raise ValueError(f"unknown field kind {kind!r}")
    target = params.get("target")
    if target is None:
        target = procedural_scene(dims, int(params.get("scene_seed", 0)))
        amp = float(params.get("texture_amp", 0.0))
        base_h = int(params.get("base_height", dims[1]))
        if amp > 0 and dims[1] > base_h:
            target = target + detail_texture(dims, int(params.get("texture_seed", 0)), amp)
    else:
        target = _fit_target(as_grid(target, "target"), dims, params.get("interpolation", "bicubic"))
    if kind == "anchored":
        return AnchoredField(target)
    return CoarseToFineField(target, float(params.get("blur0", 0.05)))
