"""Spectral pooling, frequency dropout and the max-pooling baseline.

Spectral pooling maps an M x N real map to H x W by keeping the central
H x W block of its DC-centered spectrum. Truncation can leave unpaired
bins for even output sizes; projecting onto the conjugate-symmetric
subspace afterwards guarantees a real result, and since that projection is
self-adjoint the backward pass is simply the adjoint chain run in reverse.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .fourier import fft2u, hermitian_part, ifft2u, shift, unshift
from .tensor import as_real, centered_crop, crop_offsets, zero_pad_centered


class ScaleMode(enum.Enum):
    MEAN_PRESERVING = "mean_preserving"
    UNSCALED = "unscaled"


@dataclass(frozen=True)
class FrequencyDropoutSpec:
    alpha: float
    beta: float
    layer_index: int
    total_layers: int

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if not 1 <= self.layer_index <= self.total_layers:
            raise ValueError("need 1 <= layer_index <= total_layers")

    @property
    def lower_fraction(self) -> float:
        m, M = self.layer_index, self.total_layers
        return self.alpha + (m / M) * (self.beta - self.alpha)


@dataclass(frozen=True)
class SpectralPoolConfig:
    out_h: int
    out_w: int
    scale_mode: ScaleMode = ScaleMode.MEAN_PRESERVING
    dropout: Optional[FrequencyDropoutSpec] = None

    def scale(self, M: int, N: int) -> float:
        if self.scale_mode is ScaleMode.MEAN_PRESERVING:
            return float(np.sqrt(self.out_h * self.out_w / (M * N)))
        return 1.0


@dataclass
class PoolCache:
    input_shape: tuple
    config: SpectralPoolConfig
    scale: float
    mask: Optional[np.ndarray] = None
    radius: Optional[int] = None

    @property
    def output_shape(self):
        return self.input_shape[:-2] + (self.config.out_h, self.config.out_w)


def frequency_dropout_mask(H: int, W: int, radius: int) -> np.ndarray:
    """Shifted-frame mask keeping the centered radius x radius square."""
    if radius < 1:
        raise ValueError(f"truncation radius must be >= 1, got {radius}")
    rh, rw = min(radius, H), min(radius, W)
    r0, c0 = crop_offsets(H, W, rh, rw)
    mask = np.zeros((H, W))
    mask[r0:r0 + rh, c0:c0 + rw] = 1.0
    return mask


def sample_truncation_radius(spec: FrequencyDropoutSpec, size: int,
                             rng: np.random.Generator) -> int:
    """Draw R uniformly from {max(1, floor(c_m * size)), ..., size}."""
    size = max(1, int(size))
    low = max(1, int(np.floor(spec.lower_fraction * size)))
    low = min(low, size)
    return int(rng.integers(low, size + 1))


def spectral_pool_forward(x, cfg: SpectralPoolConfig,
                          rng: Optional[np.random.Generator] = None,
                          train: bool = True):
    """Pool the trailing two axes of ``x`` to ``cfg.out_h x cfg.out_w``.

    Frequency dropout is applied only when ``cfg.dropout`` is set and
    ``train`` is true; in that case ``rng`` is mandatory. One radius is
    drawn per call and shared by every leading (batch/channel) slice.
    """
    x = as_real(x)
    M, N = x.shape[-2:]
    H, W = cfg.out_h, cfg.out_w
    if H > M or W > N:
        raise ValueError(f"cannot pool {M}x{N} up to {H}x{W}")
    mask = radius = None
    if cfg.dropout is not None and train:
        if rng is None:
            raise ValueError("frequency dropout in training mode needs an rng")
        radius = sample_truncation_radius(cfg.dropout, min(H, W), rng)
        mask = frequency_dropout_mask(H, W, radius)
    scale = cfg.scale(M, N)

    y = centered_crop(shift(fft2u(x)), H, W)
    if mask is not None:
        y = y * mask
    y = hermitian_part(unshift(y * scale))
    out = np.real(ifft2u(y))
    return out, PoolCache(x.shape, cfg, scale, mask, radius)


def spectral_pool_backward(g, cache: PoolCache) -> np.ndarray:
    g = as_real(g)
    if g.shape != cache.output_shape:
        raise ValueError(f"gradient shape {g.shape} does not match {cache.output_shape}")
    M, N = cache.input_shape[-2:]
    z = shift(hermitian_part(fft2u(g))) * cache.scale
    if cache.mask is not None:
        z = z * cache.mask
    z = unshift(zero_pad_centered(z, M, N))
    return np.real(ifft2u(z))


def spectral_approximate(x, H: int, W: int) -> np.ndarray:
    """Same-size low-pass reconstruction keeping the central H x W frequencies."""
    x = as_real(x)
    M, N = x.shape[-2:]
    y = shift(fft2u(x))
    y = zero_pad_centered(centered_crop(y, H, W), M, N)
    return np.real(ifft2u(hermitian_part(unshift(y))))


# -- max pooling ------------------------------------------------------------

@dataclass
class MaxPoolCache:
    input_shape: tuple
    window: int
    stride: int
    argmax: np.ndarray  # flat index into each window, row-major


def _max_pool_out(size, window, stride):
    return (size - window) // stride + 1


def max_pool_forward(x, window: int, stride: int):
    x = as_real(x)
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    M, N = x.shape[-2:]
    if window > M or window > N:
        raise ValueError(f"window {window} larger than input {M}x{N}")
    patches = sliding_window_view(x, (window, window), axis=(-2, -1))
    patches = patches[..., ::stride, ::stride, :, :]
    flat = patches.reshape(patches.shape[:-2] + (window * window,))
    argmax = np.argmax(flat, axis=-1)
    out = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]
    return out, MaxPoolCache(x.shape, window, stride, argmax)


def _window_origins(cache: MaxPoolCache):
    M, N = cache.input_shape[-2:]
    oh = _max_pool_out(M, cache.window, cache.stride)
    ow = _max_pool_out(N, cache.window, cache.stride)
    rows = np.arange(oh) * cache.stride
    cols = np.arange(ow) * cache.stride
    return rows, cols


def max_pool_backward(g, cache: MaxPoolCache) -> np.ndarray:
    g = as_real(g)
    if g.shape != cache.argmax.shape:
        raise ValueError(f"gradient shape {g.shape} does not match {cache.argmax.shape}")
    M, N = cache.input_shape[-2:]
    rows, cols = _window_origins(cache)
    di, dj = np.divmod(cache.argmax, cache.window)
    ii = rows[:, None] + di
    jj = cols[None, :] + dj
    lead = int(np.prod(cache.input_shape[:-2], dtype=np.int64))
    out = np.zeros((lead, M * N))
    flat_idx = (ii * N + jj).reshape(lead, -1)
    gf = g.reshape(lead, -1)
    for k in range(lead):
        np.add.at(out[k], flat_idx[k], gf[k])
    return out.reshape(cache.input_shape)


def max_pool_reconstruct(pooled, cache: MaxPoolCache) -> np.ndarray:
    """Spread each pooled value over its source window (later windows overwrite).

    Pixels covered by no window stay zero.
    """
    pooled = as_real(pooled)
    out = np.zeros(cache.input_shape)
    k = cache.window
    rows, cols = _window_origins(cache)
    for a, r in enumerate(rows):
        for b, c in enumerate(cols):
            out[..., r:r + k, c:c + k] = pooled[..., a:a + 1, b:b + 1]
    return out
