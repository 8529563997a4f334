"""Dense tensor helpers shared by every other module.

Tensors are plain ``numpy`` arrays in float64 / complex128. All spatial
operations act on the trailing two axes so that channel and batch axes
pass through untouched.
"""

import math

import numpy as np


def as_real(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def as_complex(x) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128)


def l2_norm_sq(t) -> float:
    """Sum of squared magnitudes, for real or complex input.

    Summation is correctly rounded (``math.fsum``), so zero padding never
    changes the result.
    """
    t = np.asarray(t)
    if np.iscomplexobj(t):
        return math.fsum(np.concatenate([np.ravel(t.real) ** 2, np.ravel(t.imag) ** 2]))
    return math.fsum(np.ravel(t).astype(np.float64) ** 2)


def real_inner(a, b) -> float:
    """Real inner product Re<a, b> treating (re, im) as independent coordinates."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.sum(a.real * b.real) + np.sum(np.imag(a) * np.imag(b)))


def elementwise_mul(a, b) -> np.ndarray:
    a = as_complex(a)
    b = as_complex(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def crop_offsets(M: int, N: int, H: int, W: int) -> tuple[int, int]:
    """Top-left corner of the centered H x W window in a DC-centered M x N map."""
    return M // 2 - H // 2, N // 2 - W // 2


def _check_window(M, N, H, W):
    if H < 1 or W < 1:
        raise ValueError(f"window must be at least 1x1, got {H}x{W}")
    if H > M or W > N:
        raise ValueError(f"window {H}x{W} exceeds map {M}x{N}")


def centered_crop(y, H: int, W: int) -> np.ndarray:
    """Keep the central H x W block of a shifted-frame map (trailing two axes)."""
    y = np.asarray(y)
    M, N = y.shape[-2:]
    _check_window(M, N, H, W)
    r0, c0 = crop_offsets(M, N, H, W)
    return y[..., r0:r0 + H, c0:c0 + W].copy()


def zero_pad_centered(y, M: int, N: int) -> np.ndarray:
    """Adjoint of :func:`centered_crop`: place ``y`` in the crop window of a zero M x N map."""
    y = np.asarray(y)
    H, W = y.shape[-2:]
    _check_window(M, N, H, W)
    r0, c0 = crop_offsets(M, N, H, W)
    out = np.zeros(y.shape[:-2] + (M, N), dtype=y.dtype)
    out[..., r0:r0 + H, c0:c0 + W] = y
    return out
