"""Unitary 2D DFT, frame bookkeeping, conjugate symmetry and circular convolution.

Transforms are normalized by 1/sqrt(MN) in both directions so that the DFT is
unitary and Parseval holds with equality. Arrays of rank > 2 are transformed
independently over their trailing two axes.

The fast path delegates to ``numpy.fft`` (pocketfft, mixed radix with a
Bluestein fallback, so every size is supported). :func:`dft2_reference`
is a literal O(M^2 N^2) evaluation kept as an independent oracle.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .tensor import as_complex, as_real


class Frame(enum.Enum):
    NATURAL = "natural"  # DC at (0, 0)
    SHIFTED = "shifted"  # DC at (M // 2, N // 2)


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyMap:
    spectrum: np.ndarray
    frame: Frame = Frame.NATURAL

    @property
    def shape(self):
        return self.spectrum.shape

    def require(self, frame: Frame) -> None:
        if self.frame is not frame:
            raise FrameError(f"expected {frame.value} frame, got {self.frame.value}")


# -- array-level primitives (used by the layers) ---------------------------

def fft2u(x) -> np.ndarray:
    """Unitary forward DFT over the trailing two axes."""
    return np.fft.fft2(np.asarray(x), axes=(-2, -1), norm="ortho")


def ifft2u(y) -> np.ndarray:
    """Unitary inverse DFT over the trailing two axes."""
    return np.fft.ifft2(np.asarray(y), axes=(-2, -1), norm="ortho")


def shift(y) -> np.ndarray:
    return np.fft.fftshift(y, axes=(-2, -1))


def unshift(y) -> np.ndarray:
    return np.fft.ifftshift(y, axes=(-2, -1))


def conj_flip(y) -> np.ndarray:
    """Map y[m, n] -> conj(y[(M - m) % M, (N - n) % N]) on the trailing axes."""
    y = np.asarray(y)
    flipped = np.flip(y, axis=(-2, -1))
    return np.conj(np.roll(flipped, 1, axis=(-2, -1)))


def hermitian_part(y) -> np.ndarray:
    """Orthogonal projection onto conjugate-symmetric (natural frame) maps."""
    y = as_complex(y)
    return 0.5 * (y + conj_flip(y))


def symmetry_deviation(y) -> float:
    y = as_complex(y)
    if y.size == 0:
        return 0.0
    return float(np.max(np.abs(y - conj_flip(y))))


# -- frame-tagged public operations ----------------------------------------

def dft2(x) -> FrequencyMap:
    return FrequencyMap(fft2u(as_complex(x)), Frame.NATURAL)


def idft2(y: FrequencyMap) -> np.ndarray:
    y.require(Frame.NATURAL)
    return ifft2u(y.spectrum)


def fftshift(y: FrequencyMap) -> FrequencyMap:
    y.require(Frame.NATURAL)
    return FrequencyMap(shift(y.spectrum), Frame.SHIFTED)


def ifftshift(y: FrequencyMap) -> FrequencyMap:
    y.require(Frame.SHIFTED)
    return FrequencyMap(unshift(y.spectrum), Frame.NATURAL)


def hermitian_project(y: FrequencyMap) -> FrequencyMap:
    y.require(Frame.NATURAL)
    return FrequencyMap(hermitian_part(y.spectrum), Frame.NATURAL)


def is_conjugate_symmetric(y: FrequencyMap, tol: float) -> bool:
    spectrum = y.spectrum
    if y.frame is Frame.SHIFTED:
        spectrum = unshift(spectrum)
    return symmetry_deviation(spectrum) <= tol


# -- reference transform ---------------------------------------------------

def dft2_reference(x, inverse: bool = False) -> np.ndarray:
    """Direct evaluation of the unitary DFT sum, one output bin at a time."""
    x = as_complex(x)
    if x.ndim > 2:
        return np.stack([dft2_reference(s, inverse) for s in x])
    M, N = x.shape
    sign = 1.0 if inverse else -1.0
    m = np.arange(M)[:, None]
    n = np.arange(N)[None, :]
    out = np.empty((M, N), dtype=np.complex128)
    for h in range(M):
        for w in range(N):
            phase = sign * 2.0 * np.pi * (m * h / M + n * w / N)
            out[h, w] = np.sum(x * np.exp(1j * phase))
    return out / np.sqrt(M * N)


# -- circular convolution --------------------------------------------------

def circular_conv(x, f, path: str = "fft") -> np.ndarray:
    """Wrap-around convolution (x * f)[m, n] = sum_ij x[i, j] f[m - i, n - j]."""
    x = as_real(x)
    f = as_real(f)
    if x.shape != f.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {f.shape}")
    if path == "fft":
        M, N = x.shape[-2:]
        return np.real(np.sqrt(M * N) * ifft2u(fft2u(x) * fft2u(f)))
    if path == "direct":
        return _circular_conv_direct(x, f)
    raise ValueError(f"unknown convolution path {path!r}")


def _circular_conv_direct(x, f):
    M, N = x.shape[-2:]
    out = np.zeros_like(x)
    for i in range(M):
        for j in range(N):
            out += x[..., i:i + 1, j:j + 1] * np.roll(f, (i, j), axis=(-2, -1))
    return out
