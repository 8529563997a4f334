"""Convolution with spatially or spectrally parametrized filters.

Convolution here is same-size circular cross-correlation: each H_f x W_f
filter is embedded in an M x N canvas with its center tap (H_f // 2,
W_f // 2) at the origin, wrapping around the edges.

A spectral bank stores complex coefficients ``z`` with the same shape as
the spatial filters. Spatial filters are recovered as
``Re(idft2(P(z)))`` where ``P`` is the Hermitian projection; the full
array is kept (rather than a packed half spectrum) so that a plain
gradient step on ``z`` maps exactly onto a plain gradient step on the
spatial filters.
"""

import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Optional, Union

import numpy as np

from .fourier import fft2u, hermitian_part, ifft2u
from .tensor import as_complex, as_real

SPFB_MAGIC = b"SPFB"
SPFB_VERSION = 1


@dataclass
class SpatialFilterBank:
    filters: np.ndarray  # [out_ch, in_ch, H_f, W_f]
    bias: np.ndarray     # [out_ch]

    def __post_init__(self):
        self.filters = as_real(self.filters)
        self.bias = as_real(self.bias)
        if self.filters.ndim != 4 or self.bias.shape != self.filters.shape[:1]:
            raise ValueError("expected filters [out, in, h, w] and bias [out]")

    @property
    def shape(self):
        return self.filters.shape


@dataclass
class SpectralFilterBank:
    params: np.ndarray   # complex [out_ch, in_ch, H_f, W_f], natural frame
    bias: np.ndarray

    def __post_init__(self):
        self.params = as_complex(self.params)
        self.bias = as_real(self.bias)
        if self.params.ndim != 4 or self.bias.shape != self.params.shape[:1]:
            raise ValueError("expected params [out, in, h, w] and bias [out]")

    @property
    def shape(self):
        return self.params.shape


FilterBank = Union[SpatialFilterBank, SpectralFilterBank]


def init_spatial_bank(rng: np.random.Generator, out_ch: int, in_ch: int,
                      size: int) -> SpatialFilterBank:
    std = np.sqrt(2.0 / (in_ch * size * size))
    filters = rng.normal(0.0, std, size=(out_ch, in_ch, size, size))
    return SpatialFilterBank(filters, np.zeros(out_ch))


def materialize(z) -> np.ndarray:
    return np.real(ifft2u(hermitian_part(z)))


def materialize_filters(bank: SpectralFilterBank) -> SpatialFilterBank:
    return SpatialFilterBank(materialize(bank.params), bank.bias.copy())


def init_spectral_from_spatial(bank: SpatialFilterBank) -> SpectralFilterBank:
    return SpectralFilterBank(fft2u(bank.filters), bank.bias.copy())


def spectral_param_gradient(grad_filters) -> np.ndarray:
    """Pull a spatial-filter gradient back to the complex parameters.

    Real and imaginary parts of the result are the partial derivatives
    with respect to the real and imaginary parts of each coefficient.
    """
    return hermitian_part(fft2u(as_real(grad_filters)))


def spatial_filters(bank: FilterBank) -> np.ndarray:
    if isinstance(bank, SpectralFilterBank):
        return materialize(bank.params)
    return bank.filters


# -- convolution ------------------------------------------------------------

@dataclass
class ConvCache:
    x: np.ndarray            # [B, in, M, N]
    filters: np.ndarray      # spatial filters actually applied
    spectral: bool
    path: str
    squeeze: bool            # input had no batch axis
    x_hat: Optional[np.ndarray] = None


def embed_filters(filters, M: int, N: int) -> np.ndarray:
    """Place filters on an M x N canvas with the center tap at (0, 0)."""
    h, w = filters.shape[-2:]
    canvas = np.zeros(filters.shape[:-2] + (M, N))
    canvas[..., :h, :w] = filters
    return np.roll(canvas, (-(h // 2), -(w // 2)), axis=(-2, -1))


def extract_filters(canvas, h: int, w: int) -> np.ndarray:
    return np.roll(canvas, (h // 2, w // 2), axis=(-2, -1))[..., :h, :w]


def _rfft(a):
    return np.fft.rfft2(a, axes=(-2, -1))


def _irfft(a, M, N):
    return np.fft.irfft2(a, s=(M, N), axes=(-2, -1))


def conv_forward(x, bank: FilterBank, path: str = "fft"):
    x = as_real(x)
    squeeze = x.ndim == 3
    if squeeze:
        x = x[None]
    filters = spatial_filters(bank)
    out_ch, in_ch, h, w = filters.shape
    B, C, M, N = x.shape
    if C != in_ch:
        raise ValueError(f"input has {C} channels, bank expects {in_ch}")
    if h > M or w > N:
        raise ValueError(f"filter {h}x{w} larger than map {M}x{N}")

    x_hat = None
    if path == "fft":
        x_hat = _rfft(x)
        e_hat = _rfft(embed_filters(filters, M, N))
        y = _irfft(np.einsum("bcmn,ocmn->bomn", x_hat, np.conj(e_hat), optimize=True), M, N)
    elif path == "direct":
        y = np.zeros((B, out_ch, M, N))
        for i in range(h):
            for j in range(w):
                shifted = np.roll(x, (h // 2 - i, w // 2 - j), axis=(-2, -1))
                y += np.einsum("bcmn,oc->bomn", shifted, filters[:, :, i, j], optimize=True)
    else:
        raise ValueError(f"unknown convolution path {path!r}")
    y += bank.bias[None, :, None, None]
    cache = ConvCache(x, filters, isinstance(bank, SpectralFilterBank), path, squeeze, x_hat)
    return (y[0] if squeeze else y), cache


def conv_backward(g, cache: ConvCache):
    """Return (grad_x, grad_bank, grad_bias).

    ``grad_bank`` is complex for spectral banks and real otherwise.
    """
    g = as_real(g)
    if cache.squeeze:
        g = g[None]
    x, filters = cache.x, cache.filters
    B, C, M, N = x.shape
    out_ch, _, h, w = filters.shape
    if g.shape != (B, out_ch, M, N):
        raise ValueError(f"gradient shape {g.shape} does not match {(B, out_ch, M, N)}")

    grad_bias = g.sum(axis=(0, 2, 3))
    if cache.path == "fft":
        g_hat = _rfft(g)
        e_hat = _rfft(embed_filters(filters, M, N))
        x_hat = cache.x_hat if cache.x_hat is not None else _rfft(x)
        grad_x = _irfft(np.einsum("bomn,ocmn->bcmn", g_hat, e_hat, optimize=True), M, N)
        corr = _irfft(np.einsum("bomn,bcmn->ocmn", np.conj(g_hat), x_hat, optimize=True), M, N)
        grad_f = extract_filters(corr, h, w)
    else:
        grad_x = np.zeros_like(x)
        grad_f = np.zeros_like(filters)
        for i in range(h):
            for j in range(w):
                sx, sy = h // 2 - i, w // 2 - j
                shifted = np.roll(x, (sx, sy), axis=(-2, -1))
                grad_f[:, :, i, j] = np.einsum("bomn,bcmn->oc", g, shifted, optimize=True)
                back = np.einsum("bomn,oc->bcmn", g, filters[:, :, i, j], optimize=True)
                grad_x += np.roll(back, (-sx, -sy), axis=(-2, -1))

    grad_bank = spectral_param_gradient(grad_f) if cache.spectral else grad_f
    if cache.squeeze:
        grad_x = grad_x[0]
    return grad_x, grad_bank, grad_bias


# -- analysis -----------------------------------------------------------------

def sparsity_profile(bank: FilterBank, bins: int = 50):
    """Histogram of |coefficient| / max|coefficient| on [0, 1].

    Returns ``(counts, edges)``. An all-zero bank counts every
    coefficient in the first bin.
    """
    coeffs = bank.params if isinstance(bank, SpectralFilterBank) else bank.filters
    mags = np.abs(coeffs).ravel()
    peak = mags.max() if mags.size else 0.0
    if peak == 0.0:
        peak = 1.0
    return np.histogram(mags / peak, bins=bins, range=(0.0, 1.0))


# -- SPFB binary container ----------------------------------------------------
# magic "SPFB" | u32 version | u32 kind (0 spatial, 1 spectral) | u32 ndim |
# u32 dims[ndim] | f64 filter payload (complex as interleaved re, im) |
# f64 bias[dims[0]]; all little-endian.

def write_bank(bank: FilterBank, fh: BinaryIO) -> None:
    spectral = isinstance(bank, SpectralFilterBank)
    data = bank.params if spectral else bank.filters
    fh.write(SPFB_MAGIC)
    fh.write(struct.pack("<III", SPFB_VERSION, int(spectral), data.ndim))
    fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
    if spectral:
        payload = np.ascontiguousarray(data, dtype="<c16").view("<f8")
    else:
        payload = np.ascontiguousarray(data, dtype="<f8")
    fh.write(payload.tobytes())
    fh.write(np.ascontiguousarray(bank.bias, dtype="<f8").tobytes())


def read_bank(fh: BinaryIO) -> FilterBank:
    magic = fh.read(4)
    if magic != SPFB_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {SPFB_MAGIC!r}")
    version, kind, ndim = struct.unpack("<III", _read_exact(fh, 12))
    if version != SPFB_VERSION:
        raise ValueError(f"unsupported SPFB version {version}")
    dims = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
    count = int(np.prod(dims))
    if kind == 1:
        raw = np.frombuffer(_read_exact(fh, 16 * count), dtype="<f8")
        data = raw.view("<c16").reshape(dims).astype(np.complex128)
    elif kind == 0:
        data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8").reshape(dims).astype(np.float64)
    else:
        raise ValueError(f"unknown bank kind {kind}")
    bias = np.frombuffer(_read_exact(fh, 8 * dims[0]), dtype="<f8").astype(np.float64)
    return SpectralFilterBank(data, bias) if kind == 1 else SpatialFilterBank(data, bias)


def bank_to_bytes(bank: FilterBank) -> bytes:
    buf = io.BytesIO()
    write_bank(bank, buf)
    return buf.getvalue()


def bank_from_bytes(blob: bytes) -> FilterBank:
    return read_bank(io.BytesIO(blob))


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("truncated SPFB stream")
    return data
