"""Datasets, synthetic 1/f images, augmentation and artifact writers."""

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fourier import fft2u, ifft2u, unshift

CIFAR_RECORD = 3073
CIFAR_SIZE = 32


@dataclass
class Dataset:
    images: np.ndarray  # [n, channels, H, W]
    labels: np.ndarray  # [n] int
    name: str = ""

    def __len__(self):
        return len(self.labels)

    def subset(self, n):
        return Dataset(self.images[:n], self.labels[:n], self.name)


@dataclass(frozen=True)
class AugmentSpec:
    max_shift: int = 4
    hflip: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.max_shift < 0:
            raise ValueError("max_shift must be >= 0")


def load_cifar10_binary(paths) -> Dataset:
    """Read one or more CIFAR-10 binary batch files; pixels are scaled to [0, 1]."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    images, labels = [], []
    for path in paths:
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise OSError(f"cannot read CIFAR batch {path}: {exc}") from exc
        if len(raw) % CIFAR_RECORD:
            raise ValueError(f"{path}: length {len(raw)} is not a multiple of {CIFAR_RECORD}")
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        lab = records[:, 0].astype(np.int64)
        if np.any(lab > 9):
            raise ValueError(f"{path}: label byte above 9")
        labels.append(lab)
        images.append(records[:, 1:].reshape(-1, 3, CIFAR_SIZE, CIFAR_SIZE) / 255.0)
    if not images:
        raise ValueError("no CIFAR batch files given")
    return Dataset(np.concatenate(images), np.concatenate(labels), "cifar10")


def find_cifar10(root):
    """Return (train_paths, test_paths) inside a cifar-10-batches-bin style directory."""
    root = Path(root)
    train = sorted(root.glob("data_batch_*.bin"))
    test = sorted(root.glob("test_batch.bin"))
    return train, test


# -- synthetic images ---------------------------------------------------------

def radial_frequency(size: int) -> np.ndarray:
    """Distance of each natural-frame bin from DC, measured in the shifted frame."""
    f = np.arange(size) - size // 2
    r = np.hypot(f[:, None], f[None, :])
    return unshift(r)


def power_law_spectrum(size: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Conjugate-symmetric spectrum with amplitude (|f| + 1)^-a and random phases."""
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    amplitude = (radial_frequency(size) + 1.0) ** (-exponent)
    # phases of a real white-noise transform are uniform and already conjugate-paired
    phase = np.angle(fft2u(rng.standard_normal((size, size))))
    return amplitude * np.exp(1j * phase)


def synth_power_law_images(n: int, size: int = 32, exponent: float = 2.0, seed: int = 0,
                           channels: int = 3) -> Dataset:
    rng = np.random.default_rng(seed)
    images = np.empty((n, channels, size, size))
    for i in range(n):
        for c in range(channels):
            img = np.real(ifft2u(power_law_spectrum(size, exponent, rng)))
            lo, hi = img.min(), img.max()
            images[i, c] = (img - lo) / (hi - lo) if hi > lo else 0.0
    return Dataset(images, np.zeros(n, dtype=np.int64), f"synth_a{exponent:g}")


def synth_labelled(n: int, classes: int = 10, size: int = 32, seed: int = 0,
                   channels: int = 3) -> Dataset:
    """Labelled 1/f images whose spectral exponent encodes the class.

    Class k uses exponent 0.5 + 2.5 k / (classes - 1), so the task is
    solvable from spectral statistics alone. Meant for smoke runs when no
    CIFAR data is available.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, classes, size=n)
    images = np.empty((n, channels, size, size))
    for i, label in enumerate(labels):
        exponent = 0.5 + 2.5 * label / max(1, classes - 1)
        for c in range(channels):
            img = np.real(ifft2u(power_law_spectrum(size, exponent, rng)))
            lo, hi = img.min(), img.max()
            images[i, c] = (img - lo) / (hi - lo) if hi > lo else 0.0
    return Dataset(images, labels.astype(np.int64), "synth_labelled")


# -- augmentation / normalization ----------------------------------------------

def shift_image(img, dy: int, dx: int) -> np.ndarray:
    """Translate the trailing two axes by (dy, dx), filling with zeros."""
    out = np.zeros_like(img)
    H, W = img.shape[-2:]
    src_r = slice(max(0, -dy), min(H, H - dy))
    dst_r = slice(max(0, dy), min(H, H + dy))
    src_c = slice(max(0, -dx), min(W, W - dx))
    dst_c = slice(max(0, dx), min(W, W + dx))
    out[..., dst_r, dst_c] = img[..., src_r, src_c]
    return out


def augment(batch, spec: AugmentSpec, rng: np.random.Generator) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    out = np.empty_like(batch)
    s = spec.max_shift
    for i, img in enumerate(batch):
        dy, dx = rng.integers(-s, s + 1, size=2) if s else (0, 0)
        img = shift_image(img, int(dy), int(dx))
        if spec.hflip and rng.random() < 0.5:
            img = img[..., ::-1]
        out[i] = img
    return out


def channel_stats(dataset: Dataset):
    mean = dataset.images.mean(axis=(0, 2, 3))
    std = dataset.images.std(axis=(0, 2, 3))
    return mean, np.where(std > 0, std, 1.0)


def normalize(train: Dataset, *others: Dataset):
    """Standardize every split with the train split's per-channel statistics.

    Returns ``(normalized_splits, (mean, std))``.
    """
    mean, std = channel_stats(train)
    out = []
    for ds in (train,) + others:
        images = (ds.images - mean[None, :, None, None]) / std[None, :, None, None]
        out.append(Dataset(images, ds.labels, ds.name))
    return out, (mean, std)


# -- writers -------------------------------------------------------------------

def write_pgm(image, path) -> None:
    """8-bit binary PGM with per-image min-max scaling."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM output needs a 2D image")
    lo, hi = img.min(), img.max()
    scaled = (img - lo) / (hi - lo) * 255.0 if hi > lo else np.zeros_like(img)
    data = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    H, W = data.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{W} {H}\n255\n".encode("ascii"))
            fh.write(data.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into [0, 1] floats."""
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    W, H, maxval = (int(t) for t in tokens[1:])
    data = np.frombuffer(raw[pos + 1:pos + 1 + W * H], dtype=np.uint8).reshape(H, W)
    return data.astype(np.float64) / maxval


def format_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(rows, header, path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
