"""Deterministic synthetic texture dataset.

Three balanced classes of 32x32 single-channel images:

* 0 - low-frequency blobs (Gaussian-smoothed white noise)
* 1 - oriented gratings with a period of 2 to 4 pixels
* 2 - a checkerboard with a period of 2 pixels

Every image carries a weak blob background and additive white noise, so
the classes differ mostly in their content above half the Nyquist rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

CLASS_NAMES = ("blobs", "stripes", "checkerboard")


@dataclass(frozen=True)
class TextureDataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    seed: int

    @property
    def n_classes(self) -> int:
        return len(CLASS_NAMES)

    def subset(self, n: int) -> "TextureDataset":
        """First ``n`` training images (class-interleaved, so still balanced)."""
        return TextureDataset(self.x_train[:n], self.y_train[:n], self.x_test, self.y_test, self.seed)


def _blob(rng, size, sigma):
    b = gaussian_filter(rng.standard_normal((size, size)), sigma, mode="wrap")
    return b / (b.std() + 1e-12)


def make_texture(label: int, rng: np.random.Generator, size: int = 32,
                 noise: float = 1.0, background: float = 0.3,
                 contrast: tuple[float, float] = (0.1, 0.25)) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    if label == 0:
        img = _blob(rng, size, rng.uniform(1.5, 3.0))
    else:
        amp = rng.uniform(*contrast)
        if label == 1:
            period = rng.uniform(2.0, 4.0)
            phi = rng.uniform(0.0, np.pi)
            phase = rng.uniform(0.0, 2 * np.pi)
            tex = np.cos(2 * np.pi * (xx * np.cos(phi) + yy * np.sin(phi)) / period + phase)
        elif label == 2:
            tex = np.where((xx + yy) % 2 == 0, 1.0, -1.0) * rng.choice([-1.0, 1.0])
        else:
            raise ValueError(f"unknown class {label}")
        img = np.sqrt(2.0) * amp * tex / np.sqrt(np.mean(tex**2))
        img += background * _blob(rng, size, rng.uniform(1.5, 3.0))
    return img + noise * rng.standard_normal((size, size))


def make_dataset(seed: int = 0, per_class: int = 500, size: int = 32,
                 test_fraction: float = 0.2, **texture_kw) -> TextureDataset:
    """Generate, interleave by class, and split per class 80/20."""
    rng = np.random.default_rng(seed)
    n_classes = len(CLASS_NAMES)
    imgs = np.empty((n_classes, per_class, size, size))
    for i in range(per_class):
        for c in range(n_classes):
            imgs[c, i] = make_texture(c, rng, size, **texture_kw)
    n_test = int(round(per_class * test_fraction))
    n_train = per_class - n_test

    def interleave(block):
        # (classes, k, h, w) -> (k * classes, h, w) ordered c0, c1, c2, c0, ...
        k = block.shape[1]
        x = block.transpose(1, 0, 2, 3).reshape(k * n_classes, size, size)
        y = np.tile(np.arange(n_classes), k)
        return x[:, None].astype(np.float32), y.astype(np.int64)

    x_tr, y_tr = interleave(imgs[:, :n_train])
    x_te, y_te = interleave(imgs[:, n_train:])
    return TextureDataset(x_tr, y_tr, x_te, y_te, seed)


def band_energy_ratio(img: np.ndarray, cutoff: float = 0.5 * np.pi) -> float:
    """Spectral energy above ``cutoff`` (radial) over energy below it, DC excluded."""
    n0, n1 = img.shape[-2:]
    spec = np.abs(np.fft.fft2(img)) ** 2
    wy = 2 * np.pi * np.fft.fftfreq(n0)[:, None]
    wx = 2 * np.pi * np.fft.fftfreq(n1)[None, :]
    radius = np.hypot(wy, wx)
    high = spec[radius > cutoff].sum()
    low = spec[(radius <= cutoff) & (radius > 0)].sum()
    return float(high / low)
