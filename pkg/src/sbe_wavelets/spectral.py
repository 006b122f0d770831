"""Frequency response and the normalized stop-band energy loss.

The stop-band energy of ``H0`` is approximated on the grid
``w_i = i * pi / K`` by ``E_sbn = (1 / 2K) * sum_{i=w_si}^{K} |H0(e^{j w_i})|**2``
with ``w_si = round(K * w_s / pi)``; both endpoints are included.  The loss
divides ``E_sbn`` by the filter energy ``sum h0[k]**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import ConfigurationError, filters_jacobian, lattice_to_filters


@dataclass(frozen=True)
class SpectralGrid:
    K: int = 500
    w_s_lowpass: float = 0.6 * math.pi
    w_s_highpass: float = 0.4 * math.pi

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K!r}")
        for w in (self.w_s_lowpass, self.w_s_highpass):
            if not 0.0 < w < math.pi:
                raise ConfigurationError(f"stop-band edge {w!r} outside (0, pi)")
        if not 1 <= self.w_si <= self.K:
            raise ConfigurationError(f"stop-band index {self.w_si} outside [1, {self.K}]")

    @property
    def w_si(self) -> int:
        """Index of the first stop-band grid point of ``H0``."""
        # half-to-even on exact ties, matching numpy.rint
        return int(round(self.K * self.w_s_lowpass / math.pi))

    @property
    def w_si_highpass(self) -> int:
        return int(round(self.K * self.w_s_highpass / math.pi))

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.K + 1) * (math.pi / self.K)

    def stopband_frequencies(self) -> np.ndarray:
        return self.frequencies[self.w_si :]


@dataclass(frozen=True)
class LossWeights:
    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha!r}")


def _trig(n: int, w: np.ndarray):
    phase = np.outer(np.asarray(w, dtype=np.float64), np.arange(n))
    return np.cos(phase), np.sin(phase)


def magnitude_response_sq(h, w):
    """``|sum_k h[k] exp(-j w k)|**2`` for scalar or array ``w``."""
    h = np.asarray(h, dtype=np.float64)
    if h.size == 0:
        raise ConfigurationError("empty filter")
    w_arr = np.asarray(w, dtype=np.float64)
    cos_t, sin_t = _trig(h.size, w_arr.reshape(-1))
    out = (cos_t @ h) ** 2 + (sin_t @ h) ** 2
    return float(out[0]) if w_arr.ndim == 0 else out.reshape(w_arr.shape)


def stopband_energy_numeric(h0, grid: SpectralGrid | None = None) -> float:
    grid = grid or SpectralGrid()
    mag = magnitude_response_sq(h0, grid.stopband_frequencies())
    # np.sum on a contiguous 1-D array is a fixed pairwise reduction.
    return float(np.sum(mag) / (2 * grid.K))


def highpass_stopband_energy(h1, grid: SpectralGrid | None = None) -> float:
    """Diagnostic stop-band energy of ``H1`` over ``[0, w_s_highpass]``."""
    grid = grid or SpectralGrid()
    mag = magnitude_response_sq(h1, grid.frequencies[: grid.w_si_highpass + 1])
    return float(np.sum(mag) / (2 * grid.K))


def _energy(h0) -> float:
    h0 = np.asarray(h0, dtype=np.float64)
    e = float(h0 @ h0)
    if not e > 0.0:
        raise ZeroDivisionError("stop-band loss is undefined for a zero-energy filter")
    return e


def sbe_loss(h0, grid: SpectralGrid | None = None) -> float:
    return stopband_energy_numeric(h0, grid) / _energy(h0)


def sbe_grad_h0(h0, grid: SpectralGrid | None = None) -> np.ndarray:
    """Gradient of :func:`sbe_loss` with respect to the coefficients."""
    grid = grid or SpectralGrid()
    h0 = np.asarray(h0, dtype=np.float64)
    energy = _energy(h0)
    cos_t, sin_t = _trig(h0.size, grid.stopband_frequencies())
    re, im = cos_t @ h0, sin_t @ h0
    e_sbn = float(np.sum(re**2 + im**2) / (2 * grid.K))
    d_esbn = (cos_t.T @ re + sin_t.T @ im) / grid.K
    return d_esbn / energy - 2.0 * e_sbn * h0 / energy**2


def sbe_gradient(angles, grid: SpectralGrid | None = None) -> np.ndarray:
    """Gradient of the stop-band loss with respect to lattice angles."""
    bank = lattice_to_filters(angles)
    return filters_jacobian(bank.angles).T @ sbe_grad_h0(bank.h0, grid)


def total_loss(l_ce: float, l_sbe: float, weights: LossWeights | float) -> float:
    """``(1 - alpha) * l_ce + alpha * l_sbe``."""
    if not isinstance(weights, LossWeights):
        weights = LossWeights(float(weights))
    if l_ce < 0 or l_sbe < 0:
        raise ConfigurationError("loss terms must be non-negative")
    a = weights.alpha
    return (1.0 - a) * l_ce + a * l_sbe


def response_table(h0, h1, grid: SpectralGrid | None = None) -> np.ndarray:
    """Rows ``(w, |H0|^2, |H1|^2)`` over the full grid."""
    grid = grid or SpectralGrid()
    w = grid.frequencies
    return np.column_stack([w, magnitude_response_sq(h0, w), magnitude_response_sq(h1, w)])
