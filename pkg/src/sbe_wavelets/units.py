"""Tunable wavelet unit: DWT, ReLU on every subband, shared affine combiner.

This is the float64 reference implementation with a hand-written backward
pass.  The trainable network in :mod:`sbe_wavelets.nn` runs the same math
in torch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dwt2d import DimensionError, SubbandSet, decimated_filter_matrix, dwt2, idwt2
from .lattice import (
    ConfigurationError,
    alternating_flip,
    filters_jacobian,
    lattice_to_filters,
    named_angles,
    validate_angles,
)

MODES = ("pool", "conv_replace", "downsample")
SUBBANDS = ("ll", "lh", "hl", "hh")
DEFAULT_COMBINER = (1.0, 0.1, 0.1, 0.1)


@dataclass(frozen=True)
class WaveletUnit:
    angles: np.ndarray
    combiner_weights: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_COMBINER))
    combiner_bias: float = 0.0
    mode: str = "pool"

    def __post_init__(self):
        object.__setattr__(self, "angles", validate_angles(self.angles))
        w = np.asarray(self.combiner_weights, dtype=np.float64).reshape(-1)
        if w.size != 4:
            raise ConfigurationError(f"combiner needs 4 weights, got {w.size}")
        object.__setattr__(self, "combiner_weights", w)
        object.__setattr__(self, "combiner_bias", float(self.combiner_bias))
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown unit mode {self.mode!r}; expected one of {MODES}")

    @property
    def bank(self):
        return lattice_to_filters(self.angles)

    @property
    def conv_stride(self) -> int | None:
        """Stride the preceding convolution must use, if the unit replaces one."""
        return 1 if self.mode == "conv_replace" else None


@dataclass(frozen=True)
class UnitGradients:
    angles: np.ndarray
    combiner_weights: np.ndarray
    combiner_bias: float
    x: np.ndarray


def make_replacement(mode: str, channels: int, angles_init="haar") -> WaveletUnit:
    """Unit standing in for a max-pool, a stride-2 conv, or a shortcut downsample.

    ``angles_init`` is a wavelet name or an angle vector.  The combiner is
    shared across channels, so ``channels`` only validates the placement.
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown unit mode {mode!r}; expected one of {MODES}")
    if channels < 1:
        raise ConfigurationError(f"channels must be positive, got {channels}")
    angles = named_angles(angles_init) if isinstance(angles_init, str) else angles_init
    return WaveletUnit(angles=angles, mode=mode)


def _as_stack(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise DimensionError(f"expected a C x n x n tensor, got shape {X.shape}")
    return X


def unit_forward(unit: WaveletUnit, X) -> np.ndarray:
    X = _as_stack(X)
    sub = dwt2(unit.bank, X)
    out = np.full(sub.x_ll.shape, unit.combiner_bias)
    for w, s in zip(unit.combiner_weights, sub.as_tuple()):
        out += w * np.maximum(s, 0.0)
    return out


def _filter_grad(dmat: np.ndarray, taps: int) -> np.ndarray:
    # Adjoint of decimated_filter_matrix: sum the entries each tap occupies.
    half, n = dmat.shape
    rows = np.arange(half)
    return np.array([dmat[rows, (2 * rows + k) % n].sum() for k in range(taps)])


def unit_backward(unit: WaveletUnit, X, G) -> UnitGradients:
    """Gradients of ``sum(G * unit_forward(unit, X))``."""
    X = _as_stack(X)
    G = np.asarray(G, dtype=np.float64)
    bank = unit.bank
    sub = dwt2(bank, X)
    if G.shape != sub.x_ll.shape:
        raise DimensionError(f"output gradient shape {G.shape} != {sub.x_ll.shape}")

    d_w = np.array([np.sum(G * np.maximum(s, 0.0)) for s in sub.as_tuple()])
    d_b = float(G.sum())
    g_sub = [w * G * (s > 0) for w, s in zip(unit.combiner_weights, sub.as_tuple())]
    d_x = idwt2(bank, SubbandSet(*g_sub))

    n = X.shape[-1]
    L = decimated_filter_matrix(bank.h0, n)
    H = decimated_filter_matrix(bank.h1, n)
    d_L = np.zeros_like(L)
    d_H = np.zeros_like(H)
    # X_s = A X B^T  =>  dA = G_s B X^T,  dB = G_s^T A X  (summed over channels)
    for (a_is_low, b_is_low), gs in zip(
        [(True, True), (False, True), (True, False), (False, False)], g_sub
    ):
        A = L if a_is_low else H
        B = L if b_is_low else H
        dA = np.einsum("crs,sj,cij->ri", gs, B, X)
        dB = np.einsum("crs,ri,cij->sj", gs, A, X)
        if a_is_low:
            d_L += dA
        else:
            d_H += dA
        if b_is_low:
            d_L += dB
        else:
            d_H += dB
    taps = bank.taps
    # The alternating flip F satisfies F @ F = -I, so its adjoint is -F.
    d_h0 = _filter_grad(d_L, taps) - alternating_flip(_filter_grad(d_H, taps))
    d_angles = filters_jacobian(unit.angles).T @ d_h0
    return UnitGradients(d_angles, d_w, d_b, d_x)


def with_params(unit: WaveletUnit, **changes) -> WaveletUnit:
    return replace(unit, **changes)
