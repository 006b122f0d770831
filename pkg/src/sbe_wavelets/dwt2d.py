"""One-level separable 2-D DWT with periodic extension.

The decimated analysis operators are ``L[r, (2r + k) mod n] = h0[k]`` and
``H[r, (2r + k) mod n] = h1[k]``; the subbands are ``X_ll = L X L^T``,
``X_lh = H X L^T``, ``X_hl = L X H^T`` and ``X_hh = H X H^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import FilterBank


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisOperator:
    rows: np.ndarray
    source: str
    n: int


@dataclass(frozen=True)
class SubbandSet:
    x_ll: np.ndarray
    x_lh: np.ndarray
    x_hl: np.ndarray
    x_hh: np.ndarray

    def as_tuple(self):
        return self.x_ll, self.x_lh, self.x_hl, self.x_hh

    def energy(self) -> float:
        return float(sum(np.sum(s * s) for s in self.as_tuple()))


def _check_length(n: int, taps: int) -> None:
    if n % 2:
        raise DimensionError(f"signal length must be even, got {n}")
    if n < taps:
        raise DimensionError(f"signal length {n} shorter than filter length {taps}")


def decimated_filter_matrix(h, n: int) -> np.ndarray:
    """``n/2 x n`` matrix of 2-shifted circular copies of ``h``."""
    h = np.asarray(h, dtype=np.float64)
    _check_length(n, h.size)
    out = np.zeros((n // 2, n))
    rows = np.arange(n // 2)
    for k, c in enumerate(h):
        # += so that wrapped taps landing on one column accumulate.
        np.add.at(out, (rows, (2 * rows + k) % n), c)
    return out


def build_operators(bank: FilterBank, n: int) -> tuple[AnalysisOperator, AnalysisOperator]:
    low = AnalysisOperator(decimated_filter_matrix(bank.h0, n), "h0", n)
    high = AnalysisOperator(decimated_filter_matrix(bank.h1, n), "h1", n)
    return low, high


def analysis_1d(h, x: np.ndarray, axis: int) -> np.ndarray:
    """Circular correlation with ``h`` along ``axis`` keeping even phases."""
    x = np.asarray(x, dtype=np.float64)
    out = 0.0
    for k, c in enumerate(np.asarray(h, dtype=np.float64)):
        out = out + c * np.roll(x, -k, axis=axis)
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(0, None, 2)
    return out[tuple(idx)]


def synthesis_1d(h, y: np.ndarray, axis: int) -> np.ndarray:
    """Adjoint of :func:`analysis_1d`."""
    y = np.asarray(y, dtype=np.float64)
    shape = list(y.shape)
    shape[axis] *= 2
    up = np.zeros(shape)
    idx = [slice(None)] * y.ndim
    idx[axis] = slice(0, None, 2)
    up[tuple(idx)] = y
    out = 0.0
    for k, c in enumerate(np.asarray(h, dtype=np.float64)):
        out = out + c * np.roll(up, k, axis=axis)
    return out


def _check_image(bank: FilterBank, X: np.ndarray) -> None:
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise DimensionError(f"expected square trailing dimensions, got shape {X.shape}")
    _check_length(X.shape[-1], bank.taps)


def dwt2(bank: FilterBank, X) -> SubbandSet:
    """Four-subband decomposition of a square image.

    Leading axes are treated as a batch, so ``(C, n, n)`` stacks work.
    """
    X = np.asarray(X, dtype=np.float64)
    _check_image(bank, X)
    rl = analysis_1d(bank.h0, X, axis=-2)
    rh = analysis_1d(bank.h1, X, axis=-2)
    return SubbandSet(
        x_ll=analysis_1d(bank.h0, rl, axis=-1),
        x_lh=analysis_1d(bank.h0, rh, axis=-1),
        x_hl=analysis_1d(bank.h1, rl, axis=-1),
        x_hh=analysis_1d(bank.h1, rh, axis=-1),
    )


def dwt2_matrix(bank: FilterBank, X) -> SubbandSet:
    """Reference path with explicitly materialized operators."""
    X = np.asarray(X, dtype=np.float64)
    _check_image(bank, X)
    low, high = build_operators(bank, X.shape[-1])
    L, H = low.rows, high.rows
    return SubbandSet(L @ X @ L.T, H @ X @ L.T, L @ X @ H.T, H @ X @ H.T)


def idwt2(bank: FilterBank, S: SubbandSet) -> np.ndarray:
    """Perfect-reconstruction inverse of :func:`dwt2`."""
    parts = [np.asarray(s, dtype=np.float64) for s in S.as_tuple()]
    shape = parts[0].shape
    if any(p.shape != shape for p in parts):
        raise DimensionError(f"subband shapes differ: {[p.shape for p in parts]}")
    if len(shape) < 2 or shape[-1] != shape[-2]:
        raise DimensionError(f"subbands must be square, got {shape}")
    _check_length(2 * shape[-1], bank.taps)
    ll, lh, hl, hh = parts
    rl = synthesis_1d(bank.h0, ll, axis=-1) + synthesis_1d(bank.h1, hl, axis=-1)
    rh = synthesis_1d(bank.h0, lh, axis=-1) + synthesis_1d(bank.h1, hh, axis=-1)
    return synthesis_1d(bank.h0, rl, axis=-2) + synthesis_1d(bank.h1, rh, axis=-2)
