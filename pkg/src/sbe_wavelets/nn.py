"""Torch modules for training wavelet units inside a small CNN.

Lattice angles are always float64 parameters.  The filter coefficients and
the stop-band loss are computed by the numpy routines in
:mod:`sbe_wavelets.lattice` and :mod:`sbe_wavelets.spectral`, wrapped as
autograd functions with their analytic Jacobians, then cast to the
activation dtype at the boundary.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from .lattice import ConfigurationError, filters_jacobian, lattice_to_filters, named_angles
from .spectral import SpectralGrid, sbe_grad_h0, sbe_loss
from .units import DEFAULT_COMBINER, MODES


class LatticeFilter(torch.autograd.Function):
    """angles (float64) -> h0 (float64) with the analytic lattice Jacobian."""

    @staticmethod
    def forward(ctx, angles):
        a = angles.detach().cpu().numpy()
        ctx.save_for_backward(angles)
        return torch.from_numpy(lattice_to_filters(a).h0.copy())

    @staticmethod
    def backward(ctx, grad_h0):
        (angles,) = ctx.saved_tensors
        jac = torch.from_numpy(filters_jacobian(angles.detach().cpu().numpy()))
        return jac.T @ grad_h0.to(torch.float64)


class StopbandLoss(torch.autograd.Function):
    """h0 (float64) -> normalized stop-band energy, analytic gradient."""

    @staticmethod
    def forward(ctx, h0, grid):
        ctx.grid = grid
        ctx.save_for_backward(h0)
        return torch.tensor(sbe_loss(h0.detach().cpu().numpy(), grid), dtype=torch.float64)

    @staticmethod
    def backward(ctx, grad):
        (h0,) = ctx.saved_tensors
        g = torch.from_numpy(sbe_grad_h0(h0.detach().cpu().numpy(), ctx.grid))
        return grad * g, None


def lattice_h0(angles: torch.Tensor) -> torch.Tensor:
    return LatticeFilter.apply(angles)


def alternating_flip(h0: torch.Tensor) -> torch.Tensor:
    sign = torch.ones(h0.numel(), dtype=h0.dtype)
    sign[1::2] = -1
    return sign * h0.flip(0)


_PLACEMENTS: dict[tuple[int, int], torch.Tensor] = {}


def _placement(taps: int, n: int) -> torch.Tensor:
    """0/1 tensor ``P[k, r, c]`` marking where tap ``k`` sits in the n/2 x n operator."""
    key = (taps, n)
    if key not in _PLACEMENTS:
        p = torch.zeros(taps, n // 2, n, dtype=torch.float64)
        rows = torch.arange(n // 2)
        for k in range(taps):
            p[k, rows, (2 * rows + k) % n] += 1.0
        _PLACEMENTS[key] = p
    return _PLACEMENTS[key]


def decimated_operators(h0: torch.Tensor, n: int) -> tuple[torch.Tensor, torch.Tensor]:
    if n % 2 or n < h0.numel():
        raise ValueError(f"spatial size {n} must be even and >= {h0.numel()} taps")
    p = _placement(h0.numel(), n).to(h0.dtype)
    low = torch.einsum("k,krc->rc", h0, p)
    high = torch.einsum("k,krc->rc", alternating_flip(h0), p)
    return low, high


class WaveletUnit(nn.Module):
    """DWT of each channel, ReLU on all subbands, one shared affine combiner.

    Pass ``angles`` to share a parameter between several units.
    """

    def __init__(self, angles_init="db2", mode="pool", angles: nn.Parameter | None = None):
        super().__init__()
        if mode not in MODES:
            raise ConfigurationError(f"unknown unit mode {mode!r}; expected one of {MODES}")
        self.mode = mode
        if angles is None:
            init = named_angles(angles_init) if isinstance(angles_init, str) else angles_init
            angles = nn.Parameter(torch.tensor(np.asarray(init, dtype=np.float64)))
        self.angles = angles
        self.weight = nn.Parameter(torch.tensor(DEFAULT_COMBINER, dtype=torch.float32))
        self.bias = nn.Parameter(torch.zeros((), dtype=torch.float32))

    @property
    def taps(self) -> int:
        return 2 * self.angles.numel()

    def h0(self) -> torch.Tensor:
        return lattice_h0(self.angles)

    def bank(self):
        return lattice_to_filters(self.angles.detach().cpu().numpy())

    def subbands(self, x: torch.Tensor):
        if x.shape[-1] != x.shape[-2]:
            raise ValueError(f"expected square feature maps, got {tuple(x.shape)}")
        low, high = decimated_operators(self.h0().to(x.dtype), x.shape[-1])
        rl, rh = low @ x, high @ x
        return rl @ low.T, rh @ low.T, rl @ high.T, rh @ high.T

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        w = self.weight.to(x.dtype)
        out = self.bias.to(x.dtype)
        for i, s in enumerate(self.subbands(x)):
            out = out + w[i] * F.relu(s)
        return out

    def sbe(self, grid: SpectralGrid) -> torch.Tensor:
        return StopbandLoss.apply(self.h0(), grid)


class PoolUnit(nn.Module):
    """Average-pool stand-in: 2x2 stride-2 kernel shared across channels, plus bias.

    Starts as plain average pooling; used as the non-wavelet baseline.
    """

    def __init__(self, mode="pool"):
        super().__init__()
        self.mode = mode
        self.weight = nn.Parameter(torch.full((1, 1, 2, 2), 0.25))
        self.bias = nn.Parameter(torch.zeros(()))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        y = F.conv2d(x.reshape(b * c, 1, h, w), self.weight.to(x.dtype), stride=2)
        return y.reshape(b, c, h // 2, w // 2) + self.bias.to(x.dtype)


class ToyNet(nn.Module):
    """Stem, pooling unit, one residual stage with wavelet downsampling.

    ``stem conv -> BN -> ReLU -> unit(pool)``, then a residual block whose
    main branch is ``conv(stride 1) -> BN -> unit(conv_replace) -> ReLU ->
    conv -> BN`` and whose shortcut is ``1x1 conv -> BN -> unit(downsample)``,
    then global average pooling and a linear classifier.  ``norm=False`` drops
    the batch norms.
    """

    def __init__(self, n_classes=3, wavelet="db2", baseline=False, width=8, norm=True):
        super().__init__()
        self.wavelet = wavelet
        self.baseline = baseline
        self.norm = norm

        def bn(c):
            return nn.BatchNorm2d(c) if norm else nn.Identity()

        def unit(mode):
            return PoolUnit(mode) if baseline else WaveletUnit(wavelet, mode)

        self.stem = nn.Conv2d(1, width, 3, padding=1)
        self.bn_stem = bn(width)
        self.pool = unit("pool")
        self.conv1 = nn.Conv2d(width, 2 * width, 3, padding=1, stride=1)
        self.bn1 = bn(2 * width)
        self.down_main = unit("conv_replace")
        self.conv2 = nn.Conv2d(2 * width, 2 * width, 3, padding=1)
        self.bn2 = bn(2 * width)
        self.shortcut = nn.Conv2d(width, 2 * width, 1)
        self.bn_short = bn(2 * width)
        self.down_short = unit("downsample")
        self.fc = nn.Linear(2 * width, n_classes)

    def units(self) -> list[WaveletUnit]:
        return [m for m in (self.pool, self.down_main, self.down_short) if isinstance(m, WaveletUnit)]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.pool(F.relu(self.bn_stem(self.stem(x))))
        main = self.bn2(self.conv2(F.relu(self.down_main(self.bn1(self.conv1(x))))))
        x = F.relu(main + self.down_short(self.bn_short(self.shortcut(x))))
        return self.fc(x.mean(dim=(-2, -1)))

    def mean_sbe(self, grid: SpectralGrid) -> torch.Tensor:
        units = self.units()
        if not units:
            return torch.zeros((), dtype=torch.float64)
        return torch.stack([u.sbe(grid) for u in units]).mean()


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
