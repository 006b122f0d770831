"""Tunable orthogonal wavelet filter banks with a stop-band energy penalty."""

__version__ = "0.1.0"

from .lattice import (
    FilterBank,
    filters_jacobian,
    fit_angles,
    lattice_to_filters,
    named_angles,
    named_bank,
)
from .spectral import (
    LossWeights,
    SpectralGrid,
    magnitude_response_sq,
    sbe_gradient,
    sbe_loss,
    stopband_energy_numeric,
    total_loss,
)
from .dwt2d import SubbandSet, build_operators, dwt2, idwt2
from .units import WaveletUnit, make_replacement, unit_backward, unit_forward

__all__ = [
    "FilterBank",
    "LossWeights",
    "SpectralGrid",
    "SubbandSet",
    "WaveletUnit",
    "build_operators",
    "dwt2",
    "filters_jacobian",
    "fit_angles",
    "idwt2",
    "lattice_to_filters",
    "magnitude_response_sq",
    "make_replacement",
    "named_angles",
    "named_bank",
    "sbe_gradient",
    "sbe_loss",
    "stopband_energy_numeric",
    "total_loss",
    "unit_backward",
    "unit_forward",
]
