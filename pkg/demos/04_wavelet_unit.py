"""
The wavelet unit as a drop-in pooling layer
===========================================

Subbands go through a ReLU and are mixed by four weights and a bias.  With
weights (1, 0, 0, 0) and Haar filters the unit is 2x2 average pooling
scaled by 2.
"""

import numpy as np
import torch

from sbe_wavelets.nn import ToyNet, WaveletUnit, count_parameters
from sbe_wavelets.units import WaveletUnit as ReferenceUnit
from sbe_wavelets.units import unit_backward, unit_forward

x = np.abs(np.random.default_rng(2).normal(size=(1, 4, 4)))
ref = ReferenceUnit(np.array([np.pi / 4]), [1.0, 0.0, 0.0, 0.0], 0.0)
pooled = x.reshape(1, 2, 2, 2, 2).mean(axis=(2, 4))
print("unit / avgpool:\n", unit_forward(ref, x) / pooled)

# The torch module agrees with the numpy reference, gradients included.
unit = WaveletUnit("db2", "pool").double()
X = torch.randn(1, 3, 8, 8, dtype=torch.float64, requires_grad=True)
G = torch.randn(1, 3, 4, 4, dtype=torch.float64)
(unit(X) * G).sum().backward()
numpy_unit = ReferenceUnit(unit.angles.detach().numpy(), unit.weight.detach().numpy(), float(unit.bias))
grads = unit_backward(numpy_unit, X.detach().numpy()[0], G.numpy()[0])
print("angle grad torch:", unit.angles.grad.numpy())
print("angle grad numpy:", grads.angles)

# In the toy network the unit appears in all three placements.
net = ToyNet()
print("\nunits:", [u.mode for u in net.units()])
print("parameters:", count_parameters(net), "baseline:", count_parameters(ToyNet(baseline=True)))
