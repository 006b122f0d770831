"""
Normalized stop-band energy of a low-pass filter
================================================

The loss sums |H0|^2 over the grid points above the stop-band edge and
divides by the filter energy.  Here it is checked against a closed form for
Haar, then minimized directly in angle space.
"""

import math

import numpy as np

from sbe_wavelets.lattice import lattice_to_filters, named_angles
from sbe_wavelets.spectral import SpectralGrid, response_table, sbe_gradient, sbe_loss

grid = SpectralGrid()  # K = 500, edge at 0.6 pi
print("stop-band indices start at", grid.w_si, "of", grid.K)

# Haar: |H0|^2 = 1 + cos(w), so the exact integral is available.
exact = (0.4 * math.pi - math.sin(0.6 * math.pi)) / (2 * math.pi)
haar = lattice_to_filters(named_angles("haar"))
print(f"haar: grid {sbe_loss(haar.h0, grid):.6f}   exact {exact:.6f}")
for k in (500, 2000, 8000):
    print(f"  K={k:5d}  error {abs(sbe_loss(haar.h0, SpectralGrid(K=k)) - exact):.2e}")

# Plain gradient descent on the angles, starting from db2.
a = named_angles("db2").copy()
for step in range(301):
    if step % 75 == 0:
        print(f"step {step:3d}  L_SBE {sbe_loss(lattice_to_filters(a).h0, grid):.6f}")
    a -= 0.05 * sbe_gradient(a, grid)

tuned = lattice_to_filters(a)
start = lattice_to_filters(named_angles("db2"))
# Compare magnitude responses at a few frequencies.
t0 = response_table(start.h0, start.h1, grid)
t1 = response_table(tuned.h0, tuned.h1, grid)
print("\n   w/pi   |H0|^2 db2   |H0|^2 tuned")
for i in (0, 150, 250, 300, 350, 400, 500):
    print(f"  {t0[i, 0] / math.pi:5.2f}   {t0[i, 1]:10.5f}   {t1[i, 1]:10.5f}")
