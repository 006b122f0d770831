"""
Orthogonal filter banks from lattice angles
===========================================

Every angle vector gives a valid two-channel orthogonal bank, so the
angles are a free parameterization that optimizers can move around in.
"""

import math

import numpy as np

from sbe_wavelets.lattice import (
    double_shift_products,
    fit_angles,
    lattice_to_filters,
    named_angles,
)

np.set_printoptions(precision=6, suppress=True)

# One angle gives two taps.  pi/4 is Haar.
haar = lattice_to_filters([math.pi / 4])
print("haar h0:", haar.h0, " h1:", haar.h1)

# Random angles: still unit energy and orthogonal to even shifts.
rng = np.random.default_rng(0)
bank = lattice_to_filters(rng.uniform(-np.pi, np.pi, 3))
print("\nrandom 6-tap h0:", bank.h0)
print("energy:", bank.h0 @ bank.h0)
print("double-shift products:", double_shift_products(bank.h0))
# The DC gain is not forced to sqrt(2); it is only a diagnostic.
print("dc gain:", bank.dc_gain, "vs", math.sqrt(2))

# Going the other way: recover the angles of Daubechies-4 (db2).
db2 = (np.array([1 + 3**0.5, 3 + 3**0.5, 3 - 3**0.5, 1 - 3**0.5]) / (4 * 2**0.5))
angles = fit_angles(db2)
print("\ndb2 angles:", angles)
print("refit error:", np.max(np.abs(lattice_to_filters(angles).h0 - db2)))

for name in ("haar", "db2", "db3", "db4"):
    print(f"{name:5s}", named_angles(name))

# Banks serialize to JSON with full precision.
print("\n" + lattice_to_filters(named_angles("db2")).to_json())
