"""Orthogonal two-channel FIR filter banks parameterized by lattice angles.

A bank with ``N = 2M`` taps is generated by ``M`` plane rotations separated
by polyphase delays.  Every angle vector yields a paraunitary bank, so unit
energy, double-shift orthogonality and the alternating-flip relation hold
by construction rather than by constraint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares


class ConfigurationError(ValueError):
    """Invalid parameters for a filter bank or unit."""


class InvariantError(ValueError):
    """A coefficient vector violates an orthogonal filter bank invariant."""


class ConvergenceError(RuntimeError):
    """Angle fitting failed to reach the requested residual."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


_S3 = math.sqrt(3.0)

# Low-pass analysis filters in the ``h0[0] ... h0[N-1]`` order used here.
NAMED_WAVELETS: dict[str, tuple[float, ...]] = {
    "haar": (1 / math.sqrt(2.0), 1 / math.sqrt(2.0)),
    "db2": tuple(
        v / (4 * math.sqrt(2.0)) for v in (1 + _S3, 3 + _S3, 3 - _S3, 1 - _S3)
    ),
    "db3": (
        0.3326705529500827,
        0.8068915093110928,
        0.4598775021184915,
        -0.1350110200102549,
        -0.08544127388202673,
        0.03522629188570958,
    ),
    "db4": (
        0.23037781330889665,
        0.714846570552916,
        0.6308807679298588,
        -0.02798376941686038,
        -0.18703481171909325,
        0.03084138183556095,
        0.03288301166688524,
        -0.010597401785069065,
    ),
}


def wrap_angle(theta):
    """Map angles into ``(-pi, pi]``."""
    t = np.mod(np.asarray(theta, dtype=np.float64) + np.pi, 2 * np.pi) - np.pi
    return np.where(t == -np.pi, np.pi, t)


def validate_angles(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=np.float64).reshape(-1)
    if a.size < 1:
        raise ConfigurationError("lattice needs at least one angle")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError(f"non-finite lattice angle in {a.tolist()}")
    return a


def alternating_flip(h0) -> np.ndarray:
    """``h1[n] = (-1)**n * h0[N-1-n]``."""
    h0 = np.asarray(h0, dtype=np.float64)
    h1 = h0[::-1].copy()
    h1[1::2] = -h1[1::2]
    return h1


@dataclass(frozen=True)
class FilterBank:
    """Analysis pair ``(h0, h1)`` with the time-reversed synthesis pair."""

    h0: np.ndarray
    h1: np.ndarray
    angles: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("h0", "h1"):
            v = np.asarray(getattr(self, name), dtype=np.float64).copy()
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if self.angles is not None:
            a = validate_angles(self.angles).copy()
            a.setflags(write=False)
            object.__setattr__(self, "angles", a)

    @property
    def taps(self) -> int:
        return int(self.h0.size)

    @property
    def f0(self) -> np.ndarray:
        return self.h0[::-1]

    @property
    def f1(self) -> np.ndarray:
        return self.h1[::-1]

    @property
    def dc_gain(self) -> float:
        """``sum(h0)``; equals sqrt(2) for admissible low-pass filters.

        Reported only, the free lattice does not enforce it.
        """
        return float(self.h0.sum())

    def check(self, energy_tol: float = 1e-12, shift_tol: float = 1e-10) -> None:
        """Raise :class:`InvariantError` unless the bank is orthogonal."""
        check_orthogonal(self.h0, energy_tol, shift_tol)
        if self.h1.shape != self.h0.shape or np.max(
            np.abs(self.h1 - alternating_flip(self.h0))
        ) > shift_tol:
            raise InvariantError("h1 is not the alternating flip of h0")

    def to_json(self) -> str:
        doc = {
            "taps": self.taps,
            "angles": None if self.angles is None else as_json_floats(self.angles),
            "h0": as_json_floats(self.h0),
            "h1": as_json_floats(self.h1),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FilterBank":
        """Parse a bank document; angles take precedence over coefficients."""
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise InvariantError("filter bank document must be a JSON object")
        if doc.get("angles"):
            bank = lattice_to_filters(doc["angles"])
            if "h0" in doc and np.max(np.abs(bank.h0 - np.asarray(doc["h0"]))) > 1e-10:
                raise InvariantError("h0 disagrees with the stored angles")
        else:
            if "h0" not in doc:
                raise InvariantError("filter bank document has neither angles nor h0")
            h0 = np.asarray(doc["h0"], dtype=np.float64)
            h1 = np.asarray(doc.get("h1", alternating_flip(h0)), dtype=np.float64)
            bank = cls(h0, h1)
        if "taps" in doc and int(doc["taps"]) != bank.taps:
            raise InvariantError(f"taps={doc['taps']} but h0 has {bank.taps} entries")
        bank.check()
        return bank


def as_json_floats(v) -> list[float]:
    # 17 significant digits round-trip every double exactly.
    return [float(f"{x:.17g}") for x in np.asarray(v, dtype=np.float64)]


def double_shift_products(h) -> np.ndarray:
    """``sum_k h[k] h[k+2m]`` for ``m = 1 .. N/2 - 1``."""
    h = np.asarray(h, dtype=np.float64)
    return np.array([h[: -2 * m] @ h[2 * m :] for m in range(1, (h.size + 1) // 2)])


def check_orthogonal(h0, energy_tol: float = 1e-12, shift_tol: float = 1e-10) -> None:
    h0 = np.asarray(h0, dtype=np.float64)
    if h0.ndim != 1 or h0.size < 2 or h0.size % 2:
        raise InvariantError(f"h0 must have an even number of taps >= 2, got {h0.size}")
    if not np.all(np.isfinite(h0)):
        raise InvariantError("h0 has non-finite coefficients")
    energy = float(h0 @ h0)
    if abs(energy - 1.0) > energy_tol:
        raise InvariantError(f"h0 energy {energy!r} differs from 1 by more than {energy_tol}")
    shifts = double_shift_products(h0)
    if shifts.size and np.max(np.abs(shifts)) > shift_tol:
        worst = int(np.argmax(np.abs(shifts))) + 1
        raise InvariantError(
            f"double-shift product at m={worst} is {shifts[worst - 1]!r} (tol {shift_tol})"
        )


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rotation_deriv(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[-s, -c], [c, -s]])


def _delay(rows: np.ndarray) -> np.ndarray:
    # Second row moves one polyphase step (two taps) later.
    out = np.zeros((2, rows.shape[1] + 2))
    out[0, :-2] = rows[0]
    out[1, 2:] = rows[1]
    return out


def _cascade(angles: np.ndarray, deriv: int | None = None) -> np.ndarray:
    """Two coefficient rows of the cascade; stage ``deriv`` differentiated."""
    t0 = angles[0]
    c, s = math.cos(t0), math.sin(t0)
    if deriv == 0:
        rows = np.array([[-s, c], [c, s]])
    else:
        rows = np.array([[c, s], [s, -c]])
    for m in range(1, angles.size):
        r = _rotation_deriv(angles[m]) if deriv == m else _rotation(angles[m])
        rows = r @ _delay(rows)
    return rows


def lattice_to_filters(angles) -> FilterBank:
    """Evaluate the lattice cascade at ``angles``.

    >>> lattice_to_filters([np.pi / 4]).h0.round(6).tolist()
    [0.707107, 0.707107]
    """
    a = validate_angles(angles)
    h0 = _cascade(a)[0]
    return FilterBank(h0, alternating_flip(h0), angles=a)


def filters_jacobian(angles) -> np.ndarray:
    """``J[k, m] = d h0[k] / d angles[m]``, shape ``(2M, M)``."""
    a = validate_angles(angles)
    return np.stack([_cascade(a, deriv=m)[0] for m in range(a.size)], axis=1)


def fit_angles(
    target_h0,
    restarts: int = 32,
    seed: int = 0,
    tol: float = 1e-8,
    admissibility_tol: float = 1e-6,
) -> np.ndarray:
    """Find lattice angles whose ``h0`` reproduces ``target_h0``.

    Runs a Gauss-Newton type least-squares solve (analytic Jacobian) from
    ``restarts`` seeded starting points drawn uniformly in ``(-pi, pi]`` and
    stops at the first start whose max-abs residual is below ``tol``.
    """
    target = np.asarray(target_h0, dtype=np.float64).reshape(-1)
    try:
        check_orthogonal(target, admissibility_tol, admissibility_tol)
    except InvariantError as exc:
        raise InvariantError(f"target is not an orthogonal low-pass filter: {exc}") from None
    m = target.size // 2
    if m == 1:
        # One rotation: h0 = [cos t, sin t].
        return wrap_angle(np.array([math.atan2(target[1], target[0])]))

    rng = np.random.default_rng(seed)
    best_res, best = math.inf, None
    for _ in range(restarts):
        x0 = rng.uniform(-np.pi, np.pi, size=m)
        sol = least_squares(
            lambda a: lattice_to_filters(a).h0 - target,
            x0,
            jac=filters_jacobian,
            method="lm",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        res = float(np.max(np.abs(lattice_to_filters(sol.x).h0 - target)))
        if res < best_res:
            best_res, best = res, sol.x
        if res < tol:
            break
    if best_res >= tol:
        raise ConvergenceError(
            f"no lattice angles reproduce target within {tol:g}; best residual {best_res:.3e}",
            best_res,
        )
    return wrap_angle(best)


def named_bank(name: str) -> FilterBank:
    """Filter bank for ``haar``/``db2``/``db3``/``db4`` built through the lattice."""
    key = name.lower()
    if key not in NAMED_WAVELETS:
        raise ConfigurationError(
            f"unknown wavelet {name!r}; expected one of {sorted(NAMED_WAVELETS)}"
        )
    return lattice_to_filters(named_angles(key))


_ANGLE_CACHE: dict[str, np.ndarray] = {}


def named_angles(name: str) -> np.ndarray:
    key = name.lower()
    if key not in NAMED_WAVELETS:
        raise ConfigurationError(
            f"unknown wavelet {name!r}; expected one of {sorted(NAMED_WAVELETS)}"
        )
    if key not in _ANGLE_CACHE:
        _ANGLE_CACHE[key] = fit_angles(NAMED_WAVELETS[key])
    return _ANGLE_CACHE[key].copy()
