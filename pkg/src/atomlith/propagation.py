"""Free-space evolution: spectral transfer function and Fresnel-type integral."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import (
    MOMENTUM,
    NATURAL,
    POSITION,
    AnyField,
    ComplexField,
    FieldError,
    GridSpec,
    SpinorField,
    UnitSystem,
    as_domain,
)


class PropagationError(ValueError):
    pass


@dataclass(frozen=True)
class PropagationStep:
    T: float
    units: UnitSystem = NATURAL
    omegas: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.T >= 0:
            raise PropagationError(f"propagation time must be >= 0, got {self.T}")
        if not np.all(np.isfinite(self.omegas)):
            raise PropagationError("internal-state frequencies must be finite")


def transfer_function(grid: GridSpec, units: UnitSystem, T: float) -> ComplexField:
    """H(k) = exp(-i hbar |k|^2 T / 2m) on the momentum mesh."""
    if T < 0:
        raise PropagationError("negative T; use propagate_inverse for backward evolution")
    KX, KY = grid.kmesh()
    H = np.exp(-1j * units.hbar * (KX**2 + KY**2) * T / (2 * units.mass))
    return ComplexField(grid, H, MOMENTUM)


def _kinetic_phase(grid: GridSpec, units: UnitSystem, T: float) -> np.ndarray:
    KX, KY = grid.kmesh()
    return units.hbar * (KX**2 + KY**2) * T / (2 * units.mass)


def _evolve(f: AnyField, step: PropagationStep, sign: float) -> AnyField:
    if step.T == 0:
        return f
    domain = f.domain
    p = as_domain(f, MOMENTUM)
    H = np.exp(-1j * sign * _kinetic_phase(f.grid, step.units, step.T))
    if isinstance(p, SpinorField):
        w = np.asarray(step.omegas, dtype=float)[:, None, None]
        out = p.with_data(p.data * H[None] * np.exp(-1j * sign * w * step.T))
    else:
        out = p.with_values(p.values * H * np.exp(-1j * sign * step.omegas[0] * step.T))
    return as_domain(out, domain)


def propagate_spectral(f: AnyField, step: PropagationStep) -> AnyField:
    """Multiply each component by exp(-i(hbar k^2/2m + omega_n) T) in momentum space.

    The result is returned in the input's domain.  A bare ComplexField picks up
    ``omegas[0]``.
    """
    return _evolve(f, step, +1.0)


def propagate_inverse(f: AnyField, step: PropagationStep) -> AnyField:
    return _evolve(f, step, -1.0)


def _scaled_dft_matrix(coords: np.ndarray, scale: float) -> np.ndarray:
    return np.exp(-1j * scale * np.outer(coords, coords))


def propagate_fresnel(f: ComplexField, step: PropagationStep, strict: bool = True) -> ComplexField:
    """Evaluate the free-space convolution integral as chirp, scaled transform, chirp.

    out(r) = -i (m / 2 pi hbar T) e^{i a r^2} sum_r' psi(r') e^{i a r'^2} e^{-2i a r.r'} dA,
    with a = m / (2 hbar T).  The middle factor is applied as separable dense
    matrices, so output samples land on the input mesh for any T.

    ``strict=False`` downgrades a failed sampling guard to a warning.
    """
    from .optics import chirp_guard

    if isinstance(f, SpinorField):
        raise FieldError("propagate_fresnel acts on a single component")
    if step.T <= 0:
        raise PropagationError("Fresnel kernel is singular at T=0; use propagate_spectral")
    u = step.units
    grid = f.grid
    curvature = u.mass / (u.hbar * step.T)
    verdict = chirp_guard(grid, curvature)
    if not verdict.passed:
        msg = (
            f"Fresnel propagation over T={step.T} undersamples its chirp: m/(hbar T)={curvature:.6g} "
            f"exceeds the maximum admissible {verdict.max_curvature:.6g}"
        )
        if strict:
            raise PropagationError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    psi = as_domain(f, POSITION).values
    a = curvature / 2
    r2 = grid.r2()
    g = psi * np.exp(1j * a * r2)
    My = _scaled_dft_matrix(grid.y, 2 * a)
    Mx = _scaled_dft_matrix(grid.x, 2 * a)
    s = My @ g @ Mx.T * (grid.dx * grid.dy)
    out = -1j * (curvature / (2 * np.pi)) * np.exp(1j * a * r2) * s
    out = out * np.exp(-1j * step.omegas[0] * step.T)
    res = ComplexField(grid, out, POSITION)
    return as_domain(res, f.domain)


def propagate_many(f: AnyField, steps: Sequence[PropagationStep]) -> AnyField:
    for st in steps:
        f = propagate_spectral(f, st)
    return f
