"""ac-Stark phase imprinting and the quadratic-phase atom lens system.

Two sign conventions live here and are kept apart on purpose:

* a *lens* map "gives the wavefunction a phase" phi, i.e. multiplies by
  exp(+i phi) (:func:`apply_phase`);
* a light-shift *imprint* of a potential V = hbar phi / tau multiplies by
  exp(-i phi) (:func:`imprint_phase`).

Lens alpha contains ``-phi_p``; applying it as a lens therefore imprints the
pattern phase exactly as :func:`imprint_phase` would.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import (
    NATURAL,
    POSITION,
    ComplexField,
    FieldError,
    GridSpec,
    UnitSystem,
    as_domain,
)
from .propagation import PropagationStep, propagate_fresnel, propagate_spectral


class GuardError(ValueError):
    """A quadratic phase is too steep for the mesh."""


@dataclass(frozen=True)
class GuardVerdict:
    passed: bool
    curvature: float
    max_curvature: float

    @property
    def margin(self) -> float:
        """Fraction of the admissible curvature left unused (negative on failure)."""
        if self.max_curvature == 0:
            return -np.inf
        return 1.0 - self.curvature / self.max_curvature


def chirp_guard(grid: GridSpec, curvature: float) -> GuardVerdict:
    """Phase c|r|^2 must advance by less than pi per cell at the mesh edge.

    Strict: 2 c (L/2) dx < pi, checked on both axes.
    """
    c = abs(float(curvature))
    cmax = min(np.pi / (grid.Lx * grid.dx), np.pi / (grid.Ly * grid.dy))
    return GuardVerdict(c < cmax, c, cmax)


def _require_guard(grid: GridSpec, curvature: float, what: str) -> None:
    v = chirp_guard(grid, curvature)
    if not v.passed:
        raise GuardError(
            f"{what}: curvature {v.curvature:.6g} exceeds the admissible {v.max_curvature:.6g} for this mesh"
        )


@dataclass(frozen=True, eq=False)
class PhaseMap:
    grid: GridSpec
    phi: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.phi, dtype=float)
        if arr.shape != self.grid.shape:
            raise FieldError(f"phase map shape {arr.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise FieldError("phase map must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "phi", arr)

    def _coerce(self, other):
        if isinstance(other, PhaseMap):
            if other.grid != self.grid:
                raise FieldError("phase maps live on different grids")
            return other.phi
        return other

    def __add__(self, other):
        return PhaseMap(self.grid, self.phi + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PhaseMap(self.grid, self.phi - self._coerce(other))

    def __neg__(self):
        return PhaseMap(self.grid, -self.phi)

    def scaled(self, factor: float) -> "PhaseMap":
        return PhaseMap(self.grid, self.phi * factor)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "PhaseMap":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "PhaseMap":
        return cls(grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True, eq=False)
class PatternImage:
    """Pattern P(x, y) resampled onto a mesh and clamped to [0, 1]."""

    grid: GridSpec
    values: np.ndarray
    clamp_count: int = 0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != self.grid.shape:
            raise FieldError("pattern shape does not match grid")
        low, high = arr < 0, arr > 1
        n = int(low.sum() + high.sum())
        if n:
            arr = np.clip(arr, 0.0, 1.0)
            object.__setattr__(self, "clamp_count", self.clamp_count + n)
        if not np.any(arr > 0):
            raise FieldError("pattern has no nonzero pixel")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def resample_pattern(image: np.ndarray, grid: GridSpec, extent: Optional[float] = None) -> PatternImage:
    """Place ``image`` (rows = y, values in [0, 1]) centered on ``grid``.

    The longer image side spans ``extent`` (default: the full mesh); the aspect
    ratio is kept, sampling is bilinear and the margins are zero.
    """
    from scipy.ndimage import map_coordinates

    img = np.asarray(image, dtype=float)
    h, w = img.shape
    if extent is None:
        extent = min(grid.Lx, grid.Ly)
    pix = extent / max(h, w)
    X, Y = grid.mesh()
    # pixel centers at (i - (w-1)/2) * pix; row 0 is the top of the image (+y)
    col = X / pix + (w - 1) / 2
    row = (h - 1) / 2 - Y / pix
    vals = map_coordinates(img, [row, col], order=1, mode="constant", cval=0.0)
    return PatternImage(grid, vals)


@dataclass(frozen=True, eq=False)
class LensSystemConfig:
    T_A: float
    T_B: float
    pattern_phase: Optional[PhaseMap] = None
    units: UnitSystem = NATURAL

    def __post_init__(self):
        if not (self.T_A > 0 and self.T_B > 0):
            raise ValueError("lens stage durations T_A and T_B must be positive")

    @property
    def scale_factor(self) -> float:
        """Pattern shrink factor T_A / T_B."""
        return self.T_A / self.T_B


# --- elementary phase operations -------------------------------------------


def _check_grid(f: ComplexField, pm: PhaseMap) -> None:
    if f.grid != pm.grid:
        raise FieldError("field and phase map grids differ")


def imprint_phase(f: ComplexField, pm: PhaseMap) -> ComplexField:
    """Light-shift imprint: psi -> psi exp(-i phi)."""
    _check_grid(f, pm)
    if f.domain != POSITION:
        raise FieldError("phase imprinting acts in position space")
    return f.with_values(f.values * np.exp(-1j * pm.phi))


def apply_phase(f: ComplexField, pm: PhaseMap) -> ComplexField:
    """Lens action: psi -> psi exp(+i phi)."""
    _check_grid(f, pm)
    if f.domain != POSITION:
        raise FieldError("lens phases act in position space")
    return f.with_values(f.values * np.exp(1j * pm.phi))


def pattern_phase(pattern: PatternImage) -> PhaseMap:
    return PhaseMap(pattern.grid, np.arccos(pattern.values))


def intensity_for_phase(pm: PhaseMap | np.ndarray, delta: float, tau: float) -> np.ndarray:
    """Squared Rabi-frequency map g^2 = (4 delta / tau) phi for a light-shift pulse of length tau."""
    if not (delta > 0 and tau > 0):
        raise ValueError("delta and tau must be positive")
    phi = pm.phi if isinstance(pm, PhaseMap) else np.asarray(pm, dtype=float)
    if np.any(phi < 0):
        raise ValueError("negative phase needs negative intensity")
    return (4 * delta / tau) * phi


def quadratic_lens(grid: GridSpec, units: UnitSystem, T: float, extra_phase: float = 0.0) -> PhaseMap:
    """phi(r) = -(m / 2 hbar T) |r|^2 + extra_phase."""
    c = units.mass / (2 * units.hbar * T)
    _require_guard(grid, c, f"lens with T={T}")
    return PhaseMap(grid, -c * grid.r2() + extra_phase)


def lens_1a(grid, units, T_A):
    return quadratic_lens(grid, units, T_A)


def lens_1b(grid, units, T_A):
    return quadratic_lens(grid, units, T_A, np.pi / 2)


lens_2a = lens_1a
lens_2b = lens_1b


def lens_3a(grid, units, T_B):
    return quadratic_lens(grid, units, T_B)


def lens_3b(grid, units, T_B):
    return quadratic_lens(grid, units, T_B, np.pi / 2)


def lens_3b_prime(grid, units, T_A):
    """Lens 3b with T_A in place of T_B."""
    return quadratic_lens(grid, units, T_A, np.pi / 2)


def _pattern_or_zero(config: LensSystemConfig, grid: GridSpec) -> np.ndarray:
    if config.pattern_phase is None:
        return np.zeros(grid.shape)
    if config.pattern_phase.grid != grid:
        raise FieldError("pattern phase grid differs from the lens grid")
    return config.pattern_phase.phi


def lens_alpha(config: LensSystemConfig, grid: Optional[GridSpec] = None) -> PhaseMap:
    """-(3m / 2 hbar T_A)|r|^2 + pi - phi_p(r)."""
    grid = grid or _grid_of(config)
    u = config.units
    c = 3 * u.mass / (2 * u.hbar * config.T_A)
    _require_guard(grid, c, "lens alpha")
    return PhaseMap(grid, -c * grid.r2() + np.pi - _pattern_or_zero(config, grid))


def lens_beta(config: LensSystemConfig, grid: Optional[GridSpec] = None) -> PhaseMap:
    """-(m / 2 hbar)(1/T_A + 1/T_B)|r|^2 + pi/2."""
    grid = grid or _grid_of(config)
    u = config.units
    c = u.mass / (2 * u.hbar) * (1 / config.T_A + 1 / config.T_B)
    _require_guard(grid, c, "lens beta")
    return PhaseMap(grid, -c * grid.r2() + np.pi / 2)


def _grid_of(config: LensSystemConfig) -> GridSpec:
    if config.pattern_phase is None:
        raise ValueError("grid required when the lens config carries no pattern phase")
    return config.pattern_phase.grid


# --- lens systems ------------------------------------------------------------


def _flight(f: ComplexField, T: float, units: UnitSystem, method: str) -> ComplexField:
    step = PropagationStep(T, units)
    if method == "fresnel":
        return propagate_fresnel(f, step, strict=False)
    if method == "spectral":
        return propagate_spectral(f, step)
    raise ValueError(f"unknown propagation method {method!r}")


def ft_lens_apply(
    f: ComplexField, T: float, units: UnitSystem = NATURAL, method: str = "fresnel"
) -> ComplexField:
    """lens(T) -> free flight T -> lens(T, +pi/2).

    The output is (m / hbar T) Phi_in(m r / hbar T), with Phi_in the
    unitary-normalized Fourier transform of the input.
    """
    if T <= 0:
        raise ValueError("FT lens needs T > 0")
    f = as_domain(f, POSITION)
    f = apply_phase(f, quadratic_lens(f.grid, units, T))
    f = _flight(f, T, units, method)
    return apply_phase(f, quadratic_lens(f.grid, units, T, np.pi / 2))


def lens_system_cascade(f: ComplexField, config: LensSystemConfig, method: str = "fresnel") -> ComplexField:
    """Three FT stages (T_A, T_A, T_B) with the pattern imprinted after the first."""
    u = config.units
    out = ft_lens_apply(f, config.T_A, u, method)
    pat = _pattern_or_zero(config, f.grid)
    out = imprint_phase(out, PhaseMap(f.grid, pat))
    out = ft_lens_apply(out, config.T_A, u, method)
    return ft_lens_apply(out, config.T_B, u, method)


def lens_system_split(f: ComplexField, config: LensSystemConfig, method: str = "fresnel") -> ComplexField:
    """Rearranged system: 1a, T_A, 1b, pattern, 3b', 2a, T_A, 2b, 3a, T_B."""
    g, u = f.grid, config.units
    pat = _pattern_or_zero(config, g)
    out = apply_phase(as_domain(f, POSITION), lens_1a(g, u, config.T_A))
    out = _flight(out, config.T_A, u, method)
    out = apply_phase(out, lens_1b(g, u, config.T_A))
    out = imprint_phase(out, PhaseMap(g, pat))
    out = apply_phase(out, lens_3b_prime(g, u, config.T_A))
    out = apply_phase(out, lens_2a(g, u, config.T_A))
    out = _flight(out, config.T_A, u, method)
    out = apply_phase(out, lens_2b(g, u, config.T_A))
    out = apply_phase(out, lens_3a(g, u, config.T_B))
    return _flight(out, config.T_B, u, method)


def lens_system_composite(
    f: ComplexField,
    config: LensSystemConfig,
    method: str = "fresnel",
    include_final_flight: bool = True,
) -> ComplexField:
    """Composite system: 1a, T_A, alpha, T_A, beta, then T_B to the substrate."""
    g, u = f.grid, config.units
    out = apply_phase(as_domain(f, POSITION), lens_1a(g, u, config.T_A))
    out = _flight(out, config.T_A, u, method)
    out = apply_phase(out, lens_alpha(config, g))
    out = _flight(out, config.T_A, u, method)
    out = apply_phase(out, lens_beta(config, g))
    if include_final_flight:
        out = _flight(out, config.T_B, u, method)
    return out
