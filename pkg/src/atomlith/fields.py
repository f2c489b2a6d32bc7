"""Transverse wavefunction meshes and their momentum-space duals.

Position samples sit on a centered mesh ``x_j = (j - n/2) dx``.  Momentum
samples are stored centered as well (k = 0 at index n/2) and hold the
continuous Fourier amplitude

    Phi(k) = 1/(2 pi) * integral psi(r) exp(-i k.r) d^2r,

so ``norm`` (sum |f|^2 times the cell area) is the same in both domains.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

POSITION = "position"
MOMENTUM = "momentum"
_DOMAIN_TAGS = {POSITION: 0, MOMENTUM: 1}


class FieldError(ValueError):
    """Invalid field construction or misuse of a field operation."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class UnitSystem:
    """Values of hbar and the particle mass used by every phase computation."""

    hbar: float = 1.0
    mass: float = 1.0
    mode: str = "naturalized"

    def __post_init__(self):
        if self.mode not in ("naturalized", "si"):
            raise FieldError(f"unknown unit mode {self.mode!r}")
        if self.hbar <= 0 or self.mass <= 0:
            raise FieldError("hbar and mass must be positive")

    @classmethod
    def si(cls, mass: float) -> "UnitSystem":
        from scipy.constants import hbar

        return cls(hbar=hbar, mass=mass, mode="si")


NATURAL = UnitSystem()


@dataclass(frozen=True)
class GridSpec:
    """Square-cell transverse mesh of ``ny`` rows by ``nx`` columns."""

    nx: int
    ny: int
    Lx: float
    Ly: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or not _is_pow2(int(n)) or n < 16:
                raise FieldError(f"{name}={n} must be a power of two >= 16")
        if not (self.Lx > 0 and self.Ly > 0):
            raise FieldError("grid extents must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def dkx(self) -> float:
        return 2 * np.pi / self.Lx

    @property
    def dky(self) -> float:
        return 2 * np.pi / self.Ly

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    @property
    def kx(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dkx

    @property
    def ky(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dky

    @property
    def k_nyquist(self) -> float:
        return min(np.pi / self.dx, np.pi / self.dy)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, Y) position arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)

    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.kx, self.ky)

    def r2(self) -> np.ndarray:
        X, Y = self.mesh()
        return X**2 + Y**2

    def cell_area(self, domain: str) -> float:
        if domain == POSITION:
            return self.dx * self.dy
        return self.dkx * self.dky


def make_grid(nx: int, ny: int, Lx: float, Ly: float) -> GridSpec:
    return GridSpec(int(nx), int(ny), float(Lx), float(Ly))


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: GridSpec
    values: np.ndarray
    domain: str = POSITION

    def __post_init__(self):
        if self.domain not in _DOMAIN_TAGS:
            raise FieldError(f"unknown domain {self.domain!r}")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise FieldError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "ComplexField":
        return ComplexField(self.grid, values, self.domain)


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Amplitudes of internal states |1>, |2>, |3> on one mesh.

    ``data`` has shape (3, ny, nx); component n-1 holds c_n.
    """

    grid: GridSpec
    data: np.ndarray
    domain: str = POSITION

    def __post_init__(self):
        if self.domain not in _DOMAIN_TAGS:
            raise FieldError(f"unknown domain {self.domain!r}")
        arr = np.asarray(self.data, dtype=complex)
        if arr.shape != (3,) + self.grid.shape:
            raise FieldError(f"spinor data shape {arr.shape} invalid for grid {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_components(cls, c1: ComplexField, c2=None, c3=None) -> "SpinorField":
        comps = [c1, c2, c3]
        data = np.zeros((3,) + c1.grid.shape, dtype=complex)
        for i, c in enumerate(comps):
            if c is None:
                continue
            if c.grid != c1.grid or c.domain != c1.domain:
                raise FieldError("spinor components must share grid and domain")
            data[i] = c.values
        return cls(c1.grid, data, c1.domain)

    def component(self, n: int) -> ComplexField:
        return ComplexField(self.grid, self.data[n - 1], self.domain)

    @property
    def c1(self) -> ComplexField:
        return self.component(1)

    @property
    def c2(self) -> ComplexField:
        return self.component(2)

    @property
    def c3(self) -> ComplexField:
        return self.component(3)

    def populations(self) -> np.ndarray:
        area = self.grid.cell_area(self.domain)
        return np.sum(np.abs(self.data) ** 2, axis=(1, 2)) * area

    def with_data(self, data: np.ndarray) -> "SpinorField":
        return SpinorField(self.grid, data, self.domain)


AnyField = Union[ComplexField, SpinorField]


@dataclass(frozen=True)
class GaussianSpec:
    sigma: float
    center: tuple[float, float] = (0.0, 0.0)
    carrier: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.sigma > 0:
            raise FieldError("sigma must be positive")

    def check_representable(self, grid: GridSpec) -> None:
        dmax = max(grid.dx, grid.dy)
        lmin = min(grid.Lx, grid.Ly)
        # small slack so sigma = 4 dx or L/8 exactly is accepted
        if self.sigma < 4 * dmax * (1 - 1e-12):
            raise FieldError(f"sigma={self.sigma} violates sigma >= 4*dx ({4 * dmax})")
        if self.sigma > lmin / 8 * (1 + 1e-12):
            raise FieldError(f"sigma={self.sigma} violates sigma <= L/8 ({lmin / 8})")


def gaussian_packet(grid: GridSpec, spec: GaussianSpec, units: UnitSystem = NATURAL) -> ComplexField:
    """Normalized 2D Gaussian ``exp(-|r-r0|^2 / 2 sigma^2) / (sigma sqrt(pi))`` with a plane-wave carrier.

    ``units`` is accepted for interface symmetry; the packet itself is unit-free.
    """
    spec.check_representable(grid)
    X, Y = grid.mesh()
    x0, y0 = spec.center
    kx0, ky0 = spec.carrier
    s = spec.sigma
    vals = np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2 * s * s)) / (s * np.sqrt(np.pi))
    if kx0 or ky0:
        vals = vals * np.exp(1j * (kx0 * X + ky0 * Y))
    return ComplexField(grid, vals, POSITION)


def _fwd(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    axes = (-2, -1)
    out = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(values, axes=axes), axes=axes), axes=axes)
    return out * (grid.dx * grid.dy / (2 * np.pi))


def _inv(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    axes = (-2, -1)
    out = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(values, axes=axes), axes=axes), axes=axes)
    return out * (grid.nx * grid.ny * grid.dkx * grid.dky / (2 * np.pi))


def to_momentum(f: AnyField) -> AnyField:
    if f.domain != POSITION:
        raise FieldError("to_momentum expects a position-domain field")
    if isinstance(f, SpinorField):
        return SpinorField(f.grid, _fwd(f.data, f.grid), MOMENTUM)
    return ComplexField(f.grid, _fwd(f.values, f.grid), MOMENTUM)


def to_position(f: AnyField) -> AnyField:
    if f.domain != MOMENTUM:
        raise FieldError("to_position expects a momentum-domain field")
    if isinstance(f, SpinorField):
        return SpinorField(f.grid, _inv(f.data, f.grid), POSITION)
    return ComplexField(f.grid, _inv(f.values, f.grid), POSITION)


def as_domain(f: AnyField, domain: str) -> AnyField:
    if f.domain == domain:
        return f
    return to_momentum(f) if domain == MOMENTUM else to_position(f)


def norm(f: AnyField) -> float:
    """Total probability: sum of |amplitude|^2 times the cell area."""
    arr = f.data if isinstance(f, SpinorField) else f.values
    return float(np.sum(np.abs(arr) ** 2) * f.grid.cell_area(f.domain))


def _density(f: ComplexField) -> np.ndarray:
    if isinstance(f, SpinorField):
        raise FieldError("moment diagnostics act on a single component")
    rho = np.abs(f.values) ** 2
    if not np.any(rho > 0):
        raise FieldError("moments of a zero field are undefined")
    return rho


def centroid(f: ComplexField) -> tuple[float, float]:
    """Mean (x, y) of |psi|^2, or mean (kx, ky) for a momentum-domain field."""
    rho = _density(f)
    if f.domain == POSITION:
        X, Y = f.grid.mesh()
    else:
        X, Y = f.grid.kmesh()
    total = rho.sum()
    return float((rho * X).sum() / total), float((rho * Y).sum() / total)


def effective_width(f: ComplexField, axis: str = "x") -> float:
    """sqrt(2) times the standard deviation of |psi|^2 along ``axis``.

    Equals sigma for the packet built by :func:`gaussian_packet`.
    """
    f = as_domain(f, POSITION)
    rho = _density(f)
    X, Y = f.grid.mesh()
    coord = {"x": X, "y": Y}[axis]
    total = rho.sum()
    mean = (rho * coord).sum() / total
    var = (rho * (coord - mean) ** 2).sum() / total
    return float(np.sqrt(2 * var))


def translate(f: ComplexField, a: tuple[float, float]) -> ComplexField:
    """Shift a field by ``a`` using the Fourier shift theorem."""
    domain = f.domain
    p = as_domain(f, MOMENTUM)
    KX, KY = f.grid.kmesh()
    shifted = p.with_values(p.values * np.exp(-1j * (KX * a[0] + KY * a[1])))
    return as_domain(shifted, domain)


# --- binary field dump -------------------------------------------------------

_MAGIC = b"AIF1"


def save_fields(path: Union[str, Path], f: AnyField) -> None:
    """Write ``f`` in the AIF1 layout: magic, four little-endian u32, then
    interleaved float64 (re, im) samples, row-major, component by component."""
    arr = f.data if isinstance(f, SpinorField) else f.values[None]
    ncomp = arr.shape[0]
    header = _MAGIC + struct.pack("<4I", f.grid.nx, f.grid.ny, ncomp, _DOMAIN_TAGS[f.domain])
    body = np.empty(arr.shape + (2,), dtype="<f8")
    body[..., 0] = arr.real
    body[..., 1] = arr.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes(order="C"))


def load_fields(path: Union[str, Path], Lx: float, Ly: float | None = None) -> AnyField:
    """Read an AIF1 file.  The format carries no physical extent, so the
    caller supplies it.  One component gives a ComplexField, three a SpinorField."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise FieldError(f"{path}: not an AIF1 field dump")
    nx, ny, ncomp, tag = struct.unpack("<4I", raw[4:20])
    domains = {v: k for k, v in _DOMAIN_TAGS.items()}
    if tag not in domains:
        raise FieldError(f"{path}: unknown domain tag {tag}")
    expected = ncomp * nx * ny * 16
    if len(raw) - 20 != expected:
        raise FieldError(f"{path}: payload is {len(raw) - 20} bytes, expected {expected}")
    body = np.frombuffer(raw, dtype="<f8", offset=20).reshape(ncomp, ny, nx, 2)
    arr = body[..., 0] + 1j * body[..., 1]
    grid = make_grid(nx, ny, Lx, Lx if Ly is None else Ly)
    if ncomp == 1:
        return ComplexField(grid, arr[0], domains[tag])
    if ncomp == 3:
        return SpinorField(grid, arr, domains[tag])
    raise FieldError(f"{path}: unsupported component count {ncomp}")
