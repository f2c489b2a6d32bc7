"""Two-photon Raman pulses on the three-level spinor.

Conventions
-----------
Frequencies are angular.  ``RECOIL_SIGN`` fixes the direction of the photon
recoil: a |1> -> |3> transfer adds ``RECOIL_SIGN * (k_A + k_B)`` to the
y-wavenumber, and the |3> -> |1> transfer removes it.  Every recoil factor in
this module derives from that one constant.

Ideal mode applies the closed-form two-level mixing

    c1' = cos(Ot/2) c1 - i e^{-i psi} sin(Ot/2) c3 e^{-iKy}
    c3' = -i e^{+i psi} sin(Ot/2) c1 e^{+iKy} + cos(Ot/2) c3

with psi = (omega_B - omega_A) t + (phi_B - phi_A).  Physical mode integrates
the full three-level equations for every momentum group in the frame rotating
with the lasers and transforms back to the original basis.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import (
    MOMENTUM,
    NATURAL,
    POSITION,
    FieldError,
    GridSpec,
    SpinorField,
    UnitSystem,
    as_domain,
)

RECOIL_SIGN = +1
IDEAL = "ideal"
PHYSICAL = "physical"


class PulseError(ValueError):
    pass


@dataclass(frozen=True)
class RamanPulseSpec:
    """Laser parameters and duration of one Raman pulse.

    ``k_A`` and ``k_B`` are wavenumbers along y; ``delta`` is the one-photon
    detuning at the zero-momentum group; ``omega_levels`` are the internal
    level frequencies omega_1..omega_3 (used only by free flight).
    """

    g_A: float
    g_B: float
    delta: float
    duration: float
    omega_A: float = 0.0
    omega_B: float = 0.0
    k_A: float = 0.0
    k_B: float = 0.0
    phi_A: float = 0.0
    phi_B: float = 0.0
    mode: str = IDEAL
    omega_levels: tuple[float, float, float] = (0.0, 0.0, 0.0)
    units: UnitSystem = NATURAL

    def __post_init__(self):
        if not (self.g_A > 0 and self.g_B > 0):
            raise PulseError("single-photon Rabi frequencies must be positive")
        if not self.duration >= 0:
            raise PulseError("pulse duration must be >= 0")
        if self.mode not in (IDEAL, PHYSICAL):
            raise PulseError(f"unknown pulse mode {self.mode!r}")
        vals = (self.delta, self.omega_A, self.omega_B, self.k_A, self.k_B, self.phi_A, self.phi_B)
        if not all(math.isfinite(v) for v in vals):
            raise PulseError("pulse parameters must be finite")
        if self.mode == IDEAL and self.delta != 0 and self.g0 / abs(self.delta) > 0.2:
            warnings.warn(
                f"g0/delta = {self.g0 / abs(self.delta):.3g} > 0.2: adiabatic elimination is questionable",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def g0(self) -> float:
        return math.sqrt(self.g_A * self.g_B)

    @property
    def K(self) -> float:
        """Signed total recoil wavenumber of a |1> -> |3> transfer."""
        return RECOIL_SIGN * (self.k_A + self.k_B)

    @property
    def kA_signed(self) -> float:
        return RECOIL_SIGN * self.k_A

    @property
    def area(self) -> float:
        return abs(raman_rabi(self)) * self.duration

    def with_duration(self, duration: float) -> "RamanPulseSpec":
        return _replace(self, duration=duration)

    def with_phases(self, phi_A: float, phi_B: float) -> "RamanPulseSpec":
        return _replace(self, phi_A=phi_A, phi_B=phi_B)

    @classmethod
    def for_area(cls, area: float, g0: float, delta: float, **kw) -> "RamanPulseSpec":
        """Pulse of area ``area`` (pi for a mirror, pi/2 for a splitter) with g_A = g_B = g0."""
        if delta == 0:
            raise PulseError("delta = 0: Raman Rabi frequency undefined")
        omega = g0 * g0 / (2 * delta)
        return cls(g_A=g0, g_B=g0, delta=delta, duration=area / abs(omega), **kw)


def _replace(spec: RamanPulseSpec, **kw) -> RamanPulseSpec:
    import dataclasses

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return dataclasses.replace(spec, **kw)


@dataclass(frozen=True)
class RotatingFrame:
    """Diagonal transform C~ = Q(t) C with Q = diag(exp(i(theta_n t + phi_n)))."""

    theta: tuple[float, float, float]
    phi: tuple[float, float, float]

    @classmethod
    def for_pulse(cls, spec: RamanPulseSpec) -> "RotatingFrame":
        return cls((-spec.omega_A, 0.0, -spec.omega_B), (-spec.phi_A, 0.0, -spec.phi_B))

    def Q(self, t: float) -> np.ndarray:
        return np.exp(1j * (np.asarray(self.theta) * t + np.asarray(self.phi)))

    def Q_inv(self, t: float) -> np.ndarray:
        return np.conj(self.Q(t))


def raman_rabi(spec: RamanPulseSpec) -> float:
    """Two-photon Rabi frequency g_A g_B / (2 delta)."""
    if spec.delta == 0:
        raise PulseError("delta = 0: Raman Rabi frequency undefined")
    return spec.g_A * spec.g_B / (2 * spec.delta)


def _recoil_guard(grid: GridSpec, spec: RamanPulseSpec) -> None:
    K = abs(spec.k_A + spec.k_B)
    if not K < grid.k_nyquist / 4:
        need = 4 * K / np.pi
        raise PulseError(
            f"recoil wavenumber {K:.6g} violates K < k_nyquist/4 = {grid.k_nyquist / 4:.6g}; "
            f"use a mesh with dy < {1 / need:.6g}" if need > 0 else "recoil guard violated"
        )


# --- ideal mode --------------------------------------------------------------


def ideal_mixing(spec: RamanPulseSpec) -> tuple[complex, complex, complex, complex]:
    """Entries (m11, m13, m31, m33) of the ideal |1>,|3> mixing, recoil factors excluded."""
    half = raman_rabi(spec) * spec.duration / 2
    c, s = math.cos(half), math.sin(half)
    psi = (spec.omega_B - spec.omega_A) * spec.duration + (spec.phi_B - spec.phi_A)
    return c, -1j * np.exp(-1j * psi) * s, -1j * np.exp(1j * psi) * s, c


def apply_pulse_ideal(spinor: SpinorField, spec: RamanPulseSpec) -> SpinorField:
    domain = spinor.domain
    psi = as_domain(spinor, POSITION)
    c2_norm = np.sum(np.abs(psi.data[1]) ** 2) * psi.grid.cell_area(POSITION)
    if c2_norm >= 1e-6:
        raise PulseError(f"ideal pulse model invalid: |c2|^2 = {c2_norm:.3g} >= 1e-6")
    m11, m13, m31, m33 = ideal_mixing(spec)
    if spec.K:
        _, Y = psi.grid.mesh()
        kick = np.exp(1j * spec.K * Y)
    else:
        kick = 1.0
    c1, c3 = psi.data[0], psi.data[2]
    out = np.empty_like(psi.data)
    out[0] = m11 * c1 + m13 * c3 * np.conj(kick)
    out[1] = psi.data[1]
    out[2] = m31 * c1 * kick + m33 * c3
    return as_domain(psi.with_data(out), domain)


# --- physical mode -----------------------------------------------------------


@dataclass(frozen=True)
class RK4Solver:
    """Fixed-step classical RK4.

    The step h is the largest with ``rate * h <= step_scale`` where ``rate``
    bounds the Hamiltonian's row sums.  With ``check_convergence`` the pulse is
    recomputed at h/2 and rejected if any amplitude moves by ``tol`` or more.
    """

    step_scale: float = 0.01
    check_convergence: bool = False
    tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.step_scale <= 0.1:
            raise PulseError("step_scale must lie in (0, 0.1]")


def group_hamiltonians(kx: np.ndarray, ky: np.ndarray, spec: RamanPulseSpec, kA=None, K=None) -> np.ndarray:
    """Rotating-frame 3x3 Hamiltonians (angular frequency) of momentum groups.

    ``kx, ky`` are the wavevectors of the |1> member.  The |2> and |3> members
    sit at ky + kA and ky + K.  Diagonals carry the kinetic-energy differences
    to the zero-momentum group, where the diagonal reduces to (0, -delta, 0).
    """
    u = spec.units
    kA = spec.kA_signed if kA is None else kA
    K = spec.K if K is None else K
    c = u.hbar / (2 * u.mass)
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    kx, ky = np.broadcast_arrays(kx, ky)
    H = np.zeros(kx.shape + (3, 3))
    kx2 = kx * kx
    H[..., 0, 0] = c * (kx2 + ky * ky)
    H[..., 1, 1] = -spec.delta + c * (kx2 + (ky + kA) ** 2 - kA * kA)
    H[..., 2, 2] = c * (kx2 + (ky + K) ** 2 - K * K)
    H[..., 0, 1] = H[..., 1, 0] = spec.g_A / 2
    H[..., 1, 2] = H[..., 2, 1] = spec.g_B / 2
    return H


def _rk4_step_matrix(H: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step of dC/dt = -i H C is multiplication by sum_{j<=4} (-iHh)^j / j!."""
    A = -1j * h * H
    eye = np.broadcast_to(np.eye(3), A.shape)
    return eye + A @ (eye + A @ (eye + A @ (eye + A / 4) / 3) / 2)


def _step_count(H: np.ndarray, duration: float, solver: RK4Solver) -> int:
    rate = float(np.max(np.sum(np.abs(H), axis=-1))) if H.size else 0.0
    return max(1, int(math.ceil(rate * duration / solver.step_scale)))


def _rotating_propagators(H: np.ndarray, duration: float, n: int) -> np.ndarray:
    P = _rk4_step_matrix(H, duration / n)
    return np.linalg.matrix_power(P, n)


def group_propagators(
    kx: np.ndarray,
    ky: np.ndarray,
    spec: RamanPulseSpec,
    solver: Optional[RK4Solver] = None,
    kA=None,
    K=None,
) -> np.ndarray:
    """Lab-basis 3x3 propagators U with C(t) = U C(0), one per momentum group."""
    solver = solver or RK4Solver()
    H = group_hamiltonians(kx, ky, spec, kA, K)
    t = spec.duration
    if t == 0:
        return np.broadcast_to(np.eye(3, dtype=complex), H.shape).copy()
    n = _step_count(H, t, solver)
    U = _rotating_propagators(H, t, n)
    if solver.check_convergence:
        U2 = _rotating_propagators(H, t, 2 * n)
        err = float(np.max(np.abs(U2 - U)))
        if not err < solver.tol:
            raise PulseError(f"RK4 not converged: halving the step moved amplitudes by {err:.3g}")
        U = U2
    if not np.all(np.isfinite(U)):
        raise PulseError("RK4 integration produced non-finite amplitudes")
    frame = RotatingFrame.for_pulse(spec)
    return frame.Q_inv(t)[:, None] * U * frame.Q(0.0)[None, :]


def _mesh_shift(value: float, step: float, what: str) -> int:
    n = int(round(value / step))
    if abs(value - n * step) >= 0.01 * step:
        raise PulseError(
            f"{what} = {value:.6g} is not within 1% of a multiple of dky = {step:.6g}; "
            "choose Ly so that the recoil lands on the momentum mesh"
        )
    return n


def apply_pulse_physical(spinor: SpinorField, spec: RamanPulseSpec, solver: Optional[RK4Solver] = None) -> SpinorField:
    """Integrate the three-level equations on every momentum group of the mesh."""
    grid = spinor.grid
    _recoil_guard(grid, spec)
    sA = _mesh_shift(spec.kA_signed, grid.dky, "k_A")
    sK = _mesh_shift(spec.K, grid.dky, "k_A + k_B")
    domain = spinor.domain
    p = as_domain(spinor, MOMENTUM)
    KX, KY = grid.kmesh()
    U = group_propagators(KX, KY, spec, solver, kA=sA * grid.dky, K=sK * grid.dky)
    # gather group members: row i of the |1> mesh pairs with rows i+sA, i+sK
    g = np.stack([p.data[0], np.roll(p.data[1], -sA, axis=0), np.roll(p.data[2], -sK, axis=0)], axis=-1)
    out = np.einsum("...ij,...j->...i", U, g)
    data = np.stack(
        [out[..., 0], np.roll(out[..., 1], sA, axis=0), np.roll(out[..., 2], sK, axis=0)]
    )
    return as_domain(p.with_data(data), domain)


def apply_pulse(spinor: SpinorField, spec: RamanPulseSpec, solver: Optional[RK4Solver] = None) -> SpinorField:
    if spec.mode == IDEAL:
        return apply_pulse_ideal(spinor, spec)
    return apply_pulse_physical(spinor, spec, solver)


# --- closed form and diagnostics ---------------------------------------------


def analytic_two_level(spec: RamanPulseSpec, t: float, c1_0: complex, c3_0: complex) -> tuple[complex, complex]:
    """Adiabatically eliminated two-level solution at the resonant group, as written in closed form.

    Uses g0^2 = g_A g_B.  The common phase of both amplitudes is not included.
    """
    W = raman_rabi(spec)
    c, s = math.cos(W * t / 2), math.sin(W * t / 2)
    a = (spec.omega_A - W) / 2 * t + spec.phi_A
    b = (spec.omega_B - W) / 2 * t + spec.phi_B
    c1 = c1_0 * c - 1j * np.exp(1j * (a - b)) * c3_0 * s
    c3 = -1j * np.exp(1j * (b - a)) * c1_0 * s + c3_0 * c
    return complex(c1), complex(c3)


def resonant_group_amplitudes(
    spec: RamanPulseSpec, c0=(1.0, 0.0, 0.0), solver: Optional[RK4Solver] = None
) -> np.ndarray:
    """(c1, c2, c3) after the pulse for the zero-momentum group."""
    U = group_propagators(np.zeros(1), np.zeros(1), spec, solver)[0]
    return U @ np.asarray(c0, dtype=complex)


def transfer_efficiency(spec: RamanPulseSpec, kx, ky, solver: Optional[RK4Solver] = None) -> np.ndarray:
    """|c3|^2 after the pulse for groups whose |1> member starts with unit amplitude."""
    U = group_propagators(kx, ky, spec, solver)
    return np.abs(U[..., 2, 0]) ** 2


def population_trace(
    spec: RamanPulseSpec, n_samples: int = 200, c0=(1.0, 0.0, 0.0), solver: Optional[RK4Solver] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Times and level populations sampled during the pulse at the resonant group."""
    solver = solver or RK4Solver()
    H = group_hamiltonians(np.zeros(1), np.zeros(1), spec)[0]
    per = max(1, int(math.ceil(_step_count(H, spec.duration, solver) / n_samples)))
    h = spec.duration / (per * n_samples)
    S = np.linalg.matrix_power(_rk4_step_matrix(H, h), per)
    c = RotatingFrame.for_pulse(spec).Q(0.0) * np.asarray(c0, dtype=complex)
    pops = [np.abs(c) ** 2]
    for _ in range(n_samples):
        c = S @ c
        pops.append(np.abs(c) ** 2)
    return np.linspace(0, spec.duration, n_samples + 1), np.array(pops)


def momentum_kick_shift(spinor: SpinorField, kick: float) -> SpinorField:
    """Multiply every component by exp(i kick y); shifts the momentum content by ``kick`` along y."""
    K = abs(kick)
    if not K < spinor.grid.k_nyquist / 4:
        raise PulseError(f"kick {K:.6g} violates K < k_nyquist/4 = {spinor.grid.k_nyquist / 4:.6g}")
    domain = spinor.domain
    psi = as_domain(spinor, POSITION)
    _, Y = psi.grid.mesh()
    return as_domain(psi.with_data(psi.data * np.exp(1j * kick * Y)[None]), domain)
