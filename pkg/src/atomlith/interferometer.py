"""pi/2 - pi - pi/2 Raman interferometer with the lens system on one arm.

Arms are tracked as *branches*: a branch is one internal label (1 or 3), an
integer number ``n`` of recoil kicks, an accumulated drift along y and an
envelope field on the shared mesh.  The lab-frame amplitude of a branch is

    envelope(x, y - drift) * exp(i n K y)

so the recoil carrier and the drift, which would not fit on any practical
mesh, never have to be sampled.  Branches that end with the same label,
kick count and drift overlap in space and are summed coherently; branches
that end at different drifts never interfere.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .fields import (
    MOMENTUM,
    NATURAL,
    POSITION,
    ComplexField,
    GaussianSpec,
    GridSpec,
    UnitSystem,
    as_domain,
    gaussian_packet,
)
from .optics import (
    GuardError,
    LensSystemConfig,
    PatternImage,
    PhaseMap,
    apply_phase,
    imprint_phase,
    lens_1a,
    lens_alpha,
    lens_beta,
    pattern_phase,
)
from .propagation import PropagationError, PropagationStep, propagate_fresnel, propagate_spectral
from .raman import IDEAL, PHYSICAL, RK4Solver, RamanPulseSpec, group_propagators, ideal_mixing, raman_rabi


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


PHASE_NAMES = ("phi_A1", "phi_B1", "phi_A2", "phi_B2", "phi_A3", "phi_B3")


@dataclass(frozen=True, eq=False)
class InterferometerConfig:
    """Everything needed to run the interferometer once.

    ``phases`` holds (phi_A1, phi_B1, phi_A2, phi_B2, phi_A3, phi_B3).  With a
    lens, ``T0`` is best left as None; it is then 2 T_A + T_B - T1.  Without a
    lens, None means 0.
    ``uniform_phase`` imprints a constant phase on the |1> arm just before the
    final pi/2; without a lens, ``pattern`` is imprinted at the same place.
    """

    grid: GridSpec
    packet: GaussianSpec
    g0: float
    delta: float
    T0: Optional[float] = None
    T1: float = 0.0
    phases: tuple[float, float, float, float, float, float] = (0.0,) * 6
    omega_A: float = 0.0
    omega_B: float = 0.0
    k_A: float = 0.0
    k_B: float = 0.0
    omega_levels: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mode: str = IDEAL
    lens: Optional[LensSystemConfig] = None
    pattern: Optional[PatternImage] = None
    units: UnitSystem = NATURAL
    flight_method: str = "fresnel"
    cross_talk: float = 0.0
    uniform_phase: float = 0.0
    pi_pulse: bool = True
    solver: Optional[RK4Solver] = None

    def __post_init__(self):
        if len(self.phases) != 6:
            raise ValueError("six laser phases required")
        if self.mode not in (IDEAL, PHYSICAL):
            raise ValueError(f"unknown pulse mode {self.mode!r}")
        if self.flight_method not in ("fresnel", "spectral"):
            raise ValueError(f"unknown flight method {self.flight_method!r}")
        if not self.T1 >= 0:
            raise ValueError("T1 must be >= 0")
        if self.T0 is not None and not self.T0 >= 0:
            raise ValueError("T0 must be >= 0")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")
        if self.lens is not None:
            if self.T1 > self.lens.T_B:
                raise ValueError(f"T1={self.T1} exceeds T_B={self.lens.T_B}: final pi/2 would follow the substrate")
            t0 = self.arm_T0
            if self.T0 is not None and not math.isclose(self.T0, t0, rel_tol=1e-9, abs_tol=1e-12):
                warnings.warn(
                    f"T0={self.T0} is replaced by 2 T_A + T_B - T1 = {t0} to keep the arms symmetric",
                    RuntimeWarning,
                    stacklevel=2,
                )

    @property
    def arm_T0(self) -> float:
        if self.lens is None:
            return float(self.T0 or 0.0)
        return 2 * self.lens.T_A + self.lens.T_B - self.T1

    @property
    def rabi(self) -> float:
        return self.g0 * self.g0 / (2 * self.delta)

    @property
    def K(self) -> float:
        from .raman import RECOIL_SIGN

        return RECOIL_SIGN * (self.k_A + self.k_B)

    @property
    def y0(self) -> float:
        u = self.units
        return u.hbar * self.K * self.arm_T0 / u.mass

    @property
    def y1(self) -> float:
        u = self.units
        return u.hbar * self.K * self.T1 / u.mass

    def pulse(self, zone: int, area: float) -> RamanPulseSpec:
        phi_A, phi_B = self.phases[2 * (zone - 1)], self.phases[2 * (zone - 1) + 1]
        with warnings.catch_warnings():
            if zone > 1:
                warnings.simplefilter("ignore", RuntimeWarning)
            return RamanPulseSpec.for_area(
                area,
                self.g0,
                self.delta,
                omega_A=self.omega_A,
                omega_B=self.omega_B,
                k_A=self.k_A,
                k_B=self.k_B,
                phi_A=phi_A,
                phi_B=phi_B,
                mode=self.mode,
                omega_levels=self.omega_levels,
                units=self.units,
            )

    def lens_config(self) -> Optional[LensSystemConfig]:
        if self.lens is None:
            return None
        if self.lens.pattern_phase is None and self.pattern is not None:
            return replace(self.lens, pattern_phase=pattern_phase(self.pattern))
        return self.lens


@dataclass(frozen=True, eq=False)
class Branch:
    label: int
    n: int
    drift: float
    field: ComplexField


@dataclass(frozen=True, eq=False)
class FinalState:
    """Output ports on the substrate plane, in the frame co-moving with each port.

    ``psi1``/``psi3`` are the strongest coherent group of each port; when an
    arm fails to recombine, the other groups remain in ``branches``.
    """

    psi1: ComplexField
    psi3: ComplexField
    residual: float
    branches: tuple[Branch, ...]
    metadata: dict = field(default_factory=dict)


def phi0(config: InterferometerConfig) -> float:
    """(pi/Omega)(omega_A - omega_B) - phi_A1 + phi_B1 + 2 phi_A2 - 2 phi_B2 - phi_A3 + phi_B3."""
    a1, b1, a2, b2, a3, b3 = config.phases
    return (math.pi / config.rabi) * (config.omega_A - config.omega_B) - a1 + b1 + 2 * a2 - 2 * b2 - a3 + b3


def with_phi0(config: InterferometerConfig, target: float) -> InterferometerConfig:
    """Return a copy whose phi_B3 is shifted so that phi0 equals ``target``."""
    ph = list(config.phases)
    ph[5] += target - phi0(config)
    return replace(config, phases=tuple(ph))


# --- stages ------------------------------------------------------------------


def _norm2(f: ComplexField) -> float:
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.cell_area(f.domain))


def _key(b: Branch) -> tuple:
    return (b.label, b.n, round(b.drift, 9))


def _merge(branches: Sequence[Branch]) -> list[Branch]:
    out: dict[tuple, Branch] = {}
    for b in branches:
        k = _key(b)
        if k in out:
            a = out[k]
            out[k] = Branch(a.label, a.n, a.drift, a.field.with_values(a.field.values + b.field.values))
        else:
            out[k] = b
    return list(out.values())


def _flight(branches: list[Branch], T: float, cfg: InterferometerConfig, method: str) -> list[Branch]:
    if T == 0:
        return branches
    u = cfg.units
    out = []
    for b in branches:
        w = cfg.omega_levels[b.label - 1]
        step = PropagationStep(T, u, (w, 0.0, 0.0))
        if method == "fresnel":
            f = propagate_fresnel(b.field, step, strict=False)
        else:
            f = propagate_spectral(b.field, step)
        q = b.n * cfg.K
        f = f.with_values(f.values * np.exp(-1j * u.hbar * q * q * T / (2 * u.mass)))
        out.append(Branch(b.label, b.n, b.drift + u.hbar * q * T / u.mass, f))
    return out


def _pulse_ideal(branches: list[Branch], spec: RamanPulseSpec) -> tuple[list[Branch], float]:
    m11, m13, m31, m33 = ideal_mixing(spec)
    out = []
    for b in branches:
        v = b.field.values
        if b.label == 1:
            out.append(Branch(1, b.n, b.drift, b.field.with_values(m11 * v)))
            out.append(Branch(3, b.n + 1, b.drift, b.field.with_values(m31 * v)))
        else:
            out.append(Branch(1, b.n - 1, b.drift, b.field.with_values(m13 * v)))
            out.append(Branch(3, b.n, b.drift, b.field.with_values(m33 * v)))
    return _merge(out), 0.0


def _pulse_physical(branches: list[Branch], spec: RamanPulseSpec, cfg: InterferometerConfig) -> tuple[list[Branch], float]:
    # pair each |1> branch (n) with the |3> branch (n+1) at the same drift: one momentum group
    groups: dict[tuple, list] = {}
    for b in branches:
        n1 = b.n if b.label == 1 else b.n - 1
        slot = groups.setdefault((n1, round(b.drift, 9)), [None, None, b.drift])
        slot[0 if b.label == 1 else 1] = b
    grid = branches[0].field.grid
    KX, KY = grid.kmesh()
    area = grid.cell_area(MOMENTUM)
    cache: dict[int, np.ndarray] = {}
    out, residual = [], 0.0
    for (n1, _), (b1, b3, drift) in groups.items():
        if n1 not in cache:
            cache[n1] = group_propagators(KX, KY + n1 * cfg.K, spec, cfg.solver)
        U = cache[n1]
        zero = np.zeros(grid.shape, dtype=complex)
        f1 = as_domain(b1.field, MOMENTUM).values if b1 is not None else zero
        f3 = as_domain(b3.field, MOMENTUM).values if b3 is not None else zero
        c = [U[..., i, 0] * f1 + U[..., i, 2] * f3 for i in range(3)]
        residual += float(np.sum(np.abs(c[1]) ** 2) * area)
        out.append(Branch(1, n1, drift, as_domain(ComplexField(grid, c[0], MOMENTUM), POSITION)))
        out.append(Branch(3, n1 + 1, drift, as_domain(ComplexField(grid, c[2], MOMENTUM), POSITION)))
    return out, residual


def _pulse(branches, spec, cfg):
    if spec.mode == IDEAL:
        return _pulse_ideal(branches, spec)
    return _pulse_physical(branches, spec, cfg)


def _phase_on(branches: list[Branch], label: int, pm: PhaseMap, how, cross_talk: float = 0.0) -> list[Branch]:
    out = []
    for b in branches:
        if b.label == label:
            out.append(Branch(b.label, b.n, b.drift, how(b.field, pm)))
        elif cross_talk:
            out.append(Branch(b.label, b.n, b.drift, how(b.field, pm.scaled(cross_talk))))
        else:
            out.append(b)
    return out


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except (GuardError, PropagationError, ValueError) as e:
        raise StageError(f"stage '{name}': {e}") from e


def _total(branches) -> float:
    return sum(_norm2(b.field) for b in branches)


def run(config: InterferometerConfig) -> FinalState:
    """Execute pi/2 -> T0 -> pi -> T0 (lens stages on the |1> arm) -> pi/2 -> T1."""
    cfg = config
    g = cfg.grid
    psi = _stage("initial packet", gaussian_packet, g, cfg.packet, cfg.units)
    # unit norm on the mesh; sampling a wide packet drops ~1e-8 in its tails
    psi = psi.with_values(psi.values / math.sqrt(_norm2(psi)))
    branches = [Branch(1, 0, 0.0, psi)]
    residual = 0.0
    T0 = cfg.arm_T0
    stage_norms = {}

    p1 = cfg.pulse(1, math.pi / 2)
    branches, r = _stage("pi/2 pulse 1", _pulse, branches, p1, cfg)
    residual += r
    stage_norms["after pi/2 1"] = _total(branches) + residual
    branches = _stage("flight T0 (1)", _flight, branches, T0, cfg, "spectral")

    if cfg.pi_pulse:
        branches, r = _stage("pi pulse", _pulse, branches, cfg.pulse(2, math.pi), cfg)
        residual += r
    stage_norms["after pi"] = _total(branches) + residual

    lens = cfg.lens_config()
    if lens is None:
        branches = _stage("flight T0 (2)", _flight, branches, T0, cfg, "spectral")
        if cfg.pattern is not None:
            branches = _phase_on(branches, 1, pattern_phase(cfg.pattern), imprint_phase)
    else:
        u, m = cfg.units, cfg.flight_method
        l1a = _stage("lens 1a", lens_1a, g, u, lens.T_A)
        la = _stage("lens alpha", lens_alpha, lens, g)
        lb = _stage("lens beta", lens_beta, lens, g)
        branches = _phase_on(branches, 1, l1a, apply_phase, cfg.cross_talk)
        branches = _stage("flight T_A (1)", _flight, branches, lens.T_A, cfg, m)
        branches = _phase_on(branches, 1, la, apply_phase, cfg.cross_talk)
        branches = _stage("flight T_A (2)", _flight, branches, lens.T_A, cfg, m)
        branches = _phase_on(branches, 1, lb, apply_phase, cfg.cross_talk)
        branches = _stage("flight T_B - T1", _flight, branches, lens.T_B - cfg.T1, cfg, m)
    stage_norms["after arm"] = _total(branches) + residual
    if cfg.uniform_phase:
        branches = _phase_on(branches, 1, PhaseMap.constant(g, cfg.uniform_phase), imprint_phase)

    branches, r = _stage("pi/2 pulse 3", _pulse, branches, cfg.pulse(3, math.pi / 2), cfg)
    residual += r
    stage_norms["after pi/2 3"] = _total(branches) + residual
    branches = _stage("flight T1", _flight, branches, cfg.T1, cfg, "spectral")
    branches = _merge(branches)

    def strongest(label):
        cands = [b for b in branches if b.label == label]
        if not cands:
            return ComplexField(g, np.zeros(g.shape), POSITION)
        return max(cands, key=lambda b: _norm2(b.field)).field

    meta = {
        "phi0": phi0(cfg),
        "T0": T0,
        "T1": cfg.T1,
        "y0": cfg.y0,
        "y1": cfg.y1,
        "mode": cfg.mode,
        "stage_norms": stage_norms,
    }
    return FinalState(strongest(1), strongest(3), residual, tuple(branches), meta)


def populations(final: FinalState) -> tuple[float, float]:
    """Total probability in the |1> and |3> ports, summed over all branch groups."""
    p1 = sum(_norm2(b.field) for b in final.branches if b.label == 1)
    p3 = sum(_norm2(b.field) for b in final.branches if b.label == 3)
    return p1, p3


def dose_image(final: FinalState) -> np.ndarray:
    """|psi1|^2 on the mesh: the local deposition rate at the substrate."""
    return np.abs(as_domain(final.psi1, POSITION).values) ** 2


def fit_visibility(phases: Sequence[float], p1: Sequence[float]) -> float:
    """Least-squares fit p1 = a + b cos(phi) + c sin(phi); V = sqrt(b^2 + c^2) / a."""
    ph = np.asarray(phases, dtype=float)
    y = np.asarray(p1, dtype=float)
    if ph.size < 5 or ph.size != y.size:
        raise ValueError("fringe fit needs >= 5 matching phase/population samples")
    A = np.column_stack([np.ones_like(ph), np.cos(ph), np.sin(ph)])
    if np.linalg.matrix_rank(A) < 3:
        raise ValueError("degenerate fringe fit: phase samples do not span a full fringe")
    (a, b, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    if not a > 1e-12:
        raise ValueError("degenerate fringe fit: mean population is zero")
    return float(math.hypot(b, c) / a)


def fringe_scan(config: InterferometerConfig, phase_values: Sequence[float]) -> float:
    """Sweep a uniform phase on the |1> arm and return the fringe visibility."""
    ph = list(phase_values)
    if len(ph) < 5:
        raise ValueError("fringe scan needs >= 5 phase values")
    p1 = [populations(run(replace(config, uniform_phase=float(p))))[0] for p in ph]
    return fit_visibility(ph, p1)


def bright_fringe(config: InterferometerConfig) -> InterferometerConfig:
    """Shift phi_B3 so the pattern-free run puts the most population in the |1> port.

    The lens stages add constant phases to their arm, so phi0 = 0 no longer
    marks the bright fringe once a lens is present.  Three runs at phi_B3
    offsets 0, 2pi/3, 4pi/3 pin the fringe a + b cos + c sin exactly.
    """
    base = replace(config, pattern=None, uniform_phase=0.0)
    if base.lens is not None and base.lens.pattern_phase is not None:
        base = replace(base, lens=replace(base.lens, pattern_phase=None))
    offs = np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
    p = []
    for o in offs:
        ph = list(base.phases)
        ph[5] += o
        p.append(populations(run(replace(base, phases=tuple(ph))))[0])
    A = np.column_stack([np.ones(3), np.cos(offs), np.sin(offs)])
    _, b, c = np.linalg.solve(A, np.asarray(p))
    ph = list(config.phases)
    ph[5] += math.atan2(c, b)
    return replace(config, phases=tuple(ph))
