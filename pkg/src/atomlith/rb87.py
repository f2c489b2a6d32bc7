"""Parameter calculators and constraint checks for a rubidium-87 D1 implementation.

All inputs and outputs are SI.  Frequencies (g0, delta, Gamma, Omega) are
angular, in 1/s.  A bound written "~" is accepted within half a decade
(factor sqrt(10)); "much less than 1" is rendered as < 0.1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.constants import hbar as HBAR_SI

APPROX_SLACK = math.sqrt(10.0)
MUCH_LESS = 0.1

RB87_MASS = 1.443e-25
D1_WAVELENGTH = 795e-9


@dataclass(frozen=True)
class Rb87Params:
    Gamma: float = 3.33e7
    I_sat: float = 30.0
    I_max: float = 2.0e6
    delta: float = 6.8e8
    g0: float = 6.8e7
    mass: float = RB87_MASS
    k: float = 2 * math.pi / D1_WAVELENGTH

    def __post_init__(self):
        for name in ("Gamma", "I_sat", "I_max", "delta", "g0", "mass", "k"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        gmax = g0_max(self.I_max, self.I_sat, self.Gamma)
        if self.g0 > gmax:
            raise ValueError(f"g0={self.g0:.4g} exceeds g0_max={gmax:.4g} for I_max={self.I_max:.4g}")


@dataclass(frozen=True)
class FeshbachParams:
    a_bg: float
    B_peak: float
    B_zero: float

    @property
    def Delta(self) -> float:
        return self.B_zero - self.B_peak


@dataclass(frozen=True)
class Restriction:
    name: str
    lhs: float
    rhs: float
    passed: bool
    margin: float
    note: str = ""


@dataclass(frozen=True)
class RestrictionReport:
    items: tuple[Restriction, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.items)

    def __getitem__(self, name: str) -> Restriction:
        for r in self.items:
            if r.name == name:
                return r
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for r in self.items:
            p = f"restriction.{r.name}"
            out += [f"{p}.lhs={r.lhs:.6g}", f"{p}.rhs={r.rhs:.6g}", f"{p}.pass={str(r.passed).lower()}",
                    f"{p}.margin={r.margin:.6g}"]
        out.append(f"restriction.overall.pass={str(self.passed).lower()}")
        return out


def g0_max(I_max: float, I_sat: float, Gamma: float) -> float:
    """Largest single-photon Rabi frequency: sqrt(I_max / I_sat) * Gamma."""
    if I_max < 0 or I_sat <= 0 or Gamma < 0:
        raise ValueError("intensities and decay rate must be nonnegative (I_sat positive)")
    return math.sqrt(I_max / I_sat) * Gamma


def raman_rabi_frequency(g0: float, delta: float) -> float:
    if delta == 0:
        raise ValueError("delta = 0: Raman Rabi frequency undefined")
    return g0 * g0 / (2 * delta)


def pulse_durations(g0: float, delta: float) -> tuple[float, float]:
    """(t_pi, t_pi2) for Omega = g0^2 / (2 delta)."""
    W = abs(raman_rabi_frequency(g0, delta))
    return math.pi / W, math.pi / (2 * W)


def light_shift_duration(g0: float, delta: float) -> float:
    """tau with (g0^2 / 4 delta) tau = 2 pi."""
    if not (g0 > 0 and delta > 0):
        raise ValueError("g0 and delta must be positive")
    return 8 * math.pi * delta / (g0 * g0)


@dataclass(frozen=True)
class EmissionCheck:
    single: float
    raman: float
    passed: bool

    @property
    def margin(self) -> float:
        return MUCH_LESS - max(self.single, self.raman)


def spontaneous_emission_check(g0: float, delta: float, Gamma: float, tau: float) -> EmissionCheck:
    """(g0/delta)^2 Gamma tau and 2 (Omega/delta) Gamma tau, passing below 0.1."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    single = (g0 / delta) ** 2 * Gamma * tau
    raman = 2 * (raman_rabi_frequency(g0, delta) / delta) * Gamma * tau
    return EmissionCheck(single, raman, max(single, raman) < MUCH_LESS)


def _le(name, lhs, rhs, approx=True, note=""):
    bound = rhs * APPROX_SLACK if approx else rhs
    return Restriction(name, lhs, rhs, lhs <= bound, bound - lhs, note)


def _ge(name, lhs, rhs, approx=True, note=""):
    bound = rhs / APPROX_SLACK if approx else rhs
    return Restriction(name, lhs, rhs, lhs >= bound, lhs - bound, note)


def validate_restrictions(sigma_in: float, T_A: float, T_B: float, k: float = 2 * math.pi / D1_WAVELENGTH,
                          mass: float = RB87_MASS, hbar: float = HBAR_SI) -> RestrictionReport:
    """Evaluate the lithography timing and width restrictions (SI: s, m).

    The separation condition appears twice: as printed (first power of
    hbar T_B / m sigma under the root) and with the free-spreading width
    sigma sqrt(1 + (T_B / tau)^2), tau = m sigma^2 / hbar.
    """
    for v, n in ((sigma_in, "sigma_in"), (T_A, "T_A"), (T_B, "T_B"), (k, "k"), (mass, "mass")):
        if not v > 0:
            raise ValueError(f"{n} must be positive")
    v = 2 * hbar * k / mass
    tau = mass * sigma_in**2 / hbar
    items = (
        _le("T_A_max", T_A, 1e1, note="seconds"),
        _le("T_B_ratio", T_B, 1e-2 * T_A),
        _ge("alpha_width", hbar * T_A / (mass * sigma_in), 1e-3, note="meters"),
        _ge("separation_printed", v * T_B, sigma_in * math.sqrt(1 + hbar * T_B / (mass * sigma_in))),
        _ge("separation_corrected", v * T_B, sigma_in * math.sqrt(1 + (T_B / tau) ** 2)),
        _le("sigma_band", sigma_in, 1e-5, approx=False, note="meters"),
        _ge("T_A_band", T_A, 1e6 * sigma_in),
    )
    return RestrictionReport(items)


def feshbach_a(B: float, params: FeshbachParams) -> float:
    """Scattering length a_bg (1 - Delta / (B - B_peak))."""
    if B == params.B_peak:
        raise ValueError("B equals B_peak: scattering length diverges")
    return params.a_bg * (1 - params.Delta / (B - params.B_peak))


RB87 = Rb87Params()


def report(params: Rb87Params = RB87) -> dict[str, float]:
    """Derived numbers for a parameter set, keyed for key=value output."""
    t_pi, t_pi2 = pulse_durations(params.g0, params.delta)
    em = spontaneous_emission_check(params.g0, params.delta, params.Gamma, t_pi)
    return {
        "g0_max": g0_max(params.I_max, params.I_sat, params.Gamma),
        "Omega": raman_rabi_frequency(params.g0, params.delta),
        "t_pi": t_pi,
        "t_pi2": t_pi2,
        "tau_light_shift": light_shift_duration(params.g0, params.delta),
        "delta_over_2Gamma": params.delta / (2 * params.Gamma),
        "emission_single": em.single,
        "emission_raman": em.raman,
        "emission_pass": em.passed,
    }
