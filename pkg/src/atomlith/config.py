"""Run configuration: ``section.key = value`` lines with ``#`` comments.

Every key, its type and its default are listed in ``KEYS``.  Unknown keys,
duplicates, unparsable values and failed range checks are rejected with the
offending line number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Union

from .fields import NATURAL, GaussianSpec, GridSpec, UnitSystem, make_grid


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _choice(*opts: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip()
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v

    return parse


def _str(s: str) -> str:
    v = s.strip()
    if not v:
        raise ValueError("empty value")
    return v


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


_PHASES = ("phiA1", "phiB1", "phiA2", "phiB2", "phiA3", "phiB3")

# key -> (parser, default, check, description); default REQUIRED marks a required key
REQUIRED = object()
KEYS: dict[str, tuple[Callable, Any, Optional[Callable], str]] = {
    "grid.nx": (int, REQUIRED, _pos, "mesh columns (power of two >= 16)"),
    "grid.ny": (int, None, _pos, "mesh rows (default nx)"),
    "grid.L": (_float, REQUIRED, _pos, "mesh extent along x"),
    "grid.Ly": (_float, None, _pos, "mesh extent along y (default L)"),
    "packet.sigma": (_float, REQUIRED, _pos, "initial Gaussian width"),
    "packet.x0": (_float, 0.0, None, "initial center x"),
    "packet.y0": (_float, 0.0, None, "initial center y"),
    "packet.kx": (_float, 0.0, None, "initial carrier wavenumber x"),
    "packet.ky": (_float, 0.0, None, "initial carrier wavenumber y"),
    "times.T0": (_float, None, _nonneg, "flight between pulses (derived when the lens is on)"),
    "times.T1": (_float, 0.0, _nonneg, "flight after the final pi/2"),
    "times.TA": (_float, None, _pos, "lens stage time T_A"),
    "times.TB": (_float, None, _pos, "lens stage time T_B"),
    "pulses.g0": (_float, REQUIRED, _pos, "single-photon Rabi frequency"),
    "pulses.delta": (_float, REQUIRED, lambda v: v != 0, "one-photon detuning"),
    "pulses.omegaA": (_float, 0.0, None, "laser A angular frequency"),
    "pulses.omegaB": (_float, 0.0, None, "laser B angular frequency"),
    "pulses.k": (_float, 0.0, _nonneg, "laser wavenumber (k_A = k_B = k)"),
    **{f"pulses.{p}": (_float, 0.0, None, "laser phase") for p in _PHASES},
    "pulses.phi0": (_float, None, None, "override: set phiB3 to realize this phi0"),
    "pulses.calibrate": (_bool, False, None, "shift phiB3 onto the bright fringe"),
    "pulses.mode": (_choice("ideal", "physical"), "ideal", None, "pulse model"),
    "lens.enabled": (_bool, False, None, "lens system on the |1> arm"),
    "lens.method": (_choice("fresnel", "spectral"), "fresnel", None, "flight method inside the lens system"),
    "lens.cross_talk": (_float, 0.0, _nonneg, "fraction of the lens phase seen by the |3> arm"),
    "pattern.path": (_str, None, None, "PGM pattern file"),
    "pattern.extent": (_float, None, _pos, "extent spanned by the pattern's long side"),
    "output.dose": (_str, None, None, "dose PGM output path"),
    "output.depth": (int, 16, lambda v: v in (8, 16), "dose bit depth (8 or 16)"),
    "output.fields": (_str, None, None, "directory for AIF1 field dumps"),
    "units.mode": (_choice("naturalized", "si"), "naturalized", None, "unit system"),
    "units.mass": (_float, None, _pos, "particle mass (si default: Rb-87)"),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; ``values`` holds every key of ``KEYS``."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.values == other.values

    def grid(self) -> GridSpec:
        v = self.values
        return make_grid(v["grid.nx"], v["grid.ny"], v["grid.L"], v["grid.Ly"])

    def units(self) -> UnitSystem:
        v = self.values
        if v["units.mode"] == "si":
            from .rb87 import RB87_MASS

            return UnitSystem.si(v["units.mass"] or RB87_MASS)
        return UnitSystem(mass=v["units.mass"] or 1.0)

    def packet(self) -> GaussianSpec:
        v = self.values
        return GaussianSpec(v["packet.sigma"], (v["packet.x0"], v["packet.y0"]), (v["packet.kx"], v["packet.ky"]))

    def phases(self) -> tuple:
        return tuple(self.values[f"pulses.{p}"] for p in _PHASES)

    def interferometer(self, pattern=None):
        """Build the InterferometerConfig (pattern already resampled, or None)."""
        from .interferometer import InterferometerConfig, bright_fringe, with_phi0
        from .optics import LensSystemConfig

        v = self.values
        units = self.units()
        lens = None
        if v["lens.enabled"]:
            lens = LensSystemConfig(v["times.TA"], v["times.TB"], None, units)
        cfg = InterferometerConfig(
            grid=self.grid(),
            packet=self.packet(),
            g0=v["pulses.g0"],
            delta=v["pulses.delta"],
            T0=v["times.T0"],
            T1=v["times.T1"],
            phases=self.phases(),
            omega_A=v["pulses.omegaA"],
            omega_B=v["pulses.omegaB"],
            k_A=v["pulses.k"],
            k_B=v["pulses.k"],
            mode=v["pulses.mode"],
            lens=lens,
            pattern=pattern,
            units=units,
            flight_method=v["lens.method"],
            cross_talk=v["lens.cross_talk"],
        )
        if v["pulses.phi0"] is not None:
            cfg = with_phi0(cfg, v["pulses.phi0"])
        if v["pulses.calibrate"]:
            cfg = bright_fringe(cfg)
        return cfg


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    raw: dict[str, Any] = {}
    where: dict[str, int] = {}
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{n}: expected 'section.key = value', got {line.strip()!r}")
        key, val = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r} (first on line {where[key]})")
        parser, _, check, _ = KEYS[key]
        try:
            value = parser(val)
        except ValueError as e:
            raise ConfigError(f"{source}:{n}: key {key}: cannot parse {val!r} ({e})") from None
        if check is not None and not check(value):
            raise ConfigError(f"{source}:{n}: key {key}: value {val!r} out of range ({KEYS[key][3]})")
        raw[key] = value
        where[key] = n
    values = {}
    for key, (_, default, _, _) in KEYS.items():
        if key in raw:
            values[key] = raw[key]
        elif default is REQUIRED:
            raise ConfigError(f"{source}: missing required key {key}")
        else:
            values[key] = default
    if values["grid.ny"] is None:
        values["grid.ny"] = values["grid.nx"]
    if values["grid.Ly"] is None:
        values["grid.Ly"] = values["grid.L"]

    def fail(key, msg):
        line = f":{where[key]}" if key in where else ""
        raise ConfigError(f"{source}{line}: key {key}: {msg}")

    if values["lens.enabled"]:
        for k in ("times.TA", "times.TB"):
            if values[k] is None:
                fail(k, "required when lens.enabled is true")
        if values["times.T1"] > values["times.TB"]:
            fail("times.T1", "must not exceed times.TB")
    try:
        grid = make_grid(values["grid.nx"], values["grid.ny"], values["grid.L"], values["grid.Ly"])
    except ValueError as e:
        fail("grid.nx", str(e))
    try:
        GaussianSpec(values["packet.sigma"]).check_representable(grid)
    except ValueError as e:
        fail("packet.sigma", str(e))
    return RunConfig(values)


def parse_config(path: Union[str, Path]) -> RunConfig:
    p = Path(path)
    return parse_text(p.read_text(), str(p))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump(cfg: RunConfig) -> str:
    """Every set key in ``KEYS`` order; unset optional keys are written as comments."""
    out = []
    section = None
    for key, (_, _, _, desc) in KEYS.items():
        sec = key.split(".", 1)[0]
        if sec != section:
            if section is not None:
                out.append("")
            section = sec
        v = cfg.values[key]
        if v is None:
            out.append(f"# {key} =   ({desc})")
        else:
            out.append(f"{key} = {_fmt(v)}")
    return "\n".join(out) + "\n"
