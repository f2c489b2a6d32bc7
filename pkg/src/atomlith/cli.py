"""Command line entry point ``atomlith``.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.  Reports are
``key=value`` lines on standard output.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(pairs) -> None:
    for k, v in pairs:
        if isinstance(v, bool):
            v = str(v).lower()
        elif isinstance(v, float):
            v = f"{v:.10g}"
        print(f"{k}={v}")


# --- subcommands -------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .config import parse_config
    from .fields import save_fields
    from .interferometer import dose_image, populations, run
    from .pgm import load_pattern, save_dose

    rc = parse_config(args.config)
    grid = rc.grid()
    pattern_path = args.pattern or rc["pattern.path"]
    pattern = None
    if pattern_path:
        pp = Path(pattern_path)
        if not pp.is_absolute() and args.pattern is None:
            pp = Path(args.config).parent / pp
        pattern = load_pattern(pp, grid, rc["pattern.extent"])
    cfg = rc.interferometer(pattern)
    final = run(cfg)
    p1, p3 = populations(final)
    out = args.out or rc["output.dose"]
    report = [
        ("P1", p1),
        ("P3", p3),
        ("residual", final.residual),
        ("accounting", p1 + p3 + final.residual),
        ("phi0", final.metadata["phi0"]),
        ("T0", final.metadata["T0"]),
        ("T1", final.metadata["T1"]),
        ("y0", final.metadata["y0"]),
        ("y1", final.metadata["y1"]),
        ("mode", cfg.mode),
        ("lens", cfg.lens is not None),
    ]
    if pattern is not None:
        report.append(("pattern.clamped", pattern.clamp_count))
    if out:
        save_dose(dose_image(final), out, args.depth or rc["output.depth"])
        report.append(("dose", out))
    dump_dir = args.dump_fields or rc["output.fields"]
    if dump_dir:
        d = Path(dump_dir)
        d.mkdir(parents=True, exist_ok=True)
        save_fields(d / "psi1.aif", final.psi1)
        save_fields(d / "psi3.aif", final.psi3)
        report.append(("fields", str(d)))
    _emit(report)
    return EXIT_OK


def cmd_propagate(args) -> int:
    from .fields import load_fields, norm, save_fields
    from .propagation import PropagationStep, propagate_fresnel, propagate_spectral

    f = load_fields(args.input, args.L, args.Ly)
    step = PropagationStep(args.T)
    if args.method == "fresnel":
        out = propagate_fresnel(f, step)
    else:
        out = propagate_spectral(f, step)
    save_fields(args.out, out)
    _emit([("norm_in", norm(f)), ("norm_out", norm(out)), ("T", args.T), ("method", args.method), ("out", args.out)])
    return EXIT_OK


def cmd_pulse_test(args) -> int:
    from .fields import SpinorField, gaussian_packet, GaussianSpec, make_grid
    from .raman import RamanPulseSpec, apply_pulse, raman_rabi

    area = {"pi": math.pi, "pi2": math.pi / 2}[args.area]
    grid = make_grid(args.n, args.n, args.L, args.L)
    psi = gaussian_packet(grid, GaussianSpec(args.sigma))
    spinor = SpinorField.from_components(psi)
    spec = RamanPulseSpec.for_area(
        area, args.g0, args.delta, k_A=args.k, k_B=args.k, mode=args.mode,
        omega_A=args.omegaA, omega_B=args.omegaB, phi_A=args.phiA, phi_B=args.phiB,
    )
    out = apply_pulse(spinor, spec)
    pops = out.populations()
    _, Y = grid.mesh()
    ref = psi.values * np.exp(1j * spec.K * Y)
    dA = grid.dx * grid.dy
    ov3 = np.sum(np.conj(ref) * out.data[2]) * dA
    ov1 = np.sum(np.conj(psi.values) * out.data[0]) * dA
    _emit([
        ("mode", args.mode),
        ("area", args.area),
        ("Omega", raman_rabi(spec)),
        ("duration", spec.duration),
        ("P1", pops[0]),
        ("P2", pops[1]),
        ("P3", pops[2]),
        ("norm", float(pops.sum())),
        ("phase_c1", float(np.angle(ov1)) if abs(ov1) > 1e-12 else 0.0),
        ("phase_c3", float(np.angle(ov3)) if abs(ov3) > 1e-12 else 0.0),
    ])
    return EXIT_OK


def cmd_lens_demo(args) -> int:
    from .fields import GaussianSpec, effective_width, gaussian_packet, make_grid, norm, save_fields
    from .optics import LensSystemConfig, lens_system_composite, pattern_phase
    from .pgm import load_pattern, save_dose

    grid = make_grid(args.n, args.n, args.L, args.L)
    psi = gaussian_packet(grid, GaussianSpec(args.sigma))
    pp = pattern_phase(load_pattern(args.pattern, grid, args.extent)) if args.pattern else None
    cfg = LensSystemConfig(args.TA, args.TB, pp)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = lens_system_composite(psi, cfg, args.method)
    save_fields(args.out, out)
    snap = args.snapshot or str(Path(args.out).with_suffix(".pgm"))
    save_dose(np.abs(out.values), snap, 16)
    _emit([
        ("scale_factor", cfg.scale_factor),
        ("width_in", effective_width(psi, "x")),
        ("width_out", effective_width(out, "x")),
        ("width_alpha", cfg.T_A / args.sigma),
        ("width_expected", cfg.T_B / args.sigma),
        ("norm_out", norm(out)),
        ("guard_warnings", len(caught)),
        ("out", args.out),
        ("snapshot", snap),
    ])
    return EXIT_OK


def cmd_params(args) -> int:
    from dataclasses import replace

    from .rb87 import RB87, report, validate_restrictions

    p = RB87
    over = {k: v for k, v in (("g0", args.g0), ("delta", args.delta), ("I_max", args.Imax)) if v is not None}
    if over:
        p = replace(p, **over)
    pairs = [("preset", args.preset), ("units", "SI; frequencies angular in 1/s; lengths m; times s")]
    pairs += list(report(p).items())
    pairs += [("sigma_in", args.sigma), ("T_A", args.TA), ("T_B", args.TB)]
    print("\n".join(f"{k}={v:.10g}" if isinstance(v, float) else f"{k}={str(v).lower() if isinstance(v, bool) else v}"
                    for k, v in pairs))
    rep = validate_restrictions(args.sigma, args.TA, args.TB, k=p.k, mass=p.mass)
    print("\n".join(rep.lines()))
    return EXIT_OK


def cmd_dump_config(args) -> int:
    from .config import dump, parse_config

    sys.stdout.write(dump(parse_config(args.config)))
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="atomlith", description="Atom-interferometric nanolithography simulator")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the interferometer and write the dose image")
    s.add_argument("--config", required=True)
    s.add_argument("--pattern", help="PGM pattern (overrides pattern.path)")
    s.add_argument("--out", help="dose PGM (overrides output.dose)")
    s.add_argument("--depth", type=int, choices=(8, 16))
    s.add_argument("--dump-fields", help="directory for AIF1 dumps of both ports")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("propagate", help="free-flight an AIF1 field dump")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--L", type=float, help="mesh extent along x (default: nx, i.e. dx = 1)")
    s.add_argument("--Ly", type=float)
    s.add_argument("--method", choices=("spectral", "fresnel"), default="spectral")
    s.set_defaults(func=cmd_propagate)

    s = sub.add_parser("pulse-test", help="apply one Raman pulse to a Gaussian in |1>")
    s.add_argument("--area", choices=("pi", "pi2"), required=True)
    s.add_argument("--mode", choices=("ideal", "physical"), default="ideal")
    s.add_argument("--g0", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--k", type=float, default=0.0, help="k_A = k_B")
    s.add_argument("--omegaA", type=float, default=0.0)
    s.add_argument("--omegaB", type=float, default=0.0)
    s.add_argument("--phiA", type=float, default=0.0)
    s.add_argument("--phiB", type=float, default=0.0)
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--L", type=float, default=64.0)
    s.add_argument("--sigma", type=float, default=6.0)
    s.set_defaults(func=cmd_pulse_test)

    s = sub.add_parser("lens-demo", help="pass a Gaussian through the composite lens system")
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--TA", type=float, required=True)
    s.add_argument("--TB", type=float, required=True)
    s.add_argument("--pattern")
    s.add_argument("--extent", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--snapshot", help="PGM magnitude snapshot (default: out with .pgm suffix)")
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--L", type=float, default=256.0)
    s.add_argument("--method", choices=("fresnel", "spectral"), default="fresnel")
    s.set_defaults(func=cmd_lens_demo)

    s = sub.add_parser("params", help="rubidium-87 parameter report and restriction check")
    s.add_argument("--preset", choices=("rb87",), default="rb87")
    s.add_argument("--g0", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--Imax", type=float)
    s.add_argument("--sigma", type=float, default=1e-5)
    s.add_argument("--TA", type=float, default=10.0)
    s.add_argument("--TB", type=float, default=0.1)
    s.set_defaults(func=cmd_params)

    s = sub.add_parser("dump-config", help="print the fully resolved configuration")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_dump_config)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_INVALID
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"atomlith: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, RuntimeError) as e:
        print(f"atomlith: error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
