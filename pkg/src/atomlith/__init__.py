"""Simulation of 2D atom-interferometric nanolithography with matter-wave lenses."""
from .fields import (
    MOMENTUM, NATURAL, POSITION, ComplexField, FieldError, GaussianSpec, GridSpec, SpinorField,
    UnitSystem, centroid, effective_width, gaussian_packet, load_fields, make_grid, norm,
    save_fields, to_momentum, to_position, translate,
)
from .propagation import (
    PropagationError, PropagationStep, propagate_fresnel, propagate_inverse, propagate_many,
    propagate_spectral, transfer_function,
)
from .optics import (
    GuardError, GuardVerdict, LensSystemConfig, PatternImage, PhaseMap, apply_phase, chirp_guard,
    ft_lens_apply, imprint_phase, intensity_for_phase, lens_1a, lens_1b, lens_2a, lens_2b, lens_3a,
    lens_3b, lens_3b_prime, lens_alpha, lens_beta, lens_system_cascade, lens_system_split,
    lens_system_composite, pattern_phase, quadratic_lens, resample_pattern,
)
from .raman import (
    IDEAL, PHYSICAL, RECOIL_SIGN, PulseError, RamanPulseSpec, RK4Solver, RotatingFrame,
    analytic_two_level, apply_pulse, apply_pulse_ideal, apply_pulse_physical, ideal_mixing,
    momentum_kick_shift, population_trace, raman_rabi, transfer_efficiency,
)
from .interferometer import (
    FinalState, InterferometerConfig, StageError, bright_fringe, dose_image, fit_visibility,
    fringe_scan, phi0, populations, run, with_phi0,
)
from .rb87 import RB87, Rb87Params, validate_restrictions
from .pgm import load_pattern, read_pgm, save_dose, write_pgm
from .config import ConfigError, RunConfig, parse_config, parse_text

__version__ = "0.1.0"
