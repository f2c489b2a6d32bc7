import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomlith.fields import GaussianSpec, gaussian_packet, make_grid
from atomlith.interferometer import (
    Branch, InterferometerConfig, StageError, _phase_on, bright_fringe, dose_image, fit_visibility,
    fringe_scan, phi0, populations, run, with_phi0,
)
from atomlith.optics import LensSystemConfig, PatternImage, PhaseMap, apply_phase

from conftest import pearson


@pytest.fixture(scope="module")
def grid128():
    return make_grid(128, 128, 128.0, 128.0)


def base(grid, **kw):
    kw.setdefault("T0", 20.0)
    return InterferometerConfig(grid, GaussianSpec(8.0), g0=0.1, delta=1.0, k_A=0.25, k_B=0.25, **kw)


# --- phi0 ----------------------------------------------------------------------


def test_phi0_read_off(grid128):
    assert phi0(base(grid128)) == 0.0
    assert phi0(base(grid128, phases=(0, 0, 0, 0, 0, math.pi))) == pytest.approx(math.pi)
    assert phi0(base(grid128, phases=(0, 0, math.pi / 2, 0, 0, 0))) == pytest.approx(math.pi)


def test_phi0_frequency_term(grid128):
    cfg = base(grid128, omega_A=1.0, omega_B=1.0 - 1e-3)
    assert phi0(cfg) == pytest.approx(math.pi / cfg.rabi * 1e-3)
    assert phi0(with_phi0(cfg, 1.234)) == pytest.approx(1.234)


# --- populations ---------------------------------------------------------------


@pytest.mark.parametrize("n", [0, 1, 2])
def test_bright_port_at_even_multiples(grid128, n):
    p1, p3 = populations(run(with_phi0(base(grid128), 2 * math.pi * n)))
    assert p1 == pytest.approx(1.0, abs=1e-3) and p3 == pytest.approx(0.0, abs=1e-3)


def test_dark_port_at_pi(grid128):
    p1, _ = populations(run(with_phi0(base(grid128), math.pi)))
    assert p1 == pytest.approx(0.0, abs=1e-3)


@settings(max_examples=15, deadline=None)
@given(target=st.floats(0, 4 * math.pi))
def test_fringe_law(target):
    g = make_grid(64, 64, 64.0, 64.0)
    cfg = InterferometerConfig(g, GaussianSpec(6.0), g0=0.1, delta=1.0, T0=10.0, k_A=0.25, k_B=0.25)
    fin = run(with_phi0(cfg, target))
    p1, p3 = populations(fin)
    assert p1 == pytest.approx(0.5 * (1 + math.cos(target)), abs=1e-3)
    assert p1 + p3 == pytest.approx(1 - fin.residual, abs=1e-8)


@settings(max_examples=10, deadline=None)
@given(ph=st.lists(st.floats(-3, 3), min_size=6, max_size=6), target=st.floats(0, 2 * math.pi))
def test_phases_enter_only_through_phi0(ph, target):
    g = make_grid(64, 64, 64.0, 64.0)
    cfg = InterferometerConfig(g, GaussianSpec(6.0), g0=0.1, delta=1.0, T0=10.0, k_A=0.25, k_B=0.25)
    ref = populations(run(with_phi0(cfg, target)))[0]
    other = populations(run(with_phi0(replace(cfg, phases=tuple(ph)), target)))[0]
    assert abs(other - ref) < 1e-6


@pytest.mark.parametrize("c", [0.0, 0.7, math.pi / 2])
def test_uniform_pattern_phase(grid128, c):
    pat = PatternImage(grid128, np.full(grid128.shape, math.cos(c)))
    p1, p3 = populations(run(base(grid128, pattern=pat)))
    assert p1 == pytest.approx(0.5 * (1 + math.cos(c)), abs=1e-3)
    assert p3 == pytest.approx(0.5 * (1 - math.cos(c)), abs=1e-3)


def test_uniform_phase_knob_matches(grid128):
    p1, p3 = populations(run(base(grid128, uniform_phase=2.0)))
    assert p1 == pytest.approx(0.5 * (1 + math.cos(2.0)), abs=1e-3)


def test_dose_is_gaussian_envelope(grid128):
    fin = run(base(grid128, T1=15.0))
    X, Y = grid128.mesh()
    env = np.abs(gaussian_packet(grid128, GaussianSpec(8.0)).values) ** 2
    # after the final pi/2 the |1> port has drifted by nothing and spread over 2 T0 + T1
    from atomlith.propagation import PropagationStep, propagate_spectral

    free = propagate_spectral(gaussian_packet(grid128, GaussianSpec(8.0)), PropagationStep(2 * 20.0 + 15.0))
    assert pearson(dose_image(fin), np.abs(free.values) ** 2) > 0.999
    assert pearson(dose_image(fin), env) > 0.9


def test_physical_mode_accounting(grid128):
    k = 4 * grid128.dky
    cfg = InterferometerConfig(grid128, GaussianSpec(8.0), g0=0.1, delta=1.0, T0=20.0, k_A=k, k_B=k, mode="physical")
    fin = run(cfg)
    p1, p3 = populations(fin)
    assert fin.residual > 0
    assert p1 + p3 + fin.residual == pytest.approx(1.0, abs=1e-8)
    for v in fin.metadata["stage_norms"].values():
        assert v == pytest.approx(1.0, abs=1e-8)


# --- visibility -----------------------------------------------------------------


def test_visibility_ideal(grid128):
    ph = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    assert fringe_scan(base(grid128), ph) == pytest.approx(1.0, abs=1e-3)


def test_visibility_one_arm(grid128):
    ph = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    # without the mirror the two outputs of the final splitter no longer overlap in momentum
    assert fringe_scan(base(grid128, pi_pulse=False), ph) == pytest.approx(0.0, abs=1e-3)


def test_visibility_physical_broad_momentum(grid128):
    k = 4 * grid128.dky
    cfg = InterferometerConfig(grid128, GaussianSpec(4.0), g0=0.1, delta=1.0, T0=10.0, k_A=k, k_B=k, mode="physical")
    v = fringe_scan(cfg, np.linspace(0, 2 * math.pi, 6, endpoint=False))
    print(f"physical-mode visibility={v:.4f}")
    assert 0 < v < 1


def test_fit_visibility_errors():
    with pytest.raises(ValueError):
        fit_visibility([0, 1, 2, 3], [1, 1, 1, 1])
    with pytest.raises(ValueError):
        fit_visibility([0.0] * 6, [1.0] * 6)
    with pytest.raises(ValueError):
        fit_visibility(np.linspace(0, 6, 6), np.zeros(6))


# --- lens arm -------------------------------------------------------------------


def test_lens_phases_touch_only_the_designated_arm(grid128):
    f = gaussian_packet(grid128, GaussianSpec(8.0))
    br = [Branch(1, 0, 0.0, f), Branch(3, 1, 5.0, f)]
    pm = PhaseMap.constant(grid128, 0.4)
    out = _phase_on(br, 1, pm, apply_phase)
    assert out[1] is br[1]
    assert np.allclose(out[0].field.values, f.values * np.exp(0.4j))
    leak = _phase_on(br, 1, pm, apply_phase, cross_talk=0.25)
    assert np.allclose(leak[1].field.values, f.values * np.exp(0.1j))


def test_lens_run_conserves_with_spectral_flights():
    g = make_grid(256, 256, 256.0, 256.0)
    cfg = InterferometerConfig(g, GaussianSpec(10.0), g0=0.1, delta=1.0, T1=64.0, k_A=0.25, k_B=0.25,
                               lens=LensSystemConfig(128.0, 128.0), flight_method="spectral")
    fin = run(cfg)
    p1, p3 = populations(fin)
    assert p1 + p3 + fin.residual == pytest.approx(1.0, abs=1e-8)
    assert fin.metadata["T0"] == pytest.approx(2 * 128 + 128 - 64)


def test_lens_guard_failure_names_stage(grid128):
    cfg = base(grid128, T0=None, lens=LensSystemConfig(10.0, 10.0))
    with pytest.raises(StageError, match="lens 1a"):
        run(cfg)


def test_lens_config_validation(grid128):
    with pytest.raises(ValueError):
        base(grid128, T0=None, T1=50.0, lens=LensSystemConfig(100.0, 20.0))
    with pytest.warns(RuntimeWarning):
        base(grid128, T0=5.0, lens=LensSystemConfig(100.0, 20.0))


def test_bright_fringe_calibration():
    g = make_grid(256, 256, 256.0, 256.0)
    cfg = InterferometerConfig(g, GaussianSpec(10.0), g0=0.1, delta=1.0, T1=128.0, k_A=0.25, k_B=0.25,
                               lens=LensSystemConfig(128.0, 128.0), flight_method="spectral")
    raw = populations(run(cfg))[0]
    cal = populations(run(bright_fringe(cfg)))[0]
    for shift in (0.3, -0.3):
        off = populations(run(with_phi0(bright_fringe(cfg), phi0(bright_fringe(cfg)) + shift)))[0]
        assert off < cal
    assert cal >= raw


def _lens_dose(T_B, pattern=None):
    g = make_grid(256, 256, 256.0, 256.0)
    cfg = InterferometerConfig(g, GaussianSpec(10.0), g0=0.1, delta=1.0, T1=T_B, k_A=0.25, k_B=0.25,
                               lens=LensSystemConfig(128.0, T_B), pattern=pattern)
    return g, dose_image(run(bright_fringe(cfg)))


@pytest.mark.xfail(strict=True, reason="lens-arm and free-arm envelopes differ at the substrate; see the decisions ledger")
def test_mirror_symmetry_with_unit_lens():
    g = make_grid(256, 256, 256.0, 256.0)
    _, with_lens = _lens_dose(128.0)
    cfg = InterferometerConfig(g, GaussianSpec(10.0), g0=0.1, delta=1.0, T0=2 * 128.0, T1=128.0, k_A=0.25, k_B=0.25)
    no_lens = dose_image(run(cfg))
    assert pearson(with_lens, no_lens[::-1, ::-1]) > 0.99
