import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomlith.fields import ComplexField, GaussianSpec, SpinorField, gaussian_packet, make_grid, norm, to_momentum
# one recoil wavenumber that sits on the momentum mesh of both the 64 and 256 grids
K_MESH = math.pi / 16

from atomlith.raman import (
    IDEAL, PHYSICAL, PulseError, RamanPulseSpec, RK4Solver, analytic_two_level, apply_pulse,
    apply_pulse_ideal, momentum_kick_shift, population_trace, raman_rabi, resonant_group_amplitudes,
    transfer_efficiency,
)


def spinor_in_1(grid, sigma=10.0):
    return SpinorField.from_components(gaussian_packet(grid, GaussianSpec(sigma)))


def ky_centroid(s, n):
    m = to_momentum(s)
    _, KY = m.grid.kmesh()
    d = np.abs(m.data[n]) ** 2
    return float(np.sum(d * KY) / np.sum(d))


# --- Raman Rabi frequency -----------------------------------------------------


def test_rabi_reference_values():
    spec = RamanPulseSpec(g_A=6.8e7, g_B=6.8e7, delta=6.8e8, duration=0.0)
    assert raman_rabi(spec) == pytest.approx(3.4e6, rel=1e-12)


def test_rabi_scaling_and_sign():
    a = RamanPulseSpec(g_A=1.0, g_B=1.0, delta=20.0, duration=0.0)
    b = RamanPulseSpec(g_A=2.0, g_B=2.0, delta=20.0, duration=0.0)
    c = RamanPulseSpec(g_A=1.0, g_B=1.0, delta=-20.0, duration=0.0)
    assert raman_rabi(b) == pytest.approx(4 * raman_rabi(a))
    assert raman_rabi(c) == pytest.approx(-raman_rabi(a))
    with pytest.raises(ValueError):
        raman_rabi(RamanPulseSpec(g_A=1.0, g_B=1.0, delta=0.0, duration=0.0))


def test_strong_coupling_warns():
    with pytest.warns(RuntimeWarning):
        RamanPulseSpec(g_A=1.0, g_B=1.0, delta=2.0, duration=1.0)


# --- ideal pulses -------------------------------------------------------------


def test_ideal_pi_transfers_and_kicks(grid256):
    s = spinor_in_1(grid256)
    spec = RamanPulseSpec.for_area(math.pi, 0.1, 1.0, k_A=0.25, k_B=0.25)
    out = apply_pulse_ideal(s, spec)
    assert out.populations()[2] == pytest.approx(1.0, abs=1e-12)
    assert ky_centroid(out, 2) == pytest.approx(spec.K, abs=1e-9)


def test_ideal_half_pi_splits(grid256):
    out = apply_pulse_ideal(spinor_in_1(grid256), RamanPulseSpec.for_area(math.pi / 2, 0.1, 1.0, k_A=0.25, k_B=0.25))
    assert np.allclose(out.populations(), [0.5, 0.0, 0.5], atol=1e-12)


def test_ideal_zero_duration_identity(grid64):
    s = spinor_in_1(grid64, 6.0)
    out = apply_pulse_ideal(s, RamanPulseSpec(g_A=0.1, g_B=0.1, delta=1.0, duration=0.0, k_A=0.25, k_B=0.25))
    assert np.array_equal(out.data, s.data)


def test_ideal_phase_bookkeeping(grid64):
    wA, wB, pA, pB = 3.0, 3.4, 0.3, -1.1
    spec = RamanPulseSpec.for_area(math.pi / 2, 0.1, 1.0, omega_A=wA, omega_B=wB, phi_A=pA, phi_B=pB)
    s = spinor_in_1(grid64, 6.0)
    out = apply_pulse_ideal(s, spec)
    ov = np.sum(np.conj(s.data[0]) * out.data[2]) * grid64.dx * grid64.dy
    expected = -math.pi / 2 + (wB - wA) * spec.duration + (pB - pA)
    assert np.angle(ov * np.exp(-1j * expected)) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0, 400))
def test_ideal_area_law(t):
    g = make_grid(32, 32, 64.0, 64.0)
    spec = RamanPulseSpec(g_A=0.1, g_B=0.1, delta=1.0, duration=t)
    p3 = apply_pulse_ideal(spinor_in_1(g, 8.0), spec).populations()[2]
    assert p3 == pytest.approx(math.sin(raman_rabi(spec) * t / 2) ** 2, abs=1e-3)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0, 1000))
def test_ideal_unitary(seed, t):
    g = make_grid(16, 16, 16.0, 16.0)
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(3, 16, 16)) + 1j * rng.normal(size=(3, 16, 16))
    data[1] = 0
    data /= math.sqrt(np.sum(np.abs(data) ** 2))
    s = SpinorField(g, data)
    spec = RamanPulseSpec(g_A=0.1, g_B=0.1, delta=1.0, duration=t, k_A=0.1, k_B=0.1, phi_A=0.4)
    assert abs(norm(apply_pulse_ideal(s, spec)) - norm(s)) < 1e-12


def test_ideal_rejects_excited_population(grid64):
    f = gaussian_packet(grid64, GaussianSpec(6.0))
    s = SpinorField.from_components(f, f, None)
    with pytest.raises(PulseError):
        apply_pulse_ideal(s, RamanPulseSpec(g_A=0.1, g_B=0.1, delta=1.0, duration=1.0))


# --- physical pulses ----------------------------------------------------------


def test_physical_agrees_with_ideal_for_narrow_momentum():
    # Doppler spread K/sigma far below the Rabi frequency; g0/delta small enough that
    # the excited-state residue after a sudden pi/2 stays under 1e-3
    g = make_grid(256, 256, 16384.0, 16384.0)
    s = spinor_in_1(g, 2048.0)
    kw = dict(k_A=g.dky, k_B=g.dky)
    for area in (math.pi / 2, math.pi):
        ideal = apply_pulse(s, RamanPulseSpec.for_area(area, 0.02, 1.0, **kw))
        phys = apply_pulse(s, RamanPulseSpec.for_area(area, 0.02, 1.0, mode=PHYSICAL, **kw))
        assert np.allclose(phys.populations(), ideal.populations(), atol=1e-3)


def test_physical_unitary(grid64):
    s = spinor_in_1(grid64, 6.0)
    spec = RamanPulseSpec.for_area(math.pi / 2, 0.1, 1.0, k_A=K_MESH, k_B=K_MESH, mode=PHYSICAL, omega_A=0.7)
    assert norm(apply_pulse(s, spec)) == pytest.approx(norm(s), abs=1e-9)


def test_physical_step_convergence():
    spec = RamanPulseSpec.for_area(math.pi, 0.1, 1.0, mode=PHYSICAL)
    a = resonant_group_amplitudes(spec, solver=RK4Solver(step_scale=0.01))
    b = resonant_group_amplitudes(spec, solver=RK4Solver(step_scale=0.005))
    assert np.max(np.abs(a - b)) < 1e-6
    resonant_group_amplitudes(spec, solver=RK4Solver(check_convergence=True))


@pytest.mark.parametrize("ratio", [0.05, 0.1, 0.2])
def test_excited_population_bound(ratio):
    spec = RamanPulseSpec.for_area(math.pi, ratio, 1.0, mode=PHYSICAL)
    _, pops = population_trace(spec, 400)
    assert pops[:, 1].max() <= 2 * ratio**2


@settings(max_examples=15, deadline=None)
@given(frac=st.floats(0.05, 2.0))
def test_physical_area_law(frac):
    spec = RamanPulseSpec.for_area(frac * math.pi, 0.1, 1.0, mode=PHYSICAL)
    c = resonant_group_amplitudes(spec)
    assert abs(c[2]) ** 2 == pytest.approx(math.sin(frac * math.pi / 2) ** 2, abs=2e-2)


def test_doppler_monotonic():
    spec = RamanPulseSpec.for_area(math.pi, 0.1, 1.0, k_A=0.25, k_B=0.25, mode=PHYSICAL)
    dp = np.linspace(0, 0.015, 11)  # main resonance lobe
    eff = transfer_efficiency(spec, np.zeros_like(dp), dp)
    assert np.all(np.diff(eff) < 0)
    eff_neg = transfer_efficiency(spec, np.zeros_like(dp), -dp)
    assert np.all(np.diff(eff_neg) < 0)


# --- closed-form two-level solution ---------------------------------------------


def test_analytic_identity_and_transfer():
    spec = RamanPulseSpec.for_area(math.pi, 0.1, 1.0, omega_A=0.3, phi_B=0.2)
    assert analytic_two_level(spec, 0.0, 0.6, 0.8j) == pytest.approx((0.6, 0.8j))
    _, c3 = analytic_two_level(spec, spec.duration, 1.0, 0.0)
    assert abs(c3) ** 2 == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0, 1e4), a=st.floats(0, 1), ph=st.floats(-3, 3), w=st.floats(-2, 2))
def test_analytic_unitary(t, a, ph, w):
    spec = RamanPulseSpec(g_A=0.1, g_B=0.1, delta=1.0, duration=t, omega_A=w, phi_B=ph)
    c1, c3 = analytic_two_level(spec, t, math.sqrt(a), 1j * math.sqrt(1 - a))
    assert abs(c1) ** 2 + abs(c3) ** 2 == pytest.approx(1.0, abs=1e-12)


# --- momentum kicks ---------------------------------------------------------------


def test_kick_round_trip_and_shift(grid256):
    f = gaussian_packet(grid256, GaussianSpec(10.0))
    s = SpinorField.from_components(f, None, f)
    K = 0.5
    there = momentum_kick_shift(s, K)
    back = momentum_kick_shift(there, -K)
    assert np.max(np.abs(back.data - s.data)) < 1e-12
    assert ky_centroid(there, 0) - ky_centroid(s, 0) == pytest.approx(K, abs=1e-9)
    assert np.max(np.abs(np.abs(there.data) - np.abs(s.data))) < 1e-15


def test_kick_guard(grid64):
    s = spinor_in_1(grid64, 6.0)
    with pytest.raises(PulseError):
        momentum_kick_shift(s, grid64.k_nyquist / 4)
