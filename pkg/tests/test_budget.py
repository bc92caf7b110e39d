"""Noise budget closed forms and their internal consistency."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from squidlev import (
    FilterResponse,
    OscillatorMode,
    SpectralDensity,
    SphereParams,
    SquidCircuit,
    UnstableHeating,
    acceleration_noise,
    cold_damping_gain,
    drift_averaged_chi_squared,
    drift_averaged_sensitivity,
    drift_noise_equivalent_temperature,
    eddy_damping,
    effective_temperature,
    feedback_phonon_number,
    filter_step_response,
    force_sensitivity,
    gas_damping,
    heating_rates,
    noise_equivalent_temperature,
    optimal_eta,
    rl_filter,
    sql_minimum,
    sql_psd,
    susceptibility,
    thermal_force_noise,
    vibration_displacement_psd,
    vibration_effective_temperature,
    vibration_rms,
)
from squidlev.constants import HBAR, K_B, PHI0, STANDARD_GRAVITY


def reference_mode():
    return OscillatorMode.from_frequency(mass=5.6e-9, f0=212.0, Q=2.6e7,
                                         T0=15e-3)


def quantum_limited_circuit(**overrides):
    kwargs = dict(L_S=15e-12, L_I=0.53e-6, L_W=100e-9, M=2.3e-9,
                  S_phiphi=(5.2e-8 * PHI0) ** 2)
    kwargs.update(overrides)
    return SquidCircuit(**kwargs)


class TestSpectralDensity:
    def test_white(self):
        s = SpectralDensity.white(3e-18)
        assert s.is_white
        assert s.level == 3e-18
        assert s(0.1) == s(1e4) == 3e-18

    def test_table_interpolates_log_log(self):
        s = SpectralDensity.from_table([1.0, 100.0], [1e-10, 1e-14])
        assert not s.is_white
        # straight line in log-log space passes through 1e-12 at 10 Hz
        assert s(10.0) == pytest.approx(1e-12, rel=1e-9)

    def test_table_clamps_outside_range(self):
        s = SpectralDensity.from_table([1.0, 100.0], [1e-10, 1e-14])
        assert s(0.01) == pytest.approx(1e-10)
        assert s(1e5) == pytest.approx(1e-14)

    def test_array_evaluation(self):
        s = SpectralDensity.from_table([1.0, 100.0], [1e-10, 1e-14])
        out = s(np.array([1.0, 10.0, 100.0]))
        assert out.shape == (3,)
        assert_allclose(out, [1e-10, 1e-12, 1e-14], rtol=1e-9)


class TestOscillatorMode:
    def test_frequency_roundtrip(self):
        mode = reference_mode()
        assert mode.f0 == pytest.approx(212.0, rel=1e-12)
        assert mode.Q == pytest.approx(2.6e7, rel=1e-12)
        assert mode.gamma == pytest.approx(2 * math.pi * 212.0 / 2.6e7)

    def test_from_sphere_uses_sphere_mass(self):
        sphere = SphereParams(50e-6, 10.9e3)
        mode = OscillatorMode.from_sphere(sphere, 212.0, 2.6e7, 15e-3)
        assert mode.mass == pytest.approx(sphere.mass)

    def test_validation(self):
        with pytest.raises(ValueError):
            OscillatorMode(mass=-1.0, omega0=1.0, gamma=0.0, T0=0.0)


class TestSusceptibility:
    def test_resonance_magnitude(self):
        mode = reference_mode()
        chi = susceptibility(mode, mode.omega0)
        assert abs(chi) == pytest.approx(
            1.0 / (mode.mass * mode.gamma * mode.omega0), rel=1e-12)
        # purely reactive-free on resonance
        assert chi.real == pytest.approx(0.0, abs=1e-12 * abs(chi))

    def test_dc_limit_is_spring_compliance(self):
        mode = reference_mode()
        chi0 = susceptibility(mode, 0.0)
        assert chi0 == pytest.approx(1.0 / (mode.mass * mode.omega0**2))


class TestOnResonanceBudget:
    def test_thermal_force_noise(self):
        mode = reference_mode()
        expected = math.sqrt(4.0 * K_B * mode.T0 * mode.mass * mode.gamma)
        assert thermal_force_noise(mode) == pytest.approx(expected, rel=1e-12)
        assert thermal_force_noise(mode) == pytest.approx(4.9e-19, rel=0.03)

    def test_total_sensitivity_at_nanometer_imprecision(self):
        mode = reference_mode()
        assert force_sensitivity(mode, 1e-18) == pytest.approx(6.3e-19, rel=0.03)

    def test_acceleration_floor(self):
        mode = reference_mode()
        a = acceleration_noise(mode)
        assert acceleration_noise(mode, in_g=True) == pytest.approx(
            a / STANDARD_GRAVITY, rel=1e-12)
        assert acceleration_noise(mode, in_g=True) == pytest.approx(9e-12, rel=0.03)

    def test_noise_equivalent_temperature(self):
        mode = reference_mode()
        assert noise_equivalent_temperature(mode, 1e-18) == pytest.approx(
            24e-3, rel=0.03)
        # zero imprecision recovers the bath
        assert noise_equivalent_temperature(mode, 0.0) == pytest.approx(mode.T0)

    def test_off_resonance_costs_sensitivity(self):
        mode = reference_mode()
        on = force_sensitivity(mode, 1e-18)
        off = force_sensitivity(mode, 1e-18, omega=2.0 * math.pi * 190.0)
        assert off > 10.0 * on


class TestDriftAveraging:
    def test_narrow_bin_recovers_resonant_chi(self):
        mode = OscillatorMode.from_frequency(5.6e-9, 212.0, 1e3, 15e-3)
        # bin much narrower than the linewidth gamma/2pi ~ 0.2 Hz
        chi2 = drift_averaged_chi_squared(mode, 1e-3)
        chi0 = abs(susceptibility(mode, mode.omega0)) ** 2
        assert chi2 == pytest.approx(chi0, rel=1e-3)

    def test_wide_bin_asymptote(self):
        # once the bin swallows the peak the average falls as gamma/(4 df)
        mode = reference_mode()
        df = 5e-3
        chi2 = drift_averaged_chi_squared(mode, df)
        chi0 = abs(susceptibility(mode, mode.omega0)) ** 2
        assert chi2 == pytest.approx(chi0 * mode.gamma / (4.0 * df), rel=0.01)

    def test_drift_degrades_net_to_kelvin_scale(self):
        mode = reference_mode()
        t_drift = drift_noise_equivalent_temperature(mode, 1e-18, 5e-3)
        assert t_drift == pytest.approx(3.62, rel=0.02)
        assert t_drift > 100.0 * noise_equivalent_temperature(mode, 1e-18)

    def test_sensitivity_consistent_with_net(self):
        mode = reference_mode()
        s_f = drift_averaged_sensitivity(mode, 1e-18, 5e-3)
        t_n = drift_noise_equivalent_temperature(mode, 1e-18, 5e-3)
        assert s_f**2 == pytest.approx(
            4.0 * K_B * t_n * mode.mass * mode.gamma, rel=1e-9)


class TestVibrationFeedthrough:
    S_EPSEPS = 1e-20  # (1e-10 m/sqrt(Hz))^2 trap-center motion

    def test_peak_displacement_psd(self):
        mode = reference_mode()
        peak = math.sqrt(vibration_displacement_psd(mode, self.S_EPSEPS,
                                                    mode.omega0))
        # |chi| m omega0^2 = Q at resonance, so peak = Q sqrt(S_epseps)
        assert peak == pytest.approx(2.6e-3, rel=1e-6)

    def test_rms_displacement(self):
        mode = reference_mode()
        assert vibration_rms(mode, self.S_EPSEPS) == pytest.approx(9.3e-6,
                                                                   rel=0.01)

    def test_effective_temperature(self):
        mode = reference_mode()
        t_eff = vibration_effective_temperature(mode, self.S_EPSEPS)
        assert t_eff == pytest.approx(6.2e10, rel=0.01)

    def test_triple_is_mutually_consistent(self):
        # rms, T_eff and the resonant peak all describe the same energy
        mode = reference_mode()
        rms = vibration_rms(mode, self.S_EPSEPS)
        t_eff = vibration_effective_temperature(mode, self.S_EPSEPS)
        assert mode.mass * mode.omega0**2 * rms**2 == pytest.approx(
            K_B * t_eff, rel=1e-9)
        peak2 = vibration_displacement_psd(mode, self.S_EPSEPS, mode.omega0)
        # Lorentzian area: <x^2> = (pi/2) f0 / Q * S_peak ... expressed via gamma
        assert rms**2 == pytest.approx(peak2 * mode.gamma / 4.0, rel=1e-9)


class TestHeating:
    def test_rates_formulas(self):
        mode = reference_mode()
        qdot, gdelta = heating_rates(mode, 1e-20, 1e-6)
        assert qdot == pytest.approx(0.25 * mode.mass * mode.omega0**4 * 1e-20)
        assert gdelta == pytest.approx(0.25 * mode.omega0**2 * 1e-6)

    def test_spring_noise_sampled_at_twice_f0(self):
        mode = reference_mode()
        # table with different values at f0 and 2 f0
        table = SpectralDensity.from_table([mode.f0, 2.0 * mode.f0], [4e-6, 1e-6])
        _, gdelta = heating_rates(mode, 0.0, table)
        assert gdelta == pytest.approx(0.25 * mode.omega0**2 * 1e-6, rel=1e-9)

    def test_effective_temperature_balance(self):
        mode = reference_mode()
        assert effective_temperature(mode, 0.0, 0.0) == pytest.approx(mode.T0)
        qdot = 2.0 * K_B * mode.T0 * mode.gamma
        assert effective_temperature(mode, qdot, 0.0) == pytest.approx(
            3.0 * mode.T0, rel=1e-12)

    def test_parametric_runaway_raises(self):
        mode = reference_mode()
        with pytest.raises(UnstableHeating):
            effective_temperature(mode, 0.0, 2.0 * mode.gamma)


class TestStandardQuantumLimit:
    def test_optimum_is_interior_and_matches_minimum(self):
        mode = OscillatorMode.from_frequency(5.6e-9, 212.0, 2.6e7, 0.0)
        circuit = quantum_limited_circuit()
        eta_star = optimal_eta(mode, circuit)
        floor = sql_minimum(mode, circuit)
        assert sql_psd(mode, circuit, eta_star, mode.omega0) == pytest.approx(
            floor, rel=1e-12)
        assert sql_psd(mode, circuit, 0.5 * eta_star, mode.omega0) > floor
        assert sql_psd(mode, circuit, 2.0 * eta_star, mode.omega0) > floor

    def test_cold_quantum_limited_floor_is_two_chi_hbar(self):
        mode = OscillatorMode.from_frequency(5.6e-9, 212.0, 2.6e7, 0.0)
        circuit = quantum_limited_circuit()
        chi = abs(susceptibility(mode, mode.omega0))
        assert sql_minimum(mode, circuit) == pytest.approx(2.0 * chi * HBAR,
                                                           rel=1e-9)


class TestColdDamping:
    # SQUID noise impedance pinned at 15 pH, coupling at 5.5e7 flux quanta
    # per meter, residual damping 1e-6 1/s at a 15 mK bath
    L_TILDE = 15e-12
    ETA = 5.5e7 * PHI0

    def _mode(self):
        omega0 = 2.0 * math.pi * 212.0
        return OscillatorMode(mass=5.6e-9, omega0=omega0, gamma=1e-6, T0=15e-3)

    def _circuit(self, l_tilde=None):
        s_pp = (5.2e-8 * PHI0) ** 2
        lt = self.L_TILDE if l_tilde is None else l_tilde
        return quantum_limited_circuit(S_JJ=s_pp / lt**2)

    def test_gain_formula(self):
        mode, circuit = self._mode(), self._circuit()
        gain = cold_damping_gain(mode, circuit, self.ETA)
        assert gain == pytest.approx(
            self.ETA**2 / (mode.mass * mode.omega0 * self.L_TILDE), rel=1e-9)
        assert gain > 10.0 * mode.gamma

    def test_thermal_occupation_below_five_percent(self):
        mode, circuit = self._mode(), self._circuit()
        n = feedback_phonon_number(mode, circuit, self.ETA)
        imprecision = 0.5 * (math.sqrt(circuit.S_phiphi * circuit.S_JJ) / HBAR
                             - 1.0)
        assert n - imprecision == pytest.approx(0.0128, rel=0.02)
        assert n - imprecision < 0.05

    def test_unit_occupation_boundary(self):
        # n < 1 exactly when sqrt(S_phiphi S_JJ) < 3 hbar (up to the small
        # thermal term); probe both sides of the boundary
        mode = self._mode()
        s_pp = (5.2e-8 * PHI0) ** 2
        below = SquidCircuit(L_S=15e-12, L_I=0.53e-6, L_W=100e-9, M=2.3e-9,
                             S_phiphi=s_pp, S_JJ=(2.9 * HBAR) ** 2 / s_pp)
        above = SquidCircuit(L_S=15e-12, L_I=0.53e-6, L_W=100e-9, M=2.3e-9,
                             S_phiphi=s_pp, S_JJ=(3.1 * HBAR) ** 2 / s_pp)
        assert feedback_phonon_number(mode, below, self.ETA) < 1.0
        assert feedback_phonon_number(mode, above, self.ETA) > 1.0

    def test_weak_feedback_warns(self):
        mode = OscillatorMode(mass=5.6e-9, omega0=2.0 * math.pi * 212.0,
                              gamma=50.0, T0=15e-3)
        with pytest.warns(UserWarning):
            feedback_phonon_number(mode, self._circuit(), self.ETA)


class TestResidualDamping:
    def test_helium_gas_rate(self):
        sphere = SphereParams(50e-6, 10.9e3)
        rate = gas_damping(sphere, 1e-4)
        assert rate == pytest.approx(2.62e-7, rel=0.01)
        # linear in pressure
        assert gas_damping(sphere, 2e-4) == pytest.approx(2.0 * rate, rel=1e-12)

    def test_gas_rejects_negative_pressure(self):
        with pytest.raises(ValueError):
            gas_damping(SphereParams(50e-6, 10.9e3), -1.0)

    def test_eddy_damping_scaling(self):
        base = eddy_damping(5.6e-9, 1e-7, 212.0, 1e-7)
        assert eddy_damping(5.6e-9, 2e-7, 212.0, 1e-7) == pytest.approx(
            4.0 * base, rel=1e-12)
        assert base == pytest.approx(
            (1e-7) ** 2 / (2 * math.pi * 5.6e-9 * 212.0 * 1e-7), rel=1e-12)


class TestCurrentFilter:
    KAPPA = 0.036  # 1/s

    def test_attenuation_at_200_hz(self):
        resp = rl_filter(self.KAPPA, 1.0, 200.0)
        assert isinstance(resp, FilterResponse)
        assert resp.cutoff_rate == pytest.approx(self.KAPPA)
        assert resp.amplitude_db == pytest.approx(-91.0, abs=0.5)
        assert resp.psd_db == pytest.approx(2.0 * resp.amplitude_db, rel=1e-12)

    def test_transfer_shape(self):
        resp = rl_filter(self.KAPPA, 1.0, 200.0)
        omega = 2.0 * math.pi * 200.0
        assert resp.amplitude_ratio == pytest.approx(
            self.KAPPA / math.hypot(self.KAPPA, omega), rel=1e-12)

    def test_step_response_exact(self):
        t = np.array([0.0, 1.0 / self.KAPPA, 5.0 / self.KAPPA])
        out = filter_step_response(self.KAPPA, 1.0, t)
        assert_allclose(out, 1.0 - np.exp(-np.array([0.0, 1.0, 5.0])),
                        rtol=1e-12)

    def test_rejects_nonpositive_parts(self):
        with pytest.raises(ValueError):
            rl_filter(0.0, 1.0, 200.0)
        with pytest.raises(ValueError):
            rl_filter(1.0, -1.0, 200.0)
