"""Force-sensing noise budget for a levitated-sphere mechanical mode.

Everything here treats one mode as a damped harmonic oscillator with
susceptibility

    chi(omega) = 1 / (m (omega0^2 - omega^2 - i gamma omega)),

one-sided PSDs in per-hertz units, and angular frequencies in rad/s unless
an argument name says Hz. Covered: thermal force noise and the measurement
noise added on top, noise-equivalent temperature with and without frequency
drift, seismic vibration feedthrough, trap-noise heating rates, the standard
quantum limit of the SQUID readout, cold-damping feedback performance, and
the small dissipation channels (residual gas, eddy currents) plus the RL
current filter that protects the trap from coil noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .constants import (
    GAS_DAMPING_BETA,
    HBAR,
    HELIUM_MOLECULE_MASS,
    K_B,
    STANDARD_GRAVITY,
)
from .errors import UnstableHeating
from .pickup import SquidCircuit
from .sphere import SphereParams

__all__ = [
    "SpectralDensity",
    "OscillatorMode",
    "susceptibility",
    "thermal_force_noise",
    "acceleration_noise",
    "force_sensitivity",
    "noise_equivalent_temperature",
    "drift_averaged_chi_squared",
    "drift_averaged_sensitivity",
    "drift_noise_equivalent_temperature",
    "vibration_displacement_psd",
    "vibration_rms",
    "vibration_effective_temperature",
    "heating_rates",
    "effective_temperature",
    "sql_psd",
    "optimal_eta",
    "sql_minimum",
    "cold_damping_gain",
    "feedback_phonon_number",
    "gas_damping",
    "eddy_damping",
    "FilterResponse",
    "rl_filter",
    "filter_step_response",
]


class SpectralDensity:
    """One-sided PSD, either white or tabulated over frequency.

    Tabulated curves are interpolated linearly in log-log space and clamped
    to the edge values outside the table. A white (constant) density is the
    degenerate one-point case and evaluates exactly.
    """

    def __init__(self, frequencies=None, values=None, constant=None):
        if constant is not None:
            if frequencies is not None or values is not None:
                raise ValueError("give either a constant or a table, not both")
            if constant < 0:
                raise ValueError("spectral density must be non-negative")
            self._constant = float(constant)
            self._logf = None
            self._logv = None
            return
        f = np.asarray(frequencies, dtype=float)
        v = np.asarray(values, dtype=float)
        if f.ndim != 1 or f.shape != v.shape or f.size == 0:
            raise ValueError("table needs matching 1-d frequency/value arrays")
        if f.size == 1:
            self._constant = float(v[0])
            self._logf = None
            self._logv = None
            return
        if np.any(np.diff(f) <= 0) or f[0] <= 0:
            raise ValueError("frequencies must be positive and increasing")
        if np.any(v <= 0):
            raise ValueError("tabulated densities must be positive for log interpolation")
        self._constant = None
        self._logf = np.log(f)
        self._logv = np.log(v)

    @classmethod
    def white(cls, value: float) -> "SpectralDensity":
        return cls(constant=value)

    @classmethod
    def from_table(cls, frequencies, values) -> "SpectralDensity":
        return cls(frequencies=frequencies, values=values)

    @property
    def is_white(self) -> bool:
        return self._constant is not None

    @property
    def level(self) -> float:
        if not self.is_white:
            raise ValueError("tabulated density has no single level")
        return self._constant

    def __call__(self, f_hz):
        if self.is_white:
            return (self._constant if np.isscalar(f_hz)
                    else np.full(np.shape(f_hz), self._constant))
        logq = np.log(np.clip(f_hz, np.exp(self._logf[0]), np.exp(self._logf[-1])))
        out = np.exp(np.interp(logq, self._logf, self._logv))
        return float(out) if np.isscalar(f_hz) else out


def _as_density(s) -> SpectralDensity:
    if isinstance(s, SpectralDensity):
        return s
    return SpectralDensity.white(float(s))


@dataclass(frozen=True)
class OscillatorMode:
    """One mechanical mode: mass, resonance, damping, bath temperature.

    Attributes
    ----------
    mass : float
        Mode mass [kg].
    omega0 : float
        Angular resonance frequency [rad/s].
    gamma : float
        Energy damping rate [1/s].
    T0 : float
        Bath temperature [K].
    """

    mass: float
    omega0: float
    gamma: float
    T0: float

    def __post_init__(self):
        if self.mass <= 0 or self.omega0 <= 0:
            raise ValueError("mass and omega0 must be positive")
        if self.gamma < 0 or self.T0 < 0:
            raise ValueError("gamma and T0 must be non-negative")

    @classmethod
    def from_frequency(cls, mass: float, f0: float, Q: float, T0: float) -> "OscillatorMode":
        omega0 = 2.0 * math.pi * f0
        return cls(mass=mass, omega0=omega0, gamma=omega0 / Q, T0=T0)

    @classmethod
    def from_sphere(cls, sphere: SphereParams, f0: float, Q: float,
                    T0: float) -> "OscillatorMode":
        return cls.from_frequency(sphere.mass, f0, Q, T0)

    @property
    def f0(self) -> float:
        return self.omega0 / (2.0 * math.pi)

    @property
    def Q(self) -> float:
        return self.omega0 / self.gamma


def susceptibility(mode: OscillatorMode, omega) -> complex:
    """Mechanical susceptibility chi(omega) [m/N]."""
    omega = np.asarray(omega, dtype=float)
    chi = 1.0 / (mode.mass * (mode.omega0**2 - omega**2 - 1j * mode.gamma * omega))
    return complex(chi) if chi.ndim == 0 else chi


def thermal_force_noise(mode: OscillatorMode) -> float:
    """Thermal force noise amplitude sqrt(4 k_B T0 m gamma) [N/sqrt(Hz)]."""
    return math.sqrt(4.0 * K_B * mode.T0 * mode.mass * mode.gamma)


def acceleration_noise(mode: OscillatorMode, in_g: bool = False) -> float:
    """Thermal acceleration noise floor [m s^-2/sqrt(Hz)], or in g units."""
    a = thermal_force_noise(mode) / mode.mass
    return a / STANDARD_GRAVITY if in_g else a


def force_sensitivity(mode: OscillatorMode, S_nn: float, omega: float = None) -> float:
    """Total force sensitivity sqrt(S_FF^th + |chi|^-2 S_nn) [N/sqrt(Hz)].

    ``S_nn`` is the displacement-referred measurement noise PSD [m^2/Hz];
    evaluated on resonance unless ``omega`` is given.
    """
    if omega is None:
        omega = mode.omega0
    chi = susceptibility(mode, omega)
    return math.sqrt(thermal_force_noise(mode)**2 + S_nn / abs(chi)**2)


def noise_equivalent_temperature(mode: OscillatorMode, S_nn: float) -> float:
    """Bath temperature that would produce the total on-resonance noise [K].

    ``T_n = T0 + |chi(omega0)|^-2 S_nn / (4 k_B m gamma)``.
    """
    chi0 = susceptibility(mode, mode.omega0)
    return mode.T0 + S_nn / (abs(chi0)**2 * 4.0 * K_B * mode.mass * mode.gamma)


def drift_averaged_chi_squared(mode: OscillatorMode, bin_width_hz: float) -> float:
    """Mean of |chi|^2 over a frequency bin containing the resonance.

    ``(1/df) Integral |chi(2 pi f)|^2 df`` over ``f0 +/- df/2`` by adaptive
    quadrature. Models a measurement whose resonance drifts across a bin of
    width ``bin_width_hz`` instead of sitting at a fixed f0: once the bin is
    much wider than the linewidth, the average falls off as gamma/df and the
    usable sensitivity degrades accordingly.
    """
    if bin_width_hz <= 0:
        raise ValueError("bin width must be positive")
    f0 = mode.f0
    lo = max(f0 - 0.5 * bin_width_hz, 0.0)
    hi = f0 + 0.5 * bin_width_hz

    def integrand(f):
        return np.abs(susceptibility(mode, 2.0 * math.pi * f))**2

    half_width = mode.gamma / (2.0 * math.pi)
    interior = [p for p in (f0 - half_width, f0, f0 + half_width) if lo < p < hi]
    total, _ = integrate.quad(integrand, lo, hi, points=interior, limit=400)
    return total / (hi - lo)


def drift_averaged_sensitivity(mode: OscillatorMode, S_nn: float,
                               bin_width_hz: float) -> float:
    """Force sensitivity with the drift-averaged susceptibility [N/sqrt(Hz)]."""
    chi2 = drift_averaged_chi_squared(mode, bin_width_hz)
    return math.sqrt(thermal_force_noise(mode)**2 + S_nn / chi2)


def drift_noise_equivalent_temperature(mode: OscillatorMode, S_nn: float,
                                       bin_width_hz: float) -> float:
    """Noise-equivalent temperature with drift-averaged susceptibility [K]."""
    chi2 = drift_averaged_chi_squared(mode, bin_width_hz)
    return mode.T0 + S_nn / (chi2 * 4.0 * K_B * mode.mass * mode.gamma)


# --- seismic vibration feedthrough ------------------------------------------

def vibration_displacement_psd(mode: OscillatorMode, S_epseps, omega):
    """Sphere displacement PSD driven by trap-center motion [m^2/Hz].

    ``S_xx = |chi|^2 m^2 omega0^4 S_epseps(omega)``, with ``S_epseps`` the
    one-sided PSD of the trap-center position noise (white value or
    :class:`SpectralDensity`, argument in Hz).
    """
    dens = _as_density(S_epseps)
    omega_arr = np.asarray(omega, dtype=float)
    s = dens(omega_arr / (2.0 * math.pi))
    chi2 = np.abs(susceptibility(mode, omega_arr))**2
    out = chi2 * mode.mass**2 * mode.omega0**4 * s
    return float(out) if out.ndim == 0 else out


def vibration_rms(mode: OscillatorMode, S_epseps) -> float:
    """Steady-state rms displacement under trap-center noise [m].

    From the energy balance E = Qdot_eps / gamma with ``<x^2> = E/(m omega0^2)``,
    giving ``<x^2> = omega0^2 S_epseps(omega0) / (4 gamma)``.
    """
    s0 = _as_density(S_epseps)(mode.f0)
    return math.sqrt(0.25 * mode.omega0**2 * s0 / mode.gamma)


def vibration_effective_temperature(mode: OscillatorMode, S_epseps) -> float:
    """Effective mode temperature under trap-center noise alone [K]."""
    qdot, _ = heating_rates(mode, S_epseps, 0.0)
    return qdot / (mode.gamma * K_B)


# --- trap-noise heating -------------------------------------------------------

def heating_rates(mode: OscillatorMode, S_epseps, S_deltadelta):
    """Heating from trap-center and fractional-spring-constant noise.

    Returns
    -------
    (qdot_eps, gamma_delta) : tuple of float
        Linear energy heating rate ``(1/4) m omega0^4 S_epseps(omega0)``
        [W] and parametric exponential rate
        ``(1/4) omega0^2 S_deltadelta(2 omega0)`` [1/s].
    """
    f0 = mode.f0
    qdot = 0.25 * mode.mass * mode.omega0**4 * _as_density(S_epseps)(f0)
    gamma_delta = 0.25 * mode.omega0**2 * _as_density(S_deltadelta)(2.0 * f0)
    return qdot, gamma_delta


def effective_temperature(mode: OscillatorMode, qdot_eps: float,
                          gamma_delta: float) -> float:
    """Steady-state mode temperature with heating against the bath [K].

    ``T_eff = (k_B T0 gamma + qdot_eps) / (k_B (gamma - gamma_delta))``.

    Raises
    ------
    UnstableHeating
        If the parametric rate meets or exceeds the damping rate.
    """
    if gamma_delta >= mode.gamma:
        raise UnstableHeating(
            f"parametric heating rate {gamma_delta:g} 1/s >= damping "
            f"{mode.gamma:g} 1/s: no steady state"
        )
    return (K_B * mode.T0 * mode.gamma + qdot_eps) / (K_B * (mode.gamma - gamma_delta))


# --- readout quantum limit ---------------------------------------------------

def sql_psd(mode: OscillatorMode, circuit: SquidCircuit, eta: float, omega):
    """Measured displacement PSD including back-action [m^2/Hz].

    ``S_zz = S_phiphi/eta^2 + |chi|^2 (S_FF^th + eta^2 S_JJ)``: imprecision
    falls and back-action grows with the coupling eta [Wb/m].
    """
    chi2 = np.abs(susceptibility(mode, omega))**2
    s_th = thermal_force_noise(mode)**2
    out = circuit.S_phiphi / eta**2 + chi2 * (s_th + eta**2 * circuit.S_JJ)
    return float(out) if np.ndim(out) == 0 else out


def optimal_eta(mode: OscillatorMode, circuit: SquidCircuit, omega: float = None) -> float:
    """Coupling that minimizes :func:`sql_psd` at one frequency [Wb/m].

    ``eta_opt^2 = sqrt(S_phiphi / S_JJ) / |chi|``.
    """
    if omega is None:
        omega = mode.omega0
    chi = abs(susceptibility(mode, omega))
    return (math.sqrt(circuit.S_phiphi / circuit.S_JJ) / chi) ** 0.5


def sql_minimum(mode: OscillatorMode, circuit: SquidCircuit, omega: float = None) -> float:
    """Minimum measured PSD over eta [m^2/Hz].

    ``2 |chi| sqrt(S_phiphi S_JJ) + |chi|^2 S_FF^th``; with a quantum-limited
    SQUID and a cold bath this is the standard quantum limit 2 |chi| hbar.
    """
    if omega is None:
        omega = mode.omega0
    chi = abs(susceptibility(mode, omega))
    s_th = thermal_force_noise(mode)**2
    return 2.0 * chi * math.sqrt(circuit.S_phiphi * circuit.S_JJ) + chi**2 * s_th


# --- cold damping ------------------------------------------------------------

def cold_damping_gain(mode: OscillatorMode, circuit: SquidCircuit, eta: float) -> float:
    """Optimal velocity-feedback damping rate Gamma [1/s].

    ``Gamma = eta^2 / (m omega0 L_tilde)`` with
    ``L_tilde = sqrt(S_phiphi / S_JJ)`` the SQUID noise impedance.
    """
    l_tilde = math.sqrt(circuit.S_phiphi / circuit.S_JJ)
    return eta**2 / (mode.mass * mode.omega0 * l_tilde)


def feedback_phonon_number(mode: OscillatorMode, circuit: SquidCircuit,
                           eta: float) -> float:
    """Mean phonon occupation under optimal cold damping.

    ``n = k_B T0 m gamma L_tilde / (hbar eta^2)
      + (sqrt(S_phiphi S_JJ)/hbar - 1) / 2``.

    The expression assumes the feedback dominates the intrinsic damping;
    a warning is emitted when Gamma < 10 gamma and the number is then only
    indicative.
    """
    gain = cold_damping_gain(mode, circuit, eta)
    if gain < 10.0 * mode.gamma:
        warnings.warn(
            "cold-damping gain is not large against the intrinsic damping; "
            "phonon-number formula assumes Gamma >> gamma",
            stacklevel=2,
        )
    l_tilde = math.sqrt(circuit.S_phiphi / circuit.S_JJ)
    thermal = K_B * mode.T0 * mode.mass * mode.gamma * l_tilde / (HBAR * eta**2)
    imprecision = 0.5 * (math.sqrt(circuit.S_phiphi * circuit.S_JJ) / HBAR - 1.0)
    return thermal + imprecision


# --- small dissipation channels ----------------------------------------------

def gas_damping(sphere: SphereParams, pressure: float, temperature: float = 300.0,
                molecule_mass: float = HELIUM_MOLECULE_MASS) -> float:
    """Free-molecular gas damping rate [1/s].

    ``gamma_P = beta P / (rho R v_bar)`` with the mean thermal speed
    ``v_bar = sqrt(8 k_B T / (pi m_molecule))``.
    """
    if pressure < 0:
        raise ValueError("pressure must be non-negative")
    v_bar = math.sqrt(8.0 * K_B * temperature / (math.pi * molecule_mass))
    return GAS_DAMPING_BETA * pressure / (sphere.density * sphere.radius * v_bar)


def eddy_damping(mass: float, flux_gradient: float, frequency: float,
                 loop_inductance: float) -> float:
    """Worst-case eddy-current damping through a lossy flux loop [1/s].

    ``gamma = (dPhi/dx)^2 / (2 pi m f L)`` for a resistive loop whose
    impedance at the mode frequency is dominated by ``2 pi f L``.
    """
    return flux_gradient**2 / (2.0 * math.pi * mass * frequency * loop_inductance)


# --- trap current filter -------------------------------------------------------

@dataclass(frozen=True)
class FilterResponse:
    """RL low-pass figures at one frequency.

    ``psd_db`` applies the same 20 log10 convention to the PSD ratio
    (amplitude ratio squared), so it is exactly twice ``amplitude_db``.
    """

    frequency_hz: float
    cutoff_rate: float
    amplitude_ratio: float
    amplitude_db: float
    psd_db: float


def rl_filter(R_C: float, L_C: float, frequency_hz: float) -> FilterResponse:
    """First-order RL current-noise filter response.

    The series resistance and coil inductance form a low-pass with corner
    rate ``kappa = R_C / L_C`` [1/s] and amplitude transfer
    ``kappa / sqrt(kappa^2 + omega^2)``.
    """
    if R_C <= 0 or L_C <= 0:
        raise ValueError("R_C and L_C must be positive")
    kappa = R_C / L_C
    omega = 2.0 * math.pi * frequency_hz
    ratio = kappa / math.hypot(kappa, omega)
    amp_db = 20.0 * math.log10(ratio)
    return FilterResponse(
        frequency_hz=frequency_hz,
        cutoff_rate=kappa,
        amplitude_ratio=ratio,
        amplitude_db=amp_db,
        psd_db=2.0 * amp_db,
    )


def filter_step_response(R_C: float, L_C: float, t):
    """Normalized current step response ``1 - exp(-kappa t)``."""
    kappa = R_C / L_C
    t = np.asarray(t, dtype=float)
    out = 1.0 - np.exp(-kappa * t)
    return float(out) if out.ndim == 0 else out
