"""Design and analysis tools for magnetically levitated superconducting spheres.

The package covers the chain from coil geometry to readout noise: static
quadrupole trap fields (ideal and from elliptical coil pairs), the exact
field response and force on a superconducting sphere in the Meissner state,
flux coupling into pickup coils and a SQUID, displacement noise budgets,
passive vibration isolation stacks, and stochastic time-domain simulation
of the trapped motion with optional feedback cooling.
"""

from .budget import (
    FilterResponse,
    OscillatorMode,
    SpectralDensity,
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
from .constants import constants_table
from .dynamics import (
    FeedbackConfig,
    HeatingValidation,
    LorentzianFit,
    RingdownFit,
    SimConfig,
    SimResult,
    TimeSeries,
    calibrate_coupling,
    heating_validation,
    lorentzian_fit,
    ringdown_q,
    simulate,
    welch_psd,
)
from .errors import (
    BandMismatch,
    BandTooNarrow,
    InfeasibleConstraint,
    InteriorPoint,
    LoopInsideSphere,
    LoopTooClose,
    NoDecay,
    NotAntiHelmholtz,
    OnResonance,
    PointOnFilament,
    ScenarioError,
    SingularMass,
    SquidlevError,
    UnstableHeating,
    UnstableIntegration,
    WireOverload,
    ZeroCoupling,
    ZeroFrequency,
)
from .fieldmodel import (
    CoilPair,
    GradientResult,
    QuadrupoleField,
    biot_savart_field,
    extract_gradients,
    quadrupole_fit_rms,
    quadrupole_rms_from_samples,
)
from .isolation import (
    IsolationStack,
    Stage,
    asymptotic_transfer,
    horizontal_pendulum_frequency,
    normal_modes,
    stage_spring_constant,
    transfer_function,
    yield_check,
)
from .pickup import (
    CoaxialCircle,
    PickupCoil,
    PickupOptimum,
    PolylineLoop,
    SquidCircuit,
    coil_coupling,
    coupling_nu_analytic,
    coupling_nu_numeric,
    eta_to_phi0_per_m,
    measurement_noise,
    optimize_pickup,
    response_flux,
    squid_coupling,
    wheeler_inductance,
)
from .sphere import (
    MultipoleSolution,
    SphereParams,
    force_analytic,
    force_stress_tensor,
    gravity_sag,
    response_field,
    solve_coefficients,
    total_field,
    trap_frequencies,
)

__version__ = "0.1.0"

__all__ = [
    "QuadrupoleField", "CoilPair", "GradientResult", "biot_savart_field",
    "extract_gradients", "quadrupole_fit_rms", "quadrupole_rms_from_samples",
    "SphereParams", "MultipoleSolution", "solve_coefficients",
    "response_field", "total_field", "force_analytic", "force_stress_tensor",
    "trap_frequencies", "gravity_sag",
    "CoaxialCircle", "PolylineLoop", "PickupCoil", "SquidCircuit",
    "coupling_nu_analytic", "coupling_nu_numeric", "coil_coupling",
    "response_flux", "squid_coupling", "eta_to_phi0_per_m",
    "wheeler_inductance", "measurement_noise", "PickupOptimum",
    "optimize_pickup",
    "SpectralDensity", "OscillatorMode", "susceptibility",
    "thermal_force_noise", "acceleration_noise", "force_sensitivity",
    "noise_equivalent_temperature", "drift_averaged_chi_squared",
    "drift_averaged_sensitivity",
    "drift_noise_equivalent_temperature", "vibration_displacement_psd",
    "vibration_rms", "vibration_effective_temperature", "heating_rates",
    "effective_temperature", "sql_psd", "optimal_eta", "sql_minimum",
    "cold_damping_gain", "feedback_phonon_number", "gas_damping",
    "eddy_damping", "FilterResponse", "rl_filter", "filter_step_response",
    "Stage", "IsolationStack", "stage_spring_constant", "normal_modes",
    "transfer_function", "asymptotic_transfer", "yield_check",
    "horizontal_pendulum_frequency",
    "TimeSeries", "FeedbackConfig", "SimConfig", "SimResult", "simulate",
    "welch_psd", "LorentzianFit", "lorentzian_fit", "RingdownFit",
    "ringdown_q", "calibrate_coupling", "HeatingValidation",
    "heating_validation",
    "constants_table",
    "SquidlevError", "ScenarioError", "PointOnFilament", "NotAntiHelmholtz",
    "InteriorPoint", "ZeroFrequency", "LoopInsideSphere", "LoopTooClose",
    "ZeroCoupling", "InfeasibleConstraint", "UnstableHeating", "OnResonance",
    "SingularMass", "WireOverload", "UnstableIntegration", "NoDecay",
    "BandTooNarrow", "BandMismatch",
]
