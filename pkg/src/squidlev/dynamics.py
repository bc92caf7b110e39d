"""Time-domain Langevin simulation of one trapped mode, plus estimators.

The equation of motion integrated here is

    m x'' = -m omega0^2 (1 + delta(t)) (x - eps(t)) - m gamma x'
            - m Gamma u(t) + F_th(t),

with trap-center noise eps, fractional spring noise delta, thermal force
F_th, and a velocity-feedback force built from the measured coordinate
y = x + n (n is the displacement-referred readout noise). The integrator is
semi-implicit (symplectic) Euler-Maruyama,

    v_{k+1} = v_k + dt * a_k,      x_{k+1} = x_k + dt * v_{k+1},

which for the linear, feedback-free case is evaluated through an exactly
equivalent IIR recursion for speed. White noise processes enter with
per-sample sigma = sqrt(S/(2 dt)) so their one-sided PSD is S exactly;
tabulated PSDs are synthesized by spectral shaping of white Gaussian draws.
Runs are reproducible: one seed, one documented draw order (thermal, trap
center, spring, readout), and parameter sweeps split seeds from a master
``numpy.random.SeedSequence``.

Estimator half: Welch spectra, Lorentzian peak fits, ringdown decay fits
with jump detection, rms-ratio coupling calibration, and an ensemble check
that the simulated heating rates reproduce the analytic ones.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .budget import OscillatorMode, SpectralDensity, heating_rates
from .constants import K_B
from .errors import BandMismatch, BandTooNarrow, NoDecay, UnstableIntegration

__all__ = [
    "TimeSeries",
    "FeedbackConfig",
    "SimConfig",
    "SimResult",
    "simulate",
    "welch_psd",
    "LorentzianFit",
    "lorentzian_fit",
    "RingdownFit",
    "ringdown_q",
    "calibrate_coupling",
    "HeatingValidation",
    "heating_validation",
]

# calibration uncertainty of the rms-ratio method (dominated by the
# absolute displacement reference)
CALIBRATION_FRACTIONAL_UNCERTAINTY = 0.13

MIN_SAMPLES_PER_CYCLE = 50


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled series: values plus the sampling step [s]."""

    dt: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def __len__(self):
        return len(self.values)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))

    @property
    def duration(self) -> float:
        return self.dt * len(self.values)


@dataclass(frozen=True)
class FeedbackConfig:
    """Velocity feedback applied to the measured coordinate.

    The measured y is bandpassed around ``center_hz`` (width ``width_hz``),
    differentiated, optionally rotated by ``phase`` radians at the center
    frequency, delayed by ``delay_samples`` (the loop latency, at least one
    sample), and applied as the force ``-m * gain * u``.
    """

    enabled: bool = False
    gain: float = 0.0
    center_hz: float = 0.0
    width_hz: float = 0.0
    phase: float = 0.0
    delay_samples: int = 1

    def __post_init__(self):
        if self.enabled:
            if self.center_hz <= 0 or self.width_hz <= 0:
                raise ValueError("feedback needs a positive bandpass center and width")
            if self.delay_samples < 1:
                raise ValueError("feedback latency is at least one sample")


@dataclass(frozen=True)
class SimConfig:
    """Everything one run needs; hashable into a reproducibility digest.

    ``S_epseps`` [m^2/Hz], ``S_deltadelta`` [1/Hz] and ``S_nn`` [m^2/Hz]
    accept white levels or :class:`SpectralDensity` tables.
    """

    mode: OscillatorMode
    dt: float
    duration: float
    seed: int
    S_epseps: object = 0.0
    S_deltadelta: object = 0.0
    S_nn: object = 0.0
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    initial: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.seed is None:
            raise ValueError("a seed is mandatory for reproducible runs")
        if self.dt <= 0 or self.duration <= 0:
            raise ValueError("dt and duration must be positive")
        max_dt = 1.0 / (MIN_SAMPLES_PER_CYCLE * self.mode.f0)
        if self.dt > max_dt * (1.0 + 1e-12):
            raise ValueError(
                f"dt = {self.dt:g} s undersamples the oscillation; need "
                f"dt <= {max_dt:g} s ({MIN_SAMPLES_PER_CYCLE} samples per cycle)"
            )

    @property
    def n_samples(self) -> int:
        return max(2, int(round(self.duration / self.dt)))

    def digest(self) -> str:
        """Stable hash of the physics configuration (excludes nothing)."""

        def dens(s):
            if isinstance(s, SpectralDensity):
                if s.is_white:
                    return s.level
                return "table"
            return float(s)

        payload = {
            "mass": self.mode.mass, "omega0": self.mode.omega0,
            "gamma": self.mode.gamma, "T0": self.mode.T0,
            "dt": self.dt, "duration": self.duration, "seed": self.seed,
            "S_epseps": dens(self.S_epseps), "S_deltadelta": dens(self.S_deltadelta),
            "S_nn": dens(self.S_nn),
            "feedback": [self.feedback.enabled, self.feedback.gain,
                         self.feedback.center_hz, self.feedback.width_hz,
                         self.feedback.phase, self.feedback.delay_samples],
            "initial": list(self.initial),
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class SimResult:
    """Simulated true position, velocity, and measured position."""

    x: TimeSeries
    v: TimeSeries
    y: TimeSeries
    config: SimConfig

    @property
    def energy(self) -> np.ndarray:
        """Instantaneous mode energy [J]."""
        m = self.config.mode
        return 0.5 * m.mass * (self.v.values**2 + m.omega0**2 * self.x.values**2)


def _white_sigma(level: float, dt: float) -> float:
    return math.sqrt(level / (2.0 * dt))


def _noise_array(psd, n: int, dt: float, rng) -> np.ndarray:
    """Draw one noise record with one-sided PSD ``psd``.

    White levels map draws directly (exact); tabulated densities shape a
    white record in the frequency domain.
    """
    if not isinstance(psd, SpectralDensity):
        level = float(psd)
        if level == 0.0:
            return np.zeros(n)
        return rng.standard_normal(n) * _white_sigma(level, dt)
    if psd.is_white:
        if psd.level == 0.0:
            return np.zeros(n)
        return rng.standard_normal(n) * _white_sigma(psd.level, dt)
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, dt)
    f[0] = f[1] if n > 1 else 1.0  # avoid 0 Hz lookup; DC shaped like first bin
    gain = np.sqrt(psd(f) / (2.0 * dt))
    return np.fft.irfft(spectrum * gain, n)


def _is_zero(psd) -> bool:
    if isinstance(psd, SpectralDensity):
        return psd.is_white and psd.level == 0.0
    return float(psd) == 0.0


def _fast_path(config: SimConfig, accel: np.ndarray) -> tuple:
    """Linear, feedback-free integration via the equivalent IIR recursion."""
    mode = config.mode
    dt = config.dt
    n = config.n_samples
    x0, v0 = config.initial
    c1 = 2.0 - mode.gamma * dt - mode.omega0**2 * dt**2
    c0 = 1.0 - mode.gamma * dt
    a = [1.0, -c1, c0]
    b = [dt**2]
    # virtual sample x_{-1} = x0 - dt v0 reproduces the loop start exactly
    zi = signal.lfiltic(b, a, [x0, x0 - dt * v0])
    tail, _ = signal.lfilter(b, a, accel[:n - 1], zi=zi)
    x = np.empty(n)
    x[0] = x0
    x[1:] = tail
    v = np.empty(n)
    v[0] = v0
    v[1:] = np.diff(x) / dt
    return x, v


def _loop_path(config: SimConfig, accel, eps, delta, meas_noise,
               guard_e: float) -> tuple:
    """Step-by-step integration with feedback and/or parametric noise."""
    mode = config.mode
    fb = config.feedback
    dt = config.dt
    n = config.n_samples
    w02 = mode.omega0**2

    x = np.empty(n)
    v = np.empty(n)
    x[0], v[0] = config.initial

    use_fb = fb.enabled and fb.gain != 0.0
    if use_fb:
        fs = 1.0 / dt
        lo = max(fb.center_hz - 0.5 * fb.width_hz, 1e-6 * fs)
        hi = min(fb.center_hz + 0.5 * fb.width_hz, 0.49 * fs)
        sos = signal.butter(2, [lo, hi], btype="bandpass", fs=fs, output="sos")
        zbp = np.zeros((sos.shape[0], 2))
        omega_c = 2.0 * math.pi * fb.center_hz
        cos_p, sin_p = math.cos(fb.phase), math.sin(fb.phase)
        delay = fb.delay_samples
        u_hist = np.zeros(n)
        bp_prev = 0.0

    check_every = 4096

    for k in range(n - 1):
        u = 0.0
        if use_fb:
            yk = x[k] + meas_noise[k]
            out = yk
            for s in range(sos.shape[0]):
                b0, b1, b2, a0, a1, a2 = sos[s]
                w = out - a1 * zbp[s, 0] - a2 * zbp[s, 1]
                out = b0 * w + b1 * zbp[s, 0] + b2 * zbp[s, 1]
                zbp[s, 1] = zbp[s, 0]
                zbp[s, 0] = w
            deriv = (out - bp_prev) / dt
            u_hist[k] = cos_p * deriv - sin_p * omega_c * out
            bp_prev = out
            if k >= delay:
                u = u_hist[k - delay]
        a_k = (-w02 * (1.0 + delta[k]) * (x[k] - eps[k])
               - mode.gamma * v[k] - fb.gain * u + accel[k])
        v[k + 1] = v[k] + dt * a_k
        x[k + 1] = x[k] + dt * v[k + 1]
        if (k + 1) % check_every == 0:
            e = 0.5 * mode.mass * (v[k + 1]**2 + w02 * x[k + 1]**2)
            # written so that NaN (overflow debris) also trips the guard
            if not e <= guard_e:
                raise UnstableIntegration(
                    f"energy {e:g} J exceeded 1e6 x the analytic prediction "
                    f"at t = {(k + 1) * dt:g} s"
                )
    return x, v


def simulate(config: SimConfig) -> SimResult:
    """Integrate one trajectory; identical config and seed replay bit-exact.

    Returns
    -------
    SimResult
        True position x, velocity v, and measured position y = x + n, each
        as a :class:`TimeSeries` carrying seed and config digest metadata.

    Raises
    ------
    UnstableIntegration
        If the energy runs away beyond 1e6 times the analytic expectation.
    """
    mode = config.mode
    n = config.n_samples
    dt = config.dt
    rng = np.random.default_rng(config.seed)

    # documented draw order: thermal force, trap center, spring, readout
    s_ff = 4.0 * K_B * mode.T0 * mode.mass * mode.gamma
    accel = _noise_array(s_ff, n, dt, rng) / mode.mass if s_ff else np.zeros(n)
    eps = _noise_array(config.S_epseps, n, dt, rng)
    delta = _noise_array(config.S_deltadelta, n, dt, rng)
    meas = _noise_array(config.S_nn, n, dt, rng)

    # analytic energy expectation for the runaway guard
    x0, v0 = config.initial
    e_init = 0.5 * mode.mass * (v0**2 + mode.omega0**2 * x0**2)
    qdot, gdelta = heating_rates(mode, config.S_epseps, config.S_deltadelta)
    e_pred = (K_B * mode.T0 + e_init + qdot * config.duration
              + 0.25 * s_ff * config.duration / mode.mass)
    if gdelta > 0.0:
        e_pred *= math.exp(min(gdelta * config.duration, 50.0))
    guard = 1e6 * max(e_pred, 1e-300)

    needs_loop = config.feedback.enabled or not _is_zero(config.S_deltadelta)
    if needs_loop:
        x, v = _loop_path(config, accel, eps, delta, meas, guard)
    else:
        forcing = mode.omega0**2 * eps + accel
        x, v = _fast_path(config, forcing)
        e_final = 0.5 * mode.mass * np.max(v**2 + mode.omega0**2 * x**2)
        if not e_final <= guard:
            raise UnstableIntegration(
                f"energy {e_final:g} J exceeded 1e6 x the analytic prediction"
            )

    meta = {"seed": config.seed, "digest": config.digest(), "dt": dt}
    return SimResult(
        x=TimeSeries(dt, x, dict(meta, channel="x")),
        v=TimeSeries(dt, v, dict(meta, channel="v")),
        y=TimeSeries(dt, x + meas, dict(meta, channel="y_meas")),
        config=config,
    )


# --- spectral estimation -----------------------------------------------------

def welch_psd(series: TimeSeries, nperseg: int = None, overlap: float = 0.5,
              window: str = "hann", detrend="constant"):
    """One-sided Welch PSD of a series.

    Returns ``(f_hz, psd)`` with density scaling, so the integral of the
    PSD over frequency reproduces the series variance (Parseval).
    """
    x = series.values
    if nperseg is None:
        nperseg = min(len(x), max(256, 2 ** int(math.log2(max(len(x) // 8, 1)))))
    nperseg = min(nperseg, len(x))
    noverlap = int(overlap * nperseg)
    f, psd = signal.welch(x, fs=1.0 / series.dt, window=window,
                          nperseg=nperseg, noverlap=noverlap,
                          detrend=detrend, scaling="density")
    return f, psd


@dataclass(frozen=True)
class LorentzianFit:
    """Result of :func:`lorentzian_fit`.

    ``gamma`` is the energy damping rate [1/s] (linewidth ``gamma/2pi`` Hz);
    ``area`` the integrated peak power above background [units of x^2];
    ``resolution_limited`` flags fits narrower than twice the bin spacing,
    where the true linewidth is not resolved.
    """

    f0: float
    gamma: float
    amplitude: float
    background: float
    area: float
    resolution_limited: bool

    def model(self, f):
        f = np.asarray(f, dtype=float)
        g = self.gamma / (2.0 * math.pi)
        return (self.amplitude / ((self.f0**2 - f**2)**2 + (g * f)**2)
                + self.background)


def lorentzian_fit(f, psd, band: tuple = None) -> LorentzianFit:
    """Fit a damped-oscillator peak plus flat background to a PSD.

    The model is ``a / ((f0^2 - f^2)^2 + (Gamma f)^2) + bg`` (the shape of
    ``|chi|^2``), fitted by bounded nonlinear least squares on relative
    residuals.

    Parameters
    ----------
    f, psd : ndarray
        One-sided spectrum, equally spaced in f.
    band : (float, float), optional
        Restrict the fit to this frequency window [Hz].

    Raises
    ------
    BandTooNarrow
        If fewer than 8 bins survive the band selection.
    """
    f = np.asarray(f, dtype=float)
    psd = np.asarray(psd, dtype=float)
    if band is not None:
        keep = (f >= band[0]) & (f <= band[1])
        f, psd = f[keep], psd[keep]
    keep = f > 0
    f, psd = f[keep], psd[keep]
    if len(f) < 8:
        raise BandTooNarrow(f"only {len(f)} bins in the fit band")
    df = float(np.median(np.diff(f)))

    i_pk = int(np.argmax(psd))
    f_pk = f[i_pk]
    bg0 = max(float(np.median(psd)), 1e-300)
    height = max(psd[i_pk] - bg0, bg0)
    # half-power width estimate in Hz
    above = psd > bg0 + 0.5 * height
    width0 = max(df, np.count_nonzero(above) * df / 2.0)
    a0 = height * (width0 * f_pk)**2

    def residuals(p):
        lf0, lgam, la, lbg = p
        model = (math.exp(la) / ((math.exp(2 * lf0) - f**2)**2
                                 + (math.exp(lgam) * f)**2) + math.exp(lbg))
        return (model - psd) / psd

    p0 = [math.log(f_pk), math.log(width0), math.log(a0), math.log(bg0)]
    sol = optimize.least_squares(residuals, p0, method="lm", max_nfev=20000)
    lf0, lgam, la, lbg = sol.x
    f0 = math.exp(lf0)
    width_hz = math.exp(lgam)
    a = math.exp(la)
    bg = math.exp(lbg)
    return LorentzianFit(
        f0=f0,
        gamma=2.0 * math.pi * width_hz,
        amplitude=a,
        background=bg,
        area=a * math.pi / (2.0 * width_hz * f0**2),
        resolution_limited=bool(width_hz < 2.0 * df),
    )


# --- ringdown ---------------------------------------------------------------

@dataclass(frozen=True)
class RingdownFit:
    """Exponential amplitude-decay fit.

    ``gamma`` is the energy decay rate (amplitude falls at gamma/2).
    When a rate change is detected mid-record, ``jump_detected`` is set and
    ``segments`` holds ``(t_split, gamma_before, gamma_after)``.
    """

    f0: float
    gamma: float
    Q: float
    residual: float
    jump_detected: bool = False
    segments: tuple = None


def _envelope(series: TimeSeries, f0: float):
    """Demodulated amplitude envelope and refined frequency."""
    t = series.t
    z = series.values * np.exp(-2j * math.pi * f0 * t)
    n_cycle = max(int(round(4.0 / (f0 * series.dt))), 8)
    kernel = np.ones(n_cycle) / n_cycle
    zf = np.convolve(z, kernel, mode="valid")
    tf = t[: len(zf)] + 0.5 * n_cycle * series.dt
    # residual phase slope corrects the demodulation frequency
    phase = np.unwrap(np.angle(zf))
    slope = np.polyfit(tf, phase, 1)[0]
    return tf, 2.0 * np.abs(zf), f0 + slope / (2.0 * math.pi)


def ringdown_q(series: TimeSeries, f0_guess: float = None) -> RingdownFit:
    """Fit an exponential ringdown and report Q = omega0 / gamma.

    Demodulates at the (refined) resonance, fits the log envelope by least
    squares, and scans for a single rate change; a two-segment fit that
    clearly beats the global one flags a jump.

    Raises
    ------
    NoDecay
        If the fitted envelope does not decay.
    """
    if f0_guess is None:
        f, psd = welch_psd(series)
        f0_guess = float(f[np.argmax(psd * (f > 0))])
    tf, env, f_ref = _envelope(series, f0_guess)
    tf, env, f_ref = _envelope(series, f_ref)

    good = env > 0
    tf, env = tf[good], env[good]
    if len(tf) < 16:
        raise NoDecay("record too short for an envelope fit")
    log_env = np.log(env)

    def linfit(ts, ys):
        coef = np.polyfit(ts, ys, 1)
        res = ys - np.polyval(coef, ts)
        return coef[0], float(np.sum(res**2))

    slope, sse1 = linfit(tf, log_env)
    if slope >= 0:
        raise NoDecay("envelope is not decaying")
    gamma = -2.0 * slope
    residual = math.sqrt(sse1 / len(tf))

    # single-breakpoint scan
    jump = False
    segments = None
    n = len(tf)
    best = (sse1, None)
    for frac in np.linspace(0.2, 0.8, 25):
        i = int(frac * n)
        s1, e1 = linfit(tf[:i], log_env[:i])
        s2, e2 = linfit(tf[i:], log_env[i:])
        if e1 + e2 < best[0]:
            best = (e1 + e2, (i, s1, s2))
    if best[1] is not None and best[0] < 0.5 * sse1:
        i, s1, s2 = best[1]
        g1, g2 = -2.0 * s1, -2.0 * s2
        if abs(g1 - g2) > 0.25 * max(abs(g1), abs(g2)):
            jump = True
            segments = (float(tf[i]), g1, g2)

    return RingdownFit(
        f0=f_ref,
        gamma=gamma,
        Q=2.0 * math.pi * f_ref / gamma,
        residual=residual,
        jump_detected=jump,
        segments=segments,
    )


# --- calibration --------------------------------------------------------------

def calibrate_coupling(flux: TimeSeries, displacement: TimeSeries,
                       band: tuple) -> tuple:
    """Coupling from the rms ratio of band-limited flux and displacement.

    Both series are bandpassed (FFT mask over ``band`` Hz) and the coupling
    is ``rms(flux)/rms(displacement)``; the returned uncertainty is the
    13 percent systematic of the displacement reference.

    Returns
    -------
    (eta, sigma_eta) : tuple of float

    Raises
    ------
    BandMismatch
        If either channel shows no band power above its off-band floor.
    """
    if len(flux) != len(displacement) or flux.dt != displacement.dt:
        raise ValueError("flux and displacement series must share a timebase")
    lo, hi = band
    if not 0 <= lo < hi:
        raise ValueError("band must satisfy 0 <= lo < hi")

    def bandpass_and_power(series):
        spectrum = np.fft.rfft(series.values - np.mean(series.values))
        f = np.fft.rfftfreq(len(series), series.dt)
        inside = (f >= lo) & (f <= hi)
        if np.count_nonzero(inside) < 4:
            raise BandTooNarrow("fewer than 4 FFT bins inside the calibration band")
        power = np.abs(spectrum)**2
        in_band = float(np.mean(power[inside]))
        out_band = float(np.median(power[~inside & (f > 0)]))
        filtered = np.fft.irfft(np.where(inside, spectrum, 0.0), len(series))
        return filtered, in_band, out_band

    flux_bp, flux_in, flux_out = bandpass_and_power(flux)
    disp_bp, disp_in, disp_out = bandpass_and_power(displacement)
    if flux_in < 5.0 * flux_out or disp_in < 5.0 * disp_out:
        raise BandMismatch("band power does not stand above the off-band floor")

    eta = float(np.sqrt(np.mean(flux_bp**2) / np.mean(disp_bp**2)))
    return eta, CALIBRATION_FRACTIONAL_UNCERTAINTY * eta


# --- heating-rate validation ---------------------------------------------------

@dataclass(frozen=True)
class HeatingValidation:
    """Measured vs predicted heating rates from simulation ensembles."""

    qdot_eps_measured: float
    qdot_eps_predicted: float
    gamma_delta_measured: float
    gamma_delta_predicted: float

    @property
    def qdot_ratio(self) -> float:
        return self.qdot_eps_measured / self.qdot_eps_predicted

    @property
    def gamma_delta_ratio(self) -> float:
        return self.gamma_delta_measured / self.gamma_delta_predicted


def heating_validation(mode: OscillatorMode, S_epseps: float, S_deltadelta: float,
                       dt: float, duration: float, n_runs: int = 100,
                       seed: int = 0) -> HeatingValidation:
    """Check the analytic heating rates against simulation ensembles.

    Runs an undamped ensemble with trap-center noise only (linear energy
    growth -> qdot) and one with spring noise only from a displaced start
    (exponential growth -> gamma_delta), both on seeds spawned from
    ``seed``.
    """
    base = OscillatorMode(mass=mode.mass, omega0=mode.omega0, gamma=0.0, T0=0.0)
    pred_q, _ = heating_rates(base, S_epseps, 0.0)
    _, pred_g = heating_rates(base, 0.0, S_deltadelta)
    seeds = np.random.SeedSequence(seed).spawn(2 * n_runs)

    def mean_energy(configs):
        acc = None
        for cfg in configs:
            e = simulate(cfg).energy
            acc = e if acc is None else acc + e
        return acc / len(configs)

    cfgs = [SimConfig(mode=base, dt=dt, duration=duration,
                      seed=int(s.generate_state(1)[0]), S_epseps=S_epseps)
            for s in seeds[:n_runs]]
    e_mean = mean_energy(cfgs)
    t = dt * np.arange(len(e_mean))
    qdot_meas = float(np.polyfit(t, e_mean, 1)[0])

    x_start = 1e-9
    cfgs = [SimConfig(mode=base, dt=dt, duration=duration,
                      seed=int(s.generate_state(1)[0]),
                      S_deltadelta=S_deltadelta, initial=(x_start, 0.0))
            for s in seeds[n_runs:]]
    e_mean = mean_energy(cfgs)
    gamma_meas = float(np.polyfit(t, np.log(e_mean), 1)[0])

    return HeatingValidation(
        qdot_eps_measured=qdot_meas,
        qdot_eps_predicted=pred_q,
        gamma_delta_measured=gamma_meas,
        gamma_delta_predicted=pred_g,
    )
