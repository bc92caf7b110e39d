"""Command-line front end.

Every command reads a scenario file, computes with the library, and writes
its results twice into the output directory: a CSV table and a JSON report
(`<command>.csv`, `<command>.json`), plus PNG figures where a picture helps.
Exit codes: 0 success, 1 scenario or usage error (the message names the
offending key), 2 numerical failure raised by a core module.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, plots
from .budget import (
    OscillatorMode,
    acceleration_noise,
    effective_temperature,
    filter_step_response,
    force_sensitivity,
    heating_rates,
    noise_equivalent_temperature,
    rl_filter,
    thermal_force_noise,
    vibration_effective_temperature,
    vibration_rms,
)
from .constants import constants_table
from .dynamics import (
    FeedbackConfig,
    SimConfig,
    TimeSeries,
    lorentzian_fit,
    ringdown_q,
    simulate,
    welch_psd,
)
from .errors import ScenarioError, SquidlevError
from .fieldmodel import extract_gradients
from .pickup import (
    coil_coupling,
    coupling_nu_analytic,
    eta_to_phi0_per_m,
    measurement_noise,
    optimize_pickup,
    squid_coupling,
    wheeler_inductance,
)
from .report import (
    read_timeseries_csv,
    write_csv,
    write_report,
    write_timeseries_csv,
)
from .scenario import Scenario, load_scenario
from .sphere import gravity_sag, trap_frequencies

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_NUMERICAL = 2


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> Scenario:
    if not args.scenario:
        raise ScenarioError("this command needs --scenario PATH")
    return load_scenario(args.scenario)


def _emit(args, command: str, inputs: dict, results: dict, columns, rows,
          tables: dict = None, figures: list = None) -> None:
    """Write the dual CSV + JSON pair and echo one of them to stdout."""
    out = _out_dir(args)
    meta = {"command": command, "version": __version__}
    csv_path = write_csv(out / f"{command}.csv", columns, rows, meta)
    all_tables = {command: (list(columns), [list(r) for r in rows])}
    if tables:
        all_tables.update(tables)
    json_path = write_report(out / f"{command}.json", command, __version__,
                             inputs, results, all_tables,
                             [Path(f).name for f in figures or []])
    if args.format == "json":
        sys.stdout.write(json_path.read_text())
    else:
        sys.stdout.write(csv_path.read_text())


def _scenario_inputs(args, scenario: Scenario, **extra) -> dict:
    inputs = {"scenario": scenario.source}
    inputs.update(extra)
    return inputs


def _quad_from(scenario: Scenario):
    if scenario.quad is not None:
        return scenario.quad, None
    if scenario.coils is not None:
        result = extract_gradients(scenario.coils)
        return result.field, result
    raise ScenarioError("this command needs `field.gradients` or `field.coils`")


# --- commands ----------------------------------------------------------------

def cmd_frequencies(args) -> int:
    scenario = _load(args)
    scenario.require("sphere")
    quad, grad_fit = _quad_from(scenario)
    freqs = trap_frequencies(quad, scenario.sphere.density)
    sag = gravity_sag(freqs[2])
    rows = [["x", quad.b_x, freqs[0]],
            ["y", quad.b_y, freqs[1]],
            ["z", quad.b_z, freqs[2]]]
    results = {
        "f_x_Hz": freqs[0], "f_y_Hz": freqs[1], "f_z_Hz": freqs[2],
        "gravity_sag_m": sag,
        "density_kg_per_m3": scenario.sphere.density,
    }
    if grad_fit is not None:
        results["gradient_trace_residual_T_per_m"] = grad_fit.trace_residual
    _emit(args, "frequencies", _scenario_inputs(args, scenario), results,
          ["axis", "gradient_T_per_m", "frequency_Hz"], rows)
    return EXIT_OK


def cmd_coupling(args) -> int:
    scenario = _load(args)
    scenario.require("sphere", "pickup")
    quad, _ = _quad_from(scenario)
    sphere = scenario.sphere
    coil = scenario.pickup

    nu = coil_coupling(quad, sphere, coil)
    results = {"nu_Wb_per_m": nu, "nu_Phi0_per_m": eta_to_phi0_per_m(nu),
               "turns": coil.turns, "z_m": coil.z}
    if scenario.circuit is not None:
        L_P = scenario.circuit.L_P
        if L_P is None:
            L_P = wheeler_inductance(coil)
        eta = squid_coupling(nu, scenario.circuit, L_P)
        s_nn = measurement_noise(nu, coil, scenario.circuit)
        results.update({
            "L_P_H": L_P,
            "eta_Wb_per_m": eta,
            "eta_Phi0_per_m": eta_to_phi0_per_m(eta),
            "S_nn_m2_per_Hz": s_nn,
            "sqrt_S_nn_m_per_sqrtHz": math.sqrt(s_nn),
        })

    # standoff sweep for the figure and table, single-turn equivalent
    z_lo = max(coil.z / 4.0, sphere.radius * 1.05)
    z_values = np.linspace(z_lo, coil.z + 3.0 * sphere.radius, 60)
    nu_sweep = [coupling_nu_analytic(quad.b_z, sphere.radius,
                                     float(np.mean(coil.turn_radii)), z)
                for z in z_values]
    rows = [[z, nu] for z, nu in zip(z_values, nu_sweep)]
    out = _out_dir(args)
    fig = plots.coupling_figure(z_values, nu_sweep,
                                out / "coupling_vs_standoff.png",
                                z_mark=coil.z)
    _emit(args, "coupling", _scenario_inputs(args, scenario), results,
          ["z_m", "nu_per_turn_Wb_per_m"], rows, figures=[fig])
    return EXIT_OK


def cmd_optimize_pickup(args) -> int:
    scenario = _load(args)
    scenario.require("sphere", "pickup", "readout")
    quad, _ = _quad_from(scenario)
    coil = scenario.pickup

    best = optimize_pickup(
        scenario.sphere, quad.b_z, scenario.circuit,
        wire_width=coil.wire_width, wire_spacing=coil.wire_spacing,
        spacing_convention=coil.spacing_convention,
    )
    doc = best.to_dict()
    results = {**doc["optimum"], **doc["objective"]}

    # objective against turn count at the winning footprint
    from .pickup import PickupCoil

    turns = np.arange(1, max(2 * best.coil.turns, 40))
    sqrt_snn = []
    for n in turns:
        trial = PickupCoil(best.coil.inner_radius, int(n), coil.wire_width,
                           coil.wire_spacing, best.coil.z,
                           spacing_convention=coil.spacing_convention)
        nu = coil_coupling(quad, scenario.sphere, trial)
        sqrt_snn.append(math.sqrt(
            measurement_noise(nu, trial, scenario.circuit)))
    rows = [[int(n), s] for n, s in zip(turns, sqrt_snn)]
    out = _out_dir(args)
    fig = plots.pickup_optimum_figure(turns, sqrt_snn, best.coil.turns,
                                      out / "pickup_objective.png")
    _emit(args, "optimize-pickup",
          _scenario_inputs(args, scenario, **doc["inputs"]), results,
          ["turns", "sqrt_S_nn_m_per_sqrtHz"], rows, figures=[fig])
    return EXIT_OK


def cmd_isolation(args) -> int:
    from .isolation import normal_modes, transfer_function, yield_check

    scenario = _load(args)
    scenario.require("isolation")
    stack = scenario.stack
    modes = normal_modes(stack)
    margins = yield_check(stack, scenario.payload)

    freqs = np.geomspace(0.5, 1000.0, 1200)
    trans = transfer_function(stack, freqs)
    rows = [[f, t] for f, t in zip(freqs, trans)]
    t200 = float(transfer_function(stack, np.array([200.0]))[0])

    results = {
        "stage_frequencies_Hz": list(stack.stage_frequencies),
        "normal_modes_Hz": list(modes),
        "transmissibility_200Hz": t200,
        "dc_transmissibility": float(transfer_function(stack, np.array([0.0]))[0]),
        "wire_load_fractions": list(margins),
    }
    out = _out_dir(args)
    fig = plots.transmissibility_figure(freqs, trans, modes,
                                        out / "transmissibility.png")
    mode_table = (["mode", "frequency_Hz"],
                  [[i + 1, f] for i, f in enumerate(modes)])
    _emit(args, "isolation", _scenario_inputs(args, scenario), results,
          ["frequency_Hz", "transmissibility"], rows,
          tables={"normal_modes": mode_table}, figures=[fig])
    return EXIT_OK


def cmd_budget(args) -> int:
    scenario = _load(args)
    scenario.require("mode", "noise")
    mode = scenario.mode
    noise = scenario.noise
    if "S_nn" not in noise:
        raise ScenarioError("the budget command needs `noise.S_nn`")
    s_nn_entry = noise["S_nn"]
    s_nn = s_nn_entry(mode.f0) if callable(s_nn_entry) else float(s_nn_entry)

    thermal = thermal_force_noise(mode)
    total_res = force_sensitivity(mode, s_nn)
    accel = acceleration_noise(mode, in_g=True)
    t_n = noise_equivalent_temperature(mode, s_nn)

    results = {
        "mass_kg": mode.mass, "f0_Hz": mode.f0, "Q": mode.Q, "T0_K": mode.T0,
        "S_nn_m2_per_Hz": s_nn,
        "thermal_force_N_per_sqrtHz": thermal,
        "total_force_on_resonance_N_per_sqrtHz": total_res,
        "acceleration_g_per_sqrtHz": accel,
        "noise_equivalent_temperature_K": t_n,
    }
    qdot, gdelta = heating_rates(mode, noise.get("S_epseps", 0.0),
                                 noise.get("S_deltadelta", 0.0))
    results["heating_rate_W"] = qdot
    results["parametric_rate_1_per_s"] = gdelta
    if gdelta < mode.gamma:
        results["effective_temperature_K"] = effective_temperature(
            mode, qdot, gdelta)
    if "S_epseps" in noise:
        results["vibration_rms_m"] = vibration_rms(mode, noise["S_epseps"])
        results["vibration_temperature_K"] = vibration_effective_temperature(
            mode, noise["S_epseps"])

    freqs = np.geomspace(mode.f0 / 30.0, mode.f0 * 30.0, 400)
    omega = 2.0 * math.pi * freqs
    total_curve = np.array([force_sensitivity(mode, s_nn, w) for w in omega])
    curves = {
        "thermal": np.full_like(freqs, thermal),
        "total": total_curve,
        "imprecision": np.sqrt(total_curve**2 - thermal**2),
    }
    rows = [[f, tot, thermal] for f, tot in zip(freqs, total_curve)]
    out = _out_dir(args)
    fig = plots.budget_figure(freqs, curves, out / "force_budget.png",
                              f0=mode.f0)
    _emit(args, "budget", _scenario_inputs(args, scenario), results,
          ["frequency_Hz", "total_force_N_per_sqrtHz",
           "thermal_force_N_per_sqrtHz"], rows, figures=[fig])
    return EXIT_OK


def cmd_filter(args) -> int:
    scenario = _load(args)
    scenario.require("filter")
    kappa = scenario.filter_kappa
    # response is a function of kappa alone; report per-frequency numbers
    freqs = np.geomspace(1e-3, 1e3, 600)
    resp = [rl_filter(kappa, 1.0, f) for f in freqs]
    at200 = rl_filter(kappa, 1.0, 200.0)
    t = np.linspace(0.0, 5.0 / kappa, 200)
    step = filter_step_response(kappa, 1.0, t)

    results = {
        "kappa_1_per_s": kappa,
        "amplitude_dB_200Hz": at200.amplitude_db,
        "psd_dB_200Hz": at200.psd_db,
        "time_constant_s": 1.0 / kappa,
    }
    rows = [[f, r.amplitude_ratio, r.amplitude_db, r.psd_db]
            for f, r in zip(freqs, resp)]
    out = _out_dir(args)
    fig = plots.filter_figure(freqs, [r.amplitude_ratio for r in resp], kappa,
                              out / "filter_response.png")
    step_table = (["t_s", "response"], [[tv, sv] for tv, sv in zip(t, step)])
    _emit(args, "filter", _scenario_inputs(args, scenario), results,
          ["frequency_Hz", "amplitude_ratio", "amplitude_dB", "psd_dB"], rows,
          tables={"step_response": step_table}, figures=[fig])
    return EXIT_OK


def _sim_config(scenario: Scenario, seed_override=None) -> SimConfig:
    scenario.require("mode")
    if scenario.sim is None:
        raise ScenarioError("this command needs the `simulate` section")
    sim = dict(scenario.sim)
    fb = sim.pop("feedback", None)
    feedback = FeedbackConfig(**fb) if fb else FeedbackConfig()
    noise = scenario.noise or {}
    seed = seed_override if seed_override is not None else sim.get("seed")
    if seed is None:
        raise ScenarioError("set `simulate.seed` or pass --seed")
    return SimConfig(
        mode=scenario.mode,
        dt=sim["dt"],
        duration=sim["duration"],
        seed=int(seed),
        S_epseps=noise.get("S_epseps", 0.0),
        S_deltadelta=noise.get("S_deltadelta", 0.0),
        S_nn=noise.get("S_nn", 0.0),
        feedback=feedback,
        initial=sim.get("initial", (0.0, 0.0)),
    )


def _run_one_sweep(payload):
    """Worker for simulate --sweep: returns summary statistics only."""
    scenario_path, seed = payload
    scenario = load_scenario(scenario_path)
    config = _sim_config(scenario, seed_override=seed)
    result = simulate(config)
    x = result.x.values
    settle = len(x) // 4
    return {
        "seed": seed,
        "digest": config.digest(),
        "x_rms_m": float(np.sqrt(np.mean(x[settle:] ** 2))),
        "mean_energy_J": float(np.mean(result.energy[settle:])),
    }


def cmd_simulate(args) -> int:
    scenario = _load(args)
    out = _out_dir(args)

    if args.sweep > 1:
        # documented splitting rule: SeedSequence(master).spawn(n), one child
        # per run, first state word as the run seed
        master = args.seed
        if master is None:
            master = (scenario.sim or {}).get("seed")
        if master is None:
            raise ScenarioError("a sweep needs `simulate.seed` or --seed")
        children = np.random.SeedSequence(int(master)).spawn(args.sweep)
        seeds = [int(c.generate_state(1)[0]) for c in children]
        jobs = [(args.scenario, s) for s in seeds]
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                summaries = list(pool.map(_run_one_sweep, jobs))
        else:
            summaries = [_run_one_sweep(j) for j in jobs]
        rows = [[s["seed"], s["x_rms_m"], s["mean_energy_J"]]
                for s in summaries]
        results = {
            "master_seed": int(master),
            "runs": args.sweep,
            "x_rms_mean_m": float(np.mean([s["x_rms_m"] for s in summaries])),
            "mean_energy_J": float(np.mean([s["mean_energy_J"]
                                            for s in summaries])),
            "digest": summaries[0]["digest"],
        }
        _emit(args, "simulate", _scenario_inputs(args, scenario), results,
              ["seed", "x_rms_m", "mean_energy_J"], rows)
        return EXIT_OK

    config = _sim_config(scenario, seed_override=args.seed)
    result = simulate(config)
    x = result.x

    series_path = out / "timeseries.csv"
    write_timeseries_csv(series_path, {"x": x, "y_meas": result.y},
                         {"seed": config.seed, "digest": config.digest()})
    f, psd = welch_psd(x)
    write_csv(out / "psd.csv", ["f_Hz", "psd_m2_per_Hz"],
              [[fv, pv] for fv, pv in zip(f, psd)],
              {"seed": config.seed, "digest": config.digest()})

    settle = len(x) // 4
    results = {
        "seed": config.seed,
        "digest": config.digest(),
        "samples": len(x),
        "dt_s": config.dt,
        "x_rms_m": float(np.sqrt(np.mean(x.values[settle:] ** 2))),
        "mean_energy_J": float(np.mean(result.energy[settle:])),
        "timeseries_file": series_path.name,
        "psd_file": "psd.csv",
    }
    figs = [
        plots.timeseries_figure(x, out / "timeseries.png"),
        plots.psd_figure(f, psd, out / "psd.png"),
    ]
    rows = [["x_rms_m", results["x_rms_m"]],
            ["mean_energy_J", results["mean_energy_J"]]]
    _emit(args, "simulate", _scenario_inputs(args, scenario), results,
          ["quantity", "value"], rows, figures=figs)
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not args.input:
        raise ScenarioError("analyze needs --input timeseries.csv")
    meta, header, data = read_timeseries_csv(args.input)
    if len(header) < 2 or header[0] != "t":
        raise ScenarioError(
            f"--input must have a `t` first column, got {header!r}")
    dt = float(data[1, 0] - data[0, 0])
    series = TimeSeries(dt, data[:, 1], dict(meta))
    out = _out_dir(args)

    f, psd = welch_psd(series)
    band = tuple(args.band) if args.band else None
    fit = lorentzian_fit(f, psd, band=band)
    results = {
        "channel": header[1],
        "samples": len(series),
        "f0_Hz": fit.f0,
        "gamma_1_per_s": fit.gamma,
        "Q": 2.0 * math.pi * fit.f0 / fit.gamma if fit.gamma > 0 else None,
        "peak_area_m2": fit.area,
        "background_m2_per_Hz": fit.background,
        "resolution_limited": fit.resolution_limited,
    }
    if args.ringdown:
        ring = ringdown_q(series, f0_guess=fit.f0)
        results.update({
            "ringdown_gamma_1_per_s": ring.gamma,
            "ringdown_Q": ring.Q,
            "ringdown_jump_detected": ring.jump_detected,
        })
    rows = [[fv, pv] for fv, pv in zip(f, psd)]
    fig = plots.psd_figure(f, psd, out / "analyze_psd.png", fit=fit, band=band)
    _emit(args, "analyze", {"input": str(args.input)}, results,
          ["f_Hz", "psd"], rows, figures=[fig])
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squidlev",
        description=("Design calculations for magnetically levitated "
                     "superconducting spheres: trap fields, readout "
                     "coupling, noise budgets, isolation, and simulation."),
    )
    parser.add_argument("--version", action="version",
                        version=f"squidlev {__version__}")
    parser.add_argument("--constants", action="store_true",
                        help="print the physical constants table and exit")

    sub = parser.add_subparsers(dest="command")

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", help="YAML scenario file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="what to echo on stdout (files always get both)")

    p = sub.add_parser("frequencies",
                       help="trap frequencies from gradients or coils")
    common(p)
    p.set_defaults(func=cmd_frequencies)

    p = sub.add_parser("coupling", help="pickup coupling and readout noise")
    common(p)
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("optimize-pickup",
                       help="optimize the spiral pickup geometry")
    common(p)
    p.set_defaults(func=cmd_optimize_pickup)

    p = sub.add_parser("isolation",
                       help="normal modes and transmissibility of a stack")
    common(p)
    p.set_defaults(func=cmd_isolation)

    p = sub.add_parser("budget", help="force and temperature noise budget")
    common(p)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("filter", help="RL filter response and step")
    common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("simulate", help="stochastic time-domain simulation")
    common(p)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--sweep", type=int, default=1,
                   help="run N seeds spawned from the master seed")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers for --sweep")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="PSD, Lorentzian and ringdown fits")
    common(p, scenario=False)
    p.add_argument("--input", help="time-series CSV (t,x[,...])")
    p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                   help="fit band in Hz")
    p.add_argument("--ringdown", action="store_true",
                   help="also fit an exponential ringdown")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.constants:
        for name, value, unit in constants_table():
            sys.stdout.write(f"{name:24s} {value:.10g}  {unit}\n")
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_SCENARIO

    try:
        return args.func(args)
    except ScenarioError as exc:
        sys.stderr.write(f"scenario error: {exc}\n")
        return EXIT_SCENARIO
    except SquidlevError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
