"""Scenario files: one YAML document describing a trap, sphere, and readout.

A scenario collects the inputs the command line needs, each section optional
because different commands need different parts. Validation is strict: every
key is checked, unknown keys are rejected, and error messages name the full
dotted path of the offending entry (``sphere.R``, ``readout.L_S``, ...).
All quantities are SI unless the key name says otherwise.

Schema (all sections optional, keys as shown)::

    sphere:     R, rho
    field:      gradients {b_x, b_y, b_z} | coils {a, b, separation, turns, current}
    mode:       f0, Q | gamma, T0, mass
    readout:    L_S, L_I, L_W, L_P, M | k,
                S_phiphi | sqrt_S_phiphi_phi0, S_JJ
    pickup:     r_in, N, w, spacing, Z, spacing_convention
    noise:      S_nn, S_epseps, S_deltadelta (white level or {f: [...], psd: [...]})
    isolation:  stages [{m, L, D, N_wires, E}], payload
    filter:     R_C, L_C | kappa
    simulate:   dt, duration, seed, initial [x, v],
                feedback {gain, center_hz, width_hz, phase, delay_samples}
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import yaml

from .budget import OscillatorMode, SpectralDensity
from .constants import PHI0
from .errors import ScenarioError, SquidlevError
from .fieldmodel import CoilPair, QuadrupoleField
from .isolation import IsolationStack, Stage
from .pickup import PickupCoil, SquidCircuit
from .sphere import SphereParams

__all__ = ["Scenario", "load_scenario", "parse_scenario"]


class _ScenarioLoader(yaml.SafeLoader):
    """SafeLoader that reads floats like ``10.9e3`` (unsigned exponent)."""


_ScenarioLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
            |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
            |[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?
            |[-+]?\.(?:inf|Inf|INF)
            |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario; sections a file omitted are None (or empty)."""

    sphere: SphereParams = None
    quad: QuadrupoleField = None
    coils: CoilPair = None
    mode: OscillatorMode = None
    circuit: SquidCircuit = None
    pickup: PickupCoil = None
    noise: dict = dc_field(default_factory=dict)
    stack: IsolationStack = None
    payload: float = 0.0
    filter_kappa: float = None
    sim: dict = None
    source: str = ""

    def require(self, *sections) -> None:
        """Raise ScenarioError naming the first missing section."""
        aliases = {"filter": "filter_kappa", "readout": "circuit",
                   "isolation": "stack"}
        for name in sections:
            value = getattr(self, aliases.get(name, name))
            if value is None or (name == "noise" and not value):
                raise ScenarioError(
                    f"this command needs the `{name}` section of the scenario"
                )


def _check_map(node, path: str, allowed: tuple) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ScenarioError(f"`{path}` must be a mapping, got {type(node).__name__}")
    for key in node:
        if key not in allowed:
            raise ScenarioError(f"unknown key `{path}.{key}`")
    return node


def _number(d: dict, key: str, path: str, *, required: bool = False,
            default=None, positive: bool = False, nonnegative: bool = False):
    if key not in d or d[key] is None:
        if required:
            raise ScenarioError(f"missing required key `{path}.{key}`")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"`{path}.{key}` must be a number, got {v!r}")
    v = float(v)
    if positive and v <= 0:
        raise ScenarioError(f"`{path}.{key}` must be positive, got {v:g}")
    if nonnegative and v < 0:
        raise ScenarioError(f"`{path}.{key}` must be nonnegative, got {v:g}")
    return v


def _exactly_one(d: dict, path: str, *keys) -> str:
    present = [k for k in keys if k in d and d[k] is not None]
    if len(present) != 1:
        opts = ", ".join(keys)
        raise ScenarioError(f"`{path}` needs exactly one of: {opts}")
    return present[0]


def _parse_sphere(node) -> SphereParams:
    d = _check_map(node, "sphere", ("R", "rho"))
    r = _number(d, "R", "sphere", required=True, positive=True)
    rho = _number(d, "rho", "sphere", required=True, positive=True)
    return SphereParams(radius=r, density=rho)


def _parse_field(node) -> tuple:
    d = _check_map(node, "field", ("gradients", "coils"))
    if not d:
        return None, None
    which = _exactly_one(d, "field", "gradients", "coils")
    if which == "gradients":
        g = _check_map(d["gradients"], "field.gradients", ("b_x", "b_y", "b_z"))
        bx = _number(g, "b_x", "field.gradients", required=True)
        by = _number(g, "b_y", "field.gradients", required=True)
        bz = _number(g, "b_z", "field.gradients")
        try:
            if bz is None:
                quad = QuadrupoleField.from_transverse(bx, by)
            else:
                quad = QuadrupoleField(b_x=bx, b_y=by, b_z=bz)
        except SquidlevError as exc:
            raise ScenarioError(f"`field.gradients`: {exc}") from exc
        return quad, None
    c = _check_map(d["coils"], "field.coils",
                   ("a", "b", "separation", "turns", "current"))
    a = _number(c, "a", "field.coils", required=True, positive=True)
    b = _number(c, "b", "field.coils", positive=True)
    sep = _number(c, "separation", "field.coils", required=True, positive=True)
    turns = _number(c, "turns", "field.coils", default=1.0, positive=True)
    current = _number(c, "current", "field.coils", default=1.0)
    pair = CoilPair(semi_axis_x=a, semi_axis_y=b if b is not None else a,
                    separation=sep, turns=int(turns),
                    current_upper=current, current_lower=-current)
    return None, pair


def _parse_mode(node, sphere: SphereParams) -> OscillatorMode:
    d = _check_map(node, "mode", ("f0", "Q", "gamma", "T0", "mass"))
    if not d:
        return None
    f0 = _number(d, "f0", "mode", required=True, positive=True)
    t0 = _number(d, "T0", "mode", required=True, nonnegative=True)
    mass = _number(d, "mass", "mode", positive=True)
    if mass is None:
        if sphere is None:
            raise ScenarioError("`mode.mass` is required when no sphere is given")
        mass = sphere.mass
    which = _exactly_one(d, "mode", "Q", "gamma")
    if which == "Q":
        q = _number(d, "Q", "mode", required=True, positive=True)
        return OscillatorMode.from_frequency(mass=mass, f0=f0, Q=q, T0=t0)
    gamma = _number(d, "gamma", "mode", required=True, nonnegative=True)
    return OscillatorMode(mass=mass, omega0=2.0 * math.pi * f0, gamma=gamma, T0=t0)


def _parse_readout(node) -> SquidCircuit:
    allowed = ("L_S", "L_I", "L_W", "L_P", "M", "k",
               "S_phiphi", "sqrt_S_phiphi_phi0", "S_JJ")
    d = _check_map(node, "readout", allowed)
    if not d:
        return None
    l_s = _number(d, "L_S", "readout", required=True, positive=True)
    l_i = _number(d, "L_I", "readout", required=True, positive=True)
    l_w = _number(d, "L_W", "readout", default=0.0, nonnegative=True)
    l_p = _number(d, "L_P", "readout", positive=True)
    which = _exactly_one(d, "readout", "M", "k")
    kwargs = {}
    if which == "M":
        kwargs["M"] = _number(d, "M", "readout", required=True, positive=True)
    else:
        kwargs["k"] = _number(d, "k", "readout", required=True, positive=True)
    which = _exactly_one(d, "readout", "S_phiphi", "sqrt_S_phiphi_phi0")
    if which == "S_phiphi":
        s_pp = _number(d, "S_phiphi", "readout", required=True, positive=True)
    else:
        root = _number(d, "sqrt_S_phiphi_phi0", "readout", required=True,
                       positive=True)
        s_pp = (root * PHI0) ** 2
    s_jj = _number(d, "S_JJ", "readout", positive=True)
    try:
        return SquidCircuit(L_S=l_s, L_I=l_i, L_W=l_w, L_P=l_p,
                            S_phiphi=s_pp, S_JJ=s_jj, **kwargs)
    except (SquidlevError, ValueError) as exc:
        raise ScenarioError(f"`readout`: {exc}") from exc


def _parse_pickup(node) -> PickupCoil:
    allowed = ("r_in", "N", "w", "spacing", "Z", "spacing_convention")
    d = _check_map(node, "pickup", allowed)
    if not d:
        return None
    conv = d.get("spacing_convention", "edge")
    if conv not in ("edge", "center"):
        raise ScenarioError(
            f"`pickup.spacing_convention` must be 'edge' or 'center', got {conv!r}"
        )
    try:
        return PickupCoil(
            inner_radius=_number(d, "r_in", "pickup", required=True, positive=True),
            turns=int(_number(d, "N", "pickup", required=True, positive=True)),
            wire_width=_number(d, "w", "pickup", required=True, positive=True),
            wire_spacing=_number(d, "spacing", "pickup", required=True,
                                 nonnegative=True),
            z=_number(d, "Z", "pickup", required=True),
            spacing_convention=conv,
        )
    except (SquidlevError, ValueError) as exc:
        raise ScenarioError(f"`pickup`: {exc}") from exc


def _parse_density(value, path: str):
    """A noise entry: white level (number) or {f: [...], psd: [...]} table."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value < 0:
            raise ScenarioError(f"`{path}` must be nonnegative, got {value:g}")
        return float(value)
    d = _check_map(value, path, ("f", "psd"))
    for key in ("f", "psd"):
        if key not in d or not isinstance(d[key], list) or not d[key]:
            raise ScenarioError(f"`{path}.{key}` must be a nonempty list")
    try:
        return SpectralDensity.from_table(d["f"], d["psd"])
    except (SquidlevError, ValueError) as exc:
        raise ScenarioError(f"`{path}`: {exc}") from exc


def _parse_noise(node) -> dict:
    allowed = ("S_nn", "S_epseps", "S_deltadelta")
    d = _check_map(node, "noise", allowed)
    return {k: _parse_density(d[k], f"noise.{k}") for k in allowed if k in d}


def _parse_isolation(node) -> tuple:
    d = _check_map(node, "isolation", ("stages", "payload"))
    if not d:
        return None, 0.0
    stages = d.get("stages")
    if not isinstance(stages, list) or not stages:
        raise ScenarioError("`isolation.stages` must be a nonempty list")
    parsed = []
    for i, s in enumerate(stages):
        path = f"isolation.stages[{i}]"
        sd = _check_map(s, path, ("m", "L", "D", "N_wires", "E", "yield_load"))
        kwargs = dict(
            mass=_number(sd, "m", path, required=True, positive=True),
            length=_number(sd, "L", path, required=True, positive=True),
            diameter=_number(sd, "D", path, required=True, positive=True),
            wires=int(_number(sd, "N_wires", path, default=1.0, positive=True)),
        )
        e = _number(sd, "E", path, positive=True)
        if e is not None:
            kwargs["modulus"] = e
        y = _number(sd, "yield_load", path, positive=True)
        if y is not None:
            kwargs["yield_load"] = y
        parsed.append(Stage(**kwargs))
    payload = _number(d, "payload", "isolation", default=0.0, nonnegative=True)
    return IsolationStack(stages=tuple(parsed)), payload


def _parse_filter(node) -> float:
    d = _check_map(node, "filter", ("R_C", "L_C", "kappa"))
    if not d:
        return None
    if "kappa" in d:
        if "R_C" in d or "L_C" in d:
            raise ScenarioError("`filter` takes either kappa or R_C with L_C")
        return _number(d, "kappa", "filter", required=True, positive=True)
    r = _number(d, "R_C", "filter", required=True, positive=True)
    l = _number(d, "L_C", "filter", required=True, positive=True)
    return r / l


def _parse_simulate(node) -> dict:
    allowed = ("dt", "duration", "seed", "initial", "feedback")
    d = _check_map(node, "simulate", allowed)
    if not d:
        return None
    out = {
        "dt": _number(d, "dt", "simulate", required=True, positive=True),
        "duration": _number(d, "duration", "simulate", required=True,
                            positive=True),
    }
    if "seed" in d and d["seed"] is not None:
        seed = d["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ScenarioError(f"`simulate.seed` must be an integer, got {seed!r}")
        out["seed"] = seed
    init = d.get("initial")
    if init is not None:
        if (not isinstance(init, list) or len(init) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in init)):
            raise ScenarioError("`simulate.initial` must be a two-number list [x, v]")
        out["initial"] = (float(init[0]), float(init[1]))
    fb = d.get("feedback")
    if fb is not None:
        fd = _check_map(fb, "simulate.feedback",
                        ("gain", "center_hz", "width_hz", "phase",
                         "delay_samples"))
        out["feedback"] = dict(
            enabled=True,
            gain=_number(fd, "gain", "simulate.feedback", required=True),
            center_hz=_number(fd, "center_hz", "simulate.feedback",
                              required=True, positive=True),
            width_hz=_number(fd, "width_hz", "simulate.feedback",
                             required=True, positive=True),
            phase=_number(fd, "phase", "simulate.feedback", default=0.0),
            delay_samples=int(_number(fd, "delay_samples", "simulate.feedback",
                                      default=1.0, positive=True)),
        )
    return out


_TOP_LEVEL = ("sphere", "field", "mode", "readout", "pickup", "noise",
              "isolation", "filter", "simulate")


def parse_scenario(doc, source: str = "<memory>") -> Scenario:
    """Validate a raw mapping and build the typed scenario."""
    d = _check_map(doc, "scenario", _TOP_LEVEL)
    sphere = _parse_sphere(d["sphere"]) if "sphere" in d else None
    quad, coils = _parse_field(d.get("field"))
    stack, payload = _parse_isolation(d.get("isolation"))
    return Scenario(
        sphere=sphere,
        quad=quad,
        coils=coils,
        mode=_parse_mode(d.get("mode"), sphere),
        circuit=_parse_readout(d.get("readout")),
        pickup=_parse_pickup(d.get("pickup")),
        noise=_parse_noise(d.get("noise")),
        stack=stack,
        payload=payload,
        filter_kappa=_parse_filter(d.get("filter")),
        sim=_parse_simulate(d.get("simulate")),
        source=source,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file (YAML; JSON is a YAML subset)."""
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file not found: {p}")
    text = p.read_text()
    try:
        if p.suffix.lower() == ".json":
            doc = json.loads(text)
        else:
            doc = yaml.load(text, Loader=_ScenarioLoader)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"could not parse {p}: {exc}") from exc
    return parse_scenario(doc, source=str(p))
