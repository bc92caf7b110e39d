"""Multi-stage spring-wire vibration isolation.

A stack of masses hung from thin wires acts as a chain of harmonic stages.
Each stage with ``N`` wires of diameter ``D``, free length ``L`` and Young's
modulus ``Y`` contributes a vertical spring constant

    k = N Y D^2 pi / (4 L),

and the chain's vertical transmissibility from the support to the bottom
mass is, for negligible damping,

    T(f) = product_i f_v,i^2 / |f_n,i^2 - f^2|,

with f_v,i the isolated stage frequencies and f_n,i the normal modes of the
coupled chain. The product over the normal modes equals the product over
the stage frequencies (a determinant identity), so T(0) = 1 exactly and
T falls off as f^(-2 n_stages) well above the highest mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .constants import STANDARD_GRAVITY, YOUNG_MODULUS_STEEL_304
from .errors import OnResonance, SingularMass, WireOverload

__all__ = [
    "Stage",
    "IsolationStack",
    "stage_spring_constant",
    "normal_modes",
    "transfer_function",
    "asymptotic_transfer",
    "yield_check",
    "horizontal_pendulum_frequency",
]

RESONANCE_GUARD = 1e-9


@dataclass(frozen=True)
class Stage:
    """One suspension stage.

    Attributes
    ----------
    mass : float
        Stage mass [kg].
    wires : int
        Number of supporting wires.
    length : float
        Free wire length [m].
    diameter : float
        Wire diameter [m].
    modulus : float
        Young's modulus [Pa]; default 304 stainless.
    yield_load : float
        Wire yield load quoted as supported mass [kg] per wire.
    """

    mass: float
    wires: int
    length: float
    diameter: float
    modulus: float = YOUNG_MODULUS_STEEL_304
    yield_load: float = 0.37

    def __post_init__(self):
        if self.mass <= 0:
            raise SingularMass(f"stage mass must be positive, got {self.mass:g} kg")
        if self.wires < 1:
            raise ValueError("each stage needs at least one wire")
        if self.length <= 0 or self.diameter <= 0 or self.modulus <= 0:
            raise ValueError("wire length, diameter and modulus must be positive")

    @property
    def spring_constant(self) -> float:
        return stage_spring_constant(self.wires, self.modulus,
                                     self.diameter, self.length)

    @property
    def frequency(self) -> float:
        """Isolated stage frequency f_v [Hz]."""
        return math.sqrt(self.spring_constant / self.mass) / (2.0 * math.pi)


def stage_spring_constant(wires: int, modulus: float, diameter: float,
                          length: float) -> float:
    """Axial spring constant of one wire set, ``N Y D^2 pi / (4 L)`` [N/m]."""
    return wires * modulus * diameter**2 * math.pi / (4.0 * length)


@dataclass(frozen=True)
class IsolationStack:
    """Chain of stages ordered from the support downward."""

    stages: tuple

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise ValueError("need at least one stage")
        object.__setattr__(self, "stages", stages)

    def __len__(self):
        return len(self.stages)

    @property
    def stage_frequencies(self) -> np.ndarray:
        return np.array([s.frequency for s in self.stages])

    @property
    def masses(self) -> np.ndarray:
        return np.array([s.mass for s in self.stages])

    @property
    def spring_constants(self) -> np.ndarray:
        return np.array([s.spring_constant for s in self.stages])


def normal_modes(stack: IsolationStack) -> np.ndarray:
    """Normal-mode frequencies of the coupled chain, ascending [Hz].

    Solves the generalized eigenproblem K x = omega^2 M x for the
    tridiagonal chain stiffness (stage i hangs from stage i-1, top stage
    from the support).
    """
    k = stack.spring_constants
    m = stack.masses
    n = len(stack)
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] = k[i] + (k[i + 1] if i + 1 < n else 0.0)
        if i + 1 < n:
            K[i, i + 1] = K[i + 1, i] = -k[i + 1]
    evals = linalg.eigh(K, np.diag(m), eigvals_only=True)
    return np.sqrt(np.clip(evals, 0.0, None)) / (2.0 * math.pi)


def transfer_function(stack: IsolationStack, frequency_hz) -> np.ndarray:
    """Vertical transmissibility from support to bottom stage.

    ``T(f) = product_i f_v,i^2 / |f_n,i^2 - f^2|``; exact 1 at f = 0.

    Raises
    ------
    OnResonance
        If any requested frequency sits within a relative guard band of an
        undamped normal mode, where the expression diverges.
    """
    f = np.asarray(frequency_hz, dtype=float)
    fv2 = stack.stage_frequencies**2
    fn = normal_modes(stack)
    diff = np.abs(fn[:, None]**2 - np.ravel(f)[None, :]**2)
    too_close = diff < RESONANCE_GUARD * fn[:, None]**2
    if np.any(too_close):
        hit = fn[np.any(too_close, axis=1)][0]
        raise OnResonance(f"transmissibility requested on a normal mode at {hit:g} Hz")
    t = np.prod(fv2)[None] / np.prod(diff, axis=0)
    # the product identity prod(f_n^2) = prod(f_v^2) makes T(0) = 1 exactly;
    # enforce it rather than leave rounding residue
    t = np.where(np.ravel(f) == 0.0, 1.0, t)
    t = t.reshape(np.shape(f))
    return float(t) if t.ndim == 0 else t


def asymptotic_transfer(stack: IsolationStack, frequency_hz) -> np.ndarray:
    """High-frequency asymptote ``product(f_v^2) / f^(2 n)``."""
    f = np.asarray(frequency_hz, dtype=float)
    out = np.prod(stack.stage_frequencies**2) / f**(2 * len(stack))
    return float(out) if out.ndim == 0 else out


def yield_check(stack: IsolationStack, payload: float = 0.0,
                warn_fraction: float = 0.5) -> np.ndarray:
    """Per-wire load fraction of the yield load for every stage.

    Each stage's wires carry that stage plus everything below it (plus an
    optional extra ``payload`` on the bottom stage). Emits a warning above
    ``warn_fraction`` and raises once any wire reaches its yield load.

    Returns
    -------
    ndarray
        Load ratio per stage, top to bottom.
    """
    masses = stack.masses
    ratios = []
    for i, stage in enumerate(stack.stages):
        supported = masses[i:].sum() + payload
        per_wire = supported / stage.wires
        ratios.append(per_wire / stage.yield_load)
    ratios = np.array(ratios)
    if np.any(ratios >= 1.0):
        worst = int(np.argmax(ratios))
        raise WireOverload(
            f"stage {worst} wires at {ratios[worst]:.0%} of yield load"
        )
    if np.any(ratios > warn_fraction):
        worst = int(np.argmax(ratios))
        warnings.warn(
            f"stage {worst} wires carry {ratios[worst]:.0%} of their yield load",
            stacklevel=2,
        )
    return ratios


def horizontal_pendulum_frequency(length: float,
                                  g: float = STANDARD_GRAVITY) -> float:
    """Pendulum frequency of a stage swinging on its wires [Hz]."""
    if length <= 0:
        raise ValueError("wire length must be positive")
    return math.sqrt(g / length) / (2.0 * math.pi)
