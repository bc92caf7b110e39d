"""Exception hierarchy.

Everything raised deliberately by this package derives from ``SquidlevError``
so the command line can map physics/numerics failures to one exit code and
scenario-validation problems to another.
"""


class SquidlevError(Exception):
    """Base class for all deliberate errors raised by squidlev."""


class ScenarioError(SquidlevError):
    """A scenario file failed validation; message names the offending key."""


# --- field model ----------------------------------------------------------

class PointOnFilament(SquidlevError):
    """Field requested closer to a coil filament than the guard distance."""


class NotAntiHelmholtz(SquidlevError):
    """Gradient extraction requires opposite current signs in the coil pair."""


# --- sphere response ------------------------------------------------------

class InteriorPoint(SquidlevError):
    """Field evaluation requested inside the superconducting sphere."""


class ZeroFrequency(SquidlevError):
    """An operation needed a strictly positive trap frequency."""


# --- pickup coupling ------------------------------------------------------

class LoopInsideSphere(SquidlevError):
    """Pickup loop (or part of it) is not exterior to the sphere."""


class LoopTooClose(SquidlevError):
    """The spanning surface of a pickup loop cannot avoid the sphere."""


class ZeroCoupling(SquidlevError):
    """Noise referral is undefined for a loop with zero coupling."""


class InfeasibleConstraint(SquidlevError):
    """Optimizer constraints leave an empty search region."""


# --- noise budget ---------------------------------------------------------

class UnstableHeating(SquidlevError):
    """Parametric heating rate exceeds damping; no steady state exists."""


# --- vibration isolation --------------------------------------------------

class OnResonance(SquidlevError):
    """Transmissibility requested exactly on an undamped normal mode."""


class SingularMass(SquidlevError):
    """Isolation stage with non-positive mass."""


class WireOverload(SquidlevError):
    """Suspension wire loaded at or beyond its yield load."""


# --- dynamics -------------------------------------------------------------

class UnstableIntegration(SquidlevError):
    """Simulated energy ran away far beyond the analytic prediction."""


class NoDecay(SquidlevError):
    """Ringdown fit found a non-decaying envelope."""


class BandTooNarrow(SquidlevError):
    """Analysis band contains too few spectral bins."""


class BandMismatch(SquidlevError):
    """Calibration band holds no signal above the noise floor."""
