"""Quadrupole trap fields and coil filament models.

The trap near its center is an ideal linear quadrupole

    B(r) = (b_x x, b_y y, b_z z),      b_x + b_y + b_z = 0,

parameterized by the three gradients in T/m. The field of a concrete pair of
elliptical coils is evaluated by Biot-Savart quadrature over closed filaments,
and ``extract_gradients`` / ``quadrupole_fit_rms`` connect the two pictures:
they pull the local gradients out of a coil model and quantify how far the
real field departs from the ideal quadrupole over a working volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import MU0
from .errors import NotAntiHelmholtz, PointOnFilament

__all__ = [
    "QuadrupoleField",
    "CoilPair",
    "GradientResult",
    "biot_savart_field",
    "extract_gradients",
    "quadrupole_fit_rms",
    "quadrupole_rms_from_samples",
]

# minimum approach distance to a filament before the kernel blows up [m]
FILAMENT_GUARD = 1e-9

# relative trace tolerance accepted when all three gradients are supplied
TRACE_TOL = 1e-6


@dataclass(frozen=True)
class QuadrupoleField:
    """Ideal linear quadrupole, ``B = (b_x x, b_y y, b_z z)``.

    Construct either with all three gradients (the zero-trace condition is
    then checked to :data:`TRACE_TOL` relative) or from the two transverse
    ones via :meth:`from_transverse`, which derives ``b_z = -(b_x + b_y)``.

    Attributes
    ----------
    b_x, b_y, b_z : float
        Field gradients along the principal axes [T/m].
    """

    b_x: float
    b_y: float
    b_z: float

    def __post_init__(self):
        scale = max(abs(self.b_x), abs(self.b_y), abs(self.b_z))
        if scale == 0.0:
            raise ValueError("quadrupole gradients are all zero")
        trace = self.b_x + self.b_y + self.b_z
        if abs(trace) > TRACE_TOL * scale:
            raise ValueError(
                f"gradients must be trace-free: b_x+b_y+b_z = {trace:g} T/m"
            )

    @classmethod
    def from_transverse(cls, b_x: float, b_y: float) -> "QuadrupoleField":
        """Build a field from the two transverse gradients, b_z derived."""
        return cls(b_x, b_y, -(b_x + b_y))

    @property
    def gradients(self) -> np.ndarray:
        return np.array([self.b_x, self.b_y, self.b_z])

    @property
    def is_ordered(self) -> bool:
        """Whether ``|b_x| <= |b_y| <= |b_z|`` (reported, never enforced)."""
        a = np.abs(self.gradients)
        return bool(a[0] <= a[1] <= a[2])

    def field(self, points: np.ndarray) -> np.ndarray:
        """Evaluate B at one point or an (..., 3) array of points [T]."""
        p = np.asarray(points, dtype=float)
        return p * self.gradients


@dataclass(frozen=True)
class CoilPair:
    """Pair of coaxial elliptical coils centered on the z axis.

    The two coils lie in the planes z = +separation/2 and z = -separation/2
    and carry ``current_upper`` and ``current_lower`` (signed; opposite signs
    make the pair anti-Helmholtz). Each coil has ``turns`` filaments; winding
    build-up can be modeled through ``turn_offsets``, one ``(dr, dz)`` pair
    per turn added to the semi-axes and to the axial distance from z = 0
    (mirrored between the two coils so the pair stays symmetric).

    Attributes
    ----------
    semi_axis_x, semi_axis_y : float
        Ellipse semi-axes along x and y [m].
    separation : float
        Distance between the two coil planes [m].
    turns : int
        Number of filaments per coil.
    current_upper, current_lower : float
        Signed currents [A].
    turn_offsets : tuple of (float, float)
        Optional per-turn (radial, axial) offsets [m]; defaults to zeros.
    """

    semi_axis_x: float
    semi_axis_y: float
    separation: float
    turns: int = 1
    current_upper: float = 1.0
    current_lower: float = -1.0
    turn_offsets: tuple = field(default=None)

    def __post_init__(self):
        if self.semi_axis_x <= 0 or self.semi_axis_y <= 0:
            raise ValueError("coil semi-axes must be positive")
        if self.separation <= 0:
            raise ValueError("coil separation must be positive")
        if self.turns < 1:
            raise ValueError("turns must be >= 1")
        offs = self.turn_offsets
        if offs is None:
            offs = tuple((0.0, 0.0) for _ in range(self.turns))
        else:
            offs = tuple((float(dr), float(dz)) for dr, dz in offs)
            if len(offs) != self.turns:
                raise ValueError("need one (dr, dz) offset per turn")
        object.__setattr__(self, "turn_offsets", offs)

    @classmethod
    def anti_helmholtz(cls, semi_axis_x, semi_axis_y, separation, turns=1,
                       current=1.0, turn_offsets=None) -> "CoilPair":
        """Convenience constructor with currents (+I, -I)."""
        return cls(semi_axis_x, semi_axis_y, separation, turns,
                   current, -current, turn_offsets)

    @property
    def is_anti_helmholtz(self) -> bool:
        return self.current_upper * self.current_lower < 0

    def filaments(self):
        """Yield ``(a, b, z_plane, current)`` for every physical filament."""
        half = 0.5 * self.separation
        for dr, dz in self.turn_offsets:
            a = self.semi_axis_x + dr
            b = self.semi_axis_y + dr
            yield a, b, half + dz, self.current_upper
            yield a, b, -(half + dz), self.current_lower


def _ellipse_segment_field(points, a, b, z_plane, current, n_nodes):
    """Biot-Savart field of one elliptical filament, n_nodes trapezoid rule."""
    theta = np.linspace(0.0, 2.0 * np.pi, n_nodes, endpoint=False)
    gamma = np.stack(
        [a * np.cos(theta), b * np.sin(theta), np.full_like(theta, z_plane)],
        axis=-1,
    )
    dgamma = np.stack(
        [-a * np.sin(theta), b * np.cos(theta), np.zeros_like(theta)], axis=-1
    )
    sep = points[..., None, :] - gamma          # (..., n_nodes, 3)
    dist = np.linalg.norm(sep, axis=-1)
    if np.any(dist < FILAMENT_GUARD):
        raise PointOnFilament(
            f"evaluation point within {FILAMENT_GUARD:g} m of a coil filament"
        )
    integrand = np.cross(dgamma, sep) / dist[..., None] ** 3
    # periodic trapezoid: equal weights 2*pi/n
    return (MU0 * current / (4.0 * np.pi)) * (2.0 * np.pi / n_nodes) * integrand.sum(axis=-2)


def biot_savart_field(coils: CoilPair, points, n_start: int = 512,
                      rtol: float = 1e-8, n_max: int = 8192) -> np.ndarray:
    """Magnetic field of a coil pair by adaptive filament quadrature.

    Uses the periodic trapezoid rule (spectrally accurate on closed smooth
    filaments) starting at ``n_start`` nodes per filament and doubling until
    the field changes by less than ``rtol`` relative.

    Parameters
    ----------
    coils : CoilPair
    points : array_like, shape (..., 3)
        Evaluation points [m].
    n_start : int
        Initial node count per filament.
    rtol : float
        Relative convergence target between successive doublings.
    n_max : int
        Hard cap on nodes per filament.

    Returns
    -------
    ndarray, shape (..., 3)
        Field in tesla.

    Raises
    ------
    PointOnFilament
        If any point comes within the guard distance of a filament.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scalar_input = np.asarray(points).ndim == 1

    def total(n_nodes):
        out = np.zeros(pts.shape)
        for a, b, z_plane, current in coils.filaments():
            out += _ellipse_segment_field(pts, a, b, z_plane, current, n_nodes)
        return out

    n = n_start
    result = total(n)
    while n < n_max:
        n *= 2
        refined = total(n)
        scale = np.max(np.abs(refined))
        if scale == 0.0 or np.max(np.abs(refined - result)) <= rtol * scale:
            result = refined
            break
        result = refined
    return result[0] if scalar_input else result


@dataclass(frozen=True)
class GradientResult:
    """Gradients extracted from a coil model.

    Attributes
    ----------
    field : QuadrupoleField
        Trace-free gradients (renormalized; see ``trace_residual``).
    trace_residual : float
        Raw ``gx+gy+gz`` of the finite differences before renormalization,
        relative to the largest gradient.
    raw : tuple of float
        The unrenormalized finite-difference gradients [T/m].
    """

    field: QuadrupoleField
    trace_residual: float
    raw: tuple


def extract_gradients(coils: CoilPair, step: float = 1e-6) -> GradientResult:
    """Extract the local quadrupole gradients of a coil pair at the origin.

    Central differences with Richardson extrapolation (steps ``step`` and
    ``step/2``) give each diagonal gradient; the triple is then projected
    onto the trace-free subspace and the discarded residual reported.

    Raises
    ------
    NotAntiHelmholtz
        If the two coil currents do not have opposite signs.
    """
    if not coils.is_anti_helmholtz:
        raise NotAntiHelmholtz(
            "gradient extraction expects opposite current signs "
            f"(got {coils.current_upper:g} A and {coils.current_lower:g} A)"
        )

    def diag_derivative(axis, h):
        e = np.zeros(3)
        e[axis] = h
        bp = biot_savart_field(coils, e)
        bm = biot_savart_field(coils, -e)
        return (bp[axis] - bm[axis]) / (2.0 * h)

    raw = []
    for axis in range(3):
        d_h = diag_derivative(axis, step)
        d_h2 = diag_derivative(axis, step / 2.0)
        raw.append((4.0 * d_h2 - d_h) / 3.0)
    raw = np.array(raw)

    scale = np.max(np.abs(raw))
    trace = raw.sum()
    balanced = raw - trace / 3.0
    return GradientResult(
        field=QuadrupoleField(*balanced),
        trace_residual=float(trace / scale),
        raw=tuple(raw),
    )


def quadrupole_rms_from_samples(points, b_sim, quad: QuadrupoleField) -> float:
    """Worst relative deviation between sampled fields and a quadrupole.

    Parameters
    ----------
    points : ndarray (n, 3)
        Sample locations [m].
    b_sim : ndarray (n, 3)
        Field at those locations [T].
    quad : QuadrupoleField
        Reference linear field.

    Returns
    -------
    float
        ``max_i |b_sim_i - b_quad_i| / |b_sim_i|``.
    """
    b_quad = quad.field(points)
    num = np.linalg.norm(b_sim - b_quad, axis=-1)
    den = np.linalg.norm(b_sim, axis=-1)
    return float(np.max(num / den))


def quadrupole_fit_rms(coils: CoilPair, half_width: float,
                       n_samples: int = 200, seed: int = 0) -> float:
    """Quadrupole approximation error of a coil pair over a centered cube.

    Draws ``n_samples`` points uniformly in the cube of half-width
    ``half_width`` (seeded, so repeatable), evaluates the Biot-Savart field
    and the quadrupole built from :func:`extract_gradients`, and returns the
    worst relative deviation.

    Notes
    -----
    ``n_samples >= 100`` keeps the max statistic stable; the sample set is
    drawn once in the unit cube and scaled, so sweeps over ``half_width``
    with the same seed use nested point sets.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 sample points")
    rng = np.random.default_rng(seed)
    unit = rng.uniform(-1.0, 1.0, size=(n_samples, 3))
    points = half_width * unit
    b_sim = biot_savart_field(coils, points)
    quad = extract_gradients(coils).field
    return quadrupole_rms_from_samples(points, b_sim, quad)
