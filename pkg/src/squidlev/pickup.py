"""Pickup-loop flux coupling and SQUID readout noise referral.

The sphere's motion is read out through the flux its screening currents
induce in a superconducting pickup loop wired to a SQUID. The central
quantity is the coupling

    nu_i = d(flux through loop) / d(sphere offset along axis i)   [Wb/m]

evaluated at the working point. Two routes are implemented: a closed form
for a coaxial circular turn,

    nu_1 = pi b_z R_P^2 (R^2/(R_P^2+Z_P^2))^{3/2}
           * (1 - R^2/(R_P^2+Z_P^2) (1 - 5 Z_P^2/(R_P^2+Z_P^2))),

and a numeric route that integrates the response field over a spanning
surface and differentiates over the sphere offset. Only the response field
enters the derivative; the applied trap flux through a fixed loop does not
change when the sphere moves.

Orientation convention: the sign of a flux coupling is set by how the loop
is wired. ``sense=+1`` here means the turn is wound so a loop above the
sphere couples positively to the vertical mode when b_z > 0 (the convention
in which the closed form above is positive); geometrically that is a
spanning-surface normal along -z for a horizontal loop. Polyline loops get
their normal from the right-hand rule on the vertex order, multiplied by
``sense``.

The SQUID side: a pickup coil of total inductance L_P in series with wiring
L_W and the SQUID input coil L_I transforms the flux by M/(L_P+L_I+L_W)
with M = k sqrt(L_I L_S), giving the displacement-referred coupling
eta = nu M / (L_P+L_I+L_W) and measurement noise S_nn = S_phiphi / eta^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .constants import HBAR, MU0, PHI0, WHEELER_K1, WHEELER_K2
from .errors import (
    InfeasibleConstraint,
    LoopInsideSphere,
    LoopTooClose,
    ZeroCoupling,
)
from .fieldmodel import QuadrupoleField
from .sphere import MultipoleSolution, SphereParams, response_field, solve_coefficients

__all__ = [
    "CoaxialCircle",
    "PolylineLoop",
    "PickupCoil",
    "SquidCircuit",
    "PickupOptimum",
    "coupling_nu_analytic",
    "coupling_nu_numeric",
    "response_flux",
    "coil_coupling",
    "squid_coupling",
    "wheeler_inductance",
    "measurement_noise",
    "optimize_pickup",
    "eta_to_phi0_per_m",
]

# default finite-difference step for offset derivatives [m]
COUPLING_STEP = 1e-7

# clearance margin (relative to sphere radius) demanded of spanning surfaces
CLEARANCE = 1e-9


@dataclass(frozen=True)
class CoaxialCircle:
    """Circular pickup turn of radius ``radius`` in the plane z = ``z``.

    ``sense=+1`` follows the package orientation convention (positive
    vertical coupling for b_z > 0); flip to -1 for the reverse winding.
    Positions are in trap-centered (lab) coordinates.
    """

    radius: float
    z: float
    sense: int = 1

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("loop radius must be positive")
        if self.sense not in (-1, 1):
            raise ValueError("sense must be +1 or -1")

    def rim_distance(self) -> float:
        return math.hypot(self.radius, self.z)


@dataclass(frozen=True)
class PolylineLoop:
    """Closed polygonal pickup loop given by its vertices, shape (n, 3).

    The loop closes from the last vertex back to the first. The spanning
    surface normal follows the right-hand rule on the vertex order and is
    multiplied by ``sense``; a horizontal loop traversed clockwise when
    viewed from +z matches the coaxial ``sense=+1`` convention.
    """

    vertices: np.ndarray
    sense: int = 1

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] < 3 or v.shape[1] != 3:
            raise ValueError("need at least 3 vertices of dimension 3")
        object.__setattr__(self, "vertices", v)
        if self.sense not in (-1, 1):
            raise ValueError("sense must be +1 or -1")

    @classmethod
    def rectangle(cls, center, width, height, z, sense: int = 1,
                  n_per_side: int = 1) -> "PolylineLoop":
        """Axis-aligned rectangle in the plane z, clockwise seen from +z."""
        cx, cy = center
        hw, hh = 0.5 * width, 0.5 * height
        corners = [(cx - hw, cy - hh), (cx - hw, cy + hh),
                   (cx + hw, cy + hh), (cx + hw, cy - hh)]
        pts = []
        for i in range(4):
            x0, y0 = corners[i]
            x1, y1 = corners[(i + 1) % 4]
            for t in np.linspace(0.0, 1.0, n_per_side, endpoint=False):
                pts.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0), z))
        return cls(np.array(pts), sense)


@dataclass(frozen=True)
class PickupCoil:
    """Planar spiral pickup coil of coaxial turns at height ``z``.

    Turn centerlines sit at ``inner_radius + wire_width/2 + i * pitch``.
    The pitch depends on how the wire spacing is quoted:
    ``spacing_convention="edge"`` (default) reads ``wire_spacing`` as the
    gap between adjacent wires, so pitch = width + spacing;
    ``"center"`` reads it as the center-to-center pitch directly.
    """

    inner_radius: float
    turns: int
    wire_width: float
    wire_spacing: float
    z: float
    sense: int = 1
    spacing_convention: str = "edge"

    def __post_init__(self):
        if self.inner_radius < 0:
            raise ValueError("inner radius must be non-negative")
        if self.turns < 1:
            raise ValueError("need at least one turn")
        if self.wire_width <= 0 or self.wire_spacing < 0:
            raise ValueError("wire dimensions must be positive")
        if self.spacing_convention not in ("edge", "center"):
            raise ValueError("spacing_convention must be 'edge' or 'center'")
        if self.spacing_convention == "center" and self.wire_spacing < self.wire_width:
            raise ValueError("center-to-center pitch smaller than the wire width")

    @property
    def pitch(self) -> float:
        if self.spacing_convention == "edge":
            return self.wire_width + self.wire_spacing
        return self.wire_spacing

    @property
    def turn_radii(self) -> np.ndarray:
        return (self.inner_radius + 0.5 * self.wire_width
                + self.pitch * np.arange(self.turns))

    @property
    def outer_radius(self) -> float:
        return self.inner_radius + (self.turns - 1) * self.pitch + self.wire_width

    def loops(self):
        return [CoaxialCircle(r, self.z, self.sense) for r in self.turn_radii]


@dataclass(frozen=True)
class SquidCircuit:
    """Inductances and noise figures of the SQUID readout chain.

    Attributes
    ----------
    L_S : float
        SQUID loop inductance [H].
    L_I : float
        Input coil inductance [H].
    L_W : float
        Parasitic wiring inductance [H].
    k : float
        Input-coupler coefficient; ``M = k sqrt(L_I L_S)``. Give either
        ``k`` or ``M`` at construction.
    S_phiphi : float
        One-sided flux noise PSD of the SQUID [Wb^2/Hz].
    S_JJ : float
        One-sided back-action current noise PSD [A^2/Hz]. Defaults to the
        quantum-limited value ``hbar^2 / S_phiphi``. The cross term S_phiJ
        is taken as zero, and sqrt(S_phiphi * S_JJ) >= hbar is enforced.
    L_P : float or None
        Pickup inductance [H] if fixed by hand; otherwise supplied by a
        coil model at use time.
    """

    L_S: float
    L_I: float
    L_W: float
    S_phiphi: float
    k: float = None
    M: float = None
    S_JJ: float = None
    L_P: float = None

    def __post_init__(self):
        for name in ("L_S", "L_I"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.L_W < 0:
            raise ValueError("L_W must be non-negative")
        if self.S_phiphi <= 0:
            raise ValueError("S_phiphi must be positive")
        if (self.k is None) == (self.M is None):
            raise ValueError("give exactly one of k or M")
        if self.k is None:
            object.__setattr__(self, "k", self.M / math.sqrt(self.L_I * self.L_S))
        else:
            object.__setattr__(self, "M", self.k * math.sqrt(self.L_I * self.L_S))
        if not 0.0 < self.k <= 1.0:
            raise ValueError(f"coupling coefficient k = {self.k:g} outside (0, 1]")
        if self.S_JJ is None:
            object.__setattr__(self, "S_JJ", HBAR**2 / self.S_phiphi)
        # uncertainty product with S_phiJ = 0; small slack for rounding
        product = math.sqrt(self.S_phiphi * self.S_JJ)
        if product < HBAR * (1.0 - 1e-9):
            raise ValueError(
                f"sqrt(S_phiphi S_JJ) = {product / HBAR:.3g} hbar violates the "
                "quantum limit"
            )

    @property
    def S_EE(self) -> float:
        """Energy resolution ``S_phiphi / (2 L_S)`` [J/Hz]."""
        return self.S_phiphi / (2.0 * self.L_S)

    def total_inductance(self, L_P: float = None) -> float:
        lp = self._pickup_inductance(L_P)
        return lp + self.L_I + self.L_W

    def flux_transfer(self, L_P: float = None) -> float:
        """Dimensionless flux transfer M / (L_P + L_I + L_W)."""
        return self.M / self.total_inductance(L_P)

    def _pickup_inductance(self, L_P):
        lp = self.L_P if L_P is None else L_P
        if lp is None:
            raise ValueError("no pickup inductance available; set L_P or pass a coil")
        return lp


def coupling_nu_analytic(b_z: float, sphere_radius: float,
                         loop_radius: float, loop_z: float) -> float:
    """Closed-form vertical coupling of one coaxial turn [Wb/m].

    Valid for any exterior coaxial circle; see the module docstring for the
    expression and sign convention.

    Raises
    ------
    LoopInsideSphere
        If the turn is not strictly exterior to the sphere.
    """
    s2 = loop_radius**2 + loop_z**2
    if s2 <= sphere_radius**2:
        raise LoopInsideSphere("coaxial turn not exterior to the sphere")
    ratio = sphere_radius**2 / s2
    correction = 1.0 - ratio * (1.0 - 5.0 * loop_z**2 / s2)
    return math.pi * b_z * loop_radius**2 * ratio**1.5 * correction


# --- numeric flux machinery -------------------------------------------------

def _cap_flux(sol: MultipoleSolution, radius, z, sense, n_theta=48, n_phi=64):
    """Response flux through a coaxial circle via a spherical-cap surface.

    The cap lies on the sphere through the rim (radius hypot(radius, z)
    about the origin), so it never intersects the levitated sphere as long
    as the rim is exterior. Orientation follows the package convention.
    """
    r_cap = math.hypot(radius, z)
    if r_cap <= sol.radius * (1.0 + CLEARANCE):
        raise LoopInsideSphere("coaxial turn not exterior to the sphere")
    cos_rim = z / r_cap
    if z >= 0.0:
        lo, hi, orient = cos_rim, 1.0, -1.0   # north cap, normal -r_hat
    else:
        lo, hi, orient = -1.0, cos_rim, 1.0   # south cap, normal +r_hat

    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    mu = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    w_mu = 0.5 * (hi - lo) * weights
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    w_phi = 2.0 * np.pi / n_phi

    sin_t = np.sqrt(1.0 - mu**2)
    rhat = np.empty((n_theta, n_phi, 3))
    rhat[..., 0] = sin_t[:, None] * np.cos(phi)[None, :]
    rhat[..., 1] = sin_t[:, None] * np.sin(phi)[None, :]
    rhat[..., 2] = mu[:, None]

    b = response_field(sol, r_cap * rhat)
    b_r = np.sum(b * rhat, axis=-1)
    integral = r_cap**2 * w_phi * np.sum(w_mu[:, None] * b_r)
    return sense * orient * integral


def _disk_flux(sol: MultipoleSolution, center, radius, sense,
               n_rad=48, n_phi=64):
    """Response flux through an off-axis horizontal circle via its disk."""
    cx, cy, cz = center
    rho_c = math.hypot(cx, cy)
    closest = abs(cz) if rho_c <= radius else math.hypot(cz, rho_c - radius)
    if closest <= sol.radius * (1.0 + CLEARANCE):
        raise LoopTooClose(
            "spanning disk would intersect the sphere; keep the loop plane "
            "clear of the sphere for off-axis couplings"
        )
    nodes, weights = np.polynomial.legendre.leggauss(n_rad)
    s = 0.5 * radius * (nodes + 1.0)
    w_s = 0.5 * radius * weights
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    w_phi = 2.0 * np.pi / n_phi

    pts = np.empty((n_rad, n_phi, 3))
    pts[..., 0] = cx + s[:, None] * np.cos(phi)[None, :]
    pts[..., 1] = cy + s[:, None] * np.sin(phi)[None, :]
    pts[..., 2] = cz
    b_z = response_field(sol, pts)[..., 2]
    integral = w_phi * np.sum((w_s * s)[:, None] * b_z)
    return -sense * integral   # normal -z for sense=+1


def _polyline_flux(sol: MultipoleSolution, vertices, sense, n_gauss=24):
    """Response flux through a polyline loop via fan triangulation."""
    v = np.asarray(vertices, dtype=float)
    centroid = v.mean(axis=0)
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    u = 0.5 * (nodes + 1.0)
    w_u = 0.5 * weights
    U, V = np.meshgrid(u, u, indexing="ij")
    W2 = np.outer(w_u, w_u)

    total = 0.0
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        # P(u, v) = c + u [(a-c) + v (b-a)], u,v in [0,1]
        edge1 = a - centroid
        edge2 = b - a
        pts = centroid + U[..., None] * (edge1 + V[..., None] * edge2)
        rad = np.linalg.norm(pts, axis=-1)
        if np.any(rad <= sol.radius * (1.0 + CLEARANCE)):
            raise LoopTooClose("triangulated spanning surface touches the sphere")
        # dP/du x dP/dv = u [(a-c) + v (b-a)] x (b-a)
        jac = np.cross(edge1 + V[..., None] * edge2, edge2) * U[..., None]
        bf = response_field(sol, pts)
        total += np.sum(W2 * np.sum(bf * jac, axis=-1))
    return sense * total


def response_flux(sol: MultipoleSolution, loop, lab_frame: bool = True) -> float:
    """Flux of the sphere's response field through a pickup loop [Wb].

    ``loop`` geometry is given in trap-centered coordinates by default and
    is translated into the sphere frame using the solution's offset; pass
    ``lab_frame=False`` if the geometry is already sphere-centered.
    """
    shift = sol.offset if lab_frame else np.zeros(3)
    if isinstance(loop, CoaxialCircle):
        if shift[0] == 0.0 and shift[1] == 0.0:
            return _cap_flux(sol, loop.radius, loop.z - shift[2], loop.sense)
        center = (-shift[0], -shift[1], loop.z - shift[2])
        return _disk_flux(sol, center, loop.radius, loop.sense)
    if isinstance(loop, PolylineLoop):
        return _polyline_flux(sol, loop.vertices - shift, loop.sense)
    raise TypeError(f"unsupported loop type {type(loop).__name__}")


def coupling_nu_numeric(quad: QuadrupoleField, sphere: SphereParams, loop,
                        axis: int, base_offset=(0.0, 0.0, 0.0),
                        step: float = COUPLING_STEP) -> float:
    """Flux coupling d(flux)/d(offset_axis) by numeric differentiation [Wb/m].

    Central differences over the sphere offset with Richardson extrapolation
    (steps ``step`` and ``step/2``). This is the independent check of
    :func:`coupling_nu_analytic` and the only route for non-coaxial loops
    or transverse axes.

    Parameters
    ----------
    axis : int
        0, 1, 2 for x, y, z.
    base_offset : array_like
        Working-point offset of the sphere [m].
    """
    base = np.asarray(base_offset, dtype=float)

    def flux_at(delta):
        off = base.copy()
        off[axis] += delta
        sol = solve_coefficients(quad, off, sphere)
        return response_flux(sol, loop)

    def central(h):
        return (flux_at(h) - flux_at(-h)) / (2.0 * h)

    d1 = central(step)
    d2 = central(0.5 * step)
    return (4.0 * d2 - d1) / 3.0


def coil_coupling(quad: QuadrupoleField, sphere: SphereParams, pickup,
                  axis: int = 2, base_offset=(0.0, 0.0, 0.0)) -> float:
    """Total coupling of a pickup coil or an explicit list of loops [Wb/m].

    Sums per-turn couplings. Coaxial turns along the vertical axis at zero
    working offset use the closed form; everything else goes through the
    numeric route.
    """
    if isinstance(pickup, PickupCoil):
        loops = pickup.loops()
    elif isinstance(pickup, (CoaxialCircle, PolylineLoop)):
        loops = [pickup]
    else:
        loops = list(pickup)

    base = np.asarray(base_offset, dtype=float)
    total = 0.0
    for loop in loops:
        analytic_ok = (
            isinstance(loop, CoaxialCircle) and axis == 2 and not base.any()
        )
        if analytic_ok:
            total += loop.sense * coupling_nu_analytic(
                quad.b_z, sphere.radius, loop.radius, loop.z)
        else:
            total += coupling_nu_numeric(quad, sphere, loop, axis, base)
    return total


def squid_coupling(nu: float, circuit: SquidCircuit = None, L_P: float = None,
                   m_over_l: float = None) -> float:
    """Displacement-to-SQUID-flux coupling eta [Wb/m].

    Either pass the full circuit (plus ``L_P`` if not fixed on the circuit)
    for ``eta = nu M / (L_P + L_I + L_W)``, or the measured flux-transfer
    shorthand ``m_over_l`` for ``eta = nu * (M/L)``.
    """
    if (circuit is None) == (m_over_l is None):
        raise ValueError("give exactly one of circuit or m_over_l")
    if m_over_l is not None:
        return nu * m_over_l
    return nu * circuit.flux_transfer(L_P)


def eta_to_phi0_per_m(eta: float) -> float:
    """Convert a coupling from Wb/m to flux quanta per meter."""
    return eta / PHI0


def wheeler_inductance(coil: PickupCoil) -> float:
    """Planar-spiral inductance by the modified Wheeler formula [H].

    ``L = K1 mu0 N^2 d_avg y / (1 + K2 rho)`` with ``d_avg`` the mean of the
    winding's inner and outer diameters and ``rho`` their fill ratio.
    Accurate to a few percent for spirals with more than a couple of turns;
    the tests hold it against a filament mutual-inductance summation.
    """
    d_in = 2.0 * coil.inner_radius
    d_out = 2.0 * coil.outer_radius
    d_avg = 0.5 * (d_in + d_out)
    rho = (d_out - d_in) / (d_out + d_in)
    return WHEELER_K1 * MU0 * coil.turns**2 * d_avg / (1.0 + WHEELER_K2 * rho)


def measurement_noise(nu: float, coil: PickupCoil = None,
                      circuit: SquidCircuit = None) -> float:
    """Displacement-referred readout noise PSD S_nn [m^2/Hz].

    ``S_nn = (2 S_EE / k^2) (L_P + L_I + L_W)^2 / (nu^2 L_I)``, identically
    ``S_phiphi / eta^2``.

    Raises
    ------
    ZeroCoupling
        If ``nu`` vanishes (noise referral undefined).
    """
    if circuit is None:
        raise ValueError("a SquidCircuit is required")
    if nu == 0.0:
        raise ZeroCoupling("cannot refer SQUID noise through zero coupling")
    L_P = wheeler_inductance(coil) if coil is not None else None
    total = circuit.total_inductance(L_P)
    return (2.0 * circuit.S_EE / circuit.k**2) * total**2 / (nu**2 * circuit.L_I)


# --- pickup-coil optimization ----------------------------------------------

@dataclass(frozen=True)
class PickupOptimum:
    """Result of :func:`optimize_pickup`.

    Carries the optimal geometry, its figures of merit, and enough metadata
    (grids, constraint, inputs echo) to reproduce the search.
    """

    coil: PickupCoil
    nu: float
    eta: float
    L_P: float
    S_nn: float
    inputs: dict
    grid: dict

    @property
    def sqrt_S_nn(self) -> float:
        return math.sqrt(self.S_nn)

    @property
    def eta_phi0_per_m(self) -> float:
        return eta_to_phi0_per_m(self.eta)

    def to_dict(self) -> dict:
        return {
            "inputs": dict(self.inputs),
            "optimum": {
                "inner_radius_m": self.coil.inner_radius,
                "z_m": self.coil.z,
                "turns": self.coil.turns,
                "outer_radius_m": self.coil.outer_radius,
                "nu_Wb_per_m": self.nu,
                "eta_Wb_per_m": self.eta,
                "eta_Phi0_per_m": self.eta_phi0_per_m,
                "L_P_H": self.L_P,
            },
            "objective": {
                "S_nn_m2_per_Hz": self.S_nn,
                "sqrt_S_nn_m_per_sqrtHz": self.sqrt_S_nn,
            },
            "grid": dict(self.grid),
        }


def _spiral_figures(sphere, b_z, circuit, inner_radius, z, wire_width, pitch,
                    n_turns_max):
    """nu, L_P, eta, S_nn for every turn count 1..n_turns_max at once."""
    radii = inner_radius + 0.5 * wire_width + pitch * np.arange(n_turns_max)
    s2 = radii**2 + z**2
    ratio = sphere.radius**2 / s2
    nu_turns = (np.pi * b_z * radii**2 * ratio**1.5
                * (1.0 - ratio * (1.0 - 5.0 * z**2 / s2)))
    nu = np.cumsum(nu_turns)

    counts = np.arange(1, n_turns_max + 1)
    d_in = 2.0 * inner_radius
    d_out = 2.0 * (inner_radius + (counts - 1) * pitch + wire_width)
    d_avg = 0.5 * (d_in + d_out)
    rho = (d_out - d_in) / (d_out + d_in)
    L_P = WHEELER_K1 * MU0 * counts**2 * d_avg / (1.0 + WHEELER_K2 * rho)

    eta = nu * circuit.M / (L_P + circuit.L_I + circuit.L_W)
    with np.errstate(divide="ignore"):
        S_nn = np.where(eta != 0.0, circuit.S_phiphi / eta**2, np.inf)
    return nu, L_P, eta, S_nn


def optimize_pickup(sphere: SphereParams, b_z: float, circuit: SquidCircuit,
                    wire_width: float, wire_spacing: float,
                    spacing_convention: str = "edge",
                    z_min: float = None, n_turns_max: int = 300,
                    r_grid: int = 40, z_grid: int = 33) -> PickupOptimum:
    """Minimize the displacement-referred noise over spiral geometry.

    Searches inner radius, coil height and turn count of a planar spiral
    read out by ``circuit``, subject to the stand-off constraint
    ``z >= z_min`` (default: one sphere radius). Deterministic: a coarse
    grid scan (log in radius, linear in height, every turn count by
    cumulative sums) followed by coordinate-wise golden-section refinement.
    Ties go to fewer turns, then smaller inner radius, then lower height.

    Returns
    -------
    PickupOptimum

    Raises
    ------
    InfeasibleConstraint
        If the constraint leaves no exterior loop to evaluate.
    """
    probe = PickupCoil(1e-6, 1, wire_width, wire_spacing, 1e-6,
                       spacing_convention=spacing_convention)
    pitch = probe.pitch
    if z_min is None:
        z_min = sphere.radius
    if z_min <= 0:
        raise InfeasibleConstraint("stand-off constraint must be positive")

    r_lo, r_hi = 0.5 * pitch, 3.0 * sphere.radius
    z_lo, z_hi = z_min, z_min + 3.0 * sphere.radius
    r_values = np.geomspace(r_lo, r_hi, r_grid)
    z_values = np.linspace(z_lo, z_hi, z_grid)

    def best_over_turns(r_in, z):
        if math.hypot(r_in, z) <= sphere.radius:
            return math.inf, 0
        _, _, _, S_nn = _spiral_figures(sphere, b_z, circuit, r_in, z,
                                        wire_width, pitch, n_turns_max)
        n_best = int(np.argmin(S_nn))
        # tie toward fewer turns
        floor = S_nn[n_best] * (1.0 + 1e-12)
        n_best = int(np.argmax(S_nn <= floor))
        return float(S_nn[n_best]), n_best + 1

    best = None
    for r_in in r_values:
        for z in z_values:
            s, n = best_over_turns(r_in, z)
            if not math.isfinite(s):
                continue
            cand = (s, n, r_in, z)
            if best is None or cand < best:
                best = cand
    if best is None:
        raise InfeasibleConstraint("no exterior pickup geometry in the search region")

    _, n_opt, r_opt, z_opt = best

    def golden(f, lo, hi, iters=60):
        inv = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - inv * (b - a)
        d = a + inv * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(iters):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - inv * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + inv * (b - a)
                fd = f(d)
        return c if fc < fd else d

    # coordinate refinement, two sweeps
    for _ in range(2):
        r_opt = golden(lambda r: best_over_turns(r, z_opt)[0],
                       max(r_lo, 0.5 * r_opt), min(r_hi, 2.0 * r_opt))
        z_opt = golden(lambda z: best_over_turns(r_opt, z)[0],
                       z_min, min(z_hi, 2.0 * z_opt))
        _, n_opt = best_over_turns(r_opt, z_opt)

    coil = PickupCoil(r_opt, n_opt, wire_width, wire_spacing, z_opt,
                      spacing_convention=spacing_convention)
    nu, L_P, eta, S_nn = _spiral_figures(sphere, b_z, circuit, r_opt, z_opt,
                                         wire_width, pitch, n_opt)
    idx = n_opt - 1
    return PickupOptimum(
        coil=coil,
        nu=float(nu[idx]),
        eta=float(eta[idx]),
        L_P=float(L_P[idx]),
        S_nn=float(S_nn[idx]),
        inputs={
            "sphere_radius_m": sphere.radius,
            "b_z_T_per_m": b_z,
            "wire_width_m": wire_width,
            "wire_spacing_m": wire_spacing,
            "spacing_convention": spacing_convention,
            "pitch_m": pitch,
            "z_min_m": z_min,
            "L_S_H": circuit.L_S,
            "L_I_H": circuit.L_I,
            "L_W_H": circuit.L_W,
            "M_H": circuit.M,
            "S_phiphi_Wb2_per_Hz": circuit.S_phiphi,
        },
        grid={
            "inner_radius_m": [r_lo, r_hi, int(r_grid)],
            "z_m": [z_lo, z_hi, int(z_grid)],
            "n_turns_max": int(n_turns_max),
            "refinement": "coordinate golden-section, 2 sweeps",
        },
    )
