"""Exact field response of a superconducting sphere in a quadrupole trap.

A sphere that fully expels the field (penetration depth negligible against
the radius) distorts an applied quadrupole B0 into B = B0 - grad(Phi), where
Phi is an exterior multipole series. For a linear applied field the series
terminates at degree 2, so the response is captured by six coefficients in
the orthonormal complex spherical-harmonic basis (Condon-Shortley phase):

    a_{1,0}  = -b_z sqrt(pi/3)  R^3 z0
    a_{1,-1} = -sqrt(pi/6) R^3 (b_x x0 + i b_y y0)
    a_{1,1}  =  sqrt(pi/6) R^3 (b_x x0 - i b_y y0)
    a_{2,0}  = -b_z sqrt(4 pi/45) R^5
    a_{2,2}  = a_{2,-2} = (b_y - b_x) sqrt(2 pi/135) R^5

with (x0, y0, z0) the sphere center's offset from the trap center. All
positions handed to field evaluators are in sphere-centered coordinates.
The boundary condition B . r_hat = 0 on the surface pins the convention and
is what the tests check against.

The restoring force follows either from the closed form

    F = -(3 V / 2 mu0) (b_x^2 x0, b_y^2 y0, b_z^2 z0)

or, as an independent route, from integrating the magnetic pressure
|B|^2 / (2 mu0) over the surface (Maxwell stress with B tangential).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import MU0, STANDARD_GRAVITY
from .errors import InteriorPoint, ZeroFrequency
from .fieldmodel import QuadrupoleField

__all__ = [
    "SphereParams",
    "MultipoleSolution",
    "solve_coefficients",
    "total_field",
    "response_field",
    "force_analytic",
    "force_stress_tensor",
    "trap_frequencies",
    "gravity_sag",
]

# tolerated inward excursion when evaluating on the surface itself
SURFACE_SLACK = 1e-12


@dataclass(frozen=True)
class SphereParams:
    """Sphere radius [m] and mass density [kg/m^3]."""

    radius: float
    density: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")
        if self.density <= 0:
            raise ValueError("sphere density must be positive")

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3

    @property
    def mass(self) -> float:
        return self.density * self.volume


@dataclass(frozen=True)
class MultipoleSolution:
    """Response coefficients of a sphere at a given offset.

    Attributes
    ----------
    a10 : float
        Degree-1, m=0 coefficient (real).
    a1m1 : complex
        Degree-1, m=-1 coefficient; ``a11 = -conj(a1m1)`` by realness.
    a20, a22 : float
        Degree-2 coefficients (m=0 and m=+/-2; the latter equal and real).
    quad : QuadrupoleField
        Applied field.
    offset : ndarray (3,)
        Sphere center relative to the trap center [m].
    radius : float
        Sphere radius [m].
    """

    a10: float
    a1m1: complex
    a20: float
    a22: float
    quad: QuadrupoleField
    offset: np.ndarray
    radius: float

    @property
    def a11(self) -> complex:
        return -np.conj(self.a1m1)

    @property
    def a2m2(self) -> float:
        return self.a22

    @property
    def dipole_vector(self) -> np.ndarray:
        """Cartesian vector p with Phi_1 = (p . r) / r^3."""
        return np.array([
            math.sqrt(3.0 / (2.0 * math.pi)) * self.a1m1.real,
            math.sqrt(3.0 / (2.0 * math.pi)) * self.a1m1.imag,
            math.sqrt(3.0 / (4.0 * math.pi)) * self.a10,
        ])


def solve_coefficients(quad: QuadrupoleField, offset, sphere: SphereParams) -> MultipoleSolution:
    """Solve the exterior boundary-value problem for a displaced sphere.

    Parameters
    ----------
    quad : QuadrupoleField
    offset : array_like (3,)
        Sphere center relative to the trap center [m].
    sphere : SphereParams

    Returns
    -------
    MultipoleSolution
    """
    off = np.asarray(offset, dtype=float)
    if off.shape != (3,):
        raise ValueError("offset must be a 3-vector")
    r3 = sphere.radius**3
    r5 = sphere.radius**5
    a10 = -quad.b_z * math.sqrt(math.pi / 3.0) * r3 * off[2]
    a1m1 = -math.sqrt(math.pi / 6.0) * r3 * (quad.b_x * off[0] + 1j * quad.b_y * off[1])
    a20 = -quad.b_z * math.sqrt(4.0 * math.pi / 45.0) * r5
    a22 = (quad.b_y - quad.b_x) * math.sqrt(2.0 * math.pi / 135.0) * r5
    return MultipoleSolution(a10=a10, a1m1=a1m1, a20=a20, a22=a22,
                             quad=quad, offset=off, radius=sphere.radius)


def response_field(sol: MultipoleSolution, points) -> np.ndarray:
    """Field of the sphere's screening currents, ``-grad(Phi)``.

    ``points`` are sphere-centered [m]; no interior check is applied here
    (the expansion is only meaningful outside, see :func:`total_field`).
    """
    p = np.asarray(points, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    r2 = x * x + y * y + z * z
    r = np.sqrt(r2)
    ir5 = r**-5
    ir7 = r**-7

    # degree 1: Phi_1 = (d . r)/r^3
    d = sol.dipole_vector
    dr = d[0] * x + d[1] * y + d[2] * z
    grad = d * (r**-3)[..., None] - 3.0 * (dr * ir5)[..., None] * p

    # degree 2: Phi_2 = A (2 z^2 - x^2 - y^2)/r^5 + C (x^2 - y^2)/r^5
    A = sol.a20 * math.sqrt(5.0 / (16.0 * math.pi))
    C = sol.a22 * math.sqrt(15.0 / (8.0 * math.pi))
    q = 2.0 * z * z - x * x - y * y
    w = x * x - y * y
    grad2 = np.empty(p.shape)
    grad2[..., 0] = (-A * x * (2.0 * r2 + 5.0 * q) + C * x * (2.0 * r2 - 5.0 * w)) * ir7
    grad2[..., 1] = (-A * y * (2.0 * r2 + 5.0 * q) - C * y * (2.0 * r2 + 5.0 * w)) * ir7
    grad2[..., 2] = (A * z * (4.0 * r2 - 5.0 * q) - 5.0 * C * z * w) * ir7

    return -(grad + grad2)


def total_field(sol: MultipoleSolution, points) -> np.ndarray:
    """Total field B0 - grad(Phi) at sphere-centered ``points`` [T].

    Raises
    ------
    InteriorPoint
        If any point lies strictly inside the sphere.
    """
    p = np.asarray(points, dtype=float)
    r = np.linalg.norm(p, axis=-1)
    if np.any(r < sol.radius * (1.0 - SURFACE_SLACK)):
        raise InteriorPoint("field evaluation requested inside the sphere")
    applied = sol.quad.field(p + sol.offset)
    return applied + response_field(sol, p)


def force_analytic(quad: QuadrupoleField, offset, sphere: SphereParams) -> np.ndarray:
    """Closed-form restoring force on a displaced sphere [N].

    ``F = -(3 V / 2 mu0) (b_x^2 x0, b_y^2 y0, b_z^2 z0)``; linear in the
    offset, so each axis is an independent harmonic spring.
    """
    off = np.asarray(offset, dtype=float)
    g2 = quad.gradients**2
    return -1.5 * sphere.volume / MU0 * g2 * off


def force_stress_tensor(sol: MultipoleSolution, sphere: SphereParams,
                        n_quadrature: int = 64) -> np.ndarray:
    """Force by surface integration of the magnetic pressure [N].

    With B tangential on the surface the Maxwell stress reduces to an inward
    pressure |B|^2/(2 mu0), so

        F = -(1/(2 mu0)) * surface_integral(|B|^2 n_hat dS),

    evaluated with an ``n_quadrature`` x ``n_quadrature`` product rule
    (Gauss-Legendre in cos(theta), trapezoid in phi). This is the
    independent check of :func:`force_analytic`.

    Parameters
    ----------
    n_quadrature : int
        Nodes per angular direction; at least 16.
    """
    if n_quadrature < 16:
        raise ValueError("need at least 16 quadrature nodes per direction")
    mu, w_mu = np.polynomial.legendre.leggauss(n_quadrature)
    phi = np.linspace(0.0, 2.0 * np.pi, n_quadrature, endpoint=False)
    w_phi = 2.0 * np.pi / n_quadrature

    sin_t = np.sqrt(1.0 - mu**2)
    normals = np.empty((n_quadrature, n_quadrature, 3))
    normals[..., 0] = sin_t[:, None] * np.cos(phi)[None, :]
    normals[..., 1] = sin_t[:, None] * np.sin(phi)[None, :]
    normals[..., 2] = mu[:, None]

    b = total_field(sol, sphere.radius * normals)
    pressure = np.sum(b * b, axis=-1) / (2.0 * MU0)
    weights = w_mu[:, None] * w_phi * sphere.radius**2
    return -np.einsum("ij,ijk->k", pressure * weights, normals)


def trap_frequencies(quad: QuadrupoleField, density: float) -> np.ndarray:
    """Trap frequencies (f_x, f_y, f_z) in Hz.

    ``f_i = sqrt(3 / (8 pi^2 mu0 rho)) |b_i|``; the sphere radius cancels,
    so the frequencies depend only on the gradients and the density.
    """
    if density <= 0:
        raise ValueError("density must be positive")
    prefactor = math.sqrt(3.0 / (8.0 * math.pi**2 * MU0 * density))
    return prefactor * np.abs(quad.gradients)


def gravity_sag(f_z: float, g: float = STANDARD_GRAVITY) -> float:
    """Static vertical displacement of the trapped sphere [m].

    ``z_g = -g / (2 pi f_z)^2``; negative means the equilibrium sits below
    the field zero. ``g = 0`` returns exactly zero.
    """
    if f_z <= 0:
        raise ZeroFrequency(f"vertical trap frequency must be positive, got {f_z:g} Hz")
    return -g / (2.0 * math.pi * f_z) ** 2
