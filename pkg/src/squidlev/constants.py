"""Physical constants and fixed engineering defaults used across the package.

All quantities are SI unless the name says otherwise. Keeping them in one
place means every module and the command line agree on the same numbers;
``constants_table()`` is what ``squidlev --constants`` prints.
"""

import math

# fundamental
MU0 = 4e-7 * math.pi            # vacuum permeability [H/m]
K_B = 1.380649e-23              # Boltzmann constant [J/K]
HBAR = 1.054571817e-34          # reduced Planck constant [J s]
PHI0 = 2.067833848e-15          # magnetic flux quantum [Wb]

# local gravity; overridable through the scenario `constants.g` key
STANDARD_GRAVITY = 9.81         # [m/s^2]

# material / engineering defaults
DENSITY_LEAD_TIN = 10.9e3       # solder sphere density [kg/m^3]
YOUNG_MODULUS_STEEL_304 = 193e9  # spring-wire Young's modulus [Pa]
GAS_DAMPING_BETA = 1.8          # free-molecular drag prefactor, spherical geometry
HELIUM_MOLECULE_MASS = 6.6465e-27  # [kg]

# modified Wheeler coefficients for a planar spiral (octagonal layout)
WHEELER_K1 = 2.25
WHEELER_K2 = 3.55


def constants_table():
    """Return the constants as a list of (name, value, units) rows."""
    return [
        ("mu_0", MU0, "H/m"),
        ("k_B", K_B, "J/K"),
        ("hbar", HBAR, "J s"),
        ("Phi_0", PHI0, "Wb"),
        ("g", STANDARD_GRAVITY, "m/s^2"),
        ("rho_sphere_default", DENSITY_LEAD_TIN, "kg/m^3"),
        ("E_steel_304", YOUNG_MODULUS_STEEL_304, "Pa"),
        ("beta_gas", GAS_DAMPING_BETA, "1"),
        ("m_helium", HELIUM_MOLECULE_MASS, "kg"),
        ("wheeler_K1", WHEELER_K1, "1"),
        ("wheeler_K2", WHEELER_K2, "1"),
    ]
