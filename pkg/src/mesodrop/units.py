"""Physical constants, unit conversions, and the droplet scale hierarchy.

Internal convention used across the package: lengths in angstrom, energies
in joule.  Kelvin appears only at I/O boundaries (CSV/JSON columns), always
through the conversions below.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    """Fundamental constants (SI), overridable for sensitivity runs."""

    hbar: float = 1.054571817e-34  # J*s
    k_B: float = 1.380649e-23      # J/K
    m: float = 6.6464731e-27       # kg, He-4 atomic mass


CODATA = Constants()

#: One angstrom in metres; lengths are stored in angstrom throughout.
ANGSTROM = 1e-10


def kelvin_to_joule(t_kelvin: float, constants: Constants = CODATA) -> float:
    """Convert a temperature-equivalent energy from kelvin to joule."""
    return t_kelvin * constants.k_B


def joule_to_kelvin(e_joule: float, constants: Constants = CODATA) -> float:
    """Convert an energy from joule to its kelvin equivalent."""
    return e_joule / constants.k_B


@dataclass(frozen=True)
class DropletSpec:
    """Geometry and scale separation of a finite droplet.

    ``epsilon = spacing / size`` is the small parameter of the scale
    hierarchy; under the canonical constructor it equals ``n_particles**(-1/3)``
    so that ``size = spacing * n_particles**(1/3)``.
    """

    n_particles: int
    spacing: float    # nearest-neighbor distance l (angstrom)
    epsilon: float    # scale ratio l / L
    size: float       # droplet size L (angstrom)
    density: float    # number density (angstrom^-3)


def make_droplet(n_particles: int, spacing: float = 3.6) -> DropletSpec:
    """Build a droplet spec from particle count and nearest-neighbor distance.

    Defaults to the typical liquid-helium spacing of 3.6 angstrom.
    Rejects ``n_particles < 2`` and non-positive spacings.
    """
    if n_particles < 2:
        raise ValueError(f"droplet needs at least 2 particles, got {n_particles}")
    if spacing <= 0.0:
        raise ValueError(f"nearest-neighbor distance must be positive, got {spacing}")
    epsilon = float(n_particles) ** (-1.0 / 3.0)
    size = spacing * float(n_particles) ** (1.0 / 3.0)
    density = spacing**-3
    return DropletSpec(
        n_particles=n_particles,
        spacing=spacing,
        epsilon=epsilon,
        size=size,
        density=density,
    )


def scale_ratio(n_particles: int) -> float:
    """epsilon for the canonical construction, ``n_particles**(-1/3)``."""
    if n_particles < 2:
        raise ValueError(f"droplet needs at least 2 particles, got {n_particles}")
    return float(n_particles) ** (-1.0 / 3.0)


def characteristic_kinetic_energy(spec: DropletSpec, constants: Constants = CODATA) -> float:
    """hbar^2 / (m L^2): kinetic scale of the longest-wavelength modes (J)."""
    size_m = spec.size * ANGSTROM
    return constants.hbar**2 / (constants.m * size_m**2)
