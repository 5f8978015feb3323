"""mesodrop: smoothed effective potentials and mean-field ground states of
finite boson droplets, with a reproducible CLI front end."""

__version__ = "0.1.0"

from .units import CODATA, Constants, DropletSpec, kelvin_to_joule, joule_to_kelvin, make_droplet
from .potential import HE4_HFDHE2, PairPotential, WellAnalysis, analyze_bare_well, analyze_well, evaluate

__all__ = [
    "CODATA",
    "Constants",
    "DropletSpec",
    "HE4_HFDHE2",
    "PairPotential",
    "WellAnalysis",
    "analyze_bare_well",
    "analyze_well",
    "evaluate",
    "joule_to_kelvin",
    "kelvin_to_joule",
    "make_droplet",
]
