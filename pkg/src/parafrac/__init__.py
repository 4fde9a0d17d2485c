"""L^q-spectra and box dimensions of measures on parabolic Cantor sets and carpets."""

from .config import build, load_config, parse_config
from .errors import (BracketError, CapacityError, ConfigError, ConvergenceError, DomainError,
                     ParafracError)
from .measure import BernoulliMeasure, TableMeasure, project
from .system import CantorSystem, CarpetSystem, validate
from .thermo import beta_root, gamma_root, spectrum_curve

__all__ = [
    "BernoulliMeasure", "BracketError", "CantorSystem", "CapacityError", "CarpetSystem", "ConfigError",
    "ConvergenceError", "DomainError", "ParafracError", "TableMeasure", "beta_root", "build",
    "gamma_root", "load_config", "parse_config", "project", "spectrum_curve", "validate",
]
__version__ = "0.1.0"
