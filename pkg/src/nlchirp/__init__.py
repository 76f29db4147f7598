"""Non-linear chirp spread spectrum modem and collision decoder."""

from .chirp import (
    FAMILIES,
    ChirpPolynomial,
    ChirpProfile,
    Waveform,
    base_downchirp,
    fit_unified,
    get_family,
    instantaneous_frequency,
    load_families,
    map_coefficients,
    synth_symbol,
)
from .errors import (
    AmbiguityError,
    ConfigError,
    ContractError,
    DomainError,
    FormatError,
    NotFoundError,
    ResolutionError,
    UnknownFamilyError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "FAMILIES",
    "ChirpPolynomial",
    "ChirpProfile",
    "Waveform",
    "base_downchirp",
    "fit_unified",
    "get_family",
    "instantaneous_frequency",
    "load_families",
    "map_coefficients",
    "synth_symbol",
    "AmbiguityError",
    "ConfigError",
    "ContractError",
    "DomainError",
    "FormatError",
    "NotFoundError",
    "ResolutionError",
    "UnknownFamilyError",
    "ValidationError",
]
