"""
Chirp families in the unit square, their mapping to physical time-frequency
coefficients, and baseband symbol synthesis.

A family is a polynomial f on [0, 1] with f(0) = 0, f(1) = 1 and f' > 0.
For a spreading factor ``sf`` and bandwidth ``bw`` the base up-chirp sweeps

    fc(t) = bw * f(t * bw / 2**sf) - bw / 2,   0 <= t <= 2**sf / bw

and symbol ``s`` shifts the start frequency by ``s * bw / 2**sf``, wrapping
anything at or above ``+bw/2`` back by ``bw``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from . import _kernels
from .errors import ConfigError, DomainError, ValidationError

MAX_ORDER = 8
SF_RANGE = range(7, 13)
_MONO_POINTS = 1024
_TOL = 1e-9


@dataclass(frozen=True)
class ChirpPolynomial:
    """Unified-space chirp shape ``f(x) = sum(coeffs[i] * x**i)``."""

    coeffs: tuple[float, ...]
    family_id: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        self.validate()

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return P.polyval(x, self.coeffs)

    def derivative(self, x):
        return P.polyval(x, P.polyder(self.coeffs))

    def validate(self) -> None:
        if len(self.coeffs) < 2:
            raise ValidationError("order: polynomial order must be >= 1")
        if self.order > MAX_ORDER:
            raise ValidationError(f"order: polynomial order {self.order} exceeds {MAX_ORDER}")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ValidationError("coeffs: non-finite coefficient")
        f0, f1 = self(0.0), self(1.0)
        if abs(f0) > _TOL:
            raise ValidationError(f"endpoint: f(0) = {f0!r}, expected 0")
        if abs(f1 - 1.0) > _TOL:
            raise ValidationError(f"endpoint: f(1) = {f1!r}, expected 1")
        # interior midpoints: families with a flat start/end (sine1) have f' = 0
        # exactly at the endpoints yet are strictly increasing inside
        x = (np.arange(_MONO_POINTS) + 0.5) / _MONO_POINTS
        if np.any(self.derivative(x) <= 0.0):
            raise ValidationError("monotonic: f'(x) <= 0 somewhere on (0, 1)")
        xs = np.linspace(0.0, 1.0, 4 * _MONO_POINTS + 1)
        fx = self(xs)
        if fx.min() < -_TOL or fx.max() > 1.0 + _TOL:
            raise ValidationError("range: f(x) leaves [0, 1] on [0, 1]")


def fit_unified(func: Callable[[np.ndarray], np.ndarray], degree: int = MAX_ORDER,
                max_residual: float = 1e-4, **kwargs) -> ChirpPolynomial:
    """Least-squares polynomial fit of a monotone shape on the unit square.

    Endpoint values (0 and 1) and endpoint slopes of ``func`` are matched
    exactly through a cubic Hermite term; the remaining ``degree - 4``
    degrees of freedom are fitted in least squares.
    """
    if not 4 <= degree <= MAX_ORDER:
        raise ConfigError(f"fit degree must be in [4, {MAX_ORDER}]")
    x = np.linspace(0.0, 1.0, 4001)
    y = np.asarray(func(x), dtype=np.float64)
    h = 1e-6
    s0 = (func(np.array([h]))[0] - func(np.array([0.0]))[0]) / h
    s1 = (func(np.array([1.0]))[0] - func(np.array([1.0 - h]))[0]) / h
    s0 = 0.0 if abs(s0) < 1e-4 else s0
    s1 = 0.0 if abs(s1) < 1e-4 else s1
    # Hermite basis on [0,1] with p(0)=0, p(1)=1, p'(0)=s0, p'(1)=s1
    h01 = [0.0, 0.0, 3.0, -2.0]
    h10 = [0.0, 1.0, -2.0, 1.0]
    h11 = [0.0, 0.0, -1.0, 1.0]
    herm = P.polyadd(P.polyadd(h01, P.polymul([s0], h10)), P.polymul([s1], h11))
    bump = P.polypow([0.0, 1.0, -1.0], 2)  # x^2 (1-x)^2
    cols = [P.polyval(x, P.polymul(bump, [0.0] * j + [1.0])) for j in range(degree - 3)]
    g, *_ = np.linalg.lstsq(np.stack(cols, axis=1), y - P.polyval(x, herm), rcond=None)
    coeffs = P.polyadd(herm, P.polymul(bump, g))
    coeffs = np.pad(coeffs, (0, max(0, 2 - len(coeffs))))
    # trim numerically-zero trailing terms
    while len(coeffs) > 2 and abs(coeffs[-1]) < 1e-12:
        coeffs = coeffs[:-1]
    resid = np.abs(P.polyval(x, coeffs) - y).max()
    if resid >= max_residual:
        raise ValidationError(f"fit: residual {resid:.3g} exceeds {max_residual}")
    coeffs[0] = 0.0
    return ChirpPolynomial(tuple(coeffs), **kwargs)


def _sine_shape(half_span: float):
    s = math.sin(half_span)
    return lambda x: 0.5 * (np.sin(half_span * (2.0 * np.asarray(x) - 1.0)) / s + 1.0)


def _builtin_families() -> dict[str, ChirpPolynomial]:
    fams = {
        "linear": ChirpPolynomial((0.0, 1.0), 0, "linear"),
        "quadratic1": ChirpPolynomial((0.0, 0.0, 1.0), 1, "quadratic1"),
        "quadratic2": ChirpPolynomial((0.0, 2.0, -1.0), 2, "quadratic2"),
        "quartic1": ChirpPolynomial((0.0, 0.0, 0.0, 0.0, 1.0), 3, "quartic1"),
        "quartic2": ChirpPolynomial((0.0, 4.0, -6.0, 4.0, -1.0), 4, "quartic2"),
        "sine1": fit_unified(_sine_shape(math.pi / 2), family_id=5, label="sine1"),
        "sine2": fit_unified(_sine_shape(3 * math.pi / 8), family_id=6, label="sine2"),
    }
    return fams


FAMILIES: dict[str, ChirpPolynomial] = _builtin_families()
NONLINEAR = tuple(k for k in FAMILIES if k != "linear")
POLYNOMIAL_NONLINEAR = ("quadratic1", "quadratic2", "quartic1", "quartic2")


def get_family(name: str | ChirpPolynomial) -> ChirpPolynomial:
    if isinstance(name, ChirpPolynomial):
        return name
    try:
        return FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown chirp family {name!r}") from None


def load_families(path: str | Path) -> dict[str, ChirpPolynomial]:
    """Read a family registry from TOML.

    Each ``[[family]]`` table carries ``id``, ``label`` and either a
    ``coeffs`` list or ``builtin = "<name>"``.
    """
    from ._toml import load_toml

    doc = load_toml(path)
    out: dict[str, ChirpPolynomial] = {}
    entries = doc.get("family")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("registry needs at least one [[family]] table")
    for ent in entries:
        try:
            label = str(ent["label"])
            fid = int(ent["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad family entry {ent!r}") from exc
        if "builtin" in ent:
            src = get_family(ent["builtin"])
            poly = ChirpPolynomial(src.coeffs, fid, label)
        elif "coeffs" in ent:
            poly = ChirpPolynomial(tuple(ent["coeffs"]), fid, label)
        else:
            raise ConfigError(f"family {label!r} needs 'coeffs' or 'builtin'")
        if label in out:
            raise ConfigError(f"duplicate family label {label!r}")
        out[label] = poly
    return out


def map_coefficients(poly: ChirpPolynomial, sf: int, bw: float) -> tuple[float, ...]:
    """Unified-space coefficients -> time-frequency coefficients (Hz/s**i)."""
    poly.validate()
    if sf not in SF_RANGE:
        raise DomainError(f"sf must be in 7..12, got {sf}")
    if not bw > 0:
        raise DomainError("bw must be positive")
    a = poly.coeffs
    k = [bw * a[0] - bw / 2.0]
    for i in range(1, len(a)):
        k.append(bw ** (i + 1) / 2.0 ** (sf * i) * a[i])
    return tuple(k)


@dataclass(frozen=True, eq=False)
class Waveform:
    """Complex baseband samples at ``sample_rate`` Hz (read-only)."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples)
        if x.dtype not in (np.complex64, np.complex128):
            x = x.astype(np.complex128)
        if x.flags.writeable:
            x = x.copy()
            x.flags.writeable = False
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def slice(self, start: int, stop: int) -> "Waveform":
        return Waveform(self.samples[start:stop], self.sample_rate)


@dataclass(frozen=True)
class ChirpProfile:
    """One chirp family at a fixed spreading factor, bandwidth and oversampling."""

    poly: ChirpPolynomial
    sf: int = 10
    bw: float = 125e3
    osr: int = 1
    k: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if int(self.osr) != self.osr or self.osr < 1:
            raise DomainError(f"osr must be a positive integer, got {self.osr}")
        object.__setattr__(self, "poly", get_family(self.poly))
        object.__setattr__(self, "osr", int(self.osr))
        object.__setattr__(self, "k", map_coefficients(self.poly, self.sf, self.bw))

    @property
    def label(self) -> str:
        return self.poly.label

    @property
    def n_bins(self) -> int:
        return 1 << self.sf

    @property
    def n_samples(self) -> int:
        return self.n_bins * self.osr

    @property
    def sample_rate(self) -> float:
        return self.bw * self.osr

    @property
    def symbol_time(self) -> float:
        return self.n_bins / self.bw

    def with_family(self, family) -> "ChirpProfile":
        return ChirpProfile(family, self.sf, self.bw, self.osr)

    @cached_property
    def fc_mid(self) -> np.ndarray:
        """Base sweep at sample midpoints, in bandwidth units ([-1/2, 1/2])."""
        x = (np.arange(self.n_samples) + 0.5) / self.n_samples
        out = self.poly(x) - 0.5
        out.flags.writeable = False
        return out

    @cached_property
    def upchirp(self) -> np.ndarray:
        out = _kernels.chirp_batch(self.fc_mid, [0.0], self.osr)[0]
        out.flags.writeable = False
        return out

    @cached_property
    def downchirp(self) -> np.ndarray:
        out = np.conj(self.upchirp)
        out.flags.writeable = False
        return out

    @cached_property
    def wrap_index(self) -> np.ndarray:
        """First sample at which symbol k's frequency wraps (n_samples if never)."""
        offs = np.arange(self.n_bins) / self.n_bins
        fc = self.fc_mid
        idx = np.searchsorted(fc, 0.5 - offs, side="left")
        # agree exactly with the synthesis comparison ``fc + off >= 0.5``
        for _ in range(4):
            back = (idx > 0) & (fc[np.maximum(idx - 1, 0)] + offs >= 0.5)
            idx = idx - back
            fwd = (idx < fc.size) & (fc[np.minimum(idx, fc.size - 1)] + offs < 0.5)
            idx = idx + fwd
        idx.flags.writeable = False
        return idx

    def symbol_matrix(self, symbols) -> np.ndarray:
        """Rows of synthesized symbols, shape (len(symbols), n_samples)."""
        s = np.asarray(symbols, dtype=np.int64)
        if s.size and (s.min() < 0 or s.max() >= self.n_bins):
            raise DomainError(f"symbol out of range [0, {self.n_bins})")
        return _kernels.chirp_batch(self.fc_mid, s / self.n_bins, self.osr)


def instantaneous_frequency(profile: ChirpProfile, t):
    """``fc(t) = sum(k_i * t**i)`` in Hz for ``0 <= t <= symbol_time``."""
    t_arr = np.asarray(t, dtype=np.float64)
    T = profile.symbol_time
    if np.any(t_arr < 0.0) or np.any(t_arr > T * (1.0 + 1e-12)):
        raise DomainError(f"t outside [0, {T}]")
    out = P.polyval(t_arr, profile.k)
    return float(out) if np.ndim(out) == 0 else out


def synth_symbol(profile: ChirpProfile, symbol: int) -> Waveform:
    if not 0 <= int(symbol) < profile.n_bins or int(symbol) != symbol:
        raise DomainError(f"symbol {symbol} out of range [0, {profile.n_bins})")
    if symbol == 0:
        return Waveform(profile.upchirp, profile.sample_rate)
    return Waveform(profile.symbol_matrix([int(symbol)])[0], profile.sample_rate)


def base_downchirp(profile: ChirpProfile) -> Waveform:
    return Waveform(profile.downchirp, profile.sample_rate)


def modulate(profile: ChirpProfile, symbols: Sequence[int]) -> np.ndarray:
    """Concatenated symbol waveforms (each symbol restarts at phase zero)."""
    return profile.symbol_matrix(symbols).reshape(-1)


def make_profiles(names: Iterable[str], sf: int = 10, bw: float = 125e3, osr: int = 1) -> list[ChirpProfile]:
    return [ChirpProfile(get_family(n), sf, bw, osr) for n in names]
