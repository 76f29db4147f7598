"""Dechirp demodulation: de-spread, FFT, fold aliases, pick the peak."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .chirp import ChirpProfile, Waveform
from .errors import ContractError, DomainError


@lru_cache(maxsize=64)
def _fold_rotation(profile: ChirpProfile) -> np.ndarray | None:
    # Once symbol k's sweep wraps (sample m_w) its phase keeps advancing at the
    # wrapped rate; in the top alias bin that shows up as a constant rotation
    # exp(2j*pi*m_w/osr). Undo it so the two halves add coherently.
    if profile.osr == 1:
        return None
    rot = np.exp(-2j * np.pi * (profile.wrap_index % profile.osr) / profile.osr)
    rot.flags.writeable = False
    return rot


def dechirp_bins(windows, profile: ChirpProfile) -> np.ndarray:
    """Folded dechirp spectra for a stack of windows, shape (..., N).

    The FFT is unitary so at ``osr == 1`` spectral energy equals window energy.
    """
    x = np.asarray(windows)
    if x.shape[-1] != profile.n_samples:
        raise ContractError(f"window length {x.shape[-1]} != n_samples {profile.n_samples}")
    spec = np.fft.fft(x * profile.downchirp, axis=-1, norm="ortho")
    osr = profile.osr
    if osr == 1:
        return spec
    n = profile.n_bins
    spec = spec.reshape(spec.shape[:-1] + (osr, n))
    top = spec[..., -1, :] * _fold_rotation(profile)
    return (spec[..., :-1, :].sum(axis=-2) + top) / np.sqrt(osr)


@dataclass(frozen=True, eq=False)
class DechirpSpectrum:
    bins: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bins)
        b.flags.writeable = False
        object.__setattr__(self, "bins", b)

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.bins)

    @property
    def total_energy(self) -> float:
        return float(np.sum(self.bins.real**2 + self.bins.imag**2))


@dataclass(frozen=True)
class PeakReport:
    bin: int
    magnitude: float
    scatter_ratio: float


def dechirp(window, profile: ChirpProfile) -> DechirpSpectrum:
    x = window.samples if isinstance(window, Waveform) else np.asarray(window)
    if x.ndim != 1:
        raise ContractError("dechirp expects a single window; use dechirp_bins for stacks")
    return DechirpSpectrum(dechirp_bins(x, profile))


def decide_symbol(spec) -> int:
    """Argmax bin; np.argmax already resolves ties toward the lowest index."""
    bins = spec.bins if isinstance(spec, DechirpSpectrum) else np.asarray(spec)
    return int(np.argmax(np.abs(bins)))


def decide_batch(bins: np.ndarray) -> np.ndarray:
    return np.argmax(np.abs(bins), axis=-1)


def scatter_ratio(spec) -> float:
    bins = spec.bins if isinstance(spec, DechirpSpectrum) else np.asarray(spec)
    p = bins.real**2 + bins.imag**2
    tot = float(p.sum())
    if not tot > 0.0:
        raise ContractError("zero-energy window")
    return float(p.max()) / tot


def scatter_batch(bins: np.ndarray) -> np.ndarray:
    p = bins.real**2 + bins.imag**2
    tot = p.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tot > 0, p.max(axis=-1) / tot, 0.0)


def peak_report(spec: DechirpSpectrum) -> PeakReport:
    mags = spec.magnitudes
    k = int(np.argmax(mags))
    return PeakReport(k, float(mags[k]), scatter_ratio(spec))


def demodulate(samples, profile: ChirpProfile, n_symbols: int | None = None, start: int = 0):
    """Demodulate back-to-back symbols starting at ``start``.

    Returns ``(symbols, scatter)`` arrays.
    """
    x = np.asarray(samples)
    L = profile.n_samples
    if start < 0:
        raise ContractError("negative start")
    avail = (x.shape[0] - start) // L
    if n_symbols is None:
        n_symbols = avail
    if n_symbols > avail:
        raise ContractError(f"need {n_symbols} symbols but stream holds {avail}")
    w = x[start:start + n_symbols * L].reshape(n_symbols, L)
    b = dechirp_bins(w, profile)
    return decide_batch(b), scatter_batch(b)


def residual_frequency(profile: ChirpProfile, t_gap: float, f0: float, t):
    """Frequency of a symbol delayed by ``t_gap`` after dechirping, in Hz.

    ``F(t) = f0 + fc(t + t_gap) - fc(t)``. For a linear sweep this is the
    constant ``f0 + k1 * t_gap``; any curvature makes it drift with ``t``.
    """
    T = profile.symbol_time
    if not 0.0 <= t_gap < T:
        raise DomainError(f"t_gap must lie in [0, {T})")
    t = np.asarray(t, dtype=np.float64)
    out = f0 + P.polyval(t + t_gap, profile.k) - P.polyval(t, profile.k)
    return float(out) if out.ndim == 0 else out


def dump_spectrum_csv(spec: DechirpSpectrum, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin", "magnitude"])
        for k, m in enumerate(spec.magnitudes):
            w.writerow([k, repr(float(m))])
    return path
