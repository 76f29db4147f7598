"""
Index-level model of a DDS phase accumulator.

Frequency word ``f_i = f_{i-1} + K_i`` (``f_0 = 0``) and phase word
``phi_i = phi_{i-1} + f_i``; both are plain integers here, scaled to Hz by
``f_clk / 2**L`` only through :meth:`DdsConfig.to_hz`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .chirp import ChirpProfile, Waveform
from .errors import ConfigError, DomainError, ResolutionError


@dataclass(frozen=True)
class DdsConfig:
    f_clk: float
    table_bits: int
    slope_schedule: tuple[int, ...] = (1,)

    def __post_init__(self):
        object.__setattr__(self, "slope_schedule", tuple(int(k) for k in self.slope_schedule))
        if self.table_bits < 1:
            raise ConfigError("table_bits must be >= 1")
        if not self.slope_schedule:
            raise ConfigError("slope schedule is empty")
        if min(self.slope_schedule) < 0:
            raise ConfigError("slope schedule entries must be >= 0")
        if not self.f_clk > 0:
            raise ConfigError("f_clk must be positive")

    @property
    def resolution_hz(self) -> float:
        return self.f_clk / (1 << self.table_bits)

    def to_hz(self, index):
        return np.asarray(index, dtype=np.float64) * self.resolution_hz

    def slopes(self, steps: int) -> np.ndarray:
        if steps < 0:
            raise DomainError("steps must be >= 0")
        k = np.asarray(self.slope_schedule, dtype=np.int64)
        if k.size == 1:
            return np.full(steps, k[0], dtype=np.int64)
        if steps > k.size:
            raise DomainError(f"{steps} steps requested but schedule has {k.size} entries")
        return k[:steps]


def freq_index_sequence(cfg: DdsConfig, steps: int) -> np.ndarray:
    return np.cumsum(cfg.slopes(steps))


def phase_index_sequence(cfg: DdsConfig, steps: int) -> np.ndarray:
    return np.cumsum(freq_index_sequence(cfg, steps))


@dataclass(frozen=True)
class DdsTrace:
    """Accumulator words for one synthesized symbol (all reduced mod 2**L)."""

    slopes: np.ndarray
    freqs: np.ndarray
    phases: np.ndarray
    table_bits: int


def _ideal_cycles(profile: ChirpProfile, symbol: int) -> np.ndarray:
    f = profile.fc_mid + symbol / profile.n_bins
    f = np.where(f >= 0.5, f - 1.0, f)
    cyc = np.concatenate(([0.0], np.cumsum(f[:-1] / profile.osr)))
    return cyc - np.floor(cyc)


def dds_trace(profile: ChirpProfile, cfg: DdsConfig, symbol: int = 0) -> DdsTrace:
    """Accumulator schedule that follows ``profile``'s phase to within half an LSB.

    Each slope ``K_i`` is picked so the next phase word is the nearest table
    index to the ideal phase, which keeps rounding errors from piling up
    along the sweep.
    """
    L = cfg.table_bits
    if L < profile.sf:
        raise ResolutionError(f"table_bits={L} < sf={profile.sf}: frequency grid too coarse")
    if not 0 <= symbol < profile.n_bins:
        raise DomainError("symbol out of range")
    mod = 1 << L
    target = _ideal_cycles(profile, symbol)[1:] * mod
    k, f, ph = _kernels.dds_track(target, L)
    zero = np.zeros(1, dtype=np.int64)
    return DdsTrace(
        np.concatenate((zero, k % mod)),
        np.concatenate((zero, f)),
        np.concatenate((zero, ph)),
        L,
    )


def synth_via_dds(profile: ChirpProfile, cfg: DdsConfig, symbol: int = 0) -> Waveform:
    tr = dds_trace(profile, cfg, symbol)
    phase = tr.phases.astype(np.float64) * (2.0 * np.pi / (1 << tr.table_bits))
    return Waveform(np.exp(1j * phase), profile.sample_rate)


def max_phase_error(profile: ChirpProfile, cfg: DdsConfig, symbol: int = 0) -> float:
    """Worst per-sample phase error (radians) of the DDS output vs ideal synthesis."""
    tr = dds_trace(profile, cfg, symbol)
    mod = 1 << tr.table_bits
    err = tr.phases / mod - _ideal_cycles(profile, symbol)
    err -= np.rint(err)
    return float(np.abs(err).max() * 2.0 * np.pi)


def dump_csv(cfg: DdsConfig, steps: int, path) -> Path:
    path = Path(path)
    k = cfg.slopes(steps)
    f = freq_index_sequence(cfg, steps)
    ph = phase_index_sequence(cfg, steps)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "K", "freq_index", "phase_index", "freq_hz"])
        for i in range(steps):
            w.writerow([i + 1, int(k[i]), int(f[i]), int(ph[i]), repr(float(cfg.to_hz(f[i])))])
    return path


def default_config(profile: ChirpProfile, table_bits: int = 16, schedule: Sequence[int] = (1,)) -> DdsConfig:
    return DdsConfig(profile.sample_rate, table_bits, tuple(schedule))


__all__ = [
    "DdsConfig",
    "DdsTrace",
    "freq_index_sequence",
    "phase_index_sequence",
    "dds_trace",
    "synth_via_dds",
    "max_phase_error",
    "dump_csv",
    "default_config",
]
