"""Collision scenes, AWGN and cf32 IQ files."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .chirp import Waveform
from .errors import ContractError, DomainError, FormatError


@dataclass(frozen=True, eq=False)
class ChannelPath:
    start_offset: int
    gain_db: float
    cfo_hz: float
    frame: Waveform
    phase: float = 0.0

    def __post_init__(self):
        if int(self.start_offset) != self.start_offset or self.start_offset < 0:
            raise DomainError("start_offset must be a non-negative integer")
        object.__setattr__(self, "start_offset", int(self.start_offset))

    @property
    def end(self) -> int:
        return self.start_offset + len(self.frame)

    @property
    def amplitude(self) -> float:
        return 10.0 ** (self.gain_db / 20.0)

    def rendered(self) -> np.ndarray:
        """Gain, carrier offset and phase applied; ``n`` counts from the path start."""
        x = self.frame.samples.astype(np.complex128)
        g = self.amplitude * np.exp(1j * self.phase)
        if self.cfo_hz:
            n = np.arange(x.shape[0])
            cyc = self.cfo_hz / self.frame.sample_rate * n
            cyc -= np.floor(cyc)
            return g * x * np.exp(2j * np.pi * cyc)
        return g * x


@dataclass(frozen=True, eq=False)
class Scene:
    paths: tuple[ChannelPath, ...]
    snr_db: float = math.inf
    duration: int | None = None
    target_index: int = 0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ContractError("scene needs at least one path")
        if not 0 <= self.target_index < len(self.paths):
            raise ContractError("target_index out of range")
        rates = {p.frame.sample_rate for p in self.paths}
        if len(rates) != 1:
            raise ContractError("all paths must share one sample rate")
        if self.duration is None:
            object.__setattr__(self, "duration", max(p.end for p in self.paths))

    @property
    def sample_rate(self) -> float:
        return self.paths[0].frame.sample_rate

    @property
    def target(self) -> ChannelPath:
        return self.paths[self.target_index]

    @property
    def n_tx(self) -> int:
        return len(self.paths)


def superpose(scene: Scene) -> Waveform:
    out = np.zeros(scene.duration, dtype=np.complex128)
    for p in scene.paths:
        if p.end > scene.duration:
            raise ContractError(f"path ending at {p.end} exceeds scene duration {scene.duration}")
        out[p.start_offset:p.end] += p.rendered()
    return Waveform(out, scene.sample_rate)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def noise(n: int, snr_db: float, seed=None) -> np.ndarray:
    """Circular complex Gaussian samples with variance ``10**(-snr_db/10)``."""
    if math.isinf(snr_db) and snr_db > 0:
        return np.zeros(n, dtype=np.complex128)
    sigma = math.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    z = _rng(seed).standard_normal((n, 2))
    return sigma * (z[:, 0] + 1j * z[:, 1])


def awgn(wave, snr_db: float, seed=None) -> Waveform:
    x = wave.samples if isinstance(wave, Waveform) else np.asarray(wave)
    fs = wave.sample_rate if isinstance(wave, Waveform) else 1.0
    if math.isinf(snr_db) and snr_db > 0:
        return Waveform(x, fs)
    return Waveform(x + noise(x.shape[0], snr_db, seed), fs)


def render(scene: Scene, seed=None) -> Waveform:
    """Superposition plus AWGN; ``seed`` defaults to the scene's own."""
    return awgn(superpose(scene), scene.snr_db, scene.seed if seed is None else seed)


def make_collision(target_frame: Waveform, interferer_frames: Sequence[Waveform],
                   sir_db: Sequence[float], t_gaps: Sequence[float] | None = None,
                   snr_db: float = math.inf, *, symbol_samples: int, seed=None,
                   random_phase: bool = True, target_offset: int = 0,
                   duration: int | None = None) -> Scene:
    """Target at 0 dB; interferer ``i`` at ``-sir_db[i]`` dB, delayed by ``t_gaps[i]`` symbols.

    Missing ``t_gaps`` are drawn uniformly from [0.2, 0.8].
    """
    rng = _rng(seed)
    n_i = len(interferer_frames)
    if len(sir_db) != n_i:
        raise ContractError("need one SIR per interferer")
    if t_gaps is None:
        t_gaps = rng.uniform(0.2, 0.8, n_i)
    elif len(t_gaps) != n_i:
        raise ContractError("need one t_gap per interferer")
    for g in t_gaps:
        if not 0.0 <= g < 1.0:
            raise DomainError("t_gap fractions must lie in [0, 1)")
    phases = rng.uniform(0.0, 2.0 * np.pi, n_i) if random_phase else np.zeros(n_i)
    paths = [ChannelPath(target_offset, 0.0, 0.0, target_frame)]
    for fr, s, g, ph in zip(interferer_frames, sir_db, t_gaps, phases):
        off = target_offset + int(round(float(g) * symbol_samples))
        paths.append(ChannelPath(off, -float(s), 0.0, fr, float(ph)))
    scene_seed = int(rng.integers(0, 2**63 - 1))
    meta = {"t_gaps": tuple(float(g) for g in t_gaps), "sir_db": tuple(float(s) for s in sir_db)}
    return Scene(tuple(paths), snr_db, duration, 0, scene_seed, meta)


def save_iq(wave, path) -> Path:
    """Interleaved little-endian float32 I/Q pairs."""
    x = wave.samples if isinstance(wave, Waveform) else np.asarray(wave)
    path = Path(path)
    np.ascontiguousarray(x, dtype="<c8").tofile(path)
    return path


def load_iq(path, sample_rate: float = 1.0) -> Waveform:
    path = Path(path)
    size = os.path.getsize(path)
    if size % 8:
        raise FormatError(f"{path}: {size} bytes is not a whole number of cf32 samples")
    x = np.fromfile(path, dtype="<c8").astype(np.complex64, copy=False)
    return Waveform(x, sample_rate)


def fractional_delay(x, delay: float) -> np.ndarray:
    """Band-limited delay by ``delay`` samples (circular; pad the input first)."""
    x = np.asarray(x, dtype=np.complex128)
    if delay == 0.0:
        return x.copy()
    f = np.fft.fftfreq(x.shape[0])
    return np.fft.ifft(np.fft.fft(x) * np.exp(-2j * np.pi * f * delay))
