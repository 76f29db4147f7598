"""
Frame layout::

    8 x linear up-chirp (symbol 0)
    2 x sync word, modulated with the payload family
    2.25 x linear down-chirp
    payload_len x payload symbols

The sync word carries the payload length as two base-(N/2) digits, each
sent as an even symbol value so a one-bin slip still decodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import sync as _sync
from .chirp import ChirpPolynomial, ChirpProfile, Waveform, get_family
from .errors import (
    AmbiguityError,
    ConfigError,
    ContractError,
    DomainError,
    NotFoundError,
    UnknownFamilyError,
)
from .modem import dechirp_bins, scatter_batch
from .sync import SyncEstimate

N_PREAMBLE = _sync.N_PREAMBLE
N_SYNC = _sync.N_SYNC
SFD_SYMBOLS = 2.25
AMBIGUITY_RATIO = 0.9
# peak power over the strongest bin outside +-2 of the peak; cross-family
# dechirps and pure noise stay below ~2
DOMINANCE_GATE = 3.0


@dataclass(frozen=True)
class FrameSpec:
    profile: ChirpProfile
    payload_len: int

    def __post_init__(self):
        if self.payload_len < 1:
            raise DomainError("payload_len must be >= 1")
        if self.payload_len >= self.max_payload_len(self.profile):
            raise DomainError(f"payload_len must be < {self.max_payload_len(self.profile)}")

    @staticmethod
    def max_payload_len(profile: ChirpProfile) -> int:
        half = profile.n_bins // 2
        return half * half

    @property
    def n_preamble(self) -> int:
        return N_PREAMBLE

    @property
    def n_syncword(self) -> int:
        return N_SYNC

    @property
    def sfd_symbols(self) -> float:
        return SFD_SYMBOLS

    @property
    def payload_family(self) -> int:
        return self.profile.poly.family_id

    @property
    def syncword_values(self) -> tuple[int, int]:
        return encode_syncword(self.payload_len, self.profile.n_bins)

    @property
    def n_samples(self) -> int:
        return frame_length(self.profile, self.payload_len)

    @property
    def payload_start(self) -> int:
        return payload_offset(self.profile)


def encode_syncword(payload_len: int, n_bins: int) -> tuple[int, int]:
    half = n_bins // 2
    hi, lo = divmod(int(payload_len), half)
    if hi >= half:
        raise DomainError("payload_len too large for the sync word")
    return 2 * hi, 2 * lo


def decode_syncword(values: Sequence[int], n_bins: int) -> int:
    half = n_bins // 2
    hi, lo = (int(round(v / 2)) % half for v in values)
    return hi * half + lo


def payload_offset(profile: ChirpProfile) -> int:
    L = profile.n_samples
    return (N_PREAMBLE + N_SYNC + 2) * L + L // 4


def frame_length(profile: ChirpProfile, payload_len: int) -> int:
    return payload_offset(profile) + payload_len * profile.n_samples


def _linear_of(profile: ChirpProfile) -> ChirpProfile:
    return profile.with_family(get_family("linear"))


def build_frame(spec: FrameSpec, payload: Sequence[int]) -> Waveform:
    p = spec.profile
    payload = np.asarray(payload, dtype=np.int64)
    if payload.shape != (spec.payload_len,):
        raise ContractError(f"payload has {payload.size} symbols, spec says {spec.payload_len}")
    lin = _linear_of(p)
    L = p.n_samples
    out = np.empty(spec.n_samples, dtype=np.complex128)
    out[:N_PREAMBLE * L] = np.tile(lin.upchirp, N_PREAMBLE)
    a = N_PREAMBLE * L
    out[a:a + N_SYNC * L] = p.symbol_matrix(spec.syncword_values).reshape(-1)
    a += N_SYNC * L
    out[a:a + 2 * L] = np.tile(lin.downchirp, 2)
    a += 2 * L
    out[a:a + L // 4] = lin.downchirp[:L // 4]
    a += L // 4
    out[a:] = p.symbol_matrix(payload).reshape(-1)
    return Waveform(out, p.sample_rate)


@dataclass(frozen=True)
class DecodedPacket:
    start_offset: float
    sync: SyncEstimate
    family: int
    label: str
    symbols: tuple[int, ...]
    per_symbol_scatter: tuple[float, ...]
    family_score: float = 0.0
    detect_offset: int = 0

    @property
    def payload_len(self) -> int:
        return len(self.symbols)

    def to_record(self) -> dict:
        sc = np.asarray(self.per_symbol_scatter)
        return {
            "offset": round(float(self.start_offset), 3),
            "family": self.label,
            "family_id": self.family,
            "sto": round(self.sync.sto_samples, 4),
            "cfo_hz": round(self.sync.cfo_hz, 3),
            "payload_len": self.payload_len,
            "symbols": [int(s) for s in self.symbols],
            "scatter_mean": round(float(sc.mean()), 5) if sc.size else 0.0,
            "scatter_min": round(float(sc.min()), 5) if sc.size else 0.0,
        }


# ---------------------------------------------------------------------------
# receive side
# ---------------------------------------------------------------------------


def resolve_registry(registry: Iterable, sf: int | None = None, bw: float | None = None,
                     osr: int | None = None) -> list[ChirpProfile]:
    """Normalize a registry of profiles, polynomials or family names."""
    items = list(registry)
    if not items:
        raise ConfigError("empty family registry")
    ref = next((r for r in items if isinstance(r, ChirpProfile)), None)
    sf = sf if sf is not None else (ref.sf if ref else 10)
    bw = bw if bw is not None else (ref.bw if ref else 125e3)
    osr = osr if osr is not None else (ref.osr if ref else 1)
    out = []
    for r in items:
        if isinstance(r, ChirpProfile):
            if (r.sf, r.bw, r.osr) != (sf, bw, osr):
                raise ConfigError("registry profiles disagree on sf/bw/osr")
            out.append(r)
        elif isinstance(r, (ChirpPolynomial, str)):
            out.append(ChirpProfile(get_family(r), sf, bw, osr))
        else:
            raise ConfigError(f"cannot interpret registry entry {r!r}")
    return out


def _dominance(bins: np.ndarray) -> np.ndarray:
    p = bins.real**2 + bins.imag**2
    n = p.shape[-1]
    k = np.argmax(p, axis=-1)
    rows = np.arange(p.shape[0])
    q = p.copy()
    for d in range(-2, 3):
        q[rows, (k + d) % n] = 0.0
    return p[rows, k] / np.maximum(q.max(axis=-1), 1e-300)


@dataclass(frozen=True)
class FamilyScore:
    profile: ChirpProfile
    scatter: float
    dominance: float
    values: tuple[int, ...]


def score_families(sync_win: np.ndarray, profiles: Sequence[ChirpProfile]) -> list[FamilyScore]:
    """Sync-word windows scored against every family, best first."""
    out = []
    for p in profiles:
        b = dechirp_bins(sync_win, p)
        vals = tuple(int(v) for v in np.argmax(np.abs(b), axis=-1))
        out.append(FamilyScore(p, float(scatter_batch(b).mean()), float(_dominance(b).mean()), vals))
    out.sort(key=lambda s: -s.scatter)
    return out


@dataclass(frozen=True)
class Alignment:
    detect_offset: int
    start: float
    est: SyncEstimate


def align(x: np.ndarray, offset: int, lin: ChirpProfile) -> Alignment:
    up, dn = _sync.pilot_windows(x, offset, lin)
    est = _sync.estimate_sto_cfo(up, dn, lin, search_radius=_sync.SEARCH_RADIUS)
    sto = est.sto_samples
    if lin.osr < 4:
        # linear interpolation smears chirps at low oversampling; keep whole samples
        sto = float(round(sto))
    return Alignment(offset, offset + sto, est)


def sync_windows(x: np.ndarray, al: Alignment, lin: ChirpProfile) -> np.ndarray:
    L = lin.n_samples
    seg = _sync.extract(x, al.start + N_PREAMBLE * L, N_SYNC * L, al.est.cfo_hz, lin.sample_rate)
    return seg.reshape(N_SYNC, L)


def demod_payload(x: np.ndarray, al: Alignment, profile: ChirpProfile, payload_len: int):
    L = profile.n_samples
    a = al.start + payload_offset(profile)
    if a + payload_len * L > x.shape[0] + L // 2:
        raise ContractError("claimed payload runs past the end of the stream")
    seg = _sync.extract(x, a, payload_len * L, al.est.cfo_hz, profile.sample_rate)
    b = dechirp_bins(seg.reshape(payload_len, L), profile)
    return np.argmax(np.abs(b), axis=-1), scatter_batch(b)


def decode_packet(x, al, fs: FamilyScore) -> DecodedPacket:
    p = fs.profile
    n = decode_syncword(fs.values, p.n_bins)
    if n < 1:
        raise ContractError("sync word claims an empty payload")
    syms, sc = demod_payload(x, al, p, n)
    return DecodedPacket(
        start_offset=al.start,
        sync=al.est,
        family=p.poly.family_id,
        label=p.label,
        symbols=tuple(int(s) for s in syms),
        per_symbol_scatter=tuple(float(v) for v in sc),
        family_score=fs.scatter,
        detect_offset=al.detect_offset,
    )


def parse_at(x: np.ndarray, offset: int, profiles: Sequence[ChirpProfile]) -> DecodedPacket:
    lin = _linear_of(profiles[0])
    al = align(x, offset, lin)
    scores = score_families(sync_windows(x, al, lin), profiles)
    best = scores[0]
    if best.dominance < DOMINANCE_GATE:
        raise UnknownFamilyError(
            "no registered family explains the sync word",
            [s.profile.label for s in scores[:2]],
        )
    if len(scores) > 1 and scores[1].scatter >= AMBIGUITY_RATIO * best.scatter:
        raise AmbiguityError(
            f"sync word fits {best.profile.label} and {scores[1].profile.label} about equally",
            [best.profile.label, scores[1].profile.label],
        )
    return decode_packet(x, al, best)


def parse_frame(stream, registry, *, sf: int | None = None, osr: int | None = None,
                bw: float | None = None) -> DecodedPacket:
    """Decode the first frame found in ``stream``."""
    x = stream.samples if isinstance(stream, Waveform) else np.asarray(stream)
    if bw is None and isinstance(stream, Waveform) and osr is not None:
        bw = stream.sample_rate / osr
    profiles = resolve_registry(registry, sf, bw, osr)
    dets = _sync.detect(x, _linear_of(profiles[0]))
    if not dets:
        raise NotFoundError("no preamble found")
    return parse_at(x, dets[0].offset, profiles)


__all__ = [
    "FrameSpec",
    "DecodedPacket",
    "build_frame",
    "parse_frame",
    "frame_length",
    "payload_offset",
    "encode_syncword",
    "decode_syncword",
    "resolve_registry",
]
