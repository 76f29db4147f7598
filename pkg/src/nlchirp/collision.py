"""
Concurrent-packet decoder.

Every preamble in the stream is detected, aligned on its own pilots and
demodulated with its own family's down-chirp. There is deliberately no
interference cancellation: colliding packets are misaligned (or use another
family), so their energy scatters across the spectrum instead of forming a
competing peak.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import framing as _fr
from . import sync as _sync
from .chirp import ChirpProfile, Waveform, get_family
from .errors import ContractError
from .framing import DecodedPacket
from .modem import dechirp_bins, scatter_batch

# families scoring at least this fraction of the best sync-word score are
# also decoded (aligned packets of different families share one preamble)
CO_FAMILY_RATIO = 0.25


def _samples(stream) -> np.ndarray:
    return stream.samples if isinstance(stream, Waveform) else np.asarray(stream)


def decode_detection(x: np.ndarray, offset: int, profiles: Sequence[ChirpProfile]) -> list[DecodedPacket]:
    lin = profiles[0].with_family(get_family("linear"))
    try:
        al = _fr.align(x, offset, lin)
    except ContractError:
        return []
    scores = _fr.score_families(_fr.sync_windows(x, al, lin), profiles)
    best = scores[0].scatter
    out = []
    for s in scores:
        if s.dominance < _fr.DOMINANCE_GATE or s.scatter < CO_FAMILY_RATIO * best:
            continue
        try:
            out.append(_fr.decode_packet(x, al, s))
        except ContractError:
            continue
    return out


@dataclass
class DecodeSession:
    stream: Waveform
    registry: list
    detections: list = field(default_factory=list)
    results: list = field(default_factory=list)

    def run(self, order: Sequence[int] | None = None) -> list[DecodedPacket]:
        x = _samples(self.stream)
        profiles = self.registry
        lin = profiles[0].with_family(get_family("linear"))
        dets = _sync.detect(x, lin)
        self.detections = [(d.offset, d) for d in dets]
        idx = range(len(dets)) if order is None else order
        res = []
        for i in idx:
            res.extend(decode_detection(x, dets[i].offset, profiles))
        res.sort(key=lambda p: (p.start_offset, p.family))
        self.results = res
        return res

    def records(self) -> list[dict]:
        return [p.to_record() for p in self.results]

    def to_json_lines(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records())


def decode_all(stream, registry, *, sf: int | None = None, osr: int | None = None,
               bw: float | None = None, order: Sequence[int] | None = None) -> list[DecodedPacket]:
    """Every packet found in ``stream``, sorted by start offset."""
    if bw is None and isinstance(stream, Waveform) and osr is not None:
        bw = stream.sample_rate / osr
    profiles = _fr.resolve_registry(registry, sf, bw, osr)
    wave = stream if isinstance(stream, Waveform) else Waveform(stream, profiles[0].sample_rate)
    return DecodeSession(wave, profiles).run(order)


def decode_target(stream, start: float, profile: ChirpProfile, payload_len: int,
                  cfo_hz: float = 0.0, with_scatter: bool = False):
    """Demodulate one packet's payload at a known (oracle) frame start."""
    x = _samples(stream)
    L = profile.n_samples
    a = start + _fr.payload_offset(profile)
    if start < 0 or a + payload_len * L > x.shape[0]:
        raise ContractError("target payload lies outside the stream")
    if float(start).is_integer() and cfo_hz == 0.0:
        i = int(a)
        seg = x[i:i + payload_len * L]
    else:
        seg = _sync.extract(x, a, payload_len * L, cfo_hz, profile.sample_rate)
    b = dechirp_bins(seg.reshape(payload_len, L), profile)
    syms = np.argmax(np.abs(b), axis=-1)
    if with_scatter:
        return syms, scatter_batch(b)
    return syms
