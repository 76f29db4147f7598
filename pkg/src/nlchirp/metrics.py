"""Symbol error rate, packet delivery rate and throughput."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ContractError, DomainError

PDR_MAX_SER = 0.20  # a packet counts as delivered with >= 80 % symbols right


def compute_ser(truth: Sequence[int], decoded: Sequence[int]) -> float:
    t = np.asarray(truth)
    d = np.asarray(decoded)
    if t.shape != d.shape:
        raise ContractError(f"length mismatch: {t.shape} vs {d.shape}")
    if t.size == 0:
        return 0.0
    return float(np.count_nonzero(t != d)) / t.size


def compute_pdr(per_packet_ser: Sequence[float]) -> float:
    s = np.asarray(per_packet_ser, dtype=np.float64)
    if s.size == 0:
        raise ContractError("no packets")
    # small tolerance so that e.g. 2/10 errors (0.2 in float) still counts
    return float(np.count_nonzero(s <= PDR_MAX_SER + 1e-12)) / s.size


def compute_throughput(decoded_symbol_count: int, duration_seconds: float) -> float:
    if not duration_seconds > 0:
        raise DomainError("duration must be positive")
    return float(decoded_symbol_count) / duration_seconds
