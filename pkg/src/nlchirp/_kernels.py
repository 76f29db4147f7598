"""
Hot loops with a numba path and a pure-numpy fallback.

The numba kernels are used when numba imports cleanly and the environment
variable ``NLCHIRP_DISABLE_NUMBA`` is unset (or "0"). Both paths are always
importable so tests and the benchmark can compare them side by side.
"""

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return decorator


def _flag_disabled() -> bool:
    return os.environ.get("NLCHIRP_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = NUMBA_AVAILABLE and not _flag_disabled()


# ---------------------------------------------------------------------------
# chirp synthesis: wrap f0 + fc into [-1/2, 1/2) (bandwidth units), integrate
# ---------------------------------------------------------------------------


def chirp_batch_np(fc_mid, offsets, osr):
    """Synthesize one chirp per entry of ``offsets``.

    ``fc_mid`` is the base instantaneous frequency at sample midpoints in
    bandwidth units; ``offsets`` are the per-row frequency offsets (same units).
    Returns a complex128 array of shape ``(len(offsets), len(fc_mid))``.
    """
    fc_mid = np.asarray(fc_mid, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    f = fc_mid[None, :] + offsets[:, None]
    f = np.where(f >= 0.5, f - 1.0, f)
    cycles = np.empty_like(f)
    cycles[:, 0] = 0.0
    np.cumsum(f[:, :-1] / osr, axis=1, out=cycles[:, 1:])
    cycles -= np.floor(cycles)
    return np.exp(2j * np.pi * cycles)


@njit(cache=True)
def chirp_batch_nb(fc_mid, offsets, osr):
    n_rows = offsets.shape[0]
    n = fc_mid.shape[0]
    out = np.empty((n_rows, n), dtype=np.complex128)
    two_pi = 2.0 * np.pi
    for r in range(n_rows):
        off = offsets[r]
        acc = 0.0
        for m in range(n):
            frac = acc - np.floor(acc)
            out[r, m] = np.cos(two_pi * frac) + 1j * np.sin(two_pi * frac)
            f = fc_mid[m] + off
            if f >= 0.5:
                f -= 1.0
            acc += f / osr
    return out


# ---------------------------------------------------------------------------
# DDS accumulator that tracks an ideal phase trajectory (integer counts)
# ---------------------------------------------------------------------------


def dds_track_np(ideal_phase, bits):
    """Integer phase accumulator tracking ``ideal_phase`` (float counts).

    At every step the frequency word is chosen so the accumulated phase lands
    on the nearest integer to the ideal phase (modulo ``2**bits``). Returns
    ``(slopes, freq_words, phase_words)`` as int64 arrays; the words are
    reduced modulo ``2**bits``.
    """
    ideal_phase = np.asarray(ideal_phase, dtype=np.float64)
    n = ideal_phase.shape[0]
    mod = 1 << bits
    half = mod >> 1
    slopes = np.zeros(n, dtype=np.int64)
    freqs = np.zeros(n, dtype=np.int64)
    phases = np.zeros(n, dtype=np.int64)
    phi = 0
    f_prev = 0
    for i in range(n):
        target = ideal_phase[i] % mod
        step = int(np.rint(target - phi)) % mod
        if step >= half:
            step -= mod
        phi = (phi + step) % mod
        slopes[i] = step - f_prev
        freqs[i] = step % mod
        phases[i] = phi
        f_prev = step
    return slopes, freqs, phases


@njit(cache=True)
def dds_track_nb(ideal_phase, bits):
    n = ideal_phase.shape[0]
    mod = np.int64(1) << bits
    half = mod >> 1
    slopes = np.zeros(n, dtype=np.int64)
    freqs = np.zeros(n, dtype=np.int64)
    phases = np.zeros(n, dtype=np.int64)
    phi = np.int64(0)
    f_prev = np.int64(0)
    fmod = float(mod)
    for i in range(n):
        target = ideal_phase[i] - fmod * np.floor(ideal_phase[i] / fmod)
        step = np.int64(np.rint(target - phi)) % mod
        if step >= half:
            step -= mod
        phi = (phi + step) % mod
        slopes[i] = step - f_prev
        freqs[i] = step % mod
        phases[i] = phi
        f_prev = step
    return slopes, freqs, phases


# ---------------------------------------------------------------------------
# fractional delay (linear interpolation) fused with CFO de-rotation
# ---------------------------------------------------------------------------


def shift_derotate_np(x, shift, cycles_per_sample):
    """``y[n] = x(n + shift) * exp(-2j*pi*cycles_per_sample*n)``.

    ``x(t)`` is linearly interpolated between samples; positions outside the
    input read as zero.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    i0 = int(np.floor(shift))
    frac = shift - i0
    idx = np.arange(n) + i0
    lo = np.zeros(n, dtype=np.complex128)
    ok = (idx >= 0) & (idx < n)
    lo[ok] = x[idx[ok]]
    if frac != 0.0:
        hi = np.zeros(n, dtype=np.complex128)
        ok1 = (idx + 1 >= 0) & (idx + 1 < n)
        hi[ok1] = x[idx[ok1] + 1]
        y = (1.0 - frac) * lo + frac * hi
    else:
        y = lo
    if cycles_per_sample != 0.0:
        ph = cycles_per_sample * np.arange(n)
        ph -= np.floor(ph)
        y = y * np.exp(-2j * np.pi * ph)
    return y


@njit(cache=True)
def shift_derotate_nb(x, shift, cycles_per_sample):
    n = x.shape[0]
    i0 = int(np.floor(shift))
    frac = shift - i0
    y = np.zeros(n, dtype=np.complex128)
    two_pi = 2.0 * np.pi
    for m in range(n):
        j = m + i0
        v = 0.0 + 0.0j
        if 0 <= j < n:
            v = (1.0 - frac) * x[j]
        if frac != 0.0 and 0 <= j + 1 < n:
            v += frac * x[j + 1]
        if cycles_per_sample != 0.0:
            ph = cycles_per_sample * m
            ph -= np.floor(ph)
            v *= np.cos(two_pi * ph) - 1j * np.sin(two_pi * ph)
        y[m] = v
    return y


_chirp_impl = chirp_batch_nb if USE_NUMBA else chirp_batch_np
_dds_impl = dds_track_nb if USE_NUMBA else dds_track_np
_shift_impl = shift_derotate_nb if USE_NUMBA else shift_derotate_np


def chirp_batch(fc_mid, offsets, osr):
    return _chirp_impl(
        np.ascontiguousarray(fc_mid, dtype=np.float64),
        np.ascontiguousarray(np.atleast_1d(offsets), dtype=np.float64),
        float(osr),
    )


def dds_track(ideal_phase, bits):
    return _dds_impl(np.ascontiguousarray(ideal_phase, dtype=np.float64), int(bits))


def shift_derotate(x, shift, cycles_per_sample):
    return _shift_impl(
        np.ascontiguousarray(x, dtype=np.complex128), float(shift), float(cycles_per_sample)
    )
