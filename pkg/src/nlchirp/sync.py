"""
Preamble detection and STO/CFO estimation from a conjugate pilot pair.

Pilots are the last preamble up-chirp and the first SFD down-chirp. A CFO
of ``c`` bins moves both dechirp peaks by ``+c``; a delay of ``e`` samples
moves the up-chirp peak by ``-e/osr`` and the down-chirp peak by ``+e/osr``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chirp import ChirpProfile, Waveform, get_family
from .errors import ContractError

# preamble geometry (in symbols) shared with framing
N_PREAMBLE = 8
N_SYNC = 2
UP_PILOT = N_PREAMBLE - 1
DOWN_PILOT = N_PREAMBLE + N_SYNC

MIN_RUN = 6
DETECT_THRESHOLD = 12.0  # peak power over noise-floor estimate
PILOT_CONFIDENCE = 8.0
MAX_PEAKS = 8
# once coarsely aligned, pilot/SFD peaks are searched this close to bin 0
# (covers detector error plus a few bins of CFO)
SEARCH_RADIUS = 8


@dataclass(frozen=True)
class SyncEstimate:
    sto_samples: float
    cfo_hz: float
    peak_up_bin: int
    peak_down_bin: int
    confidence: float
    bin_hz: float = 0.0
    low_confidence: bool = False

    @property
    def cfo_bins(self) -> float:
        return self.cfo_hz / self.bin_hz if self.bin_hz else 0.0


def _as_array(x) -> np.ndarray:
    return x.samples if isinstance(x, Waveform) else np.asarray(x)


def _linear(profile: ChirpProfile) -> ChirpProfile:
    if profile.poly.coeffs == (0.0, 1.0):
        return profile
    return profile.with_family(get_family("linear"))


def _fold(spec: np.ndarray, osr: int, n: int) -> np.ndarray:
    if osr == 1:
        return spec
    return spec.reshape(spec.shape[:-1] + (osr, n)).sum(axis=-2) / np.sqrt(osr)


def up_spectrum(windows, lin: ChirpProfile) -> np.ndarray:
    """Dechirp against the linear down-chirp (pilot symbol 0 never wraps)."""
    x = np.asarray(windows)
    return _fold(np.fft.fft(x * lin.downchirp, axis=-1, norm="ortho"), lin.osr, lin.n_bins)


def down_spectrum(windows, lin: ChirpProfile) -> np.ndarray:
    x = np.asarray(windows)
    return _fold(np.fft.fft(x * lin.upchirp, axis=-1, norm="ortho"), lin.osr, lin.n_bins)


def _interp_peak(spec: np.ndarray, radius: int | None = None) -> tuple[int, float]:
    """Argmax bin and fractional peak position, wrapped to (-N/2, N/2].

    Three-point complex interpolation around the argmax; the tan(pi/N)
    factor removes the bias of the rectangular window. With ``radius`` the
    argmax is restricted to bins within that distance of bin 0.
    """
    n = spec.shape[0]
    mag = np.abs(spec)
    if radius is not None and radius < n // 2:
        d = np.minimum(np.arange(n), n - np.arange(n))
        mag = np.where(d <= radius, mag, -1.0)
    k = int(np.argmax(mag))
    a, b, c = spec[(k - 1) % n], spec[k], spec[(k + 1) % n]
    den = 2.0 * b - a - c
    delta = 0.0
    if den != 0:
        delta = float(np.real((a - c) / den)) * np.tan(np.pi / n) / (np.pi / n)
        delta = min(max(delta, -0.5), 0.5)
    pos = k + delta
    if pos > n / 2:
        pos -= n
    return k, pos


def _peak_to_mean(power: np.ndarray) -> float:
    m = float(power.mean())
    return float(power.max()) / m if m > 0 else 0.0


def estimate_sto_cfo(pilot_up_window, pilot_down_window, linear_profile: ChirpProfile,
                     search_radius: int | None = None) -> SyncEstimate:
    """STO (samples, positive = frame starts late) and CFO from the pilot pair.

    ``search_radius`` limits the peak search to bins near zero, which keeps a
    colliding packet's pilots from capturing the estimate once the coarse
    alignment is already close.
    """
    lin = _linear(linear_profile)
    up = _as_array(pilot_up_window)
    dn = _as_array(pilot_down_window)
    L = lin.n_samples
    if up.shape[-1] != L or dn.shape[-1] != L:
        raise ContractError("pilot windows must be one symbol long")
    s1 = up_spectrum(up, lin)
    s2 = down_spectrum(dn, lin)
    k1, p1 = _interp_peak(s1, search_radius)
    k2, p2 = _interp_peak(s2, search_radius)
    cfo_bins = 0.5 * (p1 + p2)
    sto = 0.5 * (p2 - p1) * lin.osr
    conf = min(_peak_to_mean(np.abs(s1) ** 2), _peak_to_mean(np.abs(s2) ** 2))
    bin_hz = lin.bw / lin.n_bins
    return SyncEstimate(
        sto_samples=float(sto),
        cfo_hz=float(cfo_bins * bin_hz),
        peak_up_bin=k1,
        peak_down_bin=k2,
        confidence=conf,
        bin_hz=bin_hz,
        low_confidence=conf < PILOT_CONFIDENCE,
    )


def shift_and_derotate(x: np.ndarray, shift: float, cfo_hz: float, sample_rate: float) -> np.ndarray:
    return _kernels.shift_derotate(x, shift, cfo_hz / sample_rate)


def correct(stream, est: SyncEstimate, sample_rate: float | None = None) -> Waveform:
    """``y[n] = x(n + sto) * exp(-2j*pi*cfo*n/fs)`` with linear interpolation."""
    x = _as_array(stream)
    fs = stream.sample_rate if isinstance(stream, Waveform) else sample_rate
    if fs is None:
        raise ContractError("sample_rate required for raw arrays")
    if abs(est.sto_samples) >= max(len(x), 1):
        raise ContractError("time shift exceeds stream length")
    if est.sto_samples == 0.0 and est.cfo_hz == 0.0:
        return Waveform(x, fs)
    return Waveform(shift_and_derotate(x, est.sto_samples, est.cfo_hz, fs), fs)


# ---------------------------------------------------------------------------
# preamble detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Detection:
    offset: int  # coarse frame start in samples
    bin: float  # fractional preamble bin the run locked on
    run: int  # number of consecutive agreeing windows
    strength: float  # mean peak-to-floor ratio over the run


def _floor(power: np.ndarray):
    """Noise-floor estimate (median of exponential power / ln 2), per row."""
    med = np.median(power, axis=-1, keepdims=power.ndim > 1) / np.log(2.0)
    return np.maximum(med, 1e-9 * np.mean(power, axis=-1, keepdims=power.ndim > 1) + 1e-300)


def _window_peaks(power: np.ndarray, threshold: float, max_peaks: int):
    """Local maxima above ``threshold`` times the noise floor, per window."""
    rel = power / _floor(power)
    left = np.roll(power, 1, axis=-1)
    right = np.roll(power, -1, axis=-1)
    cand = (rel >= threshold) & (power >= left) & (power > right)
    out = []
    for w in range(power.shape[0]):
        idx = np.flatnonzero(cand[w])
        if idx.size > max_peaks:
            idx = idx[np.argsort(-power[w, idx], kind="stable")[:max_peaks]]
        out.append([(int(k), float(rel[w, k])) for k in idx])
    return out


def _circ_close(a: int, b: int, n: int, tol: int = 1) -> bool:
    d = (a - b) % n
    return d <= tol or d >= n - tol


def _runs(peaks, n: int, min_run: int):
    """Chains of windows whose peaks agree within one bin."""
    active: list[list] = []  # [start_w, last_bin, length, strength_sum]
    done = []
    for w, plist in enumerate(peaks):
        nxt = []
        used = set()
        for run in active:
            match = None
            for j, (k, r) in enumerate(plist):
                if j not in used and _circ_close(k, run[1], n):
                    match = j
                    break
            if match is None:
                if run[2] >= min_run:
                    done.append(tuple(run))
                continue
            used.add(match)
            k, r = plist[match]
            nxt.append([run[0], k, run[2] + 1, run[3] + r])
        for j, (k, r) in enumerate(plist):
            if j not in used:
                nxt.append([w, k, 1, r])
        active = nxt
    done.extend(tuple(r) for r in active if r[2] >= min_run)
    return done


def _sfd_score(x: np.ndarray, o: int, lin: ChirpProfile) -> float:
    radius = SEARCH_RADIUS
    # both full SFD chirps must be present; a one-symbol slip leaves a
    # sync-word or payload window in one of the two slots
    L = lin.n_samples
    worst = np.inf
    for s in (DOWN_PILOT, DOWN_PILOT + 1):
        a = o + s * L
        if a < 0 or a + L > x.shape[0]:
            return 0.0
        p = np.abs(down_spectrum(x[a:a + L], lin)) ** 2
        # at the right candidate the SFD peak sits near bin 0 (up to CFO);
        # down-chirps of other packets land elsewhere
        near = np.concatenate((p[:radius + 1], p[-radius:]))
        worst = min(worst, float(near.max() / _floor(p)))
    return worst


def detect(stream, linear_profile: ChirpProfile, threshold: float = DETECT_THRESHOLD,
           min_run: int = MIN_RUN, max_peaks: int = MAX_PEAKS) -> list[Detection]:
    lin = _linear(linear_profile)
    x = _as_array(stream)
    L, N, osr = lin.n_samples, lin.n_bins, lin.osr
    n_win = x.shape[0] // L
    if n_win < min_run:
        return []
    spec = up_spectrum(x[:n_win * L].reshape(n_win, L), lin)
    power = spec.real**2 + spec.imag**2
    peaks = _window_peaks(power, threshold, max_peaks)
    found: list[Detection] = []
    for w0, k_last, run, strength in _runs(peaks, N, min_run):
        w_end = w0 + run - 1
        _, b = _interp_peak(spec[w_end] * _mask_near(N, k_last))
        base = int(round(w0 * L - (b % N) * osr))
        # 8 chirps touch at most 9 windows; the run may begin on a partial
        # window (j = 1) or have missed up to 9 - run leading windows
        cands = [base + j * L for j in range(min(run - N_PREAMBLE - 1, 0), 2)]
        scores = [_sfd_score(x, o, lin) for o in cands]
        j = int(np.argmax(scores))
        if scores[j] < threshold:
            continue
        found.append(Detection(cands[j], b, run, strength / run))
    return _dedup(found, L)


def _mask_near(n: int, k: int, width: int = 2) -> np.ndarray:
    m = np.zeros(n)
    m[[(k + d) % n for d in range(-width, width + 1)]] = 1.0
    return m


def _dedup(found: list[Detection], L: int) -> list[Detection]:
    found = sorted(found, key=lambda d: (-d.strength, d.offset))
    keep: list[Detection] = []
    for d in found:
        if all(abs(d.offset - k.offset) >= L / 2 for k in keep):
            keep.append(d)
    return sorted(keep, key=lambda d: d.offset)


def detect_preamble(stream, linear_profile: ChirpProfile, **kwargs) -> list[int]:
    """Coarse start offsets (samples) of every frame whose preamble is found."""
    return [d.offset for d in detect(stream, linear_profile, **kwargs)]


def pilot_windows(x: np.ndarray, offset: int, lin: ChirpProfile):
    L = lin.n_samples
    a = offset + UP_PILOT * L
    b = offset + DOWN_PILOT * L
    if a < 0 or b + L > x.shape[0]:
        raise ContractError("pilot windows fall outside the stream")
    return x[a:a + L], x[b:b + L]


def extract(x: np.ndarray, start: float, length: int, cfo_hz: float, sample_rate: float) -> np.ndarray:
    """``length`` samples of ``x(start + n)``, CFO-derotated; zero outside ``x``."""
    i0 = int(np.floor(start))
    frac = float(start - i0)
    seg = np.zeros(length + 1, dtype=np.complex128)
    a, b = max(i0, 0), min(i0 + length + 1, x.shape[0])
    if b > a:
        seg[a - i0:b - i0] = x[a:b]
    if frac == 0.0 and cfo_hz == 0.0:
        return seg[:length]
    return _kernels.shift_derotate(seg, frac, cfo_hz / sample_rate)[:length]
