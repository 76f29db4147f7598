import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlchirp import FAMILIES, ChirpPolynomial, ChirpProfile, Waveform
from nlchirp.channel import awgn
from nlchirp.chirp import NONLINEAR
from nlchirp.errors import AmbiguityError, ContractError, DomainError, NotFoundError, UnknownFamilyError
from nlchirp.framing import (
    FrameSpec,
    build_frame,
    decode_syncword,
    encode_syncword,
    frame_length,
    parse_frame,
)

BW = 125e3


def padded(frame: Waveform, lead: int, tail: int) -> Waveform:
    z = np.zeros(lead, complex)
    return Waveform(np.concatenate([z, frame.samples, np.zeros(tail, complex)]), frame.sample_rate)


def test_frame_length_example():
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW)
    assert frame_length(p, 10) == 22784
    assert len(build_frame(FrameSpec(p, 10), np.zeros(10, int))) == 22784


@settings(max_examples=60, deadline=None)
@given(sf=st.integers(7, 12), osr=st.sampled_from([1, 2, 4, 8]), n=st.integers(1, 200))
def test_frame_length_formula(sf, osr, n):
    p = ChirpProfile(FAMILIES["linear"], sf, BW, osr)
    L = p.n_samples
    assert frame_length(p, n) == 12 * L + L // 4 + n * L
    assert FrameSpec(p, n).n_samples == frame_length(p, n)


def test_frame_layout():
    p = ChirpProfile(FAMILIES["sine2"], 7, BW, 2)
    lp = ChirpProfile(FAMILIES["linear"], 7, BW, 2)
    L = p.n_samples
    spec = FrameSpec(p, 5)
    x = build_frame(spec, [1, 2, 3, 4, 5]).samples
    assert np.array_equal(x[:L], lp.upchirp) and np.array_equal(x[7 * L:8 * L], lp.upchirp)
    hi, lo = spec.syncword_values
    assert np.array_equal(x[8 * L:9 * L], p.symbol_matrix([hi])[0])
    assert np.array_equal(x[10 * L:11 * L], lp.downchirp)
    assert np.array_equal(x[12 * L:12 * L + L // 4], lp.downchirp[:L // 4])
    assert np.array_equal(x[12 * L + L // 4:13 * L + L // 4], p.symbol_matrix([1])[0])


@settings(max_examples=200, deadline=None)
@given(sf=st.integers(7, 12), data=st.data())
def test_syncword_round_trip(sf, data):
    N = 1 << sf
    n = data.draw(st.integers(1, (N // 2) ** 2 - 1))
    v = encode_syncword(n, N)
    assert all(s % 2 == 0 and 0 <= s < N for s in v)
    assert decode_syncword(v, N) == n


def test_syncword_tolerates_single_bin_slip():
    N = 1024
    v = encode_syncword(777, N)
    assert decode_syncword((v[0], v[1] + 1), N) in (777, 778)
    assert decode_syncword((v[0], v[1] - 1), N) in (776, 777)


def test_frame_spec_bounds():
    p = ChirpProfile(FAMILIES["linear"], 7, BW)
    with pytest.raises(DomainError):
        FrameSpec(p, 0)
    with pytest.raises(DomainError):
        FrameSpec(p, 64 * 64)
    with pytest.raises(ContractError):
        build_frame(FrameSpec(p, 3), [1, 2])


@pytest.mark.parametrize("name", list(FAMILIES))
def test_clean_round_trip_every_family(name):
    p = ChirpProfile(FAMILIES[name], 9, BW)
    rng = np.random.default_rng(1)
    pay = rng.integers(0, p.n_bins, 20)
    w = padded(build_frame(FrameSpec(p, 20), pay), 1000, 2000)
    pkt = parse_frame(w, [name] if name == "linear" else list(NONLINEAR), sf=9)
    assert pkt.label == name
    assert pkt.symbols == tuple(pay)
    assert pkt.start_offset == 1000


def test_parse_many_random_payloads_noiseless():
    rng = np.random.default_rng(2)
    for name in NONLINEAR:
        p = ChirpProfile(FAMILIES[name], 7, BW)
        for _ in range(10):
            n = int(rng.integers(1, 40))
            pay = rng.integers(0, p.n_bins, n)
            w = padded(build_frame(FrameSpec(p, n), pay), 300, 400)
            assert parse_frame(w, list(NONLINEAR), sf=7).symbols == tuple(pay)


@pytest.mark.parametrize("osr", [1, 4])
def test_parse_at_snr_minus5(osr):
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW, osr)
    rng = np.random.default_rng(3)
    errs = total = 0
    for _ in range(100 if osr == 1 else 20):
        pay = rng.integers(0, p.n_bins, 10)
        w = awgn(padded(build_frame(FrameSpec(p, 10), pay), 3 * p.n_samples, 2 * p.n_samples), -5.0, rng)
        pkt = parse_frame(w, list(NONLINEAR), sf=10, osr=osr)
        errs += int(np.count_nonzero(np.asarray(pkt.symbols) != pay))
        total += 10
    assert errs / total < 0.01


def test_family_identification_at_minus10db():
    rng = np.random.default_rng(4)
    ok = 0
    n_frames = 1000
    for i in range(n_frames):
        name = NONLINEAR[i % len(NONLINEAR)]
        p = ChirpProfile(FAMILIES[name], 10, BW)
        w = awgn(padded(build_frame(FrameSpec(p, 1), [int(rng.integers(1024))]), 1024, 1024), -10.0, rng)
        try:
            ok += parse_frame(w, list(NONLINEAR), sf=10).label == name
        except (AmbiguityError, NotFoundError):
            pass
    assert ok / n_frames >= 0.99


def test_unknown_family():
    p = ChirpProfile(FAMILIES["quartic2"], 9, BW)
    w = padded(build_frame(FrameSpec(p, 4), [1, 2, 3, 4]), 600, 600)
    with pytest.raises(UnknownFamilyError):
        parse_frame(w, ["quadratic1", "sine1"], sf=9)


def test_ambiguous_registry():
    twin = ChirpPolynomial(FAMILIES["quadratic1"].coeffs, 42, "twin")
    p = ChirpProfile(FAMILIES["quadratic1"], 9, BW)
    w = padded(build_frame(FrameSpec(p, 4), [1, 2, 3, 4]), 600, 600)
    with pytest.raises(AmbiguityError) as ei:
        parse_frame(w, ["quadratic1", twin], sf=9)
    assert set(ei.value.candidates) == {"quadratic1", "twin"}


def test_no_preamble():
    with pytest.raises(NotFoundError):
        parse_frame(np.zeros(40000, complex), ["quadratic1"], sf=10)


def test_record_fields():
    p = ChirpProfile(FAMILIES["quadratic2"], 8, BW)
    w = padded(build_frame(FrameSpec(p, 3), [9, 8, 7]), 256, 512)
    rec = parse_frame(w, ["quadratic2"], sf=8).to_record()
    assert rec["family"] == "quadratic2" and rec["symbols"] == [9, 8, 7] and rec["payload_len"] == 3
