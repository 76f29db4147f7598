import numpy as np
import pytest

from nlchirp import FAMILIES, ChirpProfile, Waveform
from nlchirp.channel import awgn, fractional_delay, noise
from nlchirp.errors import ContractError
from nlchirp.framing import FrameSpec, build_frame
from nlchirp.modem import dechirp, decide_symbol, scatter_ratio
from nlchirp.sync import (
    SyncEstimate,
    correct,
    detect,
    detect_preamble,
    estimate_sto_cfo,
    pilot_windows,
)

BW = 125e3


def lin(sf=10, osr=1):
    return ChirpProfile(FAMILIES["linear"], sf, BW, osr)


def frame_stream(p, payload_len=8, lead=2, tail=2, seed=0):
    rng = np.random.default_rng(seed)
    pay = rng.integers(0, p.n_bins, payload_len)
    fr = build_frame(FrameSpec(p, payload_len), pay).samples
    L = p.n_samples
    x = np.concatenate([np.zeros(lead * L, complex), fr, np.zeros(tail * L, complex)])
    return x, pay, lead * L


def inject(x, sto, cfo_bins, p):
    y = fractional_delay(x, sto)
    n = np.arange(y.shape[0])
    return y * np.exp(2j * np.pi * cfo_bins / p.n_bins / p.osr * n)


def test_clean_frame_at_offset_zero():
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW)
    x, _, _ = frame_stream(p, lead=0)
    assert detect_preamble(x, lin()) == [0]


@pytest.mark.parametrize("osr", [1, 4])
def test_detects_offset_at_snr0(osr):
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW, osr)
    fr = build_frame(FrameSpec(p, 4), [1, 2, 3, 4]).samples
    x = np.zeros(12345 + fr.shape[0] + 3 * p.n_samples, complex)
    x[12345:12345 + fr.shape[0]] = fr
    y = awgn(x, 0.0, 7).samples
    got = detect_preamble(y, lin(osr=osr))
    assert len(got) == 1 and abs(got[0] - 12345) <= osr


def test_false_alarm_rate_on_noise():
    rng = np.random.default_rng(11)
    lp = lin()
    hits = sum(bool(detect(noise(24 * lp.n_samples, 0.0, rng), lp)) for _ in range(1000))
    assert hits / 1000 < 0.01


def test_zero_offsets_estimate_zero():
    lp = lin()
    x, _, o = frame_stream(lp)
    est = estimate_sto_cfo(*pilot_windows(x, o, lp), lp)
    assert abs(est.sto_samples) < 0.5 and abs(est.cfo_bins) < 0.1


@pytest.mark.parametrize("osr", [1, 4])
def test_sto_recovered(osr):
    lp = lin(osr=osr)
    x, _, o = frame_stream(lp)
    est = estimate_sto_cfo(*pilot_windows(inject(x, 5 * osr, 0.0, lp), o, lp), lp)
    assert abs(est.sto_samples - 5 * osr) <= 0.5 and abs(est.cfo_bins) <= 0.1


def test_cfo_recovered():
    lp = lin()
    x, _, o = frame_stream(lp)
    est = estimate_sto_cfo(*pilot_windows(inject(x, 0.0, 0.25, lp), o, lp), lp)
    assert abs(est.cfo_bins - 0.25) <= 0.05 and abs(est.sto_samples) <= 0.5
    assert est.cfo_hz == pytest.approx(est.cfo_bins * BW / 1024)


def test_estimator_grid_at_snr0():
    rng = np.random.default_rng(5)
    lp = lin(osr=4)
    x, _, o = frame_stream(lp)
    e_sto, e_cfo = [], []
    for _ in range(200):
        sto, cfo = rng.uniform(-8, 8), rng.uniform(-2, 2)
        y = awgn(inject(x, sto, cfo, lp), 0.0, rng).samples
        est = estimate_sto_cfo(*pilot_windows(y, o, lp), lp)
        e_sto.append(abs(est.sto_samples - sto))
        e_cfo.append(abs(est.cfo_bins - cfo))
    assert np.median(e_sto) <= 0.5 and np.median(e_cfo) <= 0.1


def test_identity_correction():
    x = np.arange(8) + 1j
    out = correct(Waveform(x, 1e3), SyncEstimate(0.0, 0.0, 0, 0, 1.0))
    assert np.array_equal(out.samples, x)


def test_correct_requires_rate_and_bounded_shift():
    with pytest.raises(ContractError):
        correct(np.ones(4, complex), SyncEstimate(0.5, 0.0, 0, 0, 1.0))
    with pytest.raises(ContractError):
        correct(Waveform(np.ones(4, complex), 1.0), SyncEstimate(5.0, 0.0, 0, 0, 1.0))
    with pytest.raises(ContractError):
        pilot_windows(np.ones(10, complex), 0, lin())


def test_correction_is_idempotent():
    lp = lin(osr=4)
    x, _, o = frame_stream(lp)
    y = Waveform(inject(x, 6.3, -1.4, lp), lp.sample_rate)
    e1 = estimate_sto_cfo(*pilot_windows(y.samples, o, lp), lp)
    z = correct(y, e1)
    e2 = estimate_sto_cfo(*pilot_windows(z.samples, o, lp), lp)
    assert abs(e2.cfo_bins) < 0.2 and abs(e2.sto_samples) < 0.5


def test_correction_restores_payload_at_snr0():
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW, 4)
    lp = lin(osr=4)
    L = p.n_samples
    rng = np.random.default_rng(9)
    err_ref = err_fix = 0
    for _ in range(10):
        x, pay, o = frame_stream(p, 16, seed=int(rng.integers(1 << 30)))
        a = o + 12 * L + L // 4
        ref = awgn(x, 0.0, rng).samples
        y = awgn(Waveform(inject(x, 4.0, 0.7, p), p.sample_rate), 0.0, rng)
        z = correct(y, estimate_sto_cfo(*pilot_windows(y.samples, o, lp), lp)).samples
        for s, q in ((ref, "ref"), (z, "fix")):
            d = [decide_symbol(dechirp(s[a + i * L:a + (i + 1) * L], p)) for i in range(16)]
            e = int(np.count_nonzero(np.asarray(d) != pay))
            if q == "ref":
                err_ref += e
            else:
                err_fix += e
    assert abs(err_fix - err_ref) / 160 <= 0.005


def test_small_residual_sto_keeps_nonlinear_energy_together():
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW, 8)
    L = p.n_samples
    x = p.symbol_matrix([300, 300]).reshape(-1)
    base = scatter_ratio(dechirp(x[:L], p))
    assert scatter_ratio(dechirp(x[2:2 + L], p)) >= 0.8 * base


def test_uncorrected_sto_scatters_nonlinear_but_only_shifts_linear():
    q = ChirpProfile(FAMILIES["quadratic1"], 10, BW)
    lp = lin()
    L = q.n_samples
    for d in (2, 3, 5):
        x = q.symbol_matrix([300, 300]).reshape(-1)
        assert scatter_ratio(dechirp(x[d:d + L], q)) <= 0.5 * scatter_ratio(dechirp(x[:L], q))
        y = lp.symbol_matrix([300, 300]).reshape(-1)
        assert decide_symbol(dechirp(y[d:d + L], lp)) == 300 + d
        assert scatter_ratio(dechirp(y[d:d + L], lp)) > 0.99
