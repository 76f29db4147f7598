import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlchirp import (
    FAMILIES,
    ChirpPolynomial,
    ChirpProfile,
    Waveform,
    base_downchirp,
    fit_unified,
    get_family,
    instantaneous_frequency,
    load_families,
    map_coefficients,
    synth_symbol,
)
from nlchirp.chirp import modulate
from nlchirp.errors import ConfigError, DomainError, ValidationError
from nlchirp.modem import dechirp_bins
from oracles import direct_dft, inst_freq_hz, reference_chirp

BW = 125e3


def test_builtin_families_are_valid_and_ordered():
    assert list(FAMILIES) == ["linear", "quadratic1", "quadratic2", "quartic1", "quartic2", "sine1", "sine2"]
    assert [p.family_id for p in FAMILIES.values()] == list(range(7))
    for p in FAMILIES.values():
        p.validate()
        assert p.order <= 8


def test_sine_fits_track_their_target_shapes():
    for name, half in (("sine1", math.pi / 2), ("sine2", 3 * math.pi / 8)):
        x = np.linspace(0, 1, 1001)
        target = 0.5 * (np.sin(half * (2 * x - 1)) / math.sin(half) + 1)
        assert np.max(np.abs(FAMILIES[name](x) - target)) < 1e-4


def test_sine1_has_flat_endpoints():
    p = FAMILIES["sine1"]
    assert abs(p.derivative(0.0)) < 1e-9 and abs(p.derivative(1.0)) < 1e-9


@pytest.mark.parametrize(
    "coeffs, prefix",
    [
        ((0.0,), "order"),
        (tuple([0.0] * 9 + [1.0]), "order"),
        ((0.1, 0.9), "endpoint"),
        ((0.0, 0.5), "endpoint"),
        ((0.0, 3.0, -2.0), "monotonic"),  # overshoots above 1 and turns back
        ((0.0, -1.0, 2.0), "monotonic"),
    ],
)
def test_invalid_polynomials_are_rejected(coeffs, prefix):
    with pytest.raises(ValidationError, match=f"^{prefix}"):
        ChirpPolynomial(coeffs)


def test_fit_rejects_bad_degree_and_large_residual():
    with pytest.raises(ConfigError):
        fit_unified(lambda x: x, degree=3)
    with pytest.raises(ValidationError):
        fit_unified(lambda x: np.sqrt(np.asarray(x)))


def test_map_coefficients_linear_frozen():
    k = map_coefficients(FAMILIES["linear"], 10, BW)
    assert k == (-62500.0, 15258789.0625)


def test_map_coefficients_quadratic1_frozen():
    k = map_coefficients(FAMILIES["quadratic1"], 10, BW)
    assert k[0] == -62500.0 and k[1] == 0.0
    assert k[2] == pytest.approx(125000.0**3 / 2**20, rel=1e-15)
    assert k[2] == pytest.approx(1.862645149230957e9, rel=1e-12)


@pytest.mark.parametrize("sf", [7, 10, 12])
@pytest.mark.parametrize("bw", [125e3, 250e3, 500e3])
def test_linear_endpoints(sf, bw):
    p = ChirpProfile(FAMILIES["linear"], sf, bw)
    T = p.symbol_time
    assert T == 2**sf / bw
    assert instantaneous_frequency(p, 0.0) == pytest.approx(-bw / 2)
    assert instantaneous_frequency(p, T) == pytest.approx(bw / 2)
    assert instantaneous_frequency(p, T / 2) == pytest.approx(0.0, abs=1e-6)


def test_quadratic1_midpoint_frequency():
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW)
    assert instantaneous_frequency(p, p.symbol_time / 2) == pytest.approx(-31250.0, abs=1e-6)


def test_instantaneous_frequency_domain():
    p = ChirpProfile(FAMILIES["linear"], 8, BW)
    with pytest.raises(DomainError):
        instantaneous_frequency(p, -1e-9)
    with pytest.raises(DomainError):
        instantaneous_frequency(p, p.symbol_time * 1.01)


@pytest.mark.parametrize("name", list(FAMILIES))
@pytest.mark.parametrize("sf", list(range(7, 13)))
@pytest.mark.parametrize("bw", [125e3, 250e3, 500e3])
def test_coefficient_mapping_matches_unified_shape(name, sf, bw):
    p = ChirpProfile(FAMILIES[name], sf, bw)
    t = np.linspace(0, p.symbol_time, 256)
    want = bw * FAMILIES[name](t * bw / 2**sf) - bw / 2
    assert np.max(np.abs(instantaneous_frequency(p, t) - want)) <= 1e-6 * bw


def test_map_coefficients_domain():
    with pytest.raises(DomainError):
        map_coefficients(FAMILIES["linear"], 6, BW)
    with pytest.raises(DomainError):
        map_coefficients(FAMILIES["linear"], 10, 0.0)


@pytest.mark.parametrize("name", ["linear", "quadratic1", "sine2"])
@pytest.mark.parametrize("osr", [1, 2])
def test_synthesis_matches_loop_reference(name, osr):
    p = ChirpProfile(FAMILIES[name], 7, BW, osr)
    for s in (0, 1, 77, 127):
        ref = reference_chirp(FAMILIES[name].coeffs, 7, BW, s, osr)
        assert np.max(np.abs(synth_symbol(p, s).samples - ref)) < 1e-9


def test_symbol_zero_is_base_upchirp_and_downchirp_is_conjugate():
    p = ChirpProfile(FAMILIES["quartic1"], 9, BW)
    assert np.array_equal(synth_symbol(p, 0).samples, p.upchirp)
    assert np.array_equal(np.conj(base_downchirp(p).samples), p.upchirp)
    prod = base_downchirp(p).samples * p.upchirp
    assert int(np.argmax(np.abs(direct_dft(prod)))) == 0


def test_linear_downchirp_sweeps_down():
    p = ChirpProfile(FAMILIES["linear"], 9, BW, 4)
    f = inst_freq_hz(base_downchirp(p).samples, p.sample_rate)
    assert f[0] == pytest.approx(BW / 2, rel=0.01)
    assert f[-1] == pytest.approx(-BW / 2, rel=0.01)
    assert np.all(np.diff(f) < 0)


@pytest.mark.parametrize("name", ["linear", "quadratic1", "quartic2", "sine1"])
def test_every_symbol_lands_in_its_bin_direct_dft(name):
    p = ChirpProfile(FAMILIES[name], 7, BW)
    x = p.symbol_matrix(np.arange(p.n_bins)) * p.downchirp
    assert np.array_equal(np.argmax(np.abs(direct_dft(x)), axis=1), np.arange(p.n_bins))


@settings(max_examples=40, deadline=None)
@given(
    name=st.sampled_from(sorted(FAMILIES)),
    sf=st.integers(7, 10),
    osr=st.sampled_from([1, 2, 4]),
    syms=st.lists(st.integers(0, 2**7 - 1), min_size=1, max_size=6),
)
def test_envelope_and_round_trip(name, sf, osr, syms):
    p = ChirpProfile(FAMILIES[name], sf, BW, osr)
    syms = np.asarray(syms) * (p.n_bins // 128)
    x = p.symbol_matrix(syms)
    assert np.max(np.abs(np.abs(x) - 1.0)) <= 1e-9
    got = np.argmax(np.abs(dechirp_bins(x, p)), axis=-1)
    assert np.array_equal(got, syms)


def test_residual_frequency_law_quadratic1():
    p = ChirpProfile(FAMILIES["quadratic1"], 10, BW, 8)
    fs, L = p.sample_rate, p.n_samples
    k2 = p.k[2]
    rng = np.random.default_rng(3)
    for _ in range(5):
        s = int(rng.integers(0, 64))  # keep f0 + sweep below the wrap point
        g = int(rng.integers(8, L // 4))
        x = p.symbol_matrix([s])[0]
        prod = x[g:] * np.conj(p.upchirp[: L - g])
        f = inst_freq_hz(prod, fs)
        t = (np.arange(f.size) + 0.5) / fs
        tg = g / fs
        want = s * BW / p.n_bins + k2 * tg**2 + 2 * k2 * tg * t
        interior = slice(4, int(0.3 * f.size))
        assert np.max(np.abs(f[interior] - want[interior])) < 1.0


def test_symbol_range_checked():
    p = ChirpProfile(FAMILIES["linear"], 7, BW)
    with pytest.raises(DomainError):
        synth_symbol(p, 128)
    with pytest.raises(DomainError):
        modulate(p, [0, -1])


def test_profile_rejects_bad_osr_and_family():
    with pytest.raises(DomainError):
        ChirpProfile(FAMILIES["linear"], 10, BW, 0)
    with pytest.raises(ConfigError):
        get_family("cubic9")


def test_waveform_is_read_only_copy():
    a = np.zeros(4, dtype=np.complex128)
    w = Waveform(a, 1e3)
    a[0] = 1
    assert w.samples[0] == 0
    with pytest.raises(ValueError):
        w.samples[0] = 2
    assert w.duration == pytest.approx(4e-3)
    assert len(w.slice(1, 3)) == 2


def test_load_families_toml(tmp_path):
    f = tmp_path / "fam.toml"
    f.write_text(
        '[[family]]\nid = 10\nlabel = "cubic"\ncoeffs = [0.0, 0.0, 0.0, 1.0]\n\n'
        '[[family]]\nid = 11\nlabel = "q1copy"\nbuiltin = "quadratic1"\n'
    )
    reg = load_families(f)
    assert reg["cubic"].coeffs == (0.0, 0.0, 0.0, 1.0)
    assert reg["q1copy"].coeffs == FAMILIES["quadratic1"].coeffs and reg["q1copy"].family_id == 11


@pytest.mark.parametrize(
    "body",
    [
        "",
        '[[family]]\nlabel = "x"\ncoeffs = [0.0, 1.0]\n',
        '[[family]]\nid = 1\nlabel = "x"\n',
        '[[family]]\nid = 1\nlabel = "x"\ncoeffs = [0.0, 1.0]\n[[family]]\nid = 2\nlabel = "x"\ncoeffs = [0.0, 1.0]\n',
        "not toml [",
    ],
)
def test_load_families_errors(tmp_path, body):
    f = tmp_path / "bad.toml"
    f.write_text(body)
    with pytest.raises(ConfigError):
        load_families(f)


def test_load_families_invalid_polynomial(tmp_path):
    f = tmp_path / "bad.toml"
    f.write_text('[[family]]\nid = 1\nlabel = "x"\ncoeffs = [0.0, 0.5]\n')
    with pytest.raises(ValidationError):
        load_families(f)
