import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlchirp import FAMILIES, ChirpProfile
from nlchirp import _kernels as K

needs_numba = pytest.mark.skipif(not K.NUMBA_AVAILABLE, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("name", ["linear", "quadratic2", "sine1"])
@pytest.mark.parametrize("osr", [1, 4])
def test_chirp_batch_paths_agree(name, osr):
    p = ChirpProfile(FAMILIES[name], 8, 125e3, osr)
    offs = np.arange(0, 256, 7) / 256.0
    a = K.chirp_batch_np(np.asarray(p.fc_mid), offs, float(osr))
    b = K.chirp_batch_nb(np.asarray(p.fc_mid), offs, float(osr))
    assert np.max(np.abs(a - b)) < 1e-12


@needs_numba
@pytest.mark.parametrize("bits", [8, 16, 24])
def test_dds_track_paths_agree(bits):
    rng = np.random.default_rng(bits)
    target = np.cumsum(rng.random(500)) * 37.0
    for u, v in zip(K.dds_track_np(target, bits), K.dds_track_nb(target, bits)):
        assert np.array_equal(u, v)


@needs_numba
@settings(max_examples=40, deadline=None)
@given(shift=st.floats(-20, 20), cyc=st.floats(-0.01, 0.01))
def test_shift_derotate_paths_agree(shift, cyc):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    assert np.max(np.abs(K.shift_derotate_np(x, shift, cyc) - K.shift_derotate_nb(x, shift, cyc))) < 1e-9


def test_env_flag_selects_numpy_path():
    code = "from nlchirp import _kernels as K; print(K.USE_NUMBA, K._chirp_impl.__name__)"
    env = dict(os.environ, NLCHIRP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "chirp_batch_np"]


def test_numpy_path_end_to_end():
    code = (
        "import numpy as np\n"
        "from nlchirp import FAMILIES, ChirpProfile\n"
        "from nlchirp.modem import demodulate\n"
        "p = ChirpProfile(FAMILIES['quartic2'], 9, 125e3, 2)\n"
        "s = np.arange(512)\n"
        "print(bool((demodulate(p.symbol_matrix(s).reshape(-1), p)[0] == s).all()))\n"
    )
    env = dict(os.environ, NLCHIRP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"
