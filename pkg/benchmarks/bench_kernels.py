"""
Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20] [--sf 10]

Both paths are called directly, so the NLCHIRP_DISABLE_NUMBA flag does not
matter here. The first numba call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from nlchirp import _kernels as K
from nlchirp.chirp import ChirpProfile, get_family
from nlchirp.dds import _ideal_cycles


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sf", type=int, default=10)
    ap.add_argument("--osr", type=int, default=4)
    args = ap.parse_args()

    prof = ChirpProfile(get_family("quadratic1"), args.sf, 125e3, args.osr)
    fc = np.ascontiguousarray(prof.fc_mid)
    offsets = np.arange(prof.n_bins, dtype=np.float64)
    phase = _ideal_cycles(prof, 0)[1:] * float(1 << 20)
    x = np.tile(prof.upchirp, 64)

    cases = {
        "chirp_batch": (K.chirp_batch_np, K.chirp_batch_nb, (fc, offsets, float(args.osr))),
        "dds_track": (K.dds_track_np, K.dds_track_nb, (phase, 20)),
        "shift_derotate": (K.shift_derotate_np, K.shift_derotate_nb, (x, 3.37, 1.3e-4)),
    }

    print(f"numba available: {K.NUMBA_AVAILABLE}  (default path: {'numba' if K.USE_NUMBA else 'numpy'})")
    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  max|diff|")
    for name, (f_np, f_nb, a) in cases.items():
        r_np = f_np(*a)
        r_nb = f_nb(*a)  # compiles
        if isinstance(r_np, tuple):
            diff = max(float(np.max(np.abs(np.asarray(u) - np.asarray(v)))) for u, v in zip(r_np, r_nb))
        else:
            diff = float(np.max(np.abs(r_np - r_nb)))
        t_np = best_of(lambda: f_np(*a), args.repeat)
        t_nb = best_of(lambda: f_nb(*a), args.repeat)
        print(f"{name:<16}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.1f}  {diff:.2e}")


if __name__ == "__main__":
    main()
