"""Command-line entry point: ``nlchirp <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import channel, experiments
from .chirp import FAMILIES, ChirpProfile, get_family, load_families
from .collision import DecodeSession
from .errors import ChirpError
from .framing import FrameSpec, build_frame, resolve_registry
from .modem import dechirp, dump_spectrum_csv


def _floats(s: str) -> tuple[float, ...]:
    """Comma list or ``start:stop:step`` range (stop inclusive)."""
    if ":" in s:
        a, b, st = (float(v) for v in s.split(":"))
        n = int(round((b - a) / st)) + 1
        return tuple(round(a + i * st, 10) for i in range(max(n, 0)))
    return tuple(float(v) for v in s.split(",") if v)


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(round(v)) for v in _floats(s))


def _names(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment file; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, help="symbols (or packets) per sweep point")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sf", type=_ints, help="spreading factors, e.g. 7,9,11")
    p.add_argument("--bw", type=float)
    p.add_argument("--osr", type=int)
    p.add_argument("--family", type=_names, dest="families", help="comma-separated family names")
    p.add_argument("--snr", type=_floats, dest="snr_db", help="SNR grid in dB (list or a:b:step)")
    p.add_argument("--sir", type=_floats, dest="sir_db", help="SIR grid in dB")
    p.add_argument("--t-gap", type=_floats, dest="t_gap", help="offsets as symbol fractions")
    p.add_argument("--n-tx", type=_ints, dest="n_tx")
    p.add_argument("--payload-len", type=int, dest="payload_len")
    p.add_argument("--registry", type=_names, help="receiver family registry")
    p.add_argument("--oracle", action="store_true", default=None,
                   help="concurrency: oracle-aligned weakest-target SER")
    p.add_argument("--json", dest="json_out", help="also write a JSON summary here")
    p.add_argument("--gnuplot", help="also write whitespace-separated columns here")


_CFG_KEYS = ("seed", "trials", "out", "sf", "bw", "osr", "families", "snr_db", "sir_db",
             "t_gap", "n_tx", "payload_len", "registry", "oracle", "json_out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlchirp", description="Non-linear chirp modem experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for kind in experiments.KINDS:
        _add_common(sub.add_parser(kind.replace("_", "-"), help=f"run the {kind} experiment"))

    d = sub.add_parser("decode", help="decode every packet in a cf32 file (JSON lines)")
    d.add_argument("iq")
    d.add_argument("--sf", type=int, default=10)
    d.add_argument("--bw", type=float, default=125e3)
    d.add_argument("--osr", type=int, default=1)
    d.add_argument("--family", type=_names, dest="families",
                   default=tuple(f for f in FAMILIES if f != "linear"))
    d.add_argument("--families-file", help="TOML file with extra [[family]] entries")
    d.add_argument("--out")

    s = sub.add_parser("synth-frame", help="write one frame (optionally noisy) as cf32")
    s.add_argument("out")
    s.add_argument("--sf", type=int, default=10)
    s.add_argument("--bw", type=float, default=125e3)
    s.add_argument("--osr", type=int, default=1)
    s.add_argument("--family", default="quadratic1")
    s.add_argument("--payload", type=_ints, help="symbol values (default: random)")
    s.add_argument("--payload-len", type=int, default=16)
    s.add_argument("--snr", type=float, default=float("inf"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pad", type=int, default=2, help="silent symbols before and after")

    sp = sub.add_parser("spectrum", help="dump the dechirped spectrum of one symbol window")
    sp.add_argument("iq")
    sp.add_argument("--start", type=int, default=0)
    sp.add_argument("--sf", type=int, default=10)
    sp.add_argument("--bw", type=float, default=125e3)
    sp.add_argument("--osr", type=int, default=1)
    sp.add_argument("--family", default="linear")
    sp.add_argument("--out", required=True)
    return ap


def _experiment(kind: str, args) -> int:
    over = {k: getattr(args, k) for k in _CFG_KEYS if getattr(args, k, None) is not None}
    if args.config:
        cfg = experiments.ExperimentConfig.from_toml(args.config, kind=kind, **over)
    else:
        cfg = experiments.ExperimentConfig.from_dict({"kind": kind, **over})
    res = experiments.run_experiment(cfg, workers=args.workers)
    if not cfg.out:
        sys.stdout.write(res.csv_text)
    if args.gnuplot:
        lines = ["# " + res.csv_text.splitlines()[0].replace(",", " ")]
        for ln in res.csv_text.splitlines()[1:]:
            lines.append(" ".join(v if v else "NaN" for v in ln.split(",")))
        with open(args.gnuplot, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    if res.passed is False:
        print("dds_check: mismatch", file=sys.stderr)
        return 1
    return 0


def _decode(args) -> int:
    if args.families_file:
        extra = load_families(args.families_file)
        reg = [*(get_family(f) for f in args.families if f in FAMILIES), *extra.values()]
    else:
        reg = list(args.families)
    profiles = resolve_registry(reg, args.sf, args.bw, args.osr)
    wave = channel.load_iq(args.iq, profiles[0].sample_rate)
    sess = DecodeSession(wave, profiles)
    sess.run()
    text = sess.to_json_lines()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _synth(args) -> int:
    p = ChirpProfile(get_family(args.family), args.sf, args.bw, args.osr)
    rng = np.random.default_rng(args.seed)
    pay = args.payload if args.payload else tuple(rng.integers(0, p.n_bins, args.payload_len))
    fr = build_frame(FrameSpec(p, len(pay)), pay).samples
    pad = np.zeros(args.pad * p.n_samples, dtype=np.complex128)
    wave = channel.awgn(np.concatenate([pad, fr, pad]), args.snr, rng)
    channel.save_iq(wave, args.out)
    print(json.dumps({"offset": len(pad), "family": p.label, "payload": [int(v) for v in pay]}))
    return 0


def _spectrum(args) -> int:
    p = ChirpProfile(get_family(args.family), args.sf, args.bw, args.osr)
    x = channel.load_iq(args.iq, p.sample_rate).samples
    dump_spectrum_csv(dechirp(x[args.start:args.start + p.n_samples], p), args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "decode":
            return _decode(args)
        if args.cmd == "synth-frame":
            return _synth(args)
        if args.cmd == "spectrum":
            return _spectrum(args)
        return _experiment(args.cmd.replace("-", "_"), args)
    except (ChirpError, OSError) as exc:
        print(f"nlchirp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
