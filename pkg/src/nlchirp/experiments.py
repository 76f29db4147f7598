"""
Monte Carlo experiment runner.

Each experiment expands into an ordered list of sweep points. Point ``i``
draws all of its randomness from ``SeedSequence(seed, spawn_key=(i,))``, so
the CSV is byte-identical regardless of how many worker processes run it.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import channel as ch
from . import dds
from .chirp import FAMILIES, POLYNOMIAL_NONLINEAR, SF_RANGE, ChirpProfile, get_family
from .collision import decode_all, decode_target
from .errors import ConfigError
from .framing import FrameSpec, build_frame, frame_length
from .metrics import compute_pdr, compute_throughput
from .modem import decide_batch, dechirp_bins

KINDS = (
    "ser_vs_snr",
    "ser_vs_sir",
    "ser_vs_offset",
    "aligned_collision",
    "concurrency",
    "sync_sweep",
    "dds_check",
)

CSV_COLUMNS = (
    "kind", "sf", "bw", "family", "snr_db", "sir_db", "t_gap",
    "n_tx", "ser", "pdr", "throughput", "trials", "seed",
)

_DEFAULTS: dict[str, dict[str, Any]] = {
    "ser_vs_snr": {"families": ("linear", "quadratic1"), "snr_db": tuple(range(-24, -9)), "trials": 10000},
    "ser_vs_sir": {"families": ("linear", "quadratic1"), "sir_db": tuple(range(-25, 1, 5)),
                   "snr_db": (30.0,), "trials": 10000},
    "ser_vs_offset": {"families": ("linear", "quadratic1"), "sir_db": (-10.0,),
                      "t_gap": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
                      "snr_db": (30.0,), "trials": 5000},
    "aligned_collision": {"families": ("quadratic1", "quadratic2"), "snr_db": (20.0,), "trials": 100},
    "concurrency": {"families": POLYNOMIAL_NONLINEAR, "n_tx": (2, 4, 6, 8, 10),
                    "sir_db": (-5.0, 0.0), "snr_db": (20.0,), "trials": 200},
    "sync_sweep": {"families": ("quadratic1",), "snr_db": (0.0, 10.0), "trials": 200},
    "dds_check": {"families": ("linear",), "trials": 1},
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    sf: tuple[int, ...] = (10,)
    bw: float = 125e3
    osr: int = 1
    families: tuple[str, ...] = ()
    snr_db: tuple[float, ...] = ()
    sir_db: tuple[float, ...] = ()
    t_gap: tuple[float, ...] = ()  # empty: draw from U[0.2, 0.8]
    n_tx: tuple[int, ...] = ()
    trials: int = 0
    seed: int = 0
    out: str | None = None
    payload_len: int = 32
    span_symbols: int = 20  # concurrency: start-offset spread
    oracle: bool = False  # concurrency: oracle-aligned weakest-target SER
    registry: tuple[str, ...] = ()  # receiver families (default: all non-linear)
    json_out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        d = _DEFAULTS[self.kind]
        for name in ("families", "snr_db", "sir_db", "t_gap", "n_tx"):
            val = getattr(self, name)
            if isinstance(val, (str, int, float)):
                val = (val,)
            val = tuple(val)
            if not val and name in d:
                val = tuple(d[name])
            object.__setattr__(self, name, val)
        sf = (self.sf,) if isinstance(self.sf, int) else tuple(int(s) for s in self.sf)
        object.__setattr__(self, "sf", sf)
        object.__setattr__(self, "registry", tuple(self.registry))
        if not self.trials:
            object.__setattr__(self, "trials", int(d["trials"]))
        self.validate()

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.sf or any(s not in SF_RANGE for s in self.sf):
            raise ConfigError("sf values must lie in 7..12")
        if not self.bw > 0 or self.osr < 1:
            raise ConfigError("bw must be positive and osr >= 1")
        for f in self.families + self.registry:
            if f not in FAMILIES:
                raise ConfigError(f"unknown family {f!r}")
        need = {
            "ser_vs_snr": ("families", "snr_db"),
            "ser_vs_sir": ("families", "sir_db", "snr_db"),
            "ser_vs_offset": ("families", "sir_db", "t_gap", "snr_db"),
            "aligned_collision": ("families", "snr_db"),
            "concurrency": ("families", "n_tx", "snr_db"),
            "sync_sweep": ("families", "snr_db"),
            "dds_check": (),
        }[self.kind]
        for name in need:
            if not getattr(self, name):
                raise ConfigError(f"{self.kind}: grid {name!r} is empty")
        if any(not 0.0 <= g < 1.0 for g in self.t_gap):
            raise ConfigError("t_gap values must lie in [0, 1)")
        if self.kind == "aligned_collision" and len(self.families) < 2:
            raise ConfigError("aligned_collision needs at least two families")
        if self.kind == "concurrency":
            if len(self.sir_db) != 2 or self.sir_db[0] > self.sir_db[1]:
                raise ConfigError("concurrency: sir_db must be a [low, high] range")
            if any(n < 1 for n in self.n_tx):
                raise ConfigError("n_tx must be >= 1")
        if self.payload_len < 1 or self.span_symbols < 1:
            raise ConfigError("payload_len and span_symbols must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_toml(cls, path, **overrides) -> "ExperimentConfig":
        from ._toml import load_toml

        doc = load_toml(path)
        flat = dict(doc.get("experiment", {}))
        for k, v in doc.items():
            if not isinstance(v, dict):
                flat[k] = v
        flat.update({k: v for k, v in overrides.items() if v is not None})
        if "kind" not in flat:
            raise ConfigError("config needs a 'kind'")
        return cls.from_dict(flat)


@dataclass(frozen=True)
class ResultRow:
    kind: str
    sf: int
    bw: float
    family: str
    snr_db: float | None
    sir_db: float | None
    t_gap: float | None
    n_tx: int
    ser: float
    pdr: float | None
    throughput: float | None
    trials: int
    seed: int
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.ser <= 1.0:
            raise ValueError("ser outside [0, 1]")
        if self.pdr is not None and not 0.0 <= self.pdr <= 1.0:
            raise ValueError("pdr outside [0, 1]")

    def csv_values(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return format(v, ".8g")
    return str(v)


# ---------------------------------------------------------------------------
# point runners
# ---------------------------------------------------------------------------


def _profile(cfg: ExperimentConfig, sf: int, family: str) -> ChirpProfile:
    return ChirpProfile(get_family(family), sf, cfg.bw, cfg.osr)


def symbol_errors_awgn(profile: ChirpProfile, snr_db: float, n_symbols: int, rng, chunk: int = 1024):
    """Aligned single-symbol Monte Carlo: returns the number of symbol errors."""
    errors = 0
    left = n_symbols
    while left > 0:
        m = min(chunk, left)
        syms = rng.integers(0, profile.n_bins, m)
        x = profile.symbol_matrix(syms)
        x = x + ch.noise(x.size, snr_db, rng).reshape(x.shape)
        errors += int(np.count_nonzero(decide_batch(dechirp_bins(x, profile)) != syms))
        left -= m
    return errors


def _run_ser_vs_snr(cfg, pt, rng) -> ResultRow:
    p = _profile(cfg, pt["sf"], pt["family"])
    err = symbol_errors_awgn(p, pt["snr_db"], cfg.trials, rng)
    return _row(cfg, pt, ser=err / cfg.trials)


def near_far_errors(profile: ChirpProfile, sir_db: float, snr_db: float, n_symbols: int, rng,
                    t_gap: float | None = None, payload_len: int = 32,
                    interferer: ChirpProfile | None = None, n_interferers: int = 1,
                    gain_range: tuple[float, float] | None = None):
    """Oracle-aligned target vs interferers delayed by a fraction of a symbol.

    Each interferer carries one more payload symbol than the target so every
    target window overlaps the tail of one interfering symbol and the head of
    the next. Returns ``(symbol_errors, symbols, per_packet_ser)``.
    """
    interferer = interferer or profile
    N = profile.n_bins
    P = payload_len
    spec_t = FrameSpec(profile, P)
    spec_i = FrameSpec(interferer, P + 1)
    errors = total = 0
    per_packet = []
    while total < n_symbols:
        pay = rng.integers(0, N, P)
        tgt = build_frame(spec_t, pay)
        ints = [build_frame(spec_i, rng.integers(0, N, P + 1)) for _ in range(n_interferers)]
        if gain_range is None:
            sirs = [sir_db] * n_interferers
        else:
            sirs = list(-rng.uniform(gain_range[0], gain_range[1], n_interferers))
        gaps = None if t_gap is None else [t_gap] * n_interferers
        scene = ch.make_collision(tgt, ints, sirs, gaps, snr_db, symbol_samples=profile.n_samples, seed=rng)
        y = ch.render(scene)
        got = decode_target(y, 0, profile, P)
        e = int(np.count_nonzero(got != pay))
        errors += e
        total += P
        per_packet.append(e / P)
    return errors, total, per_packet


def peak_margin_trials(profile: ChirpProfile, sir_db: float, t_gap: float, n_windows: int, rng,
                       interferer: ChirpProfile | None = None) -> np.ndarray:
    """Per window: does the target's own peak beat the strongest interference bin?

    The target symbol and the two interfering symbols straddling the window
    (split at ``t_gap``) are dechirped separately, without noise.
    """
    interferer = interferer or profile
    N, L = profile.n_bins, profile.n_samples
    cut = int(round(t_gap * L))
    amp = 10.0 ** (-sir_db / 20.0)
    s = rng.integers(0, N, n_windows)
    a = rng.integers(0, N, n_windows)
    b = rng.integers(0, N, n_windows)
    ph = np.exp(1j * rng.uniform(0, 2 * np.pi, n_windows))[:, None]
    tgt = dechirp_bins(profile.symbol_matrix(s), profile)
    ia = interferer.symbol_matrix(a)
    ib = interferer.symbol_matrix(b)
    win = np.concatenate([ia[:, L - cut:], ib[:, :L - cut]], axis=1) * (amp * ph)
    itf = dechirp_bins(win, profile)
    return np.abs(tgt[np.arange(n_windows), s]) > np.abs(itf).max(axis=-1)


def window_collision_errors(profile: ChirpProfile, sir_db: float, n_windows: int, rng,
                            snr_db: float = math.inf, t_gap: float | None = None,
                            interferer: ChirpProfile | None = None, chunk: int = 512,
                            gap_range: tuple[float, float] = (0.2, 0.8)) -> int:
    """Symbol errors of an aligned target window hit by one delayed interferer.

    Cheaper than full frames: each window holds one target symbol plus the
    tail and head of two interfering symbols split at ``t_gap`` (drawn from
    ``U[gap_range]`` per window when not given).
    """
    interferer = interferer or profile
    N, L = profile.n_bins, profile.n_samples
    amp = 10.0 ** (-sir_db / 20.0)
    errors = 0
    left = n_windows
    while left > 0:
        m = min(chunk, left)
        s = rng.integers(0, N, m)
        gaps = np.full(m, t_gap) if t_gap is not None else rng.uniform(*gap_range, m)
        cut = np.rint(gaps * L).astype(np.int64)
        ia = interferer.symbol_matrix(rng.integers(0, N, m))
        ib = interferer.symbol_matrix(rng.integers(0, N, m))
        col = np.arange(L)[None, :]
        # interferer symbol a started ``cut`` samples before the window
        src_a = np.take_along_axis(ia, np.minimum(col + (L - cut)[:, None], L - 1), axis=1)
        src_b = np.take_along_axis(ib, np.maximum(col - cut[:, None], 0), axis=1)
        itf = np.where(col < cut[:, None], src_a, src_b)
        ph = np.exp(1j * rng.uniform(0, 2 * np.pi, m))[:, None]
        x = profile.symbol_matrix(s) + amp * ph * itf
        if not (math.isinf(snr_db) and snr_db > 0):
            x = x + ch.noise(x.size, snr_db, rng).reshape(x.shape)
        errors += int(np.count_nonzero(decide_batch(dechirp_bins(x, profile)) != s))
        left -= m
    return errors


def _run_near_far(cfg, pt, rng) -> ResultRow:
    p = _profile(cfg, pt["sf"], pt["family"])
    tg = pt.get("t_gap")
    err, n, _ = near_far_errors(p, pt["sir_db"], pt["snr_db"], cfg.trials, rng, tg, cfg.payload_len)
    return _row(cfg, pt, ser=err / n, trials=n)


def _lead(profile: ChirpProfile) -> int:
    return 2 * profile.n_samples


def _match(packets, start: int, label: str, P: int, tol: float = 2.0):
    for r in packets:
        if r.label == label and abs(r.start_offset - start) <= tol and len(r.symbols) == P:
            return r
    return None


def _registry(cfg: ExperimentConfig, default: Sequence[str]) -> list[str]:
    return list(cfg.registry) if cfg.registry else list(default)


def _run_aligned(cfg, pt, rng) -> ResultRow:
    fams = pt["family"].split("+")
    sf, P = pt["sf"], cfg.payload_len
    profs = [_profile(cfg, sf, f) for f in fams]
    reg = _registry(cfg, sorted(set(fams) | set(POLYNOMIAL_NONLINEAR) | {"sine1", "sine2"},
                                key=lambda f: FAMILIES[f].family_id))
    lead = _lead(profs[0])
    sers = []
    per_family = {p.label: [] for p in profs}
    for _ in range(cfg.trials):
        pays = [rng.integers(0, p.n_bins, P) for p in profs]
        phases = rng.uniform(0, 2 * np.pi, len(profs))
        paths = [ch.ChannelPath(lead, 0.0, 0.0, build_frame(FrameSpec(p, P), pl), float(ph))
                 for p, pl, ph in zip(profs, pays, phases)]
        dur = lead + frame_length(profs[0], P) + lead
        scene = ch.Scene(tuple(paths), pt["snr_db"], dur, 0, int(rng.integers(2**62)))
        out = decode_all(ch.render(scene), reg, sf=sf, osr=cfg.osr, bw=cfg.bw)
        for p, pl in zip(profs, pays):
            r = _match(out, lead, p.label, P)
            sers.append(1.0 if r is None else float(np.mean(np.asarray(r.symbols) != pl)))
            per_family[p.label].append(sers[-1])
    extra = {f"ser_{k}": float(np.mean(v)) for k, v in per_family.items()}
    return _row(cfg, pt, ser=float(np.mean(sers)), pdr=compute_pdr(sers), trials=cfg.trials,
                n_tx=len(profs), extra=extra)


def concurrency_scene(cfg: ExperimentConfig, sf: int, n_tx: int, families: Sequence[str], rng,
                      snr_db: float):
    """Staggered packets: start = (k + u) symbols, k ~ U{0..span-1}, u ~ U[0.2, 0.8]."""
    P = cfg.payload_len
    L = (1 << sf) * cfg.osr
    lo, hi = cfg.sir_db
    fams = [families[i] for i in rng.integers(0, len(families), n_tx)]
    ks = rng.integers(0, cfg.span_symbols, n_tx)
    us = rng.uniform(0.2, 0.8, n_tx)
    gains = rng.uniform(-hi, -lo, n_tx)
    phases = rng.uniform(0, 2 * np.pi, n_tx)
    pays = [rng.integers(0, 1 << sf, P) for _ in range(n_tx)]
    lead = 2 * L
    paths = []
    for f, k, u, g, ph, pl in zip(fams, ks, us, gains, phases, pays):
        p = _profile(cfg, sf, f)
        start = lead + int(round((k + u) * L))
        paths.append(ch.ChannelPath(start, float(g), 0.0, build_frame(FrameSpec(p, P), pl), float(ph)))
    dur = lead + (cfg.span_symbols + 1) * L + frame_length(_profile(cfg, sf, fams[0]), P) + lead
    scene = ch.Scene(tuple(paths), snr_db, dur, 0, int(rng.integers(2**62)))
    return scene, fams, pays


def concurrency_point(cfg: ExperimentConfig, sf: int, n_tx: int, families: Sequence[str],
                      registry: Sequence[str], snr_db: float, rng):
    """Returns (per-packet SER list, mean throughput in symbols/s, scenes)."""
    P = cfg.payload_len
    n_scenes = max(1, math.ceil(cfg.trials / n_tx))
    sers: list[float] = []
    thr = []
    for _ in range(n_scenes):
        scene, fams, pays = concurrency_scene(cfg, sf, n_tx, families, rng, snr_db)
        out = decode_all(ch.render(scene), registry, sf=sf, osr=cfg.osr, bw=cfg.bw)
        good = 0
        for path, f, pl in zip(scene.paths, fams, pays):
            r = _match(out, path.start_offset, f, P, tol=4.0)
            s = 1.0 if r is None else float(np.mean(np.asarray(r.symbols) != pl))
            sers.append(s)
            good += int(round((1.0 - s) * P))
        thr.append(compute_throughput(good, scene.duration / scene.sample_rate))
    return sers, float(np.mean(thr)), n_scenes


def weakest_target_ser(cfg: ExperimentConfig, sf: int, n_tx: int, family: str, snr_db: float, rng,
                       n_symbols: int | None = None, interferer_families: Sequence[str] | None = None):
    """Oracle-aligned SER of a 0 dB target among ``n_tx - 1`` stronger colliders.

    Interferer gains are U[0, 5] dB (SIR in [-5, 0] dB) and their delays U[0.2, 0.8]
    symbols.
    """
    p = _profile(cfg, sf, family)
    lo, hi = cfg.sir_db
    n_symbols = n_symbols or cfg.trials
    if n_tx < 2:
        err, n, pp = near_far_errors(p, 0.0, snr_db, n_symbols, rng, None, cfg.payload_len, n_interferers=0)
        return err / n, pp
    if interferer_families is None:
        err, n, pp = near_far_errors(p, 0.0, snr_db, n_symbols, rng, None, cfg.payload_len,
                                     n_interferers=n_tx - 1, gain_range=(-hi, -lo))
        return err / n, pp
    errs = total = 0
    pp = []
    while total < n_symbols:
        f = interferer_families[int(rng.integers(0, len(interferer_families)))]
        e, n, q = near_far_errors(p, 0.0, snr_db, 1, rng, None, cfg.payload_len,
                                  interferer=_profile(cfg, sf, f), n_interferers=n_tx - 1,
                                  gain_range=(-hi, -lo))
        errs += e
        total += n
        pp.extend(q)
    return errs / total, pp


def _run_concurrency(cfg, pt, rng) -> ResultRow:
    sf, n = pt["sf"], pt["n_tx"]
    if cfg.oracle:
        ser, pp = weakest_target_ser(cfg, sf, n, pt["family"], pt["snr_db"], rng)
        return _row(cfg, pt, ser=ser, pdr=compute_pdr(pp), trials=len(pp) * cfg.payload_len)
    if pt["family"] == "linear":
        fams, reg = ["linear"], ["linear"]
    else:
        fams = pt["family"].split("+")
        reg = _registry(cfg, fams)
    sers, thr, _ = concurrency_point(cfg, sf, n, fams, reg, pt["snr_db"], rng)
    return _row(cfg, pt, ser=float(np.mean(sers)), pdr=compute_pdr(sers), throughput=thr,
                trials=len(sers))


def _run_sync_sweep(cfg, pt, rng) -> ResultRow:
    """Frames with random STO (+-8 samples) and CFO (+-2 bins), decoded blind."""
    p = _profile(cfg, pt["sf"], pt["family"])
    P = cfg.payload_len
    L = p.n_samples
    reg = _registry(cfg, [pt["family"]])
    sers, sto_err, cfo_err = [], [], []
    for _ in range(cfg.trials):
        pay = rng.integers(0, p.n_bins, P)
        fr = build_frame(FrameSpec(p, P), pay).samples
        sto = float(rng.uniform(-8.0, 8.0))
        if cfg.osr < 4:
            sto = float(round(sto))
        cfo_bins = float(rng.uniform(-2.0, 2.0))
        nominal = 2 * L
        buf = np.zeros(nominal + fr.shape[0] + 2 * L, dtype=np.complex128)
        buf[nominal:nominal + fr.shape[0]] = fr
        buf = ch.fractional_delay(buf, sto)
        n = np.arange(buf.shape[0])
        buf *= np.exp(2j * np.pi * (cfo_bins / p.n_bins / cfg.osr) * n)
        y = ch.awgn(buf, pt["snr_db"], rng)
        out = decode_all(y.samples, reg, sf=p.sf, osr=cfg.osr, bw=cfg.bw)
        r = _match(out, nominal + sto, p.label, P, tol=2.0)
        if r is None:
            sers.append(1.0)
            continue
        sers.append(float(np.mean(np.asarray(r.symbols) != pay)))
        sto_err.append(abs(r.start_offset - (nominal + sto)))
        cfo_err.append(abs(r.sync.cfo_bins - cfo_bins))
    extra = {
        "median_abs_sto_err": float(np.median(sto_err)) if sto_err else None,
        "median_abs_cfo_err_bins": float(np.median(cfo_err)) if cfo_err else None,
    }
    return _row(cfg, pt, ser=float(np.mean(sers)), pdr=compute_pdr(sers), trials=cfg.trials, extra=extra)


def _row(cfg, pt, *, ser, pdr=None, throughput=None, trials=None, n_tx=None, extra=None) -> ResultRow:
    return ResultRow(
        kind=cfg.kind,
        sf=pt["sf"],
        bw=cfg.bw,
        family=pt["family"],
        snr_db=pt.get("snr_db"),
        sir_db=pt.get("sir_db"),
        t_gap=pt.get("t_gap"),
        n_tx=n_tx if n_tx is not None else pt.get("n_tx", 1),
        ser=float(ser),
        pdr=pdr,
        throughput=throughput,
        trials=int(trials if trials is not None else cfg.trials),
        seed=cfg.seed,
        extra=extra or {},
    )


_RUNNERS = {
    "ser_vs_snr": _run_ser_vs_snr,
    "ser_vs_sir": _run_near_far,
    "ser_vs_offset": _run_near_far,
    "aligned_collision": _run_aligned,
    "concurrency": _run_concurrency,
    "sync_sweep": _run_sync_sweep,
}


def sweep_points(cfg: ExperimentConfig) -> list[dict]:
    pts = []
    k = cfg.kind
    for sf in cfg.sf:
        if k == "ser_vs_snr":
            pts += [{"sf": sf, "family": f, "snr_db": s, "n_tx": 1} for f in cfg.families for s in cfg.snr_db]
        elif k in ("ser_vs_sir", "ser_vs_offset"):
            gaps = cfg.t_gap or (None,)
            pts += [{"sf": sf, "family": f, "snr_db": s, "sir_db": r, "t_gap": g, "n_tx": 2}
                    for f in cfg.families for s in cfg.snr_db for r in cfg.sir_db for g in gaps]
        elif k == "aligned_collision":
            fam = "+".join(cfg.families)
            pts += [{"sf": sf, "family": fam, "snr_db": s, "t_gap": 0.0} for s in cfg.snr_db]
        elif k == "concurrency":
            if cfg.oracle:
                groups = list(cfg.families)
            else:
                groups = ["+".join(cfg.families)]
                if "linear" not in cfg.families:
                    groups.append("linear")
            pts += [{"sf": sf, "family": g, "snr_db": s, "n_tx": n}
                    for g in groups for s in cfg.snr_db for n in cfg.n_tx]
        elif k == "sync_sweep":
            pts += [{"sf": sf, "family": f, "snr_db": s, "n_tx": 1} for f in cfg.families for s in cfg.snr_db]
    return pts


def _job(args) -> ResultRow:
    cfg, idx, pt = args
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(idx,)))
    return _RUNNERS[cfg.kind](cfg, pt, rng)


def run_rows(cfg: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    jobs = [(cfg, i, pt) for i, pt in enumerate(sweep_points(cfg))]
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_job, jobs))


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# DDS check (own schema: the index sequences are integers, not rates)
# ---------------------------------------------------------------------------

DDS_COLUMNS = ("case", "step", "K", "freq_index", "phase_index", "expected_freq", "expected_phase", "match")
DDS_CASES = (
    ("K=1", (1,), (1, 2, 3, 4), (1, 3, 6, 10)),
    ("K=1,2,4,8", (1, 2, 4, 8), (1, 3, 7, 15), (1, 4, 11, 26)),
    ("K=0", (0,), (0, 0, 0, 0), (0, 0, 0, 0)),
)


def dds_check_rows(f_clk: float = 1e6, table_bits: int = 16):
    rows = []
    ok = True
    for name, sched, ef, ep in DDS_CASES:
        cfg = dds.DdsConfig(f_clk, table_bits, sched)
        f = dds.freq_index_sequence(cfg, len(ef))
        ph = dds.phase_index_sequence(cfg, len(ep))
        k = cfg.slopes(len(ef))
        for i in range(len(ef)):
            m = int(f[i]) == ef[i] and int(ph[i]) == ep[i]
            ok &= m
            rows.append((name, i + 1, int(k[i]), int(f[i]), int(ph[i]), ef[i], ep[i], int(m)))
    return rows, ok


def dds_check_csv(f_clk: float = 1e6, table_bits: int = 16) -> tuple[str, bool]:
    rows, ok = dds_check_rows(f_clk, table_bits)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DDS_COLUMNS)
    w.writerows(rows)
    return buf.getvalue(), ok


# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    csv_text: str
    rows: list = field(default_factory=list)
    passed: bool | None = None

    def summary(self) -> dict:
        d = {"kind": self.config.kind, "seed": self.config.seed, "points": len(self.rows)}
        if self.passed is not None:
            d["passed"] = self.passed
        d["rows"] = [
            {**{c: getattr(r, c) for c in CSV_COLUMNS}, **r.extra} for r in self.rows
        ]
        return d


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every sweep point; write the CSV (and JSON summary) if paths are set."""
    if cfg.kind == "dds_check":
        text, ok = dds_check_csv()
        res = ExperimentResult(cfg, text, [], ok)
    else:
        rows = run_rows(cfg, workers)
        res = ExperimentResult(cfg, rows_to_csv(rows), rows)
    if cfg.out:
        out = Path(cfg.out)
        if out.parent and not out.parent.exists():
            raise OSError(f"output directory {out.parent} does not exist")
        out.write_text(res.csv_text)
    if cfg.json_out:
        Path(cfg.json_out).write_text(json.dumps(res.summary(), indent=2, default=_json_default) + "\n")
    return res


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


__all__ = [
    "KINDS",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ResultRow",
    "ExperimentResult",
    "run_experiment",
    "run_rows",
    "rows_to_csv",
    "sweep_points",
    "symbol_errors_awgn",
    "near_far_errors",
    "weakest_target_ser",
    "concurrency_point",
    "concurrency_scene",
    "dds_check_csv",
    "peak_margin_trials",
    "window_collision_errors",
]
