"""Monte-Carlo uplink link simulation and BER sweeps.

Every random draw comes from a stream keyed by ``(seed, slot, kind, index)``
so that SNR points, detectors and channel-estimation modes see identical
data, channels and unit-variance noise (common random numbers).
"""
import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import binomtest

from . import chest, complexity, equalizer, kernels, refsig
from .channel import PdpConfig, apply_channel, complex_normal, gen_channel, noise_variance
from .frontend import QuantizerConfig, adc

STREAM_BITS, STREAM_CHANNEL, STREAM_NOISE = 0, 1, 2
DETECTORS = ("dcd", "mmse")
CHEST_MODES = ("mmse", "ideal")


@dataclass
class SimConfig:
    n_users: int = 8
    n_rx: int = 64
    adc_bits: int = 2
    clip_scale: float = 2.0
    modulation: str = "16qam"
    coding: str = "none"
    snr_grid_db: tuple = tuple(float(s) for s in np.arange(-20.0, 10.0 + 1e-9, 2.5))
    n_slots: int = 8
    seed: int = 1
    tau_rms: float = 0.01 / 120e3
    delta_f: float = 120e3
    K: int = 128
    n_fft: int = 256
    num_taps: int = 16
    cp_len: int = 18
    L: int = 14
    ell0: int = 2
    num_dmrs_symbols: int = 2
    chest: tuple = ("mmse",)
    detector: tuple = ("dcd",)
    bound: Optional[float] = None
    h_step: Optional[float] = None
    max_updates: Optional[int] = None  # None: no early return
    max_halvings: int = 8
    kc: int = 16
    mmse_unbiased: bool = True
    time_domain_adc: bool = True
    chest_tau_scale: float = 1.0
    chest_snr_offset_db: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.chest, str):
            self.chest = tuple(s.strip() for s in self.chest.split(","))
        if isinstance(self.detector, str):
            self.detector = tuple(s.strip() for s in self.detector.split(","))
        self.snr_grid_db = tuple(float(s) for s in np.atleast_1d(self.snr_grid_db))
        if self.bound is None:
            self.bound = equalizer.default_bound()
        if self.h_step is None:
            self.h_step = equalizer.default_h_step(self.bound)
        self.validate()

    @property
    def N(self):
        """Dimension of the real DCD system."""
        return 2 * self.n_users

    def validate(self):
        if self.coding != "none":
            raise ValueError("only uncoded transmission is supported (coding = none)")
        if self.modulation.lower() not in ("16qam", "16-qam", "qam16"):
            raise ValueError("only 16-QAM is supported")
        if not 1 <= self.n_users <= 8:
            raise ValueError("1..8 users (DMRS layers) are supported")
        if self.n_rx < self.n_users:
            raise ValueError("n_rx must be at least n_users")
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be >= 1")
        if self.n_slots < 1:
            raise ValueError("n_slots must be >= 1")
        if not set(self.chest) <= set(CHEST_MODES) or not self.chest:
            raise ValueError(f"chest modes must be among {CHEST_MODES}")
        if not set(self.detector) <= set(DETECTORS) or not self.detector:
            raise ValueError(f"detectors must be among {DETECTORS}")
        if not 1 <= self.kc <= self.K // 2:
            raise ValueError(f"kc must be in 1..{self.K // 2}")
        if not equalizer.is_power_of_two(self.h_step) or self.h_step > self.bound:
            raise ValueError("h_step must be a power of two not above the bound")
        if self.n_users > 4 and self.num_dmrs_symbols != 2:
            raise ValueError("more than 4 layers need two DMRS symbols")
        self.pdp()  # delay spread vs CP
        QuantizerConfig(self.adc_bits, self.clip_scale)

    def pdp(self):
        return PdpConfig(tau_rms=self.tau_rms, delta_f=self.delta_f, num_taps=self.num_taps,
                         cp_len=self.cp_len, n_fft=self.n_fft)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["chest"] = list(self.chest)
        d["detector"] = list(self.detector)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d


@dataclass
class BerRecord:
    snr_db: float
    bit_errors: int
    bits_sent: int

    @property
    def ber(self):
        return self.bit_errors / self.bits_sent if self.bits_sent else float("nan")

    @property
    def sigma(self):
        """Binomial standard error of the BER estimate."""
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits_sent)

    def wilson(self, confidence=0.95):
        ci = binomtest(self.bit_errors, self.bits_sent).proportion_ci(confidence, method="wilson")
        return ci.low, ci.high

    def __add__(self, other):
        return BerRecord(self.snr_db, self.bit_errors + other.bit_errors,
                         self.bits_sent + other.bits_sent)


@dataclass
class PointResult:
    snr_db: float
    records: dict                      # (detector, chest) -> BerRecord
    dcd_ledgers: dict = field(default_factory=dict)   # chest -> DcdLedger
    dcd_additions: dict = field(default_factory=dict)  # chest -> int array per detection
    complexity_report: str = ""

    @property
    def record(self):
        if len(self.records) != 1:
            raise ValueError("point has several curves; index .records")
        return next(iter(self.records.values()))


def _stream(seed, slot, kind, index=0):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(slot, kind, index)))


class _Context:
    """Per-config constants shared by every slot."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.pdp = cfg.pdp()
        self.qcfg = QuantizerConfig(cfg.adc_bits, cfg.clip_scale)
        self.layers = [refsig.layer_weights(u + 1, cfg.ell0, cfg.num_dmrs_symbols)
                       for u in range(cfg.n_users)]
        self.patterns = [refsig.pattern_for_layer(c, cfg.K, cfg.L) for c in self.layers]
        s = refsig.dmrs_sequence(cfg.K)
        self.dmrs = np.stack([refsig.dmrs_grid(c, p, s) for c, p in zip(self.layers, self.patterns)])
        self.data_symbols = self.patterns[0].data_symbols

    def banks(self, snr_db):
        cfg = self.cfg
        snr = 10.0 ** ((snr_db + cfg.chest_snr_offset_db) / 10.0)
        tau = cfg.tau_rms * cfg.chest_tau_scale
        return [chest.interpolator_bank(p, tau, snr, cfg.kc, cfg.delta_f) for p in self.patterns]


def simulate_slot(ctx, slot, snr_db):
    """Run every configured (detector, chest) pair on one slot.

    Returns ``(errors, bits, dcd_counts)`` where ``errors`` maps
    ``(detector, chest)`` to a bit-error count and ``dcd_counts`` maps the
    chest mode to the per-detection DCD counter rows.
    """
    cfg = ctx.cfg
    n_data = ctx.data_symbols.size
    bits = np.stack([_stream(cfg.seed, slot, STREAM_BITS, u).integers(0, 2, (cfg.K, n_data, 4),
                                                                       dtype=np.uint8)
                     for u in range(cfg.n_users)])
    X = ctx.dmrs.copy()
    X[:, :, ctx.data_symbols] = equalizer.qam16_map(bits).reshape(cfg.n_users, cfg.K, n_data)

    H = gen_channel(ctx.pdp, cfg.n_rx, cfg.n_users, cfg.K,
                    np.random.SeedSequence(cfg.seed, spawn_key=(slot, STREAM_CHANNEL, 0))).H
    noise = np.stack([complex_normal(_stream(cfg.seed, slot, STREAM_NOISE, r), (cfg.K, cfg.L))
                      for r in range(cfg.n_rx)])
    Y = apply_channel(X, H, snr_db, noise=noise)
    Yq, gains = adc(Y, ctx.qcfg, cfg.n_fft if cfg.time_domain_adc else None)
    Yd = np.transpose(Yq[:, :, ctx.data_symbols], (1, 0, 2))   # (K, n_rx, n_data)
    reg = float(noise_variance(snr_db)) * float(np.mean(gains ** 2))

    errors, dcd_counts = {}, {}
    for mode in cfg.chest:
        if mode == "ideal":
            H_hat = gains[:, None, None] * H
        else:
            H_hat = chest.estimate_channels(Yq, ctx.dmrs, ctx.patterns, ctx.banks(snr_db))[..., 0]
        Hk = np.transpose(H_hat, (2, 0, 1))                     # (K, n_rx, n_users)
        G, _ = equalizer.gram(Hk)
        v, _ = equalizer.matched_filter(Hk, Yd)                  # (K, n_users, n_data)
        for det in cfg.detector:
            if det == "dcd":
                A, b = equalizer.realify(G, np.swapaxes(v, -1, -2))
                A = np.broadcast_to(A[:, None], b.shape[:-1] + A.shape[-2:])
                x, _, counts, _ = equalizer.dcd_bound_many(
                    A, b, cfg.h_step, cfg.bound, cfg.max_updates, cfg.max_halvings)
                x_hat = equalizer.recombine(x)                   # (K, n_data, n_users)
                dcd_counts[mode] = counts.reshape(-1, counts.shape[-1])
            else:
                x_hat, _ = equalizer.mmse_detect(G, v, reg, unbiased=cfg.mmse_unbiased)
                x_hat = np.swapaxes(x_hat, -1, -2)
            bits_hat = equalizer.demap_qam16(np.transpose(x_hat, (2, 0, 1)))
            errors[(det, mode)] = int(np.count_nonzero(bits_hat != bits))
    return errors, int(bits.size), dcd_counts


def _map_slots(cfg, fn, n):
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            return list(ex.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def run_point(cfg, snr_db, ctx=None):
    """Simulate ``cfg.n_slots`` slots at one SNR for every configured curve."""
    ctx = ctx or _Context(cfg)
    results = _map_slots(cfg, lambda s: simulate_slot(ctx, s, snr_db), cfg.n_slots)
    records = {}
    adds = {}
    ledgers = {}
    for errors, nbits, dcd_counts in results:
        for key, e in errors.items():
            rec = BerRecord(snr_db, e, nbits)
            records[key] = records[key] + rec if key in records else rec
        for mode, c in dcd_counts.items():
            adds.setdefault(mode, []).append(c)
    for mode, parts in adds.items():
        c = np.concatenate(parts)
        ledgers[mode] = equalizer.DcdLedger.from_counts(c)
        adds[mode] = c[:, 0] + c[:, 1]
    measured = _measured_stages(cfg, adds)
    return PointResult(snr_db=float(snr_db), records=records, dcd_ledgers=ledgers,
                       dcd_additions=adds, complexity_report=complexity.report_tsv(measured))


def _measured_stages(cfg, adds):
    measured = {"mmse": complexity.measured_stages("mmse", cfg.n_rx, cfg.n_users)}
    pooled = [a for a in adds.values()]
    if pooled:
        mean = float(np.concatenate(pooled).mean())
        measured["dcd"] = complexity.measured_stages("dcd", cfg.n_rx, cfg.n_users, mean)
    return measured


@dataclass
class SweepResult:
    cfg: SimConfig
    points: list
    files: dict = field(default_factory=dict)

    def curve(self, detector, chest_mode):
        return [p.records[(detector, chest_mode)] for p in self.points]

    def histogram(self, chest_mode=None):
        chest_mode = chest_mode or self.cfg.chest[0]
        vals = np.concatenate([p.dcd_additions[chest_mode] for p in self.points])
        return complexity.dcd_addition_histogram(vals)


def run_sweep(cfg, out_dir=None):
    """Run every SNR point and, with ``out_dir``, write the result files."""
    if not cfg.snr_grid_db:
        raise ValueError("empty SNR grid")
    ctx = _Context(cfg)
    points = [run_point(cfg, snr, ctx) for snr in cfg.snr_grid_db]
    result = SweepResult(cfg, points)
    if out_dir is not None:
        result.files = write_outputs(result, out_dir)
    return result


# -- output files -------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def curve_name(detector, chest_mode):
    return f"uncoded_ber_{detector}_{chest_mode}.tsv"


def write_outputs(result, out_dir):
    cfg = result.cfg
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir!r}: {exc}") from exc
    files = {}

    def write(name, text):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path!r}: {exc}") from exc
        files[name] = path

    summary = ["detector\tchest\tsnr_db\tbit_errors\tbits_sent\tber\twilson_low\twilson_high"]
    for det in cfg.detector:
        for mode in cfg.chest:
            lines = ["x y"]
            for rec in result.curve(det, mode):
                lines.append(f"{_fmt(rec.snr_db)} {_fmt(rec.ber)}")
                lo, hi = rec.wilson()
                summary.append(f"{det}\t{mode}\t{_fmt(rec.snr_db)}\t{rec.bit_errors}\t"
                               f"{rec.bits_sent}\t{_fmt(rec.ber)}\t{_fmt(lo)}\t{_fmt(hi)}")
            write(curve_name(det, mode), "\n".join(lines) + "\n")
    write("ber_summary.tsv", "\n".join(summary) + "\n")

    adds = {m: np.concatenate([p.dcd_additions[m] for p in result.points])
            for m in cfg.chest if "dcd" in cfg.detector}
    if adds:
        write("histogram.tsv", histogram_tsv(complexity.dcd_addition_histogram(adds[cfg.chest[0]])))
    write("complexity.tsv", complexity.report_tsv(_measured_stages(cfg, adds)))
    manifest = {"config": cfg.to_dict(), "seed": cfg.seed, "kernel_backend": kernels.BACKEND,
                "files": sorted(files)}
    write("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return files


def histogram_tsv(hist):
    lines = ["bin_left count"]
    for left, c in zip(hist.edges[:-1], hist.counts):
        lines.append(f"{_fmt(left)} {int(c)}")
    lines.append(f"# n={hist.n} mean={hist.mean!r} min={hist.minimum} max={hist.maximum} "
                 f"below={hist.below} above={hist.above}")
    return "\n".join(lines) + "\n"
