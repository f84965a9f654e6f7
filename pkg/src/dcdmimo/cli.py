"""Command line interface: ``dcdmimo {sweep,complexity,histogram,selftest}``.

Options may also come from a flat ``key = value`` file given with
``--config``; keys are the long option names without dashes (``adc-bits``
or ``adc_bits``). Command-line flags override the file.
"""
import argparse
import math
import os
import sys

import numpy as np

from . import complexity, harness, kernels

# flag name -> (SimConfig field, parser)
_FIELDS = {
    "users": ("n_users", int),
    "rx": ("n_rx", int),
    "adc_bits": ("adc_bits", int),
    "clip_scale": ("clip_scale", float),
    "snr": ("snr_grid_db", None),
    "slots": ("n_slots", int),
    "seed": ("seed", int),
    "chest": ("chest", str),
    "detector": ("detector", str),
    "kc": ("kc", int),
    "mb": ("max_halvings", int),
    "nu": ("max_updates", None),
    "bound": ("bound", float),
    "h_step": ("h_step", float),
    "tau_rms": ("tau_rms", float),
    "delta_f": ("delta_f", float),
    "subcarriers": ("K", int),
    "n_fft": ("n_fft", int),
    "taps": ("num_taps", int),
    "cp_len": ("cp_len", int),
    "coding": ("coding", str),
    "modulation": ("modulation", str),
    "workers": ("workers", int),
}


def parse_snr(text):
    """``"-20:10:2.5"`` (inclusive range), ``"0,5,10"`` or a single value."""
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + i * step) for i in range(n))
    return tuple(float(t) for t in text.split(",") if t.strip())


def parse_nu(text):
    text = str(text).strip().lower()
    if text in ("inf", "none", "unlimited"):
        return None
    return int(text)


def read_config_file(path):
    """Flat key/value document; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise SystemExit(f"cannot read config file {path!r}: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise SystemExit(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split(sep, 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise SystemExit(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _convert(key, value):
    name, conv = _FIELDS[key]
    if key == "snr":
        return name, parse_snr(value)
    if key == "nu":
        return name, parse_nu(value)
    return name, conv(value)


def build_config(args):
    raw = read_config_file(args.config) if args.config else {}
    for key in _FIELDS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    kwargs = dict(_convert(k, v) for k, v in raw.items())
    try:
        return harness.SimConfig(**kwargs)
    except ValueError as exc:
        raise SystemExit(f"invalid configuration: {exc}")


def _add_sim_flags(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--users", type=int)
    p.add_argument("--rx", type=int)
    p.add_argument("--adc-bits", dest="adc_bits", type=int)
    p.add_argument("--clip-scale", dest="clip_scale", type=float)
    p.add_argument("--snr", help="SNR grid in dB: start:stop:step, comma list or one value")
    p.add_argument("--slots", type=int, help="slots per SNR point")
    p.add_argument("--seed", type=int)
    p.add_argument("--chest", help="mmse, ideal or a comma list")
    p.add_argument("--detector", help="dcd, mmse or a comma list")
    p.add_argument("--kc", type=int, help="pilots per MMSE interpolation window")
    p.add_argument("--mb", type=int, help="DCD step-size halvings")
    p.add_argument("--nu", help="DCD update budget (int or 'inf')")
    p.add_argument("--bound", type=float, help="DCD box bound")
    p.add_argument("--h-step", dest="h_step", type=float)
    p.add_argument("--tau-rms", dest="tau_rms", type=float)
    p.add_argument("--delta-f", dest="delta_f", type=float)
    p.add_argument("--subcarriers", type=int)
    p.add_argument("--taps", type=int)
    p.add_argument("--coding")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")


def cmd_sweep(args):
    cfg = build_config(args)
    out = args.out or "results"
    res = harness.run_sweep(cfg, out)
    for det in cfg.detector:
        for mode in cfg.chest:
            print(f"{det} / chest={mode}")
            for rec in res.curve(det, mode):
                print(f"  {rec.snr_db:7.2f} dB  BER {rec.ber:.4e}  ({rec.bit_errors}/{rec.bits_sent})")
    print(f"wrote {len(res.files)} files to {out}")
    return 0


def cmd_complexity(args):
    cfg = build_config(args) if args.measure else None
    measured = {"mmse": complexity.measured_stages("mmse", 64, 8)}
    if cfg is not None:
        cfg = cfg.replace(detector=("dcd",))
        point = harness.run_point(cfg, cfg.snr_grid_db[0] if args.snr else 0.0)
        mean = float(point.dcd_additions[cfg.chest[0]].mean())
        measured = {"mmse": complexity.measured_stages("mmse", cfg.n_rx, cfg.n_users),
                    "dcd": complexity.measured_stages("dcd", cfg.n_rx, cfg.n_users, mean)}
    print(complexity.report_text(measured), end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "complexity.tsv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(complexity.report_tsv(measured))
        print(f"wrote {path}")
    return 0


def cmd_histogram(args):
    if args.snr is None:
        args.snr = "0"
    cfg = build_config(args).replace(detector=("dcd",))
    point = harness.run_point(cfg, cfg.snr_grid_db[0])
    hist = complexity.dcd_addition_histogram(point.dcd_additions[cfg.chest[0]])
    print(f"DCD detections: {hist.n}, mean real additions {hist.mean:.1f}, "
          f"range [{hist.minimum}, {hist.maximum}]")
    width = max(1, int(hist.counts.max()) // 50)
    for left, c in zip(hist.edges[:-1], hist.counts):
        print(f"  {left:8.1f} {int(c):8d} {'#' * (int(c) // width)}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "histogram.tsv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(harness.histogram_tsv(hist))
        print(f"wrote {path}")
    return 0


def selftest_checks():
    """Quick deterministic checks; yields ``(name, ok, detail)``."""
    from . import equalizer

    rows = complexity.CALIBRATED_ROWS
    for name in ("gram", "diag_add", "inverse", "matvec", "dcd"):
        r = rows[name]
        yield (f"gate model {name}", complexity.gate_cost(r.adds, r.mults) == r.printed_logic_ops,
               f"{complexity.gate_cost(r.adds, r.mults)} vs {r.printed_logic_ops}")
    totals = complexity.calibrated_totals()
    yield ("published totals", totals == complexity.PUBLISHED_TOTALS, str(totals))
    g = complexity.gram_counts(64, 8)
    yield ("gram counts 64x8", (g.adds, g.mults) == (8128, 8192), f"{g.adds}, {g.mults}")

    p = equalizer.DcdProblem(np.eye(2), [0.5, 0.25], h_step=0.5, bound=1.0, max_halvings=8)
    x, r, led = equalizer.dcd_bound(p)
    yield ("dcd dyadic example", list(x) == [0.5, 0.25] and list(r) == [0.0, 0.0]
           and led.accepted_updates == 2, f"x={x.tolist()} k={led.accepted_updates}")

    rng = np.random.default_rng(0)
    M = rng.standard_normal((20, 16, 16))
    A = M @ np.swapaxes(M, -1, -2) / 16 + np.eye(16)
    b = rng.standard_normal((20, 16))
    ref = kernels.dcd_bound_batch_py(A, b, 1.0, 2.0, 10**6, 12)
    if kernels.dcd_bound_batch_ext is not None:
        ext = kernels.dcd_bound_batch_ext(A, b, 1.0, 2.0, 10**6, 12)
        same = all(np.array_equal(u, v) for u, v in zip(ref, ext))
        yield ("compiled kernel matches Python kernel", same, "")
    yield (f"kernel backend: {kernels.BACKEND}", True, "")

    cfg = harness.SimConfig(n_users=1, n_rx=8, adc_bits=16, n_slots=1, chest=("ideal",),
                            detector=("dcd", "mmse"))
    pt = harness.run_point(cfg, 40.0)
    errs = {k: v.bit_errors for k, v in pt.records.items()}
    yield ("clean link has no bit errors", all(e == 0 for e in errs.values()), str(errs))


def cmd_selftest(args):
    failed = 0
    for name, ok, detail in selftest_checks():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail and not ok else ""))
        failed += not ok
    return 1 if failed else 0


def make_parser():
    parser = argparse.ArgumentParser(prog="dcdmimo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep", help="BER sweep; writes per-curve TSVs, histogram, complexity, manifest")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("complexity", help="print the per-operation and scenario complexity tables")
    _add_sim_flags(p)
    p.add_argument("--measure", action="store_true",
                   help="simulate one point to report the measured DCD cost")
    p.set_defaults(func=cmd_complexity)
    p = sub.add_parser("histogram", help="DCD additions-per-detection histogram at one SNR")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_histogram)
    p = sub.add_parser("selftest", help="quick consistency checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
