"""Command-line entry point: ``spisim <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runner
from .config import FULL_SCALE, ExperimentConfig
from .kvconfig import ConfigError
from .metrics import image_snr
from .patterns import export_patterns, generate_hadamard, select_subset
from .pgm import PGMFormatError
from .recon import read_measurements, reconstruct, save_g2_csv, save_image_pgm
from .scene import load_scene


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()] if text.strip() else []


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.full:
        cfg = cfg.with_overrides(**FULL_SCALE)
    cfg = cfg.with_overrides(seed=args.seed, mode=args.mode, trials=args.trials)
    if args.noise_levels is not None:
        cfg = cfg.with_overrides(noise_levels=_floats(args.noise_levels))
    if args.pulse_widths is not None:
        cfg = cfg.with_overrides(pulse_widths=_floats(args.pulse_widths))
    if args.schemes is not None:
        cfg = cfg.with_overrides(schemes=[s.strip() for s in args.schemes.split(",") if s.strip()])
    return cfg


def _sweep(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    job = {"grid": runner.run_image_grid, "surface": runner.run_snr_surface,
           "curves": runner.run_snr_curves}[args.command]
    result = job(cfg, out, workers=args.workers)
    if args.command != "grid" or result:
        runner.write_config_snapshot(cfg, out)
    paths = result if isinstance(result, list) else [result]
    for p in paths[-1:]:
        print(p)
    return 0


def _reconstruct(args) -> int:
    cols = args.cols or args.rows
    basis = generate_hadamard(args.rows, cols)
    series = read_measurements(args.measurements)
    img = reconstruct(basis, series)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.measurements).stem.removesuffix("_measurements")
    save_g2_csv(img, out / f"{stem}_g2.csv")
    print(save_image_pgm(img, out / f"{stem}.pgm"))
    if args.mask:
        rep = image_snr(img.g2, load_scene(args.mask).mask)
        print(f"snr={rep.snr!r} mu_O={rep.mu_O!r} mu_B={rep.mu_B!r} "
              f"sigma_O={rep.sigma_O!r} sigma_B={rep.sigma_B!r}")
    return 0


def _export_patterns(args) -> int:
    basis = generate_hadamard(args.rows, args.rows)
    if args.pairs is not None:
        basis = select_subset(basis, args.pairs, args.strategy, args.subset_seed)
    paths = export_patterns(basis, args.out, binary=not args.ascii)
    print(f"wrote {len(paths)} patterns to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spisim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("grid", "reconstructed image per scheme/noise level/pulse width"),
                        ("surface", "mean SNR over noise level x pulse width"),
                        ("curves", "SNR percentile bands vs noise level, incl. eta_h = 1 QSPI")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="flat key = value experiment config")
        s.add_argument("--out", default=f"out/{name}", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--mode", choices=["analytic", "event"])
        s.add_argument("--trials", type=int)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--noise-levels", help="comma-separated noise/signal count ratios")
        s.add_argument("--pulse-widths", help="comma-separated pulse widths in seconds")
        s.add_argument("--schemes", help="comma-separated subset of CSPI,QSPI,PSPI")
        s.add_argument("--full", action="store_true",
                       help="32x32 frame, 2x350 patterns, 5000 trials")
        s.set_defaults(func=_sweep)

    r = sub.add_parser("reconstruct", help="image from a saved measurement CSV")
    r.add_argument("--measurements", required=True, help="CSV with pattern_id,count columns")
    r.add_argument("--rows", type=int, required=True)
    r.add_argument("--cols", type=int)
    r.add_argument("--mask", help="object mask graymap; prints the SNR")
    r.add_argument("--out", default="out/reconstruct")
    r.set_defaults(func=_reconstruct)

    e = sub.add_parser("export-patterns", help="write Hadamard patterns as graymaps")
    e.add_argument("--rows", type=int, default=16)
    e.add_argument("--pairs", type=int, help="keep this many pattern pairs")
    e.add_argument("--strategy", choices=["sequency_prefix", "seeded_random"],
                   default="sequency_prefix")
    e.add_argument("--subset-seed", type=int, default=0)
    e.add_argument("--ascii", action="store_true", help="plain P2 instead of binary P5")
    e.add_argument("--out", default="out/patterns")
    e.set_defaults(func=_export_patterns)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, PGMFormatError, ValueError, OSError) as exc:
        print(f"spisim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
