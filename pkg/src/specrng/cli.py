"""Command-line front end: ``specrng {synth,gen,nist,sweep,bench}``.

Exit codes: 0 success, 1 randomness failure (nist), 2 usage error,
3 I/O error, 4 degenerate source.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bitstream import BitStream, read_bitstream, write_ascii, write_bitstream
from .core import FrameSize, SelectorState, bench_latency, derive_seed, generate_words
from .entropy import entropy_sweep, parse_range, render_heatmap, write_csv
from .errors import (
    DecodeError,
    DegenerateSource,
    EmptyImage,
    InputTooShort,
    InvalidParams,
    IoError,
    SpecrngError,
)
from .nist import run_suite
from .nist.report import RENDERERS, to_json, to_text
from .nist.suite import any_failed
from .spectrogram import (
    StftParams,
    compute_spectrogram,
    load_spectrogram,
    save_spectrogram_png,
    save_spectrogram_raw,
)
from .waveform import SynthParams, draw_table_params, params_dict, synthesize_frame, write_iq

log = logging.getLogger("specrng")

EXIT_OK, EXIT_RANDOMNESS, EXIT_USAGE, EXIT_IO, EXIT_DEGENERATE = 0, 1, 2, 3, 4
OUT_DIR_ENV = "SPECRNG_OUT"
BENCH_SIZES = (4096, 8192, 16384, 32768)


class UsageError(Exception):
    pass


def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")


def _log_config(name: str, config: dict) -> None:
    log.info("%s config: %s", name, json.dumps(config, sort_keys=True, default=str))


def _stft_from_args(args) -> StftParams:
    base = StftParams.small() if args.small else StftParams()
    p = StftParams(
        fft_length=args.fft_length or base.fft_length,
        hop=args.hop or base.hop,
        window=args.window or base.window,
        output_rows=args.rows or base.output_rows,
        output_cols=args.cols or base.output_cols,
    )
    p.validate()
    return p


def _require_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {path}: {exc}") from exc


def _sel_seed(args) -> int:
    return args.sel_seed if args.sel_seed is not None else secrets.randbits(63)


# -- subcommands -----------------------------------------------------------------


def cmd_synth(args) -> int:
    out = _out_dir(args)
    _require_dir(out)
    stft = _stft_from_args(args)
    fixed = {
        key: getattr(args, key)
        for key in ("snr_db", "doppler_hz", "bandwidth_hz", "subcarrier_spacing_hz", "center_offset_hz")
        if getattr(args, key) is not None
    }
    manifest = {"seed": args.seed, "small": args.small, "stft": vars(stft), "items": []}
    _log_config("synth", {"count": args.count, "out": str(out), **manifest, "fixed": fixed})
    for i in range(args.count):
        params = draw_table_params(args.seed, i, small=args.small, **fixed)
        frame = synthesize_frame(params)
        spec = compute_spectrogram(frame, stft)
        stem = f"spec_{i:03d}"
        save_spectrogram_png(spec, out / f"{stem}.png")
        save_spectrogram_raw(spec, out / f"{stem}.spg")
        item = {"index": i, "png": f"{stem}.png", "spg": f"{stem}.spg", "params": params_dict(params)}
        if args.iq:
            write_iq(frame, out / f"{stem}.iq")
            item["iq"] = f"{stem}.iq"
        manifest["items"].append(item)
        log.info("wrote %s (%dx%d)", stem, spec.m, spec.n)
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from exc
    print(f"wrote {args.count} spectrogram(s) to {out}")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.bits < 1:
        raise UsageError("--bits must be >= 1")
    size = FrameSize(args.c, args.k)
    sel_seed = _sel_seed(args)
    out = Path(args.out) if args.out else _out_dir(args) / "bits.bin"
    _require_dir(out.parent)
    specs = [load_spectrogram(p) for p in args.input]
    _log_config(
        "gen",
        {"inputs": args.input, "bits": args.bits, "c": args.c, "k": args.k, "sel_seed": sel_seed,
         "selector": args.selector, "out": str(out)},
    )

    n_words = -(-args.bits // 32)
    per_input = -(-n_words // len(specs))
    chunks, skipped = [], 0
    remaining = n_words
    for idx, spec in enumerate(specs):
        take = min(per_input, remaining)
        if take <= 0:
            break
        seed = sel_seed if len(specs) == 1 else derive_seed(sel_seed, idx)
        gen = generate_words(spec, size, take, SelectorState(seed, mode=args.selector))
        chunks.append(gen.words)
        skipped += gen.skipped
        remaining -= take
    bs = BitStream.from_words(np.concatenate(chunks), args.bits)
    write_bitstream(bs, out)
    write_ascii(bs, out.with_suffix(".txt"))
    meta = {"bits": args.bits, "c": args.c, "k": args.k, "sel_seed": sel_seed, "selector": args.selector,
            "skipped_frames": skipped, "inputs": args.input}
    try:
        out.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write metadata: {exc}") from exc
    print(f"wrote {args.bits} bits ({len(bs.data)} bytes) to {out}; skipped {skipped} all-zero frames")
    return EXIT_OK


def cmd_nist(args) -> int:
    bs = read_bitstream(args.input)
    _log_config("nist", {"input": args.input, "bits": bs.bit_length, "format": args.format})
    results = run_suite(bs)
    prefix = Path(args.report) if args.report else None
    if prefix is not None:
        _require_dir(prefix.parent)
        try:
            prefix.with_suffix(".json").write_text(to_json(results) + "\n")
            prefix.with_suffix(".txt").write_text(to_text(results) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write report: {exc}") from exc
    print(RENDERERS[args.format](results))
    return EXIT_RANDOMNESS if any_failed(results) else EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_spectrogram(args.input)
    c_range, k_range = parse_range(args.c), parse_range(args.k)
    out = Path(args.out) if args.out else _out_dir(args) / "sweep.csv"
    _require_dir(out.parent)
    _log_config("sweep", {"input": args.input, "c": args.c, "k": args.k, "bytes_per_cell": args.bytes_per_cell,
                          "sel_seed": args.sel_seed, "out": str(out)})
    grid = entropy_sweep(spec, c_range, k_range, args.bytes_per_cell, args.sel_seed)
    write_csv(grid, out, with_bit_entropy=args.bit_entropy)
    if args.heatmap:
        render_heatmap(grid, args.heatmap)
    vals = grid.unflagged()
    if vals.size:
        print(
            f"{vals.size} cells: min {vals.min():.4f}, max {vals.max():.4f} bits/byte, "
            f"CV {100 * grid.coefficient_of_variation():.3f}%, argmax {grid.argmax()}, argmin {grid.argmin()}"
        )
    print(f"flagged cells: {int(grid.flagged.sum())}; wrote {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.input:
        spec = load_spectrogram(args.input)
        source = args.input
    else:
        params = SynthParams.small(prng_seed=args.synth_seed) if args.small else SynthParams(prng_seed=args.synth_seed)
        spec = compute_spectrogram(synthesize_frame(params), StftParams.small() if args.small else StftParams())
        source = f"synthesized(seed={args.synth_seed}, small={args.small})"
    sizes = sorted(args.sizes or BENCH_SIZES)
    size = FrameSize(args.c, args.k)
    _log_config("bench", {"input": source, "sizes": sizes, "c": args.c, "k": args.k, "runs": args.runs,
                          "sel_seed": args.sel_seed or 0})
    rows = [bench_latency(spec, size, n, runs=args.runs, sel_seed=args.sel_seed or 0) for n in sizes]
    print(f"{'n(bits)':>8}  {'latency (ms)':>12}  {'bits/s':>12}")
    for r in rows:
        print(f"{r.n_bits:>8}  {r.median_ms:>12.3f}  {r.bits_per_second:>12.0f}")
    if args.csv:
        try:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["n_bits", "median_ms", "bits_per_second"])
                for r in rows:
                    w.writerow([r.n_bits, f"{r.median_ms:.6f}", f"{r.bits_per_second:.1f}"])
        except OSError as exc:
            raise IoError(f"cannot write {args.csv}: {exc}") from exc
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specrng", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    parser.add_argument("--out-dir", help=f"default output directory (env {OUT_DIR_ENV})")
    # Accept --out-dir after the subcommand too, without clobbering the global value.
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="synthesize OFDM frames and write spectrograms")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--small", action="store_true", help="1.92 MHz / 10 ms desk-scale profile")
    p.add_argument("--snr-db", type=float)
    p.add_argument("--doppler-hz", type=float)
    p.add_argument("--bandwidth-hz", type=float)
    p.add_argument("--subcarrier-spacing-hz", "--scs-hz", type=float)
    p.add_argument("--center-offset-hz", type=float)
    p.add_argument("--fft-length", type=int)
    p.add_argument("--hop", type=int)
    p.add_argument("--window", choices=["rectangular", "hann"])
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--iq", action="store_true", help="also export raw float32 I/Q")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen", parents=[common], help="generate a bit stream from spectrogram(s)")
    p.add_argument("--input", "-i", nargs="+", required=True, help="PNG or SPG1 file(s); several rotate")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--c", type=int, default=10)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--sel-seed", type=int, help="frame-position seed (default: system entropy)")
    p.add_argument("--selector", choices=["shuffle", "iid"], default="shuffle")
    p.add_argument("--out", "-o", help="packed output file (default <out-dir>/bits.bin)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("nist", parents=[common], help="run the SP 800-22 battery on a bit stream")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--format", choices=sorted(RENDERERS), default="text")
    p.add_argument("--report", help="write <report>.json and <report>.txt")
    p.set_defaults(func=cmd_nist)

    p = sub.add_parser("sweep", parents=[common], help="entropy over a (c, k) grid")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--c", default="2..40")
    p.add_argument("--k", default="2..40")
    p.add_argument("--bytes-per-cell", type=int, default=4096)
    p.add_argument("--sel-seed", type=int, default=0)
    p.add_argument("--out", "-o", help="CSV path (default <out-dir>/sweep.csv)")
    p.add_argument("--heatmap", help="optional PNG heatmap path")
    p.add_argument("--bit-entropy", action="store_true", help="add an entropy_bits_per_bit column")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", parents=[common], help="generation latency for 4096..32768 bits")
    p.add_argument("--input", "-i", help="spectrogram file (default: synthesize one)")
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--small", action="store_true")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--c", type=int, default=10)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--sel-seed", type=int)
    p.add_argument("--csv", help="machine-readable output path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"specrng: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    started = time.perf_counter()
    try:
        code = args.func(args)
    except DegenerateSource as exc:
        print(f"specrng: degenerate source: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IoError, DecodeError, EmptyImage) as exc:
        print(f"specrng: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, InvalidParams, InputTooShort) as exc:
        print(f"specrng: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecrngError as exc:
        print(f"specrng: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.debug("%s finished in %.3f s", args.command, time.perf_counter() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())
