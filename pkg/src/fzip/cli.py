"""Command-line interface.

Subcommands: compress, decompress, inspect, bench-table1,
bench-context-sweep, bench-size-sweep, fetch-corpus. Machine-readable
summaries go to stdout as one JSON object; human diagnostics go to stderr.
Bad user input exits nonzero with a one-line category and detail, never a
stack trace.
"""

import argparse
import hashlib
import json
import sys
import urllib.request

from . import bench
from .archive import read_archive
from .errors import FzipError
from .pipeline import CompressConfig, compress_file, decompress_file

ENWIK8_URL = "https://mattmahoney.net/dc/enwik8.zip"
ENWIK8_MD5 = "a1fa5ffddb56f4953e226637dabbb36a"  # published checksum of the unzipped file


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fzip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("compress", help="compress a file into a .fz archive")
    pc.add_argument("input")
    pc.add_argument("--out", help="output path (default: input + .fz)")
    pc.add_argument("--mode", choices=["rank", "ac"], default="rank")
    pc.add_argument("--context", choices=["dynamic", "sliding"], default="dynamic")
    pc.add_argument("--window", type=_positive_int, default=512)
    pc.add_argument("--predictor", default="builtin-ctx3")
    pc.add_argument("--tokenizer", default="byte")
    pc.add_argument("--secondary", default="builtin-mrl")
    pc.add_argument("--memorize", action="store_true")
    pc.add_argument("--epochs", type=_positive_int, default=1)
    pc.add_argument("--workers", type=_positive_int, default=1)

    pd = sub.add_parser("decompress", help="restore the original file")
    pd.add_argument("input")
    pd.add_argument("--out", help="output path (default: strip .fz)")
    pd.add_argument("--workers", type=_positive_int, default=1)

    pi = sub.add_parser("inspect", help="print archive header fields")
    pi.add_argument("input")

    pt = sub.add_parser("bench-table1", help="method comparison on one corpus")
    pt.add_argument("corpus")
    pt.add_argument("--methods", default=",".join(bench.DEFAULT_METHODS),
                    help="comma-separated method names")
    pt.add_argument("--workers", type=_positive_int, default=1)
    pt.add_argument("--include-reference", action="store_true",
                    help="append published reference-only rows")
    pt.add_argument("--csv", help="write CSV here (default stdout)")

    pw = sub.add_parser("bench-context-sweep", help="ratio per context window")
    pw.add_argument("corpus")
    pw.add_argument("--windows", default="32,128,512")
    pw.add_argument("--mode", choices=["rank", "ac"], default="rank")
    pw.add_argument("--context", choices=["dynamic", "sliding"], default="dynamic")
    pw.add_argument("--csv", help="write CSV here (default stdout)")
    pw.add_argument("--plot-data", help="write gnuplot-style window/ratio data here")

    ps = sub.add_parser("bench-size-sweep", help="ratio per corpus prefix size")
    ps.add_argument("corpus")
    ps.add_argument("--sizes", default="1048576,4194304")
    ps.add_argument("--mode", choices=["rank", "ac"], default="rank")
    ps.add_argument("--csv", help="write CSV here (default stdout)")

    pf = sub.add_parser("fetch-corpus", help="download the enwik8 benchmark corpus")
    pf.add_argument("--out", default="enwik8")

    return parser


def _cmd_compress(args) -> int:
    config = CompressConfig(
        mode=args.mode,
        context_mode=args.context,
        window=args.window,
        predictor_id=args.predictor,
        tokenizer_id=args.tokenizer,
        secondary_id=args.secondary,
        memorize=args.memorize,
        epochs=args.epochs,
        workers=args.workers,
    )
    out_path = args.out or args.input + ".fz"
    report = compress_file(args.input, out_path, config)
    print(json.dumps(report.as_dict()))
    return 0


def _cmd_decompress(args) -> int:
    out_path = args.out
    if out_path is None:
        out_path = args.input[:-3] if args.input.endswith(".fz") else args.input + ".out"
    report = decompress_file(args.input, out_path, workers=args.workers)
    print(json.dumps(report.as_dict()))
    return 0


def _cmd_inspect(args) -> int:
    with open(args.input, "rb") as f:
        data = f.read()
    header, model_blob, payload = read_archive(data)
    info = {
        "mode": "rank" if header.mode == 0 else "ac",
        "context_mode": "dynamic" if header.context_mode == 0 else "sliding",
        "window": header.window,
        "tokenizer_id": header.tokenizer_id,
        "predictor_id": header.predictor_id,
        "predictor_fingerprint": header.predictor_fingerprint.hex(),
        "n_tokens": header.n_tokens,
        "original_len": header.original_len,
        "secondary_id": header.secondary_id,
        "model_blob_len": header.model_blob_len,
        "payload_len": header.payload_len,
        "archive_len": len(data),
        "ratio": len(data) / header.original_len if header.original_len else None,
    }
    print(json.dumps(info, indent=2))
    return 0


def _read_corpus(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _emit_csv(rows, path) -> None:
    text = bench.write_csv(rows)
    if path:
        with open(path, "w") as f:
            f.write(text)
        print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _cmd_bench_table1(args) -> int:
    data = _read_corpus(args.corpus)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = bench.bench_table1(data, methods, corpus=args.corpus, workers=args.workers,
                              include_reference=args.include_reference)
    _emit_csv(rows, args.csv)
    return 0


def _cmd_bench_context_sweep(args) -> int:
    data = _read_corpus(args.corpus)
    windows = [int(w) for w in args.windows.split(",") if w.strip()]
    config = CompressConfig(mode=args.mode, context_mode=args.context, memorize=True)
    rows = bench.bench_context_sweep(data, windows, config, corpus=args.corpus)
    _emit_csv(rows, args.csv)
    if args.plot_data:
        for row, w in zip(rows, sorted(set(windows))):
            row["window"] = w
        with open(args.plot_data, "w") as f:
            bench.write_plot_data(rows, "window", "ratio", f)
    return 0


def _cmd_bench_size_sweep(args) -> int:
    data = _read_corpus(args.corpus)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    config = CompressConfig(mode=args.mode, memorize=True)
    rows = bench.bench_size_sweep(data, sizes, config, corpus=args.corpus)
    _emit_csv(rows, args.csv)
    return 0


def _cmd_fetch_corpus(args) -> int:
    import io
    import zipfile

    print(f"fetching {ENWIK8_URL} ...", file=sys.stderr)
    with urllib.request.urlopen(ENWIK8_URL) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        corpus = zf.read("enwik8")
    digest = hashlib.md5(corpus).hexdigest()
    if digest != ENWIK8_MD5:
        print(f"error: checksum mismatch: {digest} (expected {ENWIK8_MD5})",
              file=sys.stderr)
        return 1
    out = args.out
    with open(out, "wb") as f:
        f.write(corpus)
    print(f"wrote {out} ({len(corpus)} bytes); set FZIP_ENWIK8={out} for the "
          "benchmark tests", file=sys.stderr)
    return 0


_COMMANDS = {
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "inspect": _cmd_inspect,
    "bench-table1": _cmd_bench_table1,
    "bench-context-sweep": _cmd_bench_context_sweep,
    "bench-size-sweep": _cmd_bench_size_sweep,
    "fetch-corpus": _cmd_fetch_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FzipError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
