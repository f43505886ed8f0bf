"""Command line driver: ``rbc {encode,index,query,bench,synth}``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .barcode import DEFAULT_WINDOW, Encoder, barcode_to_pbm, barcode_to_string
from .bench import LINEAR, LSH_RERANK, run_benchmark
from .dataset import ManifestError, generate_synthetic, read_manifest
from .exceptions import IncomparableBarcodes, RadonBarcodeError
from .imaging import load_grayscale, normalize
from .index import (
    DEFAULT_TABLES,
    DEFAULT_TOP,
    IndexEntry,
    LshConfig,
    LshIndex,
    build_linear,
    build_lsh,
    load_index,
    rerank_correlation,
    save_index,
)
from .irma import build_branch_table
from .pipeline import EncodingSettings, encode_image
from .radon import project

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_encoding_options(p, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--encoder", choices=[e.value for e in Encoder], default=d("minmax"))
    p.add_argument("--angles", type=_positive, default=d(8), help="number of projection angles")
    p.add_argument("--size", type=_positive, default=d(32), help="normalized image side")
    p.add_argument("--window", type=_positive, default=d(DEFAULT_WINDOW), help="MinMax smoothing window")


def _settings(args) -> EncodingSettings:
    if args.size < 2:
        raise UsageError("--size must be at least 2")
    return EncodingSettings(Encoder(args.encoder), args.angles, args.size, args.window)


def cmd_encode(args, out):
    settings = _settings(args)
    img = normalize(load_grayscale(args.image), settings.image_side, settings.image_side)
    bc = encode_image(img, settings)
    out.write(barcode_to_string(bc))
    if args.pbm:
        with open(args.pbm, "w", encoding="ascii") as fh:
            fh.write(barcode_to_pbm(bc))
    if args.projections:
        with open(args.projections, "w", encoding="ascii") as fh:
            fh.write(project(img, settings.num_angles).to_csv())
    return EXIT_OK


def build_index_from_manifest(manifest, settings: EncodingSettings, lsh=None):
    """Encode every manifest row; ``lsh`` is ``(num_tables, key_size or None, seed)``."""
    rows = read_manifest(manifest)
    if not rows:
        raise ManifestError(f"{manifest}: no rows")
    entries = []
    for n, row in enumerate(rows, start=1):
        try:
            bc = encode_image(load_grayscale(row.path), settings)
        except (OSError, RadonBarcodeError) as exc:
            raise ManifestError(f"{row.id}: {exc}", row=n) from None
        entries.append(IndexEntry(row.id, bc, row.code, row.path))
    bt = build_branch_table([e.code for e in entries])
    if lsh is None:
        return build_linear(entries, bt)
    tables, key_size, seed = lsh
    cfg = LshConfig.for_length(len(entries[0].barcode), tables, seed)
    if key_size is not None:
        cfg = LshConfig(tables, key_size, seed)
    return build_lsh(entries, cfg, bt)


def cmd_index(args, out):
    lsh = (args.tables, args.key_size, args.seed) if args.lsh else None
    index = build_index_from_manifest(args.manifest, _settings(args), lsh)
    save_index(index, args.out)
    out.write(f"indexed {len(index)} entries\n")
    return EXIT_OK


def _check_overrides(args, index):
    expected = EncodingSettings.from_config(index.config)
    given = {
        "encoder": (args.encoder, expected.encoder.value),
        "angles": (args.angles, expected.num_angles),
        "size": (args.size, expected.image_side),
        "window": (args.window, expected.window or None),
    }
    for name, (value, have) in given.items():
        if value is not None and value != have:
            raise IncomparableBarcodes(f"--{name} {value} does not match the index ({have})")
    return expected


def cmd_query(args, out):
    index = load_index(args.index)
    settings = _check_overrides(args, index)
    img = normalize(load_grayscale(args.image), settings.image_side, settings.image_side)
    bc = encode_image(img, settings)
    if args.rerank and not args.lsh:
        raise UsageError("--rerank needs --lsh")
    if args.lsh:
        if not isinstance(index, LshIndex):
            raise IncomparableBarcodes("index was built without LSH tables")
        results = index.candidates(bc, args.top)
        if not results:
            sys.stderr.write("no LSH candidates\n")
            return EXIT_OK
        if args.rerank:
            hit = rerank_correlation(results, img, index)
            results = [r for r in results if r[0] == hit]
    else:
        results = index.knn(bc, args.k)
    for rank, (rid, dist) in enumerate(results, start=1):
        out.write(f"{rank},{rid},{dist},{index.entry(rid).code}\n")
    return EXIT_OK


def cmd_bench(args, out):
    index = load_index(args.index)
    mode = LSH_RERANK if args.lsh else LINEAR
    report = run_benchmark(index, read_manifest(args.test_manifest), mode=mode, top=args.top)
    out.write(report.table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return EXIT_OK


def cmd_synth(args, out):
    if args.count < 2:
        raise UsageError("--count must be at least 2")
    rows = generate_synthetic(args.out_dir, args.count, args.seed)
    out.write(f"wrote {len(rows)} images to {args.out_dir}\n")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbc", description="Radon barcode encoding, indexing and retrieval benchmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="print the barcode of one image")
    p.add_argument("image")
    _add_encoding_options(p)
    p.add_argument("--pbm", help="also write the barcode as a PBM bitmap")
    p.add_argument("--projections", help="also write the projections as CSV")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("index", help="encode a manifest and write an index file")
    p.add_argument("manifest")
    p.add_argument("out")
    _add_encoding_options(p)
    p.add_argument("--lsh", action="store_true", help="add bit-sampling LSH tables")
    p.add_argument("--tables", type=_positive, default=DEFAULT_TABLES)
    p.add_argument("--key-size", type=_positive, default=None, help="default: a third of the barcode length")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="search an index with one image")
    p.add_argument("index")
    p.add_argument("image")
    p.add_argument("--k", type=_positive, default=1)
    p.add_argument("--lsh", action="store_true")
    p.add_argument("--top", type=_positive, default=DEFAULT_TOP)
    p.add_argument("--rerank", action="store_true", help="pick the best LSH candidate by image correlation")
    _add_encoding_options(p, defaults=False)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="score retrieval over a test manifest")
    p.add_argument("index")
    p.add_argument("test_manifest")
    p.add_argument("--lsh", action="store_true", help="LSH search with correlation re-ranking")
    p.add_argument("--top", type=_positive, default=DEFAULT_TOP)
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) < 0:
        parser.error("--seed must be non-negative")
    try:
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"rbc {args.command}: {exc}\n")
        return EXIT_USAGE
    except (OSError, RadonBarcodeError) as exc:
        sys.stderr.write(f"rbc {args.command}: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
