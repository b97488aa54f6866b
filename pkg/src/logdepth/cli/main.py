"""``logdepth`` command line: generate, ingest, compress, bench, reproduce, report.

Exit codes: 0 success, 1 usage or parameter error, 2 data, format or
decode error, 3 acceptance failure (``reproduce`` only).
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import shutil
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

from .. import __version__, bitmap, experiments
from ..codec import CODEC_IDS, CODEC_VERSION, compress
from ..errors import (
    DataError, DecodeError, DimensionError, FormatError, HarnessBusyError, LogDepthError, ParameterError,
)
from ..imagegen import RNG_NAME, SERIES_KINDS, SeriesSpec, generate_series
from ..timing import read_jsonl, run_session, write_jsonl
from . import report
from .config import ExperimentConfig, load_config, with_overrides

IMAGE_SUFFIXES = (".pbm", ".pgm", ".pnm", ".png")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(directory: Path, command: str, entries: list[dict], extra: dict | None = None) -> None:
    """``manifest.json`` listing every artifact in ``directory`` with its provenance."""
    for e in entries:
        e["sha256"] = _sha256(directory / e["file"])
    doc = {"tool": "logdepth", "version": __version__, "codec_version": CODEC_VERSION, "rng": RNG_NAME,
           "command": command, **(extra or {}), "entries": entries}
    (directory / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


@contextlib.contextmanager
def staged(out_dir: Path):
    """Write into a scratch directory and move the results into ``out_dir`` only on success."""
    created = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    ok = False
    try:
        yield stage
        for item in sorted(stage.iterdir()):
            item.replace(out_dir / item.name)
        ok = True
    finally:
        shutil.rmtree(stage, ignore_errors=True)
        if created and not ok:
            shutil.rmtree(out_dir, ignore_errors=True)


# --- image sources ----------------------------------------------------------


def _series_provenance(spec: SeriesSpec) -> dict:
    return {"series": spec.name, "series_kind": spec.kind, "params": spec.params, "seed": spec.seed,
            "width": spec.width, "height": spec.height, "count": spec.count}


def _ingest_one(path: str, size: int):
    px, maxval = bitmap.read_raster(path)
    img = bitmap.normalize(px, maxval, size)
    prov = {
        "source": str(path),
        "source_shape": list(px.shape),
        "transform": f"50% luminance threshold (mid-gray stays white), center square crop, nearest-neighbour to {size}x{size}"
        if maxval != 1 else f"center square crop, nearest-neighbour to {size}x{size}",
    }
    return img, prov


def _unique_id(stem: str, seen: set) -> str:
    name, k = stem, 1
    while name in seen:
        k += 1
        name = f"{stem}-{k}"
    seen.add(name)
    return name


def config_images(cfg: ExperimentConfig) -> list[tuple[str, object, dict]]:
    out, seen = [], set()
    for spec in cfg.series:
        for image_id, img in generate_series(spec):
            out.append((_unique_id(image_id, seen), img, _series_provenance(spec)))
    for p in cfg.ingest_paths:
        img, prov = _ingest_one(p, cfg.size)
        out.append((_unique_id(Path(p).stem, seen), img, prov))
    return out


def directory_images(directory: Path) -> list[tuple[str, object, dict]]:
    """Images listed in ``directory/manifest.json``, or every bitmap file found there."""
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    manifest = directory / "manifest.json"
    out = []
    if manifest.exists():
        try:
            entries = json.loads(manifest.read_text())["entries"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{manifest}: unreadable manifest ({exc})") from None
        for e in entries:
            if e.get("kind") == "image":
                out.append((e["id"], bitmap.read_image(directory / e["file"]), {"source": str(directory / e["file"])}))
    else:
        seen = set()
        for f in sorted(directory.iterdir()):
            if f.suffix.lower() in IMAGE_SUFFIXES:
                out.append((_unique_id(f.stem, seen), bitmap.read_image(f), {"source": str(f)}))
    if not out:
        raise DataError(f"no images found in {directory}")
    return out


def _config(args, need_images=True) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    cfg = with_overrides(cfg, seed=args.seed, runs=getattr(args, "runs", None), codec=getattr(args, "codec", None),
                         optimize=getattr(args, "optimize", None), out=args.out)
    return cfg.validate(need_images)


def _images(args, cfg) -> list:
    if getattr(args, "images", None):
        return directory_images(Path(args.images))
    if not cfg.series and not cfg.ingest_paths:
        raise UsageError("give --config with series/ingest sections or --images DIR")
    return config_images(cfg)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.config:
        cfg = _config(args)
        specs = cfg.series
        if not specs:
            raise UsageError("the configuration defines no [series.*] section")
    else:
        if not args.kind:
            raise UsageError("generate needs --config or --kind")
        params = {}
        for kv in args.param or []:
            key, sep, val = kv.partition("=")
            if not sep:
                raise UsageError(f"--param expects key=value, got {kv!r}")
            try:
                params[key.strip()] = float(val) if any(c in val for c in ".eE") else int(val)
            except ValueError:
                raise UsageError(f"--param {key}: {val!r} is not a number") from None
        cfg = _config(args, need_images=False)
        specs = [SeriesSpec(args.kind, args.width, args.height, cfg.seed, args.count, params, args.name or "")]
    out = Path(cfg.output_dir)
    entries = []
    with staged(out) as stage:
        for spec in specs:
            for image_id, img in generate_series(spec):
                ext = ".pbm" if img.depth == 1 else ".pgm"
                name = f"{image_id}{ext}"
                bitmap.write_pnm(stage / name, img, plain=args.plain)
                entries.append({"file": name, "kind": "image", "id": image_id, **_series_provenance(spec)})
        write_manifest(stage, "generate", entries)
    _say(f"wrote {len(entries)} images to {out}")
    return 0


def cmd_ingest(args) -> int:
    cfg = _config(args, need_images=False)
    paths = list(args.paths) + list(cfg.ingest_paths)
    if not paths:
        raise UsageError("ingest needs at least one input file")
    size = args.size or cfg.size
    out = Path(cfg.output_dir)
    entries, seen = [], set()
    with staged(out) as stage:
        for p in paths:
            img, prov = _ingest_one(p, size)
            image_id = _unique_id(Path(p).stem, seen)
            name = f"{image_id}.pbm"
            bitmap.write_pnm(stage / name, img)
            entries.append({"file": name, "kind": "image", "id": image_id, **prov})
        write_manifest(stage, "ingest", entries, {"size": size})
    _say(f"ingested {len(entries)} images into {out}")
    return 0


def cmd_compress(args) -> int:
    cfg = _config(args, need_images=False)
    images = _images(args, cfg)
    out = Path(cfg.output_dir)
    entries = []
    with staged(out) as stage:
        for image_id, img, prov in images:
            blob = compress(img, cfg.codec, cfg.optimize)
            name = f"{image_id}.ldb"
            (stage / name).write_bytes(blob.to_bytes())
            entries.append({"file": name, "kind": "blob", "id": image_id, "codec": cfg.codec,
                            "optimize": cfg.optimize, "k_bits": blob.bit_length, "strategy": blob.strategy,
                            "provenance": prov})
            print(f"{image_id}\t{blob.bit_length}")
        write_manifest(stage, "compress", entries)
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args, need_images=False)
    images = _images(args, cfg)
    out = Path(cfg.output_dir)
    ids = [i for i, _, _ in images]
    _say(f"compressing {len(images)} images with {cfg.codec}")
    blobs = [compress(img, cfg.codec, cfg.optimize) for _, img, _ in images]
    _say(f"timing {len(images)} images x {cfg.protocol.n_runs} runs")
    session = run_session(blobs, cfg.protocol, ids,
                          on_progress=lambda k, n: _say(f"  run {k}/{n}") if k % 10 == 0 or k == n else None)
    k_bits = {i: b.bit_length for i, b in zip(ids, blobs)}
    bundle = report.build_bundle(k_bits, session.stats, session.metadata)
    prov = {"command": "bench", "codec": cfg.codec, "optimize": cfg.optimize, "protocol": asdict(cfg.protocol),
            "inputs": [{"id": i, **p} for i, _, p in images]}
    with staged(out) as stage:
        write_jsonl(stage / "results.jsonl", session)
        names = ["results.jsonl"] + report.write_bundle(stage, bundle)
        entries = [{"file": n, "kind": "report", "provenance": prov if n == "results.jsonl" else
                    {"command": "bench", "derived_from": "results.jsonl"}} for n in names]
        write_manifest(stage, "bench", entries, {"name": cfg.name})
    print("\n".join(report.summary_lines(bundle)))
    return 0


def cmd_report(args) -> int:
    directory = Path(args.directory)
    results = directory / "results.jsonl"
    prior = directory / "report.json"
    if not results.exists() or not prior.exists():
        raise DataError(f"{directory} needs results.jsonl and report.json from a bench run")
    meta, stats = read_jsonl(results)
    try:
        k_bits = {r["image_id"]: r["k_bits"] for r in json.loads(prior.read_text())["records"]}
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{prior}: unreadable report ({exc})") from None
    bundle = report.build_bundle(k_bits, stats, meta)
    with staged(directory) as stage:
        shutil.copy2(results, stage / "results.jsonl")
        names = ["results.jsonl"] + report.write_bundle(stage, bundle)
        entries = [{"file": n, "kind": "report", "provenance": {"command": "report", "derived_from": "results.jsonl"}}
                   for n in names]
        write_manifest(stage, "report", entries)
    print("\n".join(report.summary_lines(bundle)))
    return 0


def cmd_reproduce(args) -> int:
    kwargs = {"seed": args.seed if args.seed is not None else 0}
    if args.runs is not None:
        kwargs["runs"] = args.runs
    if args.size is not None:
        kwargs["size"] = args.size
    if args.count is not None:
        kwargs["count"] = args.count
    if args.test_id not in experiments.REPRODUCIBLE:
        raise UsageError(f"unknown test id {args.test_id!r}; choose from {', '.join(experiments.REPRODUCIBLE)}")
    verdict = experiments.reproduce(args.test_id, **kwargs)
    print(verdict.summary())
    for line in verdict.lines:
        print(f"  {line}")
    if args.out:
        out = Path(args.out)
        with staged(out) as stage:
            doc = {"test_id": verdict.test_id, "passed": verdict.passed, "predicate": verdict.predicate,
                   "lines": verdict.lines, "data": verdict.data, "arguments": kwargs}
            (stage / "verdict.json").write_text(json.dumps(doc, indent=2, default=str) + "\n")
            write_manifest(stage, "reproduce", [{"file": "verdict.json", "kind": "verdict",
                                                  "provenance": {"test_id": verdict.test_id, **kwargs}}])
    return 0 if verdict.passed else 3


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="experiment configuration file (INI)")
    common.add_argument("--seed", type=int, help="override every seed")
    common.add_argument("--out", help="output directory")
    timing = _Parser(add_help=False)
    timing.add_argument("--runs", type=int, help="timed runs per image")
    codec = _Parser(add_help=False)
    codec.add_argument("--codec", choices=CODEC_IDS, help="codec (default filtered_deflate)")
    codec.add_argument("--optimize", action=argparse.BooleanOptionalAction, default=None,
                       help="search filter layouts and Deflate strategies for the smallest output (default on)")
    images = _Parser(add_help=False)
    images.add_argument("--images", help="directory of images (from generate or ingest)")

    p = _Parser(prog="logdepth", description="Compressed length and decompression time of binary images.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a generated image series")
    g.add_argument("--kind", choices=SERIES_KINDS)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--width", type=int, default=600)
    g.add_argument("--height", type=int, default=600)
    g.add_argument("--name", help="series name (image id prefix)")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="series parameter, repeatable")
    g.add_argument("--plain", action="store_true", help="write plain (ASCII) bitmaps")
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("ingest", parents=[common], help="normalize photos or bitmaps to square 1-bit images")
    i.add_argument("paths", nargs="*")
    i.add_argument("--size", type=int, help="output side in pixels (default 600)")
    i.set_defaults(func=cmd_ingest)

    c = sub.add_parser("compress", parents=[common, codec, images], help="compress images, report K")
    c.set_defaults(func=cmd_compress)

    b = sub.add_parser("bench", parents=[common, timing, codec, images], help="compress, time and rank images")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("reproduce", parents=[common, timing], help="run one experiment and check its predicate")
    r.add_argument("test_id", help=", ".join(experiments.REPRODUCIBLE))
    r.add_argument("--size", type=int, help="image side (default 600)")
    r.add_argument("--count", type=int, help="series length where applicable")
    r.set_defaults(func=cmd_reproduce)

    rep = sub.add_parser("report", help="rebuild report files from a bench output directory")
    rep.add_argument("directory")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, DecodeError, DimensionError, FormatError, HarnessBusyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LogDepthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
