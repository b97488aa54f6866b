"""Experiment configuration from a plain-text INI file.

Layout::

    [experiment]
    name = walls
    seed = 7
    codec = filtered_deflate      ; or toy_rle
    optimize = true
    output_dir = out/walls
    size = 600                    ; square side for ingested images
    ingest = photos/a.png, photos/b.pgm

    [protocol]
    n_runs = 30
    warmup_runs = 1
    trim = 0.1
    clear_cache = true
    scratch_bytes = 262144        ; cache-eviction sweep size

    [series.lines]
    kind = line_series
    count = 100
    width = 600
    height = 600
    ; any other key becomes a series parameter, e.g. threshold = 0.3

Series without an explicit ``seed`` inherit the experiment seed, which
also drives the timing shuffle. Relative ingest paths are resolved
against the config file's directory. Command-line flags override the
file; ``--seed`` replaces every seed, series ones included.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..codec import CODEC_IDS
from ..errors import ParameterError
from ..imagegen import SeriesSpec
from ..timing import Protocol

_SERIES_FIELDS = ("kind", "width", "height", "seed", "count")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    series: list = field(default_factory=list)
    ingest_paths: list = field(default_factory=list)
    codec: str = "filtered_deflate"
    optimize: bool = True
    protocol: Protocol = field(default_factory=Protocol)
    output_dir: str = "out"
    seed: int = 0
    size: int = 600

    def validate(self, need_images: bool = True) -> "ExperimentConfig":
        if self.codec not in CODEC_IDS:
            raise ParameterError(f"unknown codec {self.codec!r}; expected one of {CODEC_IDS}")
        if need_images and not self.series and not self.ingest_paths:
            raise ParameterError("the configuration names no image source (series or ingest)")
        if self.size < 1:
            raise ParameterError(f"size must be positive, got {self.size}")
        return self


def _number(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    raise ParameterError(f"series parameter {text!r} is not a number")


def _series(name: str, section, default_seed: int) -> SeriesSpec:
    if "kind" not in section:
        raise ParameterError(f"[series.{name}] needs a 'kind'")
    try:
        kw = {k: int(section[k]) for k in ("width", "height", "count") if k in section}
        kw["seed"] = int(section["seed"]) if "seed" in section else default_seed
    except ValueError as exc:
        raise ParameterError(f"[series.{name}]: {exc}") from None
    params = {k: _number(v) for k, v in section.items() if k not in _SERIES_FIELDS}
    return SeriesSpec(section["kind"], name=name, params=params, **kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParameterError(f"{path}: {exc}") from None
    try:
        exp = parser["experiment"] if parser.has_section("experiment") else {}
        seed = int(exp.get("seed", 0))
        cfg = ExperimentConfig(
            name=exp.get("name", path.stem),
            codec=exp.get("codec", "filtered_deflate"),
            optimize=parser.getboolean("experiment", "optimize", fallback=True),
            output_dir=exp.get("output_dir", "out"),
            seed=seed,
            size=int(exp.get("size", 600)),
        )
        raw_paths = exp.get("ingest", "")
        cfg.ingest_paths = [
            str((path.parent / p.strip()).resolve()) for p in raw_paths.replace("\n", ",").split(",") if p.strip()
        ]
        if parser.has_section("protocol"):
            sec = parser["protocol"]
            cfg.protocol = Protocol(
                n_runs=sec.getint("n_runs", 30),
                warmup_runs=sec.getint("warmup_runs", 1),
                shuffle_seed=sec.getint("shuffle_seed", seed),
                clear_cache=sec.getboolean("clear_cache", True),
                outlier_policy=sec.get("outlier_policy", "trim_fraction"),
                trim=sec.getfloat("trim", 0.1),
                scratch_bytes=sec.getint("scratch_bytes", Protocol.scratch_bytes),
            )
        else:
            cfg.protocol = Protocol(shuffle_seed=seed)
        for section in parser.sections():
            if section.startswith("series."):
                cfg.series.append(_series(section[len("series."):], parser[section], seed))
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"{path}: {exc}") from None
    return cfg


def with_overrides(cfg: ExperimentConfig, seed=None, runs=None, codec=None, optimize=None, out=None) -> ExperimentConfig:
    """Apply command-line flags on top of a configuration."""
    if seed is not None:
        cfg = replace(
            cfg, seed=seed, protocol=replace(cfg.protocol, shuffle_seed=seed),
            series=[replace(s, seed=seed) for s in cfg.series],
        )
    if runs is not None:
        cfg = replace(cfg, protocol=replace(cfg.protocol, n_runs=runs))
    if codec is not None:
        cfg = replace(cfg, codec=codec)
    if optimize is not None:
        cfg = replace(cfg, optimize=optimize)
    if out is not None:
        cfg = replace(cfg, output_dir=str(out))
    return cfg
