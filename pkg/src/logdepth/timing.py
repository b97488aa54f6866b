"""Decompression-time measurement: the logical-depth estimate and its uncertainty.

Protocol per session:

1. one untimed codec warm-up call, then ``warmup_runs`` untimed passes;
2. ``n_runs`` timed passes, each visiting every blob once in an order
   drawn from ``shuffle_seed`` and the run index alone;
3. between measurements, optionally the cache-clearing hook;
4. per image, symmetric trimming of the samples, then mean and
   sample standard deviation.

The timed region covers exactly one ``decompress`` call (or a batch of
them when a single call is shorter than ``MIN_TICKS`` clock ticks). The
integrity check, garbage collection and bookkeeping all run outside it,
and the garbage collector is disabled for the session's duration.

Environment quiescing cannot be done from here. For stable numbers:
close other applications, disable power saving and frequency scaling
where possible, pin the process to one core (``taskset -c 0``), and
compare sessions only from the same machine. The session header records
load average and platform so that runs can be compared afterwards.
"""
from __future__ import annotations

import gc
import json
import math
import os
import platform
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .codec import CODEC_VERSION, CompressedBlob, decompress, drop_buffers, verify, warmup
from .errors import DataError, DecodeError, HarnessBusyError, ParameterError

MIN_TICKS = 50
# evicts L1d fully; sweeps at L2 size and above inflated sigma 3-10x on test machines
DEFAULT_SCRATCH_BYTES = 256 << 10

_session_lock = threading.Lock()


@dataclass(frozen=True)
class Protocol:
    n_runs: int = 30
    warmup_runs: int = 1
    shuffle_seed: int = 0
    clear_cache: bool = True
    outlier_policy: str = "trim_fraction"
    trim: float = 0.1
    scratch_bytes: int = DEFAULT_SCRATCH_BYTES

    def __post_init__(self):
        if self.n_runs < 2:
            raise ParameterError(f"n_runs must be >= 2 to estimate a standard deviation, got {self.n_runs}")
        if self.warmup_runs < 0:
            raise ParameterError("warmup_runs must be >= 0")
        if self.outlier_policy not in ("none", "trim_fraction"):
            raise ParameterError(f"unknown outlier policy {self.outlier_policy!r}")
        if not 0.0 <= self.trim <= 0.25:
            raise ParameterError(f"trim must lie in [0, 0.25], got {self.trim}")
        if self.scratch_bytes < 0:
            raise ParameterError("scratch_bytes must be >= 0")

    @property
    def effective_trim(self) -> float:
        return self.trim if self.outlier_policy == "trim_fraction" else 0.0


@dataclass(frozen=True)
class TimingSample:
    image_id: str
    run_index: int
    elapsed: float

    def __post_init__(self):
        if self.elapsed < 0:
            raise DataError(f"negative elapsed time {self.elapsed}")


def trimmed(samples: Sequence[float], trim: float) -> np.ndarray:
    """Sorted samples with ``floor(trim * n)`` dropped from each end."""
    x = np.sort(np.asarray(samples, dtype=float))
    k = int(math.floor(trim * x.size))
    if k and x.size - 2 * k >= 2:
        x = x[k : x.size - k]
    return x


@dataclass(frozen=True)
class TimingStats:
    image_id: str
    mean: float
    std: float
    n_runs: int
    samples: tuple = ()
    trim: float = 0.0
    batch: int = 1

    def __post_init__(self):
        if self.n_runs < 1:
            raise DataError("n_runs must be >= 1")
        if self.mean < 0 or self.std < 0:
            raise DataError("mean and std must be non-negative")

    @classmethod
    def from_samples(cls, image_id: str, samples: Sequence[float], trim: float = 0.0, batch: int = 1):
        """Mean and sample std (ddof=1) of the trimmed samples; raw samples are retained."""
        if len(samples) < 2:
            raise ParameterError("at least two samples are needed for a standard deviation")
        kept = trimmed(samples, trim)
        return cls(
            image_id=image_id, mean=float(kept.mean()), std=float(kept.std(ddof=1)),
            n_runs=len(samples), samples=tuple(float(s) for s in samples), trim=trim, batch=batch,
        )

    @property
    def n_kept(self) -> int:
        if self.samples:
            return trimmed(self.samples, self.trim).size
        return self.n_runs

    @property
    def sem(self) -> float:
        return self.std / math.sqrt(self.n_kept)

    def recomputed(self) -> "TimingStats":
        return TimingStats.from_samples(self.image_id, self.samples, self.trim, self.batch)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["samples"] = list(self.samples)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TimingStats":
        d = dict(d)
        d.pop("record", None)
        d["samples"] = tuple(d.get("samples", ()))
        return cls(**d)


def clock_choice() -> tuple[Callable[[], int], str]:
    """Thread CPU time when the platform exposes a fine-grained one, else the monotonic clock."""
    try:
        info = time.get_clock_info("thread_time")
        if info.resolution <= 1e-6:
            return time.thread_time_ns, f"thread_time ({info.implementation})"
    except (AttributeError, ValueError, OSError):
        pass
    return time.perf_counter_ns, "perf_counter"


def clock_resolution_ns(name: str) -> float:
    key = "thread_time" if name.startswith("thread_time") else "perf_counter"
    try:
        return max(time.get_clock_info(key).resolution * 1e9, 1.0)
    except (AttributeError, ValueError):
        return 1.0


_scratch_buffer = None


def clear_cache_hook(scratch_bytes: int = DEFAULT_SCRATCH_BYTES) -> None:
    """Best-effort cache eviction.

    Drops the codec's reusable buffers and writes then reads a scratch
    buffer of ``scratch_bytes`` bytes so that earlier decode data is
    pushed out of the data caches. With ``scratch_bytes=0`` only the
    buffer drop happens.
    """
    global _scratch_buffer
    drop_buffers()
    if scratch_bytes <= 0:
        return
    if _scratch_buffer is None or _scratch_buffer.size != scratch_bytes:
        _scratch_buffer = np.empty(scratch_bytes, dtype=np.uint8)
    _scratch_buffer.fill(1)
    _scratch_buffer.sum()


def _decode_checked(blob):
    try:
        return decompress(blob)
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"decode failed: {exc}") from exc


def calibrate_batch(blob: CompressedBlob, clock=None, resolution_ns: float = 1.0) -> int:
    """Repetitions needed for one timed region to span at least ``MIN_TICKS`` clock ticks."""
    clock = clock or clock_choice()[0]
    t0 = clock()
    _decode_checked(blob)
    elapsed = clock() - t0
    floor_ns = MIN_TICKS * resolution_ns
    if elapsed >= floor_ns:
        return 1
    return int(math.ceil(floor_ns / max(elapsed, 1)))


def measure_one(blob: CompressedBlob, clock=None, batch: int = 1, verify_rounds: int = 1, reference=None) -> float:
    """Seconds for one full decompression.

    Only the decode call(s) sit between the two clock reads. The decoded
    image is then checked against the container checksum (``verify_rounds``
    times) and, when given, against ``reference``; a mismatch raises.
    """
    clock = clock or clock_choice()[0]
    if batch == 1:
        t0 = clock()
        img = decompress(blob)
        t1 = clock()
    else:
        t0 = clock()
        for _ in range(batch):
            img = decompress(blob)
        t1 = clock()
    for _ in range(verify_rounds):
        if not verify(blob, img):
            raise DecodeError("decoded image fails the container checksum")
    if reference is not None and img != reference:
        raise DecodeError("decoded image differs from the reference image")
    return (t1 - t0) / batch / 1e9


def run_order(n_items: int, shuffle_seed: int, run_index: int) -> np.ndarray:
    """Visit order of one run, a function of the seed and run index only."""
    rng = np.random.Generator(np.random.PCG64([int(shuffle_seed), int(run_index)]))
    return rng.permutation(n_items)


@dataclass
class Session:
    stats: list
    samples: list
    metadata: dict = field(default_factory=dict)

    def by_id(self) -> dict:
        return {s.image_id: s for s in self.stats}


def session_metadata(protocol: Protocol, clock_name: str) -> dict:
    try:
        load = os.getloadavg()
    except (AttributeError, OSError):
        load = None
    return {
        "record": "session",
        "clock": clock_name,
        "protocol": asdict(protocol),
        "machine": f"{platform.platform()} | {platform.machine()} | {platform.processor() or 'unknown cpu'} | "
        f"python {platform.python_version()} | cpus {os.cpu_count()}",
        "codec_version": CODEC_VERSION,
        "load_average": load,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "timed_kernel": "codec.decompress (inflate + unfilter + unpack)",
    }


def run_session(
    blobs: Sequence[CompressedBlob],
    protocol: Protocol = Protocol(),
    image_ids: Sequence[str] | None = None,
    clock: Callable[[], int] | None = None,
    verify_rounds: int | Sequence[int] = 1,
    on_progress: Callable[[int, int], None] | None = None,
) -> Session:
    """Time every blob ``protocol.n_runs`` times and aggregate per image.

    Refuses to start while another session holds the harness.
    ``clock`` (integer nanoseconds) replaces the default clock, for tests.
    ``verify_rounds`` may be given per blob.
    """
    if not isinstance(protocol, Protocol):
        raise ParameterError("protocol must be a Protocol")
    ids = list(image_ids) if image_ids is not None else [f"img{i:03d}" for i in range(len(blobs))]
    if len(ids) != len(blobs):
        raise ParameterError("image_ids and blobs differ in length")
    if len(set(ids)) != len(ids):
        raise ParameterError("image ids must be unique")
    rounds = [verify_rounds] * len(blobs) if isinstance(verify_rounds, int) else list(verify_rounds)
    if len(rounds) != len(blobs) or any(r < 0 for r in rounds):
        raise ParameterError("verify_rounds must be a non-negative int or one per blob")
    if not _session_lock.acquire(blocking=False):
        raise HarnessBusyError("another timing session is running")
    gc_was_enabled = gc.isenabled()
    try:
        if clock is None:
            clock, clock_name = clock_choice()
        else:
            clock_name = "injected"
        resolution = clock_resolution_ns(clock_name)
        warmup()
        batches = []
        for i, b in enumerate(blobs):
            try:
                batches.append(calibrate_batch(b, clock, resolution) if clock_name != "injected" else 1)
            except DecodeError as exc:
                raise DecodeError(f"image {ids[i]}: {exc}") from exc
        for _ in range(protocol.warmup_runs):
            for b in blobs:
                _decode_checked(b)
        gc.collect()
        gc.disable()
        samples: list[TimingSample] = []
        per_image: list[list[float]] = [[] for _ in blobs]
        for run in range(protocol.n_runs):
            for j in run_order(len(blobs), protocol.shuffle_seed, run):
                if protocol.clear_cache:
                    clear_cache_hook(protocol.scratch_bytes)
                try:
                    elapsed = measure_one(blobs[j], clock, batches[j], rounds[j])
                except DecodeError as exc:
                    raise DecodeError(f"image {ids[j]}, run {run}: {exc}") from exc
                samples.append(TimingSample(ids[j], run, elapsed))
                per_image[j].append(elapsed)
            if on_progress:
                on_progress(run + 1, protocol.n_runs)
        stats = [
            TimingStats.from_samples(ids[j], per_image[j], protocol.effective_trim, batches[j])
            for j in range(len(blobs))
        ]
        return Session(stats, samples, session_metadata(protocol, clock_name))
    finally:
        if gc_was_enabled:
            gc.enable()
        _session_lock.release()


def stabilization_curve(samples: Iterable[TimingSample]) -> list[tuple[int, float]]:
    """For k = 2..n, max over images of the relative running-mean shift between k-1 and k runs."""
    by_image: dict[str, list[tuple[int, float]]] = {}
    for s in samples:
        by_image.setdefault(s.image_id, []).append((s.run_index, s.elapsed))
    if not by_image:
        return []
    series = []
    for vals in by_image.values():
        vals.sort()
        series.append(np.array([v for _, v in vals], dtype=float))
    n = min(len(s) for s in series)
    if n < 2:
        raise ParameterError("stabilization needs at least two runs")
    # incremental running mean: exact for constant series
    means = np.array([s[0] for s in series])
    out = []
    for k in range(2, n + 1):
        x = np.array([s[k - 1] for s in series])
        step = (x - means) / k
        means = means + step
        rel = np.where(means > 0, np.abs(step) / np.where(means > 0, means, 1.0), 0.0)
        out.append((k, float(rel.max())))
    return out


def write_jsonl(path, session: Session) -> None:
    """One session header record, then one ``stats`` record (raw samples in run order) per image."""
    with open(path, "w") as fh:
        fh.write(json.dumps(session.metadata) + "\n")
        for st in session.stats:
            fh.write(json.dumps({"record": "stats", **st.to_dict()}) + "\n")


def read_jsonl(path) -> tuple[dict, list[TimingStats]]:
    meta, stats = {}, []
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                kind = rec.get("record")
                if kind == "session":
                    meta = rec
                elif kind == "stats":
                    stats.append(TimingStats.from_dict(rec))
            except (json.JSONDecodeError, TypeError, AttributeError) as exc:
                raise DataError(f"{path}:{n}: malformed record ({exc})") from None
    return meta, stats


def samples_from_stats(stats: Iterable[TimingStats]) -> list[TimingSample]:
    """Raw samples of each image, indexed by run, as stored in ``TimingStats.samples``."""
    return [TimingSample(s.image_id, k, v) for s in stats for k, v in enumerate(s.samples)]
