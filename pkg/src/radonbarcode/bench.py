"""Retrieval benchmark over a test manifest.

Every test image is encoded with the index's own settings, searched, and
its top hit scored with the hierarchical IRMA error against ground truth.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources

from .dataset import ManifestRow, read_manifest
from .exceptions import MissingImageRef, RadonBarcodeError
from .imaging import load_grayscale, normalize
from .index import DEFAULT_TOP, BarcodeIndex, LshIndex, rerank_correlation
from .irma import build_branch_table, code_error
from .pipeline import EncodingSettings, encode_image

LINEAR = "linear-knn"
LSH_RERANK = "lsh+correlation"


class BenchmarkError(RadonBarcodeError):
    """A test image could not be queried; the message names the image."""


@dataclass
class BenchmarkReport:
    encoder: str
    num_angles: int
    corpus_size: int
    query_count: int
    total_error: float
    failure_rate: float
    failures: int
    lsh_fallbacks: int
    mean_query_time: float
    search_mode: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        rows = [
            ("encoder", self.encoder),
            ("angles", self.num_angles),
            ("search", self.search_mode),
            ("indexed", self.corpus_size),
            ("queries", self.query_count),
            ("total error", f"{self.total_error:.4f}"),
            ("failure", f"{100 * self.failure_rate:.2f}%"),
            ("lsh fallbacks", self.lsh_fallbacks),
            ("mean t (s)", f"{self.mean_query_time:.6f}"),
        ]
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{w}}  {v}" for k, v in rows) + "\n"


def report_schema() -> dict:
    text = resources.files(__package__).joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def worker_count() -> int:
    raw = os.environ.get("RBC_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class _ImageCache:
    def __init__(self, side: int):
        self.side = side
        self._cache = {}
        self._lock = threading.Lock()

    def __call__(self, entry):
        with self._lock:
            img = self._cache.get(entry.id)
        if img is None:
            if entry.image_ref is None:
                raise MissingImageRef(f"entry {entry.id!r} has no image reference")
            img = normalize(load_grayscale(entry.image_ref), self.side, self.side)
            with self._lock:
                self._cache[entry.id] = img
        return img


def run_benchmark(
    index: BarcodeIndex,
    test_rows: list[ManifestRow],
    mode: str = LINEAR,
    top: int = DEFAULT_TOP,
    threads: int | None = None,
) -> BenchmarkReport:
    """Query every test row against ``index`` and total the retrieval error.

    In LSH mode an empty candidate set counts as a failure and the query is
    answered by a linear scan instead, so every test image is still scored.
    """
    if mode not in (LINEAR, LSH_RERANK):
        raise ValueError(f"unknown search mode {mode!r}")
    if mode == LSH_RERANK and not isinstance(index, LshIndex):
        raise ValueError("LSH search requested but the index has no LSH tables")
    settings = EncodingSettings.from_config(index.config)
    # query codes may open prefixes the corpus never saw
    bt = build_branch_table([e.code for e in index.entries] + [r.code for r in test_rows])
    images = _ImageCache(settings.image_side)

    def one(row: ManifestRow):
        t0 = time.perf_counter()
        try:
            img = normalize(load_grayscale(row.path), settings.image_side, settings.image_side)
            bc = encode_image(img, settings)
            fallback = False
            if mode == LINEAR:
                hit = index.knn(bc, 1)[0][0]
            else:
                cands = index.candidates(bc, top)
                if cands:
                    hit = rerank_correlation(cands, img, index, images)
                else:
                    fallback = True
                    hit = index.knn(bc, 1)[0][0]
        except (OSError, RadonBarcodeError) as exc:
            raise BenchmarkError(f"test image {row.id!r}: {exc}") from exc
        elapsed = time.perf_counter() - t0
        return code_error(row.code, index.entry(hit).code, bt), fallback, elapsed

    threads = threads or worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, test_rows))
    else:
        results = [one(r) for r in test_rows]

    n = len(results)
    fallbacks = sum(1 for _, fb, _ in results if fb)
    config = settings.as_dict()
    if isinstance(index, LshIndex):
        config["lsh"] = asdict(index.lsh_config)
    if mode == LSH_RERANK:
        config["top"] = top
    return BenchmarkReport(
        encoder=settings.encoder.value,
        num_angles=settings.num_angles,
        corpus_size=len(index),
        query_count=n,
        total_error=float(sum(e for e, _, _ in results)),
        failure_rate=fallbacks / n if n else 0.0,
        failures=fallbacks,
        lsh_fallbacks=fallbacks,
        mean_query_time=sum(t for _, _, t in results) / n if n else 0.0,
        search_mode=mode,
        config=config,
    )


def run_benchmark_files(index: BarcodeIndex, test_manifest, **kwargs) -> BenchmarkReport:
    return run_benchmark(index, read_manifest(test_manifest), **kwargs)
