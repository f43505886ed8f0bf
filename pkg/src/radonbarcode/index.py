"""Hamming-space retrieval over barcodes.

``BarcodeIndex`` answers exact k-NN queries by a full scan over bit-packed
barcodes.  ``LshIndex`` adds bit-sampling hash tables: each table keys an
entry by the bits at a fixed random subset of positions, and a query's
candidates are the union of its buckets, ranked by exact Hamming distance.

Ties are always broken by ascending id.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .barcode import Barcode, Encoder, check_comparable
from .exceptions import (
    CorruptIndexFile,
    DuplicateId,
    EmptyCandidates,
    EmptyIndex,
    FormatVersionMismatch,
    IncomparableBarcodes,
    InvalidK,
    InvalidLshConfig,
    MissingImageRef,
)
from .imaging import GrayImage, as_gray_image, load_grayscale, normalize
from .irma import BranchTable, IrmaCode, parse_code
from .radon import bins_per_angle

DEFAULT_TABLES = 30
DEFAULT_TOP = 10


@dataclass(frozen=True)
class IndexEntry:
    id: str
    barcode: Barcode
    code: IrmaCode
    image_ref: str | None = None

    def __post_init__(self):
        if not isinstance(self.code, IrmaCode):
            object.__setattr__(self, "code", parse_code(self.code))


@dataclass(frozen=True)
class LshConfig:
    num_tables: int
    key_size: int
    seed: int = 0

    @classmethod
    def for_length(cls, length: int, num_tables: int = DEFAULT_TABLES, seed: int = 0) -> "LshConfig":
        """Default configuration: key size is a third of the barcode length."""
        return cls(num_tables=num_tables, key_size=max(1, length // 3), seed=seed)

    def validate(self, length: int) -> None:
        if self.num_tables < 1:
            raise InvalidLshConfig(f"num_tables must be >= 1, got {self.num_tables}")
        if not 1 <= self.key_size <= length:
            raise InvalidLshConfig(f"key_size must be in [1, {length}], got {self.key_size}")
        if not 0 <= self.seed < 2**64:
            raise InvalidLshConfig(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def _popcount_rows(packed: np.ndarray, query: np.ndarray) -> np.ndarray:
    return np.bitwise_count(packed ^ query).sum(axis=1, dtype=np.int64)


class BarcodeIndex:
    """Immutable exact-search index over comparable barcodes."""

    def __init__(self, entries: Sequence[IndexEntry], branch_table: BranchTable | None = None):
        entries = tuple(entries)
        if not entries:
            raise EmptyIndex("an index needs at least one entry")
        ref = entries[0].barcode
        seen = set()
        for e in entries:
            if e.id in seen:
                raise DuplicateId(f"duplicate id {e.id!r}")
            seen.add(e.id)
            check_comparable(ref, e.barcode)
        self.entries = entries
        self.branch_table = branch_table
        self.config = ref.config
        self.ids = [e.id for e in entries]
        self._pos = {e.id: i for i, e in enumerate(entries)}
        self._packed = np.stack([np.packbits(e.barcode.bits) for e in entries])
        # rank of each entry in ascending-id order, used as the tie-breaker
        order = sorted(range(len(entries)), key=lambda i: self.ids[i])
        self._id_rank = np.empty(len(entries), dtype=np.int64)
        self._id_rank[order] = np.arange(len(entries))

    def __len__(self):
        return len(self.entries)

    def size(self) -> int:
        return len(self.entries)

    @property
    def barcode_length(self) -> int:
        return len(self.entries[0].barcode)

    @property
    def image_side(self) -> int:
        return self.config[2]

    def entry(self, id: str) -> IndexEntry:
        return self.entries[self._pos[id]]

    def _check_query(self, query: Barcode) -> np.ndarray:
        if query.config != self.config:
            raise IncomparableBarcodes(f"query settings {query.config} differ from index {self.config}")
        return np.packbits(query.bits)

    def distances(self, query: Barcode) -> np.ndarray:
        """Hamming distance from ``query`` to every entry, in entry order."""
        return _popcount_rows(self._packed, self._check_query(query))

    def _ranked(self, rows: np.ndarray, dist: np.ndarray, k: int) -> list[tuple[str, int]]:
        order = np.lexsort((self._id_rank[rows], dist))[:k]
        return [(self.ids[rows[i]], int(dist[i])) for i in order]

    def knn(self, query: Barcode, k: int = 1) -> list[tuple[str, int]]:
        if not 1 <= k <= len(self):
            raise InvalidK(f"k must be in [1, {len(self)}], got {k}")
        dist = self.distances(query)
        return self._ranked(np.arange(len(self)), dist, k)


class BitSamplingTables:
    """Hash tables keyed by the bits at sampled positions of each row of ``bits``."""

    def __init__(self, bits: np.ndarray, cfg: LshConfig, positions: np.ndarray | None = None):
        bits = np.asarray(bits, dtype=np.uint8)
        cfg.validate(bits.shape[1])
        self.config = cfg
        if positions is None:
            positions = _sample_positions(cfg, bits.shape[1])
        positions = np.asarray(positions, dtype=np.int64)
        if positions.shape != (cfg.num_tables, cfg.key_size):
            raise InvalidLshConfig(f"positions shape {positions.shape} does not match {cfg}")
        if positions.size and (positions.min() < 0 or positions.max() >= bits.shape[1]):
            raise InvalidLshConfig("sampled positions fall outside the barcode")
        positions.setflags(write=False)
        self.positions = positions

        self.buckets: list[dict[bytes, np.ndarray]] = []
        for pos in positions:
            keys = np.packbits(bits[:, pos], axis=1)
            table: dict[bytes, list[int]] = {}
            for i, key in enumerate(keys):
                table.setdefault(key.tobytes(), []).append(i)
            self.buckets.append({k: np.array(v, dtype=np.int64) for k, v in sorted(table.items())})

    def lookup(self, query_bits: np.ndarray) -> np.ndarray:
        """Sorted, de-duplicated row numbers sharing at least one bucket with the query."""
        hits = []
        for pos, table in zip(self.positions, self.buckets):
            rows = table.get(np.packbits(query_bits[pos]).tobytes())
            if rows is not None:
                hits.append(rows)
        if not hits:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(hits))


class LshIndex(BarcodeIndex):
    """Exact index plus bit-sampling hash tables."""

    def __init__(
        self,
        entries: Sequence[IndexEntry],
        cfg: LshConfig,
        branch_table: BranchTable | None = None,
        positions: np.ndarray | None = None,
    ):
        super().__init__(entries, branch_table)
        bits = np.stack([e.barcode.bits for e in self.entries])
        self.tables = BitSamplingTables(bits, cfg, positions)

    @property
    def lsh_config(self) -> LshConfig:
        return self.tables.config

    @property
    def positions(self) -> np.ndarray:
        return self.tables.positions

    @property
    def buckets(self) -> list[dict[bytes, np.ndarray]]:
        return self.tables.buckets

    def candidates(self, query: Barcode, max_candidates: int = DEFAULT_TOP) -> list[tuple[str, int]]:
        if max_candidates < 1:
            raise InvalidK(f"max_candidates must be >= 1, got {max_candidates}")
        packed = self._check_query(query)
        rows = self.tables.lookup(query.bits)
        if rows.size == 0:
            return []
        dist = _popcount_rows(self._packed[rows], packed)
        return self._ranked(rows, dist, max_candidates)


def _sample_positions(cfg: LshConfig, length: int) -> np.ndarray:
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.num_tables)
    return np.stack(
        [np.sort(np.random.default_rng(ss).choice(length, size=cfg.key_size, replace=False)) for ss in children]
    )


def build_linear(entries, branch_table: BranchTable | None = None) -> BarcodeIndex:
    return BarcodeIndex(entries, branch_table)


def build_lsh(entries, cfg: LshConfig, branch_table: BranchTable | None = None) -> LshIndex:
    return LshIndex(entries, cfg, branch_table)


def knn(index: BarcodeIndex, query: Barcode, k: int = 1) -> list[tuple[str, int]]:
    return index.knn(query, k)


def lsh_candidates(lsh: LshIndex, query: Barcode, max_candidates: int = DEFAULT_TOP) -> list[tuple[str, int]]:
    return lsh.candidates(query, max_candidates)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation over all pixels; 0 when either side is constant."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if denom == 0.0:
        return 0.0
    return float(np.dot(da, db) / denom)


def rerank_correlation(
    candidates,
    query_img,
    index: BarcodeIndex,
    image_loader: Callable[[IndexEntry], GrayImage] | None = None,
) -> str:
    """Pick the candidate whose normalized image correlates best with ``query_img``.

    ``image_loader`` maps an entry to its normalized image; by default the
    entry's ``image_ref`` is loaded and resized to the index's image side.
    """
    if not candidates:
        raise EmptyCandidates("no candidates to re-rank")
    side = index.image_side
    query = as_gray_image(query_img)
    if query.shape != (side, side):
        query = normalize(query, side, side)
    if image_loader is None:

        def image_loader(entry):
            if entry.image_ref is None:
                raise MissingImageRef(f"entry {entry.id!r} has no image reference")
            return normalize(load_grayscale(entry.image_ref), side, side)

    best = None
    for cid, _ in candidates:
        r = pearson(query.pixels, image_loader(index.entry(cid)).pixels)
        if best is None or (-r, cid) < best:
            best = (-r, cid)
    return best[1]


# --- persistence ----------------------------------------------------------

MAGIC = b"RBIX"
FORMAT_VERSION = 1
_FLAG_LSH = 1
_FLAG_BRANCHES = 2


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def pack(self, fmt: str, *values):
        self.parts.append(struct.pack("<" + fmt, *values))

    def text(self, s: str):
        raw = s.encode("utf-8")
        self.pack("I", len(raw))
        self.parts.append(raw)

    def raw(self, b: bytes):
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptIndexFile("index file is truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (n,) = self.unpack("I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptIndexFile("invalid UTF-8 in index file") from None


def index_to_bytes(index: BarcodeIndex) -> bytes:
    w = _Writer()
    encoder, num_angles, image_side, window = index.config
    lsh = isinstance(index, LshIndex)
    flags = (_FLAG_LSH if lsh else 0) | (_FLAG_BRANCHES if index.branch_table is not None else 0)
    w.raw(MAGIC)
    w.pack("HB", FORMAT_VERSION, flags)
    w.text(encoder.value)
    w.pack("III", num_angles, image_side, window)

    w.pack("I", len(index))
    for e, packed in zip(index.entries, index._packed):
        w.text(e.id)
        w.text(str(e.code))
        w.raw(packed.tobytes())
        if e.image_ref is None:
            w.pack("B", 0)
        else:
            w.pack("B", 1)
            w.text(e.image_ref)

    if lsh:
        cfg = index.lsh_config
        w.pack("IIQ", cfg.num_tables, cfg.key_size, cfg.seed)
        for pos, table in zip(index.positions, index.buckets):
            w.raw(pos.astype("<u4").tobytes())
            w.pack("I", len(table))
            for key, rows in table.items():
                w.raw(key)
                w.pack("I", len(rows))
                w.raw(rows.astype("<u4").tobytes())
    if index.branch_table is not None:
        w.text(index.branch_table.to_text())
    return w.getvalue()


def index_from_bytes(data: bytes) -> BarcodeIndex:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CorruptIndexFile("not an index file (bad magic)")
    version, flags = r.unpack("HB")
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"index format version {version}, expected {FORMAT_VERSION}")
    try:
        encoder = Encoder(r.text())
        num_angles, image_side, window = r.unpack("III")
        entries = []
        (count,) = r.unpack("I")
        nbits = num_angles * bins_per_angle(image_side)
        nbytes = (nbits + 7) // 8
        for _ in range(count):
            eid = r.text()
            code = parse_code(r.text())
            bits = np.unpackbits(np.frombuffer(r.take(nbytes), dtype=np.uint8))[:nbits]
            (has_ref,) = r.unpack("B")
            ref = r.text() if has_ref else None
            entries.append(IndexEntry(eid, Barcode(bits, encoder, num_angles, image_side, window), code, ref))

        lsh_parts = None
        if flags & _FLAG_LSH:
            num_tables, key_size, seed = r.unpack("IIQ")
            cfg = LshConfig(num_tables, key_size, seed)
            positions = []
            stored = []
            key_bytes = (key_size + 7) // 8
            for _ in range(num_tables):
                positions.append(np.frombuffer(r.take(4 * key_size), dtype="<u4").astype(np.int64))
                (nb,) = r.unpack("I")
                table = {}
                for _ in range(nb):
                    key = r.take(key_bytes)
                    (n,) = r.unpack("I")
                    table[key] = np.frombuffer(r.take(4 * n), dtype="<u4").astype(np.int64)
                stored.append(table)
            lsh_parts = (cfg, np.stack(positions), stored)
        bt = BranchTable.from_text(r.text()) if flags & _FLAG_BRANCHES else None
    except (ValueError, struct.error) as exc:
        if isinstance(exc, (CorruptIndexFile, FormatVersionMismatch)):
            raise
        raise CorruptIndexFile(f"malformed index file: {exc}") from None
    if r.pos != len(data):
        raise CorruptIndexFile(f"{len(data) - r.pos} trailing bytes after index data")

    if lsh_parts is None:
        return BarcodeIndex(entries, bt)
    cfg, positions, stored = lsh_parts
    try:
        index = LshIndex(entries, cfg, bt, positions=positions)
    except InvalidLshConfig as exc:
        raise CorruptIndexFile(str(exc)) from None
    if len(index.buckets) != len(stored) or any(
        a.keys() != b.keys() or any(not np.array_equal(a[k], b[k]) for k in a)
        for a, b in zip(index.buckets, stored)
    ):
        raise CorruptIndexFile("stored LSH buckets do not match the stored entries")
    return index


def save_index(index: BarcodeIndex, path) -> None:
    with open(path, "wb") as fh:
        fh.write(index_to_bytes(index))


def load_index(path) -> BarcodeIndex:
    with open(path, "rb") as fh:
        return index_from_bytes(fh.read())
