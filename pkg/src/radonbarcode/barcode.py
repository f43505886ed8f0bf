"""Binarization of projection sets into Radon barcodes.

Two encoders are provided.  ``encode_threshold`` marks every bin whose value
reaches the median of that angle's non-zero values.  ``encode_minmax``
smooths each projection, locates its alternating minima and maxima, and
labels bins on rising stretches 0 and on falling stretches 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import IncomparableBarcodes, InvalidWindow, MalformedBarcodeText
from .radon import ProjectionSet, bins_per_angle

DEFAULT_WINDOW = 5
TEXT_MAGIC = "RBC1"


class Encoder(str, enum.Enum):
    THRESHOLD = "threshold"
    MINMAX = "minmax"

    def __str__(self):
        return self.value


class Extremum(str, enum.Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True, eq=False)
class Barcode:
    """Concatenated per-angle bit rows plus the settings that produced them."""

    bits: np.ndarray
    encoder: Encoder
    num_angles: int
    image_side: int
    smoothing_window: int = 0

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8, copy=True).ravel()
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0 or 1")
        expected = self.num_angles * bins_per_angle(self.image_side)
        if bits.size != expected:
            raise ValueError(f"expected {expected} bits, got {bits.size}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "encoder", Encoder(self.encoder))

    @property
    def bins_per_angle(self) -> int:
        return bins_per_angle(self.image_side)

    @property
    def rows(self) -> np.ndarray:
        return self.bits.reshape(self.num_angles, self.bins_per_angle)

    @property
    def config(self) -> tuple:
        """The metadata that must agree for two barcodes to be compared."""
        return (self.encoder, self.num_angles, self.image_side, self.smoothing_window)

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return self.config == other.config and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.config, self.bits.tobytes()))

    def packed(self) -> bytes:
        return np.packbits(self.bits).tobytes()


def check_comparable(a: Barcode, b: Barcode) -> None:
    if a.config != b.config:
        raise IncomparableBarcodes(f"barcode settings differ: {a.config} vs {b.config}")


def _nonzero_median(row: np.ndarray) -> float | None:
    positive = row[row > 0]
    if positive.size == 0:
        return None
    return float(np.median(positive))


def threshold_row(row) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    t = _nonzero_median(row)
    if t is None:
        return np.zeros(row.size, dtype=np.uint8)
    return (row >= t).astype(np.uint8)


def encode_threshold(ps: ProjectionSet) -> Barcode:
    bits = np.concatenate([threshold_row(p) for p in ps.values])
    return Barcode(bits, Encoder.THRESHOLD, ps.num_angles, ps.image_side, 0)


def smooth(p, window: int) -> np.ndarray:
    """Centred moving average, with the window truncated at both ends.

    Windows whose values are all equal yield that value exactly, so flat
    stretches stay flat instead of picking up rounding ripple.
    """
    p = np.asarray(p, dtype=np.float64)
    n = p.size
    if window < 1 or window % 2 == 0 or window > n:
        raise InvalidWindow(f"window must be odd and in [1, {n}], got {window}")
    if window == 1:
        return p.copy()
    half = window // 2
    padded = np.concatenate([np.zeros(half), p, np.zeros(half)])
    acc = np.zeros(n)
    for k in range(window):
        acc += padded[k : k + n]
    idx = np.arange(n)
    counts = np.minimum(idx + half, n - 1) - np.maximum(idx - half, 0) + 1
    out = acc / counts

    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    # a window is flat iff no value changes inside it
    changes = np.concatenate([[0], np.cumsum(p[1:] != p[:-1])])
    flat = changes[hi] == changes[lo]
    out[flat] = p[idx[flat]]
    return out


def find_extrema(p) -> list[tuple[int, Extremum]]:
    """Alternating minima and maxima of ``p``, endpoints included.

    Runs of equal values count as one point at the run's first index.  A
    constant input gives a single minimum at index 0.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0:
        raise ValueError("find_extrema needs a non-empty vector")
    starts = np.concatenate([[0], np.flatnonzero(p[1:] != p[:-1]) + 1])
    v = p[starts]
    m = v.size
    if m == 1:
        return [(0, Extremum.MIN)]

    out = [(0, Extremum.MIN if v[1] > v[0] else Extremum.MAX)]
    for k in range(1, m - 1):
        if v[k] > v[k - 1] and v[k] > v[k + 1]:
            out.append((int(starts[k]), Extremum.MAX))
        elif v[k] < v[k - 1] and v[k] < v[k + 1]:
            out.append((int(starts[k]), Extremum.MIN))
    out.append((int(starts[-1]), Extremum.MAX if v[-1] > v[-2] else Extremum.MIN))
    return out


def minmax_row(smoothed) -> np.ndarray:
    """Bits for one smoothed projection: 0 on rising spans, 1 on falling spans.

    The span ``[e_j, e_j+1)`` between consecutive extrema is 0 when it runs
    from a minimum to a maximum and 1 otherwise.  Bins from the last extremum
    onward continue the final span's label, so monotone rows come out uniform.
    """
    smoothed = np.asarray(smoothed)
    extrema = find_extrema(smoothed)
    bits = np.zeros(smoothed.size, dtype=np.uint8)
    if len(extrema) == 1:
        return bits
    for (start, kind), (stop, _) in zip(extrema, extrema[1:]):
        bits[start:stop] = 0 if kind is Extremum.MIN else 1
    last_index, last_kind = extrema[-1]
    bits[last_index:] = 1 if last_kind is Extremum.MIN else 0
    return bits


def encode_minmax(ps: ProjectionSet, window: int = DEFAULT_WINDOW) -> Barcode:
    bits = np.concatenate([minmax_row(smooth(p, window)) for p in ps.values])
    return Barcode(bits, Encoder.MINMAX, ps.num_angles, ps.image_side, window)


def encode(ps: ProjectionSet, encoder="minmax", window: int = DEFAULT_WINDOW) -> Barcode:
    if Encoder(encoder) is Encoder.THRESHOLD:
        return encode_threshold(ps)
    return encode_minmax(ps, window)


def hamming(a: Barcode, b: Barcode) -> int:
    check_comparable(a, b)
    return int(np.count_nonzero(a.bits != b.bits))


def barcode_to_string(b: Barcode) -> str:
    header = f"{TEXT_MAGIC};{b.encoder.value};{b.num_angles};{b.image_side};{b.smoothing_window}"
    rows = ["".join("1" if bit else "0" for bit in row) for row in b.rows]
    return "\n".join([header] + rows) + "\n"


def parse_barcode(text: str) -> Barcode:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines:
        raise MalformedBarcodeText("empty barcode text")
    fields = lines[0].split(";")
    if len(fields) != 5 or fields[0] != TEXT_MAGIC:
        raise MalformedBarcodeText(f"bad header line {lines[0]!r}")
    try:
        encoder = Encoder(fields[1])
        num_angles, image_side, window = (int(f) for f in fields[2:])
    except ValueError as exc:
        raise MalformedBarcodeText(f"bad header field: {exc}") from None
    if num_angles < 1 or image_side < 2 or window < 0:
        raise MalformedBarcodeText(f"bad header values in {lines[0]!r}")
    if (encoder is Encoder.THRESHOLD) != (window == 0):
        raise MalformedBarcodeText("window must be 0 for threshold barcodes and positive for minmax")

    rows = lines[1:]
    if len(rows) != num_angles:
        raise MalformedBarcodeText(f"expected {num_angles} rows, found {len(rows)}")
    width = bins_per_angle(image_side)
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise MalformedBarcodeText(f"row {i} has {len(row)} bits, expected {width}")
        if set(row) - {"0", "1"}:
            raise MalformedBarcodeText(f"row {i} contains characters other than 0/1")
    bits = np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8) - ord("0")
    return Barcode(bits, encoder, num_angles, image_side, window)


def barcode_to_pbm(b: Barcode) -> str:
    """Plain (P1) PBM bitmap with one image row per angle; 1 renders black."""
    body = "\n".join(" ".join(str(int(v)) for v in row) for row in b.rows)
    return f"P1\n{b.bins_per_angle} {b.num_angles}\n{body}\n"
