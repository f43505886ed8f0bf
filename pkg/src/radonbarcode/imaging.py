"""Image loading and size normalization.

Images are held as real intensities in ``[0, 1]``.  Loading accepts PNG
(through Pillow) and PGM in both the ASCII (``P2``) and binary (``P5``)
flavours, which are parsed here so the header ``maxval`` drives scaling.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import CorruptImage, InvalidDimensions, UnsupportedFormat

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A 2-D grid of intensities in ``[0, 1]``, stored row-major.

    ``pixels`` has shape ``(height, width)``; row index grows downward.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise InvalidDimensions(f"expected a non-empty 2-D grid, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.shape, self.pixels.tobytes()))


def as_gray_image(img) -> GrayImage:
    if isinstance(img, GrayImage):
        return img
    return GrayImage(np.asarray(img, dtype=np.float64))


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last token.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise CorruptImage("truncated PGM header")
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos + 1


def _parse_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    tokens, offset = _pgm_tokens(data[2:], 3)
    offset += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise CorruptImage(f"bad PGM header: {exc}") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise CorruptImage(f"bad PGM header values {width}x{height} maxval={maxval}")
    count = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[offset : offset + count * dtype.itemsize]
        if len(raw) != count * dtype.itemsize:
            raise CorruptImage("truncated PGM raster")
        values = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    else:
        try:
            values = np.array([int(t) for t in data[offset - 1 :].split()], dtype=np.float64)
        except ValueError:
            raise CorruptImage("non-integer sample in ASCII PGM") from None
        if values.size != count:
            raise CorruptImage(f"expected {count} samples, found {values.size}")
    if values.max(initial=0) > maxval:
        raise CorruptImage("sample exceeds maxval")
    return values.reshape(height, width) / maxval


def _parse_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            arr = np.asarray(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptImage(f"{path}: {exc}") from None

    if mode == "1":
        return arr.astype(np.float64)
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        return arr.astype(np.float64) / 65535.0
    if mode in ("L", "LA", "RGB", "RGBA"):
        arr = arr.astype(np.float64)
        if arr.ndim == 3:
            # alpha is not an intensity channel
            nchan = 1 if mode == "LA" else 3
            arr = arr[..., :nchan].mean(axis=2)
        return arr / 255.0
    raise UnsupportedFormat(f"unsupported PNG mode {mode!r}")


def load_grayscale(path) -> GrayImage:
    """Load a PNG or PGM file as a :class:`GrayImage`.

    Colour images are reduced with an unweighted channel mean and integer
    samples are divided by the format's maximum channel value.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(PNG_SIGNATURE):
        pixels = _parse_png(path)
    elif data[:2] in (b"P2", b"P5"):
        pixels = _parse_pgm(data)
    else:
        raise UnsupportedFormat(f"{path}: not a PNG or P2/P5 PGM file")
    return GrayImage(np.clip(pixels, 0.0, 1.0))


def _axis_weights(n_in: int, n_out: int):
    # half-pixel-centre mapping, clamped at the borders
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def normalize(img, rn: int, cn: int) -> GrayImage:
    """Resample ``img`` to ``rn`` rows by ``cn`` columns with bilinear interpolation.

    Pixel centres are aligned (``src = (dst + 0.5) * scale - 0.5``) and
    samples beyond the border are clamped, so every output value is a convex
    combination of input values.  Same-size input is returned unchanged.
    """
    img = as_gray_image(img)
    if rn < 2 or cn < 2:
        raise InvalidDimensions(f"target size must be at least 2x2, got {rn}x{cn}")
    if img.shape == (rn, cn):
        return img

    px = img.pixels
    r0, r1, fr = _axis_weights(img.height, rn)
    c0, c1, fc = _axis_weights(img.width, cn)
    fr = fr[:, None]
    top = px[r0][:, c0] * (1 - fc) + px[r0][:, c1] * fc
    bottom = px[r1][:, c0] * (1 - fc) + px[r1][:, c1] * fc
    out = top * (1 - fr) + bottom * fr
    lo, hi = px.min(), px.max()
    return GrayImage(np.clip(out, lo, hi))
