"""Manifest files and the synthetic shape dataset.

A manifest is a UTF-8 CSV with header ``id,path,irma_code``.  Relative paths
are resolved against the manifest's directory.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import MalformedCode, RadonBarcodeError
from .irma import IrmaCode, parse_code

MANIFEST_HEADER = ["id", "path", "irma_code"]


class ManifestError(RadonBarcodeError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row


@dataclass(frozen=True)
class ManifestRow:
    id: str
    path: str
    code: IrmaCode


def read_manifest(path) -> list[ManifestRow]:
    """Read a manifest; rows are numbered from 1 after the header in errors."""
    path = Path(path)
    base = path.parent
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != MANIFEST_HEADER:
            raise ManifestError(f"{path}: header must be {','.join(MANIFEST_HEADER)}")
        seen = set()
        for n, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != 3:
                raise ManifestError(f"expected 3 fields, found {len(rec)}", row=n)
            rid, rpath, rcode = (f.strip() for f in rec)
            if not rid:
                raise ManifestError("empty id", row=n)
            if rid in seen:
                raise ManifestError(f"duplicate id {rid!r}", row=n)
            seen.add(rid)
            try:
                code = parse_code(rcode)
            except MalformedCode as exc:
                raise ManifestError(str(exc), row=n) from None
            full = rpath if os.path.isabs(rpath) else str(base / rpath)
            rows.append(ManifestRow(rid, full, code))
    return rows


def write_manifest(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for r in rows:
            w.writerow([r.id, r.path, str(r.code)])


# --- synthetic shapes ------------------------------------------------------

FAMILIES = ("ellipse", "bar", "gradient", "ring")
ORIENTATION_BINS = 4
SCALE_BINS = 2
SYNTH_SIDE = 64


def _shape(family: str, theta: float, scale: float, cx: float, cy: float, rng, n: int) -> np.ndarray:
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    u = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
    v = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
    level = rng.uniform(0.6, 0.9)
    if family == "ellipse":
        a, b = 0.38 * n * scale, 0.18 * n * scale
        return level * ((u / a) ** 2 + (v / b) ** 2 <= 1.0)
    if family == "bar":
        a, b = 0.45 * n * scale, 0.08 * n * scale
        return level * ((np.abs(u) <= a) & (np.abs(v) <= b))
    if family == "gradient":
        ramp = np.clip(0.5 + u / (0.9 * n * scale), 0.0, 1.0)
        return level * ramp
    if family == "ring":
        r = np.hypot(u, 1.6 * v)
        radius = 0.28 * n * scale
        return level * (np.abs(r - radius) <= 0.07 * n)
    raise ValueError(family)


def synth_image(family: int, orient_bin: int, scale_bin: int, rng, n: int = SYNTH_SIDE) -> np.ndarray:
    """One noisy image of the given family, orientation bin and scale bin."""
    width = np.pi / ORIENTATION_BINS
    theta = (orient_bin + rng.uniform(0.1, 0.9)) * width
    scale = (0.7, 1.0)[scale_bin] * rng.uniform(0.92, 1.08)
    cx = (n - 1) / 2 + rng.uniform(-0.06, 0.06) * n
    cy = (n - 1) / 2 + rng.uniform(-0.06, 0.06) * n
    img = _shape(FAMILIES[family], theta, scale, cx, cy, rng, n)
    img = img + 0.08 + rng.normal(0.0, 0.03, size=(n, n))
    return np.clip(img, 0.0, 1.0)


def synth_code(family: int, orient_bin: int, scale_bin: int) -> IrmaCode:
    # nested axes: family -> orientation -> scale
    return IrmaCode((f"1{family}", f"{family}{orient_bin}", f"{orient_bin}{scale_bin}", f"{scale_bin}0"))


def generate_synthetic(out_dir, count: int, seed: int) -> list[ManifestRow]:
    """Write ``count`` PNG images and ``manifest.csv`` into ``out_dir``.

    Classes (family, orientation bin, scale bin) cycle in a fixed order so
    every class is represented once ``count`` exceeds the class count.
    """
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    classes = [
        (f, o, s) for f in range(len(FAMILIES)) for o in range(ORIENTATION_BINS) for s in range(SCALE_BINS)
    ]
    rows = []
    width = len(str(count - 1))
    for i in range(count):
        family, orient, scale = classes[i % len(classes)]
        pixels = synth_image(family, orient, scale, rng)
        rid = f"img{i:0{width}d}"
        rel = f"images/{rid}.png"
        Image.fromarray(np.round(pixels * 255).astype(np.uint8)).save(out / rel)
        rows.append(ManifestRow(rid, rel, synth_code(family, orient, scale)))
    write_manifest(out / "manifest.csv", rows)
    return rows
