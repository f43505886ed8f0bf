"""Discrete parallel-beam Radon projections.

Each pixel's intensity is splatted onto the two ρ bins nearest to the signed
distance ``ρ = x cos θ + y sin θ`` of its centre, with linear weights.  The
weights of one pixel sum to one, so every projection carries exactly the
image mass.

Coordinates: the origin sits on the centre of pixel ``(n // 2, n // 2)``,
``x`` grows with the column index and ``y`` with the row index (downward).
For odd ``n`` that is the geometric midpoint; for even ``n`` it is the pixel
just below/right of it, which keeps the θ = 0° and θ = 90° projections on
integer bin positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import IndexOutOfRange, InvalidAngleCount, NonSquareImage
from .imaging import as_gray_image

# positions this close to an integer bin are snapped onto it
_SNAP = 1e-9


def bins_per_angle(image_side: int) -> int:
    """Number of ρ bins used for an ``image_side`` square image (odd, symmetric about 0)."""
    return 2 * math.ceil(image_side / math.sqrt(2)) + 1


def projection_angles(num_angles: int) -> np.ndarray:
    """Equi-spaced angles ``k * 180 / num_angles`` in degrees."""
    if num_angles < 1:
        raise InvalidAngleCount(f"num_angles must be >= 1, got {num_angles}")
    return np.arange(num_angles) * (180.0 / num_angles)


def _cos_sin(deg: float) -> tuple[float, float]:
    # exact values on the axes; math.cos(pi/2) is 6e-17, not 0
    q, r = divmod(deg, 90.0)
    if r == 0.0:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(q) % 4]
    rad = math.radians(deg)
    return math.cos(rad), math.sin(rad)


@dataclass(frozen=True, eq=False)
class ProjectionSet:
    """Projections of one image: ``values[k]`` is the ρ-vector for ``angles[k]``."""

    angles: np.ndarray
    values: np.ndarray
    image_side: int

    @property
    def num_angles(self) -> int:
        return self.values.shape[0]

    @property
    def bins_per_angle(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ProjectionSet):
            return NotImplemented
        return (
            self.image_side == other.image_side
            and np.array_equal(self.angles, other.angles)
            and np.array_equal(self.values, other.values)
        )

    def __iter__(self):
        return iter(self.values)

    def to_csv(self) -> str:
        """One line per angle: the angle in degrees followed by its bin values."""
        lines = []
        for theta, row in zip(self.angles, self.values):
            lines.append(",".join([repr(float(theta))] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"


def project(img, num_angles: int) -> ProjectionSet:
    """Project a square image at ``num_angles`` equi-spaced angles in [0°, 180°)."""
    img = as_gray_image(img)
    if img.height != img.width:
        raise NonSquareImage(f"expected a square image, got {img.height}x{img.width}")
    angles = projection_angles(num_angles)
    n = img.height
    nbins = bins_per_angle(n)
    centre = nbins // 2

    rows, cols = np.indices((n, n))
    x = (cols - n // 2).ravel().astype(np.float64)
    y = (rows - n // 2).ravel().astype(np.float64)
    f = img.pixels.ravel()

    values = np.empty((num_angles, nbins), dtype=np.float64)
    for k, theta in enumerate(angles):
        c, s = _cos_sin(float(theta))
        pos = x * c + y * s + centre
        nearest = np.rint(pos)
        pos = np.where(np.abs(pos - nearest) < _SNAP, nearest, pos)
        lo = np.floor(pos).astype(np.intp)
        w = pos - lo
        hi = np.minimum(lo + 1, nbins - 1)
        values[k] = np.bincount(lo, weights=f * (1.0 - w), minlength=nbins)
        values[k] += np.bincount(hi, weights=f * w, minlength=nbins)
    angles.setflags(write=False)
    values.setflags(write=False)
    return ProjectionSet(angles=angles, values=values, image_side=n)


def projection_at(ps: ProjectionSet, angle_index: int) -> np.ndarray:
    if not 0 <= angle_index < ps.num_angles:
        raise IndexOutOfRange(f"angle index {angle_index} outside [0, {ps.num_angles})")
    return ps.values[angle_index]
