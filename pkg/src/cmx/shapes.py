"""Shape-to-series conversion and pixel sequencers.

A binary shape becomes a one-dimensional byte series by casting rays
from its centroid: one ray per measurement angle, each contributing
``round(100 * distance / width)`` where distance is to the FURTHEST
boundary crossing along the ray (so non-convex shapes measure their
outer silhouette).  Similar shapes then yield similar byte strings,
which a compressor can exploit for classification.

Orientation conventions (fixed here, since several are defensible):
angle 0 points along +x (increasing column), angles advance
counter-clockwise with +y up (decreasing row), and the Hilbert scan
uses the recursion whose 2×2 order is (0,0), (0,1), (1,1), (1,0) in
(row, column) coordinates.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "centroid",
    "foreground",
    "hilbert_scan",
    "raster_scan",
    "shape_to_series",
]

_STEP = 0.25  # ray sampling step in pixels


def foreground(image: np.ndarray) -> np.ndarray:
    """Boolean foreground mask: ≥ 128 for integer images, truth otherwise."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise InvalidInputError("expected a 2-d (grayscale or boolean) image")
    if img.dtype == bool:
        return img
    return img >= 128


def centroid(image: np.ndarray) -> tuple[float, float]:
    """(row, col) center of mass of the foreground pixels."""
    mask = foreground(image)
    rows, cols = np.nonzero(mask)
    if len(rows) == 0:
        raise InvalidInputError("image has no foreground pixels")
    return float(rows.mean()), float(cols.mean())


def _bilinear(field: np.ndarray, r: float, c: float) -> float:
    """Sample the 0/1 foreground field at a fractional position.

    Positions outside the image read as background (0).
    """
    h, w = field.shape
    if r < 0 or c < 0 or r > h - 1 or c > w - 1:
        return 0.0
    r0, c0 = int(r), int(c)
    r1, c1 = min(r0 + 1, h - 1), min(c0 + 1, w - 1)
    fr, fc = r - r0, c - c0
    top = field[r0, c0] * (1 - fc) + field[r0, c1] * fc
    bot = field[r1, c0] * (1 - fc) + field[r1, c1] * fc
    return float(top * (1 - fr) + bot * fr)


def _ray_distance(field: np.ndarray, cr: float, cc: float, theta: float) -> float:
    """Distance from (cr, cc) to the furthest boundary crossing at angle θ.

    Walks outward in fixed steps over the interpolated foreground field
    and keeps the last inside→outside crossing of the 0.5 level,
    refining each crossing linearly between samples.  0 when the ray
    never touches the shape.
    """
    h, w = field.shape
    dc = math.cos(theta)
    dr = -math.sin(theta)  # +y up means decreasing row
    t_max = math.hypot(h, w) + 1.0
    prev_v = _bilinear(field, cr, cc)
    prev_t = 0.0
    best = 0.0 if prev_v < 0.5 else None  # None: still inside at start
    t = _STEP
    while t <= t_max:
        v = _bilinear(field, cr + t * dr, cc + t * dc)
        if prev_v >= 0.5 > v:
            # crossing between prev_t and t; linear refinement
            span = prev_v - v
            frac = (prev_v - 0.5) / span if span > 0 else 0.0
            best = prev_t + frac * (t - prev_t)
        prev_v, prev_t = v, t
        t += _STEP
    if best is None:
        # inside throughout (degenerate all-foreground image)
        best = t_max
    return best


def shape_to_series(image: np.ndarray, n_measurements: int = 40) -> bytes:
    """Radial silhouette signature of a binary shape.

    One byte per measurement angle: ``round(100 * distance / width)``,
    clamped to 0..255, with ``width`` the image width in pixels.
    """
    if n_measurements < 1:
        raise InvalidInputError("need at least one measurement")
    mask = foreground(image)
    cr, cc = centroid(mask)
    field = mask.astype(np.float64)
    width = mask.shape[1]
    out = bytearray()
    for k in range(n_measurements):
        theta = 2.0 * math.pi * k / n_measurements
        d = _ray_distance(field, cr, cc, theta)
        v = int(math.floor(100.0 * d / width + 0.5))
        out.append(max(0, min(255, v)))
    return bytes(out)


def raster_scan(image: np.ndarray) -> bytes:
    """All pixels, rows top to bottom, left to right within a row."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise InvalidInputError("expected a 2-d image")
    return img.astype(np.uint8).tobytes()


def _hilbert_point(side: int, d: int) -> tuple[int, int]:
    """(row, col) of step ``d`` on the side×side Hilbert curve."""
    r = c = 0
    t = d
    s = 1
    while s < side:
        rr = 1 & (t // 2)
        rc = 1 & (t ^ rr)
        if rc == 0:
            if rr == 1:
                r = s - 1 - r
                c = s - 1 - c
            r, c = c, r
        r += s * rr
        c += s * rc
        t //= 4
        s *= 2
    return r, c


def hilbert_scan(image: np.ndarray) -> bytes:
    """All pixels in Hilbert-curve order over the padded square.

    The image is conceptually padded to the enclosing power-of-two
    square; padding positions are skipped on emission, so the output is
    a permutation of the raster scan.
    """
    img = np.asarray(image)
    if img.ndim != 2:
        raise InvalidInputError("expected a 2-d image")
    h, w = img.shape
    side = 1
    while side < max(h, w):
        side *= 2
    out = bytearray()
    data = img.astype(np.uint8)
    for d in range(side * side):
        r, c = _hilbert_point(side, d)
        if r < h and c < w:
            out.append(int(data[r, c]))
    return bytes(out)
