"""Shared helpers for the test suite: tiny configs and shape factories."""

from __future__ import annotations

import numpy as np

from cmx.config import Config

#: Small tables keep per-test model setup fast; the arithmetic under
#: test is identical at every size.
SMALL = Config(table_log2=12, seen_log2=9)
MEDIUM = Config(table_log2=14, seen_log2=10)

CANVAS = 64


def disk_image(r: int, r0: int = 32, c0: int = 32, side: int = CANVAS):
    yy, xx = np.mgrid[0:side, 0:side]
    return (((yy - r0) ** 2 + (xx - c0) ** 2) <= r * r).astype(np.uint8) * 255


def square_image(s: int, r0: int = 32, c0: int = 32, side: int = CANVAS):
    img = np.zeros((side, side), np.uint8)
    img[max(0, r0 - s) : r0 + s, max(0, c0 - s) : c0 + s] = 255
    return img


def cross_image(
    arm: int, wid: int, r0: int = 32, c0: int = 32, side: int = CANVAS
):
    img = np.zeros((side, side), np.uint8)
    img[max(0, r0 - wid) : r0 + wid, max(0, c0 - arm) : c0 + arm] = 255
    img[max(0, r0 - arm) : r0 + arm, max(0, c0 - wid) : c0 + wid] = 255
    return img


def random_shape(kind: str, rng: np.random.Generator) -> np.ndarray:
    """One random instance of ``disk``/``square``/``cross``."""
    r0 = int(rng.integers(26, 39))
    c0 = int(rng.integers(26, 39))
    if kind == "disk":
        return disk_image(int(rng.integers(9, 22)), r0, c0)
    if kind == "square":
        return square_image(int(rng.integers(8, 19)), r0, c0)
    if kind == "cross":
        return cross_image(
            int(rng.integers(12, 24)), int(rng.integers(3, 7)), r0, c0
        )
    raise ValueError(kind)
