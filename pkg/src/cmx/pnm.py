"""Minimal netpbm image I/O: PGM (P2/P5) and PPM (P6), 8-bit.

Grayscale images load as ``(H, W)`` uint8 arrays, color as
``(H, W, 3)``.  Only maxval ≤ 255 is supported; header comments are
honored.  This is deliberately the smallest format family that covers
the shape-classification and lossy-codec inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

__all__ = ["luma", "read_pnm", "read_pnm_bytes", "write_pgm", "write_ppm"]


def _tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i]
        if c in b"#":
            while i < n and data[i] not in b"\r\n":
                i += 1
        elif bytes([c]).isspace():
            i += 1
        else:
            j = i
            while j < n and not bytes([data[j]]).isspace():
                j += 1
            yield i, data[i:j]
            i = j


def read_pnm_bytes(data: bytes) -> np.ndarray:
    """Decode a P2/P5/P6 image from bytes."""
    data = bytes(data)
    toks = _tokens(data)
    try:
        _, magic = next(toks)
        if magic not in (b"P2", b"P5", b"P6"):
            raise InvalidInputError(f"unsupported netpbm magic {magic!r}")
        _, w = next(toks)
        _, h = next(toks)
        pos, maxval = next(toks)
        w, h, maxval = int(w), int(h), int(maxval)
    except (StopIteration, ValueError) as exc:
        raise InvalidInputError("malformed netpbm header") from exc
    if w <= 0 or h <= 0:
        raise InvalidInputError("image dimensions must be positive")
    if not 0 < maxval <= 255:
        raise InvalidInputError("only 8-bit netpbm images are supported")

    if magic == b"P2":
        vals = []
        for _, tok in toks:
            try:
                vals.append(int(tok))
            except ValueError as exc:
                raise InvalidInputError(f"bad sample {tok!r}") from exc
        if len(vals) != w * h:
            raise InvalidInputError(
                f"expected {w * h} samples, found {len(vals)}"
            )
        arr = np.asarray(vals, dtype=np.int64)
        if arr.min() < 0 or arr.max() > maxval:
            raise InvalidInputError("sample out of range")
        return arr.reshape(h, w).astype(np.uint8)

    # binary formats: exactly one whitespace byte after maxval
    start = pos + len(str(maxval)) + 1
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    raw = data[start: start + need]
    if len(raw) != need:
        raise InvalidInputError(
            f"expected {need} raster bytes, found {len(raw)}"
        )
    arr = np.frombuffer(raw, dtype=np.uint8).copy()
    if channels == 1:
        return arr.reshape(h, w)
    return arr.reshape(h, w, 3)


def read_pnm(path) -> np.ndarray:
    """Load a PGM/PPM file as a uint8 array."""
    with open(path, "rb") as fh:
        return read_pnm_bytes(fh.read())


def _check_image(img: np.ndarray, channels: int) -> np.ndarray:
    img = np.asarray(img)
    want = 2 if channels == 1 else 3
    if img.ndim != want or (channels == 3 and img.shape[2] != 3):
        raise InvalidInputError(
            f"expected a {'grayscale' if channels == 1 else 'color'} image"
        )
    return img.astype(np.uint8)


def write_pgm(path, img: np.ndarray) -> None:
    """Write a grayscale array as binary PGM (P5)."""
    img = _check_image(img, 1)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def write_ppm(path, img: np.ndarray) -> None:
    """Write an (H, W, 3) array as binary PPM (P6)."""
    img = _check_image(img, 3)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def luma(img: np.ndarray) -> np.ndarray:
    """Integer BT.601 luma of a color image; grayscale passes through."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidInputError("expected (H, W) or (H, W, 3)")
    r = img[..., 0].astype(np.int64)
    g = img[..., 1].astype(np.int64)
    b = img[..., 2].astype(np.int64)
    return ((299 * r + 587 * g + 114 * b) // 1000).astype(np.uint8)
