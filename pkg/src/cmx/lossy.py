"""Lossy image codec: a learned patch dictionary plus entropy coding.

Images are tiled into non-overlapping 6×6 patches; a filter bank of up
to 256 representative patches is learned once by k-means over a
training set.  Encoding replaces each patch with the index of its
nearest filter (one byte per patch, raster order) and compresses the
index stream with the adaptive engine.  Decoding pastes filters back
and crops edge patches to the image bounds, so the only loss is each
patch's quantization onto the bank.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import engine
from .config import Config
from .errors import (
    BadMagicError,
    ConfigMismatchError,
    CorruptArchiveError,
    InvalidInputError,
    TruncatedArchiveError,
)

__all__ = [
    "FilterBank",
    "extract_patches",
    "learn_filters",
    "lossy_decode",
    "lossy_encode",
]

BANK_MAGIC = b"CMXF"
IMAGE_MAGIC = b"CMXI"
DEFAULT_PATCH = 6

# The index stream is coded under a fixed small model configuration so
# that banks and images stay decodable regardless of engine defaults.
_INDEX_CONFIG = Config(table_log2=16, seen_log2=12)


@dataclass(frozen=True)
class FilterBank:
    """``k`` reference patches of ``patch_size``² pixels × channels."""

    filters: np.ndarray  # (k, patch_size**2 * channels) uint8
    patch_size: int = DEFAULT_PATCH
    channels: int = 1

    def __post_init__(self) -> None:
        f = np.asarray(self.filters)
        if f.ndim != 2 or f.dtype != np.uint8:
            raise InvalidInputError("filters must be a 2-d uint8 array")
        if not 1 <= f.shape[0] <= 256:
            raise InvalidInputError("filter count must be in 1..256")
        if self.channels not in (1, 3):
            raise InvalidInputError("channels must be 1 or 3")
        if self.patch_size < 1:
            raise InvalidInputError("patch size must be positive")
        if f.shape[1] != self.patch_size ** 2 * self.channels:
            raise InvalidInputError(
                f"filters of {f.shape[1]} values do not fit "
                f"{self.patch_size}x{self.patch_size}x{self.channels} patches"
            )
        if len(np.unique(f, axis=0)) != f.shape[0]:
            raise InvalidInputError("filters must be pairwise distinct")

    @property
    def k(self) -> int:
        return int(self.filters.shape[0])

    def digest(self) -> bytes:
        h = hashlib.sha256()
        h.update(struct.pack("<HBB", self.k, self.patch_size, self.channels))
        h.update(self.filters.tobytes())
        return h.digest()[:8]

    def to_bytes(self) -> bytes:
        return (
            BANK_MAGIC
            + struct.pack("<HBB", self.k, self.patch_size, self.channels)
            + self.filters.tobytes()
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "FilterBank":
        blob = bytes(blob)
        if len(blob) < 8:
            raise TruncatedArchiveError("bank file shorter than its header")
        if blob[:4] != BANK_MAGIC:
            raise BadMagicError(f"not a filter bank (magic {blob[:4]!r})")
        k, patch_size, channels = struct.unpack_from("<HBB", blob, 4)
        need = k * patch_size * patch_size * channels
        raw = blob[8:]
        if len(raw) != need:
            raise CorruptArchiveError(
                f"bank carries {len(raw)} filter bytes, expected {need}"
            )
        filters = np.frombuffer(raw, dtype=np.uint8).reshape(k, -1).copy()
        return cls(filters=filters, patch_size=patch_size, channels=channels)


def _as_image(image: np.ndarray, channels: int | None = None) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise InvalidInputError("expected (H, W) or (H, W, 1|3) image")
    if channels is not None and img.shape[2] != channels:
        raise InvalidInputError(
            f"image has {img.shape[2]} channel(s), bank expects {channels}"
        )
    return img.astype(np.uint8)


def extract_patches(
    image: np.ndarray, patch_size: int = DEFAULT_PATCH
) -> np.ndarray:
    """All complete ``patch_size``² tiles of the image, flattened.

    Only full tiles are returned — this is the training-set view, where
    partial edge tiles would just add replicated-border noise.
    """
    img = _as_image(image)
    h, w, ch = img.shape
    ph, pw = h // patch_size, w // patch_size
    if ph == 0 or pw == 0:
        raise InvalidInputError("image smaller than one patch")
    core = img[: ph * patch_size, : pw * patch_size]
    tiles = core.reshape(ph, patch_size, pw, patch_size, ch)
    tiles = tiles.transpose(0, 2, 1, 3, 4)
    return tiles.reshape(ph * pw, patch_size * patch_size * ch)


def _pad_to_grid(img: np.ndarray, patch: int) -> np.ndarray:
    """Extend to whole tiles by replicating the last row/column."""
    h, w, _ = img.shape
    gh = -(-h // patch) * patch
    gw = -(-w // patch) * patch
    return np.pad(img, ((0, gh - h), (0, gw - w), (0, 0)), mode="edge")


def _nearest(patches: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """Index of the closest filter per patch (ties → lowest index)."""
    p = patches.astype(np.float64)
    f = filters.astype(np.float64)
    # squared Euclidean via the expansion; exact argmin ties still go to
    # the lowest index because np.argmin keeps the first minimum
    d = (
        (p * p).sum(axis=1)[:, None]
        - 2.0 * (p @ f.T)
        + (f * f).sum(axis=1)[None, :]
    )
    return np.argmin(d, axis=1)


def learn_filters(
    patches: np.ndarray,
    k: int = 256,
    max_iter: int = 50,
    seed: int = 0,
    patch_size: int = DEFAULT_PATCH,
    channels: int = 1,
    trace: list | None = None,
) -> FilterBank:
    """K-means filter bank under a fixed seed.

    Careful-seeding initialization, then standard reassignment/mean
    iterations until assignments stabilize or ``max_iter`` passes;
    emptied clusters restart from the point furthest from its centroid.
    Centroids are rounded to bytes at the end; duplicates after
    rounding are replaced by the most expensive remaining patches.

    When ``trace`` is a list, the total squared quantization error is
    appended once for the initial assignment and once per iteration (a
    non-increasing sequence until the final byte rounding).
    """
    pts = np.asarray(patches, dtype=np.float64)
    if pts.ndim != 2:
        raise InvalidInputError("patches must be a 2-d array")
    n, dim = pts.shape
    if dim != patch_size * patch_size * channels:
        raise InvalidInputError(
            f"patch vectors of {dim} values do not fit "
            f"{patch_size}x{patch_size}x{channels}"
        )
    if not 1 <= k <= 256:
        raise InvalidInputError("k must be in 1..256")
    if n < k:
        raise InvalidInputError(f"need at least k={k} patches, got {n}")
    rng = np.random.default_rng(seed)

    # careful seeding: first center uniform, then proportional to
    # squared distance from the chosen set
    centers = np.empty((k, dim), dtype=np.float64)
    centers[0] = pts[int(rng.integers(n))]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            centers[j:] = pts[rng.choice(n, size=k - j, replace=True)]
            break
        centers[j] = pts[int(rng.choice(n, p=d2 / total))]
        d2 = np.minimum(d2, ((pts - centers[j]) ** 2).sum(axis=1))

    assign = _nearest(pts, centers)
    if trace is not None:
        trace.append(float(((pts - centers[assign]) ** 2).sum()))
    for _ in range(max_iter):
        for j in range(k):
            sel = assign == j
            if sel.any():
                centers[j] = pts[sel].mean(axis=0)
            else:
                far = int(np.argmax(((pts - centers[assign]) ** 2).sum(axis=1)))
                centers[j] = pts[far]
        new_assign = _nearest(pts, centers)
        if trace is not None:
            trace.append(float(((pts - centers[new_assign]) ** 2).sum()))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign

    quant = np.clip(np.floor(centers + 0.5), 0, 255).astype(np.uint8)

    # de-duplicate after rounding: replace copies with the patches the
    # current bank represents worst
    cost = ((pts - quant[_nearest(pts, quant)].astype(np.float64)) ** 2).sum(
        axis=1
    )
    order = np.argsort(-cost)
    cursor = 0
    seen: set[bytes] = set()
    for j in range(k):
        key = quant[j].tobytes()
        if key not in seen:
            seen.add(key)
            continue
        while cursor < n:
            cand = np.clip(np.floor(pts[order[cursor]] + 0.5), 0, 255).astype(
                np.uint8
            )
            cursor += 1
            if cand.tobytes() not in seen:
                quant[j] = cand
                seen.add(cand.tobytes())
                break
        else:
            raise InvalidInputError(
                f"cannot build {k} distinct filters from these patches"
            )
    return FilterBank(
        filters=quant, patch_size=patch_size, channels=channels
    )


def lossy_encode(
    image: np.ndarray, bank: FilterBank
) -> bytes:
    """Encode an image as entropy-coded nearest-filter indices."""
    img = _as_image(image, bank.channels)
    h, w, ch = img.shape
    if h >= 1 << 32 or w >= 1 << 32:
        raise InvalidInputError("image dimensions exceed the container")
    padded = _pad_to_grid(img, bank.patch_size)
    patches = extract_patches(padded, bank.patch_size)
    idx = _nearest(patches, bank.filters).astype(np.uint8)
    coded = engine.compress(idx.tobytes(), _INDEX_CONFIG)
    return (
        IMAGE_MAGIC
        + struct.pack("<IIB", w, h, ch)
        + bank.digest()
        + coded
    )


def lossy_decode(blob: bytes, bank: FilterBank) -> np.ndarray:
    """Rebuild the quantized image; exact inverse of the encoder's loss."""
    blob = bytes(blob)
    if len(blob) < 21:
        raise TruncatedArchiveError("image container shorter than its header")
    if blob[:4] != IMAGE_MAGIC:
        raise BadMagicError(f"not a coded image (magic {blob[:4]!r})")
    w, h, ch = struct.unpack_from("<IIB", blob, 4)
    digest = blob[13:21]
    if digest != bank.digest():
        raise ConfigMismatchError(
            "image was coded against a different filter bank"
        )
    if ch != bank.channels:
        raise CorruptArchiveError("channel count disagrees with the bank")
    ps = bank.patch_size
    gh, gw = -(-h // ps), -(-w // ps)
    idx = np.frombuffer(
        engine.decompress(blob[21:], _INDEX_CONFIG), dtype=np.uint8
    )
    if len(idx) != gh * gw:
        raise CorruptArchiveError(
            f"index stream holds {len(idx)} patches, expected {gh * gw}"
        )
    if int(idx.max(initial=0)) >= bank.k:
        raise CorruptArchiveError("filter index out of bank range")
    tiles = bank.filters[idx].reshape(gh, gw, ps, ps, ch)
    full = tiles.transpose(0, 2, 1, 3, 4).reshape(gh * ps, gw * ps, ch)
    out = full[:h, :w]
    return out[:, :, 0] if ch == 1 else out
