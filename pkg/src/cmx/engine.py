"""Compression engine: context models → gated mixer → refinement → coder.

One :class:`Predictor` owns all model state for one stream.  Prediction
for any bit is a deterministic function of the preceding bits and the
configuration, which is what lets an identical predictor on the decode
side reconstruct the exact probability sequence the encoder used.

Two APIs over the same state:

* block ops (:meth:`Predictor.train`, :func:`compress`,
  :func:`decompress`, :meth:`Predictor.cross_entropy_of`) run the
  compiled per-byte loop;
* streaming ops (:meth:`Predictor.predict_bit`,
  :meth:`Predictor.update_bit`, :meth:`Predictor.byte_distribution`)
  expose the same arithmetic one step at a time.

Both paths drive identical kernels in identical order, so mixing them
at byte boundaries cannot change any prediction.

Archive layout (little-endian): magic ``CMX1``, format version (1
byte), flags (1 byte, bit 0 set when the second mixer layer trains by
Kalman filter), 8-byte configuration digest, 8-byte original length,
then the coded payload.  The length field, not a terminator symbol,
delimits the stream.
"""

from __future__ import annotations

import hashlib
import io
import struct

import numpy as np

from . import kernel as K
from .config import Config, parse_config
from .errors import (
    BadMagicError,
    ConfigMismatchError,
    CorruptArchiveError,
    InvalidInputError,
    SnapshotVersionError,
    TruncatedArchiveError,
    VersionMismatchError,
)

__all__ = [
    "ARCHIVE_VERSION",
    "HEADER_LEN",
    "MAGIC",
    "Predictor",
    "Snapshot",
    "compress",
    "cross_entropy",
    "decompress",
    "pack_header",
    "restore",
    "unpack_header",
]

MAGIC = b"CMX1"
ARCHIVE_VERSION = 1
HEADER_LEN = 22
SNAPSHOT_VERSION = 1

_EMPTY_PROBE = np.zeros(0, dtype=np.int64)

# The Kalman constants (q, p0, w0, r) are quoted in the 16-bit
# fixed-point units the reference mixer stores weights in.  This engine
# keeps float weights (one fixed-point unit = 1/65536), so initial
# weights scale by 1/65536 and the variances q and p0 by a single
# empirical power-of-two factor chosen so the filtered layer tracks the
# gradient-descent layer's code length on mixed text.
_EKF_VAR_SCALE = 2.0 ** -8

# State arrays a snapshot must carry; everything else is derived from
# the config or recomputed at the next byte boundary.
_SNAP_ARRAYS = (
    "cnt", "hist", "midx", "seen", "w1", "w2", "P", "apm", "ireg", "freg",
)


class Predictor:
    """Adaptive bit-stream model with byte-level conveniences.

    All state lives in numpy arrays sized by the configuration:
    per-order counter tables, the match index, low-order seen tables,
    both mixer layers (plus the Kalman covariance), and the refinement
    table.  The object is cheap to clone, which is how speculative
    continuations (next-char prediction, per-class scoring) run without
    disturbing the live stream.
    """

    def __init__(self, config: Config | None = None) -> None:
        cfg = config if config is not None else Config()
        self._init_from_config(cfg)

    def _init_from_config(self, cfg: Config) -> None:
        self.config = cfg
        orders = list(cfg.orders) + ([-1] if cfg.sparse else [])
        n_cm = len(orders)
        n_p = n_cm + 1  # one mixer input per context model plus the match
        cells = 1 << cfg.table_log2
        sizes = cfg.set_sizes()

        self.orders = np.asarray(orders, dtype=np.int64)
        self.cnt = np.zeros((n_cm, cells, 2), dtype=np.uint8)
        self.cmbk = np.zeros(n_cm, dtype=np.int64)
        self.hist = np.zeros(1 << 16, dtype=np.uint8)
        self.midx = np.zeros(1 << 16, dtype=np.int64)
        self.seen = np.zeros((7, 1 << cfg.seen_log2), dtype=np.uint8)
        self.nsz = np.asarray(sizes, dtype=np.int64)
        self.noff = np.zeros(7, dtype=np.int64)
        for s in range(1, 7):
            self.noff[s] = self.noff[s - 1] + sizes[s - 1]
        self.w1 = np.full((sum(sizes), n_p), 1.0 / n_p, dtype=np.float64)
        if cfg.second_layer == "ekf":
            w2_init = cfg.ekf_w0 / 65536.0
        else:
            w2_init = 128.0 / 65536.0
        self.w2 = np.full(7, w2_init, dtype=np.float64)
        self.P = np.eye(7, dtype=np.float64) * (cfg.ekf_p0 * _EKF_VAR_SCALE)
        knots = np.arange(33, dtype=np.float64) * 0.5 - 8.0
        self.apm = np.tile(1.0 / (1.0 + np.exp(-knots)), (256, 1))

        self.x = np.zeros(n_p, dtype=np.float64)
        self.pi1 = np.zeros(7, dtype=np.float64)
        self.x2 = np.zeros(7, dtype=np.float64)
        self.sel = np.zeros(7, dtype=np.int64)
        self.pg = np.zeros(7, dtype=np.float64)
        self.kg = np.zeros(7, dtype=np.float64)

        self.ireg = np.zeros(K.NIREG, dtype=np.int64)
        self.freg = np.zeros(K.NFREG, dtype=np.float64)
        self.cfgi = np.zeros(K.NCFGI, dtype=np.int64)
        self.cfgi[K.CI_NP] = n_p
        self.cfgi[K.CI_NCM] = n_cm
        self.cfgi[K.CI_MASK] = (cells >> 8) - 1
        self.cfgi[K.CI_SECOND] = 1 if cfg.second_layer == "ekf" else 0
        self.cfgi[K.CI_APM] = 1 if cfg.apm_enabled else 0
        self.cfgi[K.CI_APMRATE] = cfg.apm_rate
        self.cfgi[K.CI_SEENMASK] = (1 << cfg.seen_log2) - 1
        self.cfgi[K.CI_MMAX] = cfg.match_cap
        self.cfgi[K.CI_BACKCAP] = cfg.match_back
        self.cfgf = np.zeros(K.NCFGF, dtype=np.float64)
        self.cfgf[K.CF_ETA] = cfg.mixer_eta
        self.cfgf[K.CF_Q] = cfg.ekf_q * _EKF_VAR_SCALE
        self.cfgf[K.CF_R] = cfg.ekf_r

        self._tree = 1
        self._bp = 0
        self._begun = False
        self._pending = False

    # -- bookkeeping -------------------------------------------------

    @property
    def bytes_processed(self) -> int:
        return int(self.ireg[K.IR_BYTES])

    @property
    def ce_bits(self) -> float:
        """Total code length in bits accumulated so far."""
        return float(self.freg[K.FR_CE])

    def _ensure_hist(self, extra: int) -> None:
        need = int(self.ireg[K.IR_N]) + extra + 8
        if need > len(self.hist):
            cap = len(self.hist)
            while cap < need:
                cap *= 2
            grown = np.zeros(cap, dtype=np.uint8)
            grown[: len(self.hist)] = self.hist
            self.hist = grown

    def _require_boundary(self, what: str) -> None:
        if self._bp != 0 or self._begun or self._pending:
            raise InvalidInputError(f"{what} requires a byte boundary")

    # -- streaming API -----------------------------------------------

    def predict_bit(self) -> float:
        """P(next bit = 1) given everything seen so far."""
        if self._pending:
            raise InvalidInputError(
                "predict_bit called twice without update_bit"
            )
        if not self._begun:
            self._ensure_hist(1)
            K.begin_byte(
                self.cnt, self.orders, self.cmbk, self.hist, self.seen,
                self.ireg, self.cfgi,
            )
            self._begun = True
        p16 = K.predict_bit(
            self.cnt, self.cmbk, self.w1, self.noff, self.nsz, self.w2,
            self.apm, self.x, self.pi1, self.x2, self.sel,
            self.ireg, self.freg, self.cfgi, self._tree, self._bp,
        )
        self._pending = True
        return float(p16) / 65536.0

    def update_bit(self, bit: int) -> None:
        """Observe the bit just predicted and adapt every stage."""
        if not self._pending:
            raise InvalidInputError("update_bit requires a preceding predict_bit")
        if bit not in (0, 1):
            raise InvalidInputError("bit must be 0 or 1")
        p16 = float(self.ireg[K.IR_P16])
        if bit == 1:
            self.freg[K.FR_CE] -= np.log2(p16 * (1.0 / 65536.0))
        else:
            self.freg[K.FR_CE] -= np.log2((65536.0 - p16) * (1.0 / 65536.0))
        K.update_bit(
            self.cnt, self.cmbk, self.w1, self.noff, self.w2, self.P,
            self.apm, self.x, self.pi1, self.x2, self.sel, self.pg, self.kg,
            self.ireg, self.freg, self.cfgi, self.cfgf,
            self._tree, self._bp, bit,
        )
        self._pending = False
        self._tree = (self._tree << 1) | bit
        self._bp += 1
        if self._bp == 8:
            K.end_byte(
                self.hist, self.midx, self.ireg, self.cfgi, self._tree - 256
            )
            self._tree = 1
            self._bp = 0
            self._begun = False

    def process_byte(self, byte: int) -> None:
        """Feed one byte through the streaming predict/update loop."""
        if not 0 <= byte <= 255:
            raise InvalidInputError("byte must be in 0..255")
        if self._pending:
            raise InvalidInputError("process_byte requires no pending bit")
        if self._bp != 0:
            raise InvalidInputError("process_byte requires a byte boundary")
        for bp in range(8):
            self.predict_bit()
            self.update_bit((byte >> (7 - bp)) & 1)

    def byte_distribution(self) -> np.ndarray:
        """Predicted distribution of the next byte (256 probabilities).

        Reads the model without adapting it; the next byte should still
        be fed through :meth:`process_byte` or the bit loop.
        """
        if self._bp != 0 or self._pending:
            raise InvalidInputError("byte_distribution requires a byte boundary")
        if not self._begun:
            self._ensure_hist(1)
            K.begin_byte(
                self.cnt, self.orders, self.cmbk, self.hist, self.seen,
                self.ireg, self.cfgi,
            )
            self._begun = True
        cum = np.zeros(512, dtype=np.float64)
        K.byte_dist(
            self.cnt, self.cmbk, self.w1, self.noff, self.nsz, self.w2,
            self.apm, self.x, self.pi1, self.x2, self.sel,
            self.ireg, self.freg, self.cfgi, cum,
        )
        return cum[256:].copy()

    # -- block API ----------------------------------------------------

    def _run_block(
        self,
        data: np.ndarray,
        mode: int,
        rc: np.ndarray,
        rcbuf: np.ndarray,
        probe: np.ndarray,
        use_probe: int,
        start: int,
    ) -> int:
        return int(
            K.run_block(
                self.cnt, self.orders, self.cmbk, self.hist, self.midx,
                self.seen, self.w1, self.noff, self.nsz, self.w2, self.P,
                self.apm, self.x, self.pi1, self.x2, self.sel, self.pg,
                self.kg, self.ireg, self.freg, self.cfgi, self.cfgf,
                data, mode, rc, rcbuf, probe, use_probe, start,
            )
        )

    def train(self, data: bytes) -> None:
        """Adapt to ``data`` exactly as compressing it would, sans output."""
        self._require_boundary("train")
        if len(data) == 0:
            return
        arr = np.frombuffer(bytes(data), dtype=np.uint8).copy()
        self._ensure_hist(len(arr))
        rc = np.zeros(K.NRC, dtype=np.int64)
        self._run_block(
            arr, K.MODE_TRAIN, rc, np.zeros(0, dtype=np.uint8),
            _EMPTY_PROBE, 0, 0,
        )

    def cross_entropy_of(self, data: bytes) -> float:
        """Mean code length of ``data`` in bits per byte.

        The model adapts while measuring, exactly as it would while
        compressing, so repeated calls on the same text get cheaper.
        """
        if len(data) == 0:
            raise InvalidInputError("cross entropy of empty input is undefined")
        before = self.ce_bits
        self.train(data)
        return (self.ce_bits - before) / len(data)

    # -- speculation ---------------------------------------------------

    def clone(self) -> "Predictor":
        """Independent deep copy; futures of the two never interact."""
        self._require_boundary("clone")
        twin = object.__new__(Predictor)
        twin.__dict__.update(self.__dict__)
        for name in (
            "cnt", "cmbk", "hist", "midx", "seen", "w1", "w2", "P", "apm",
            "x", "pi1", "x2", "sel", "pg", "kg", "ireg", "freg",
            "cfgi", "cfgf", "noff", "nsz", "orders",
        ):
            setattr(twin, name, getattr(self, name).copy())
        return twin

    def predict_next_chars(self, n: int = 40) -> str:
        """Greedily decode the ``n`` most likely next bytes.

        Works on a scratch copy: repeatedly takes the argmax of the
        next-byte distribution and feeds it back; the live state is
        untouched.  Bytes map to characters 1:1 (latin-1).
        """
        if n < 1:
            raise InvalidInputError("n must be at least 1")
        twin = self.clone()
        out = bytearray()
        for _ in range(n):
            dist = twin.byte_distribution()
            b = int(np.argmax(dist))
            twin.process_byte(b)
            out.append(b)
        return out.decode("latin-1")

    # -- persistence ----------------------------------------------------

    def state_digest(self) -> str:
        """Hex digest of all adaptive state; equal digests ⇒ equal futures."""
        self._require_boundary("state_digest")
        h = hashlib.sha256()
        h.update(self.config.canonical().encode())
        n = int(self.ireg[K.IR_N])
        h.update(self.hist[:n].tobytes())
        for name in ("cnt", "midx", "seen", "w1", "w2", "P", "apm",
                     "ireg", "freg"):
            h.update(getattr(self, name).tobytes())
        return h.hexdigest()

    def snapshot(self) -> "Snapshot":
        """Serializable copy of the full model state."""
        self._require_boundary("snapshot")
        arrays = {}
        for name in _SNAP_ARRAYS:
            a = getattr(self, name)
            if name == "hist":
                a = a[: int(self.ireg[K.IR_N])]
            arrays[name] = a.copy()
        return Snapshot(
            version=SNAPSHOT_VERSION,
            config_text=self.config.canonical(),
            arrays=arrays,
        )


class Snapshot:
    """Frozen predictor state that can travel through bytes.

    Restoring yields a predictor whose entire future prediction stream
    is bit-identical to the original's at the moment of the snapshot.
    """

    def __init__(
        self, version: int, config_text: str, arrays: dict[str, np.ndarray]
    ) -> None:
        self.version = version
        self.config_text = config_text
        self.arrays = arrays

    def to_bytes(self) -> bytes:
        bio = io.BytesIO()
        meta = np.frombuffer(self.config_text.encode(), dtype=np.uint8)
        np.savez(
            bio,
            __version__=np.asarray([self.version], dtype=np.int64),
            __config__=meta,
            **self.arrays,
        )
        return bio.getvalue()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Snapshot":
        try:
            with np.load(io.BytesIO(blob)) as z:
                version = int(z["__version__"][0])
                config_text = z["__config__"].tobytes().decode()
                arrays = {k: z[k] for k in _SNAP_ARRAYS}
        except SnapshotVersionError:
            raise
        except Exception as exc:
            raise CorruptArchiveError(f"unreadable snapshot: {exc}") from exc
        if version != SNAPSHOT_VERSION:
            raise SnapshotVersionError(
                f"snapshot format {version}, expected {SNAPSHOT_VERSION}"
            )
        return cls(version=version, config_text=config_text, arrays=arrays)


def restore(snap: Snapshot) -> Predictor:
    """Rebuild a live predictor from a snapshot."""
    if snap.version != SNAPSHOT_VERSION:
        raise SnapshotVersionError(
            f"snapshot format {snap.version}, expected {SNAPSHOT_VERSION}"
        )
    lines = [ln for ln in snap.config_text.splitlines() if ln.strip()]
    cfg = parse_config(lines)
    p = Predictor(cfg)
    for name in _SNAP_ARRAYS:
        src = snap.arrays[name]
        if name == "hist":
            p._ensure_hist(len(src))
            p.hist[: len(src)] = src
        else:
            dst = getattr(p, name)
            if dst.shape != src.shape:
                raise CorruptArchiveError(
                    f"snapshot array {name!r} has shape {src.shape}, "
                    f"expected {dst.shape}"
                )
            dst[...] = src
    return p


# -- archive I/O --------------------------------------------------------


def pack_header(digest: bytes, flags: int, n: int) -> bytes:
    """Assemble the 22-byte archive header."""
    return (
        MAGIC + struct.pack("<BB", ARCHIVE_VERSION, flags) + digest
        + struct.pack("<Q", n)
    )


def unpack_header(blob: bytes) -> tuple[int, bytes, int, bytes]:
    """Split an archive into (flags, digest, original length, payload).

    Validates the magic and format version only; digest checks belong
    to the caller, which knows what configuration it expects.
    """
    if len(blob) < HEADER_LEN:
        raise TruncatedArchiveError(
            f"archive is {len(blob)} bytes; the header alone is {HEADER_LEN}"
        )
    if blob[:4] != MAGIC:
        raise BadMagicError(f"not an archive (magic {blob[:4]!r})")
    version, flags = struct.unpack_from("<BB", blob, 4)
    if version != ARCHIVE_VERSION:
        raise VersionMismatchError(
            f"archive format {version}, this build reads {ARCHIVE_VERSION}"
        )
    n = struct.unpack_from("<Q", blob, 14)[0]
    return flags, blob[6:14], n, blob[HEADER_LEN:]


def _header(cfg: Config, n: int) -> bytes:
    flags = 1 if cfg.second_layer == "ekf" else 0
    return pack_header(cfg.digest8(), flags, n)


def compress(
    data: bytes, config: Config | None = None, probe: list | None = None
) -> bytes:
    """Compress ``data`` into a self-delimiting archive.

    ``probe``, when given, receives one int64 array with every coded
    probability (8 per byte) — the decoder-side twin must produce the
    identical array.
    """
    cfg = config if config is not None else Config()
    data = bytes(data)
    header = _header(cfg, len(data))
    if len(data) == 0:
        if probe is not None:
            probe.append(np.zeros(0, dtype=np.int64))
        return header

    p = Predictor(cfg)
    arr = np.frombuffer(data, dtype=np.uint8).copy()
    p._ensure_hist(len(arr))
    use_probe = 1 if probe is not None else 0
    probe_arr = (
        np.zeros(8 * len(arr), dtype=np.int64) if probe is not None
        else _EMPTY_PROBE
    )
    rc = np.zeros(K.NRC, dtype=np.int64)
    rc[K.RC_RANGE] = K.MASK32
    rcbuf = np.zeros(len(arr) + len(arr) // 2 + 4096, dtype=np.uint8)
    start = 0
    while True:
        nxt = p._run_block(arr, K.MODE_ENCODE, rc, rcbuf, probe_arr,
                           use_probe, start)
        if nxt >= len(arr):
            break
        grown = np.zeros(2 * len(rcbuf), dtype=np.uint8)
        grown[: len(rcbuf)] = rcbuf
        rcbuf = grown
        start = nxt
    K.rc_flush(rc, rcbuf)
    if probe is not None:
        probe.append(probe_arr)
    return header + rcbuf[: int(rc[K.RC_POS])].tobytes()


def _parse_header(blob: bytes, cfg: Config) -> int:
    flags, digest, n, _ = unpack_header(blob)
    if digest != cfg.digest8():
        raise ConfigMismatchError(
            "archive was written under a different model configuration"
        )
    if flags & 1 != (1 if cfg.second_layer == "ekf" else 0):
        raise ConfigMismatchError("archive flags disagree with configuration")
    return n


def decompress(
    blob: bytes, config: Config | None = None, probe: list | None = None
) -> bytes:
    """Invert :func:`compress` under the same configuration."""
    cfg = config if config is not None else Config()
    blob = bytes(blob)
    n = _parse_header(blob, cfg)
    payload = blob[HEADER_LEN:]
    if n == 0:
        if payload:
            raise CorruptArchiveError("empty stream carries payload bytes")
        if probe is not None:
            probe.append(np.zeros(0, dtype=np.int64))
        return b""
    if len(payload) < 4:
        raise TruncatedArchiveError("payload shorter than the coder tail")

    p = Predictor(cfg)
    out = np.zeros(n, dtype=np.uint8)
    p._ensure_hist(n)
    use_probe = 1 if probe is not None else 0
    probe_arr = (
        np.zeros(8 * n, dtype=np.int64) if probe is not None else _EMPTY_PROBE
    )
    rc = np.zeros(K.NRC, dtype=np.int64)
    rc[K.RC_RANGE] = K.MASK32
    rc[K.RC_CODE] = int.from_bytes(payload[:4], "big")
    rc[K.RC_POS] = 4
    rcbuf = np.frombuffer(payload, dtype=np.uint8).copy()
    done = p._run_block(out, K.MODE_DECODE, rc, rcbuf, probe_arr, use_probe, 0)
    if int(p.ireg[K.IR_ERR]) != 0 or done != n:
        raise TruncatedArchiveError(
            f"payload exhausted after {done} of {n} bytes"
        )
    if int(rc[K.RC_POS]) != len(payload):
        raise CorruptArchiveError(
            f"{len(payload) - int(rc[K.RC_POS])} trailing bytes after the stream"
        )
    if probe is not None:
        probe.append(probe_arr)
    return out.tobytes()


def cross_entropy(data: bytes, config: Config | None = None) -> float:
    """Bits per byte a fresh predictor needs to code ``data``."""
    return Predictor(config).cross_entropy_of(data)
