"""Engine configuration: a frozen set of knobs plus a stable digest.

The digest of the canonical key=value rendering is embedded in every
archive header so that decoding under a different configuration fails
loudly instead of silently diverging.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .errors import InvalidInputError

#: Full hidden-set sizes of the two-layer mixer (sets 1..7).
BASE_SET_SIZES = (264, 256, 128, 256, 256, 256, 1536)

#: External (dotted) config keys mapped to dataclass field names.
KEY_ALIASES = {
    "mixer.eta": "mixer_eta",
    "mixer.set_divisor": "set_divisor",
    "mixer.second_layer": "second_layer",
    "ekf.q": "ekf_q",
    "ekf.p0": "ekf_p0",
    "ekf.w0": "ekf_w0",
    "ekf.r": "ekf_r",
    "apm.enabled": "apm_enabled",
    "apm.rate": "apm_rate",
    "cm.orders": "orders",
    "cm.sparse": "sparse",
    "cm.table_log2": "table_log2",
    "cm.seen_log2": "seen_log2",
    "match.cap": "match_cap",
    "match.back": "match_back",
}


@dataclass(frozen=True)
class Config:
    """All engine knobs; defaults give the standard desk-scale model."""

    orders: tuple = (1, 2, 3, 4, 6, 8)   # contiguous context-model orders
    sparse: bool = True                   # skip-gram model at offsets {1,3}
    table_log2: int = 22                  # counter cells per model (power of 2)
    seen_log2: int = 18                   # low-order seen-table bits
    mixer_eta: float = 0.003              # gradient step, both layers
    set_divisor: int = 4                  # hidden sets scaled to base//divisor
    second_layer: str = "sgd"             # "sgd" or "ekf"
    ekf_q: float = 0.15                   # Kalman process noise (diagonal)
    ekf_p0: float = 60.0                  # Kalman initial covariance (diagonal)
    ekf_w0: float = 150.0                 # Kalman initial weight, 1/65536 units
    ekf_r: float = 5.0                    # Kalman observation noise
    apm_enabled: bool = True
    apm_rate: int = 7                     # refinement learning-rate shift
    match_cap: int = 65534                # maximum tracked match length
    match_back: int = 64                  # backward match verification cap

    def __post_init__(self):
        if not self.orders or any(o < 1 or o > 64 for o in self.orders):
            raise InvalidInputError("orders must be non-empty, each in 1..64")
        if tuple(sorted(self.orders)) != tuple(self.orders):
            raise InvalidInputError("orders must be ascending")
        if not 9 <= self.table_log2 <= 28:
            raise InvalidInputError("table_log2 must be in 9..28")
        if not 8 <= self.seen_log2 <= 24:
            raise InvalidInputError("seen_log2 must be in 8..24")
        if self.second_layer not in ("sgd", "ekf"):
            raise InvalidInputError("second_layer must be 'sgd' or 'ekf'")
        if not 0 < self.mixer_eta < 1:
            raise InvalidInputError("mixer_eta must be in (0, 1)")
        if self.set_divisor < 1:
            raise InvalidInputError("set_divisor must be >= 1")
        if not 1 <= self.apm_rate <= 20:
            raise InvalidInputError("apm_rate must be in 1..20")
        if not 2 <= self.match_cap <= 65534:
            raise InvalidInputError("match_cap must be in 2..65534")
        if not 2 <= self.match_back <= 4096:
            raise InvalidInputError("match_back must be in 2..4096")
        if self.ekf_r <= 0 or self.ekf_q < 0 or self.ekf_p0 <= 0:
            raise InvalidInputError("ekf noise/covariance values must be positive")

    def set_sizes(self):
        """Hidden-set sizes after scaling by the divisor."""
        return tuple(max(1, s // self.set_divisor) for s in BASE_SET_SIZES)

    def canonical(self) -> str:
        parts = []
        for f in sorted(dataclasses.fields(self), key=lambda f: f.name):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(e) for e in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            parts.append(f"{f.name}={v}")
        return "\n".join(parts)

    def digest8(self) -> bytes:
        return hashlib.sha256(self.canonical().encode()).digest()[:8]

    def replace(self, **kw) -> "Config":
        return dataclasses.replace(self, **kw)


def _coerce(field: dataclasses.Field, raw: str):
    raw = raw.strip()
    if field.name == "orders":
        try:
            return tuple(int(t) for t in raw.replace(" ", "").split(",") if t)
        except ValueError:
            raise InvalidInputError(f"bad orders value: {raw!r}") from None
    t = field.type if isinstance(field.type, type) else type(field.default)
    if t is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidInputError(f"bad boolean for {field.name}: {raw!r}")
    if t is int:
        try:
            return int(raw)
        except ValueError:
            raise InvalidInputError(f"bad integer for {field.name}: {raw!r}") from None
    if t is float:
        try:
            return float(raw)
        except ValueError:
            raise InvalidInputError(f"bad float for {field.name}: {raw!r}") from None
    return raw


def parse_config(pairs, base: Config | None = None) -> Config:
    """Build a Config from ``key=value`` strings or config-file lines.

    Keys may use the dotted external names (``mixer.eta``) or the field
    names directly.  ``pairs`` is an iterable of strings; blank lines
    and ``#`` comments are ignored, so a file's lines can be passed
    straight through.
    """
    cfg = base or Config()
    fields = {f.name: f for f in dataclasses.fields(Config)}
    updates = {}
    for item in pairs:
        line = item.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        name = KEY_ALIASES.get(key, key)
        if name not in fields:
            raise InvalidInputError(f"unknown config key: {key!r}")
        updates[name] = _coerce(fields[name], raw)
    return cfg.replace(**updates)


def level_table_log2(level: int) -> int:
    """Map the CLI compression level 0..8 to a counter-table size."""
    if not 0 <= level <= 8:
        raise InvalidInputError("level must be in 0..8")
    return 14 + level
