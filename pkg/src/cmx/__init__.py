"""Context-mixing compression toolkit.

A bit-level adaptive compressor built from hashed context models, a
gated two-layer online logistic mixer (gradient or Kalman-filter
updates), an adaptive probability map, and a carry-counting range
coder — plus the things such a compressor enables: entropy probes,
compression distances, minimum-description-length classification,
shape-to-sequence conversion, a k-means lossy image codec, and an
interactive prediction service.
"""

from .apm import Apm
from .classify import (
    ClassModel,
    CostCounter,
    amdl_classify,
    bcn_classify,
    smdl_classify,
    smdl_train,
)
from .coder import (
    ArithmeticDecoder,
    ArithmeticEncoder,
    interval_code_bits,
    interval_trace,
    prob16,
)
from .config import BASE_SET_SIZES, Config, level_table_log2, parse_config
from .distances import EngineCompressor, d_c, d_cdm, d_e1, d_e2, d_ncd
from .engine import (
    Predictor,
    Snapshot,
    compress,
    cross_entropy,
    decompress,
    restore,
)
from .errors import (
    ArchiveError,
    BadMagicError,
    CmxError,
    CoderStateError,
    ConfigMismatchError,
    CorruptArchiveError,
    InvalidDistributionError,
    InvalidInputError,
    NumericalError,
    SnapshotVersionError,
    TruncatedArchiveError,
    VersionMismatchError,
)
from .lossy import FilterBank, learn_filters, lossy_decode, lossy_encode
from .mixer import GateInputs, Mixer, select_nodes, squash, stretch
from .ppm import PpmModel, ppm_compress, ppm_decompress, ppm_entropy
from .shapes import hilbert_scan, raster_scan, shape_to_series
from .synth import class_corpus, markov2_text, mixed_corpus

__version__ = "0.1.0"

__all__ = [
    "Apm",
    "ArchiveError",
    "ArithmeticDecoder",
    "ArithmeticEncoder",
    "BASE_SET_SIZES",
    "BadMagicError",
    "ClassModel",
    "CmxError",
    "CoderStateError",
    "Config",
    "ConfigMismatchError",
    "CorruptArchiveError",
    "CostCounter",
    "EngineCompressor",
    "FilterBank",
    "GateInputs",
    "InvalidDistributionError",
    "InvalidInputError",
    "Mixer",
    "NumericalError",
    "PpmModel",
    "Predictor",
    "Snapshot",
    "SnapshotVersionError",
    "TruncatedArchiveError",
    "VersionMismatchError",
    "amdl_classify",
    "bcn_classify",
    "class_corpus",
    "compress",
    "cross_entropy",
    "d_c",
    "d_cdm",
    "d_e1",
    "d_e2",
    "d_ncd",
    "decompress",
    "hilbert_scan",
    "interval_code_bits",
    "interval_trace",
    "learn_filters",
    "level_table_log2",
    "lossy_decode",
    "lossy_encode",
    "markov2_text",
    "mixed_corpus",
    "parse_config",
    "ppm_compress",
    "ppm_decompress",
    "ppm_entropy",
    "prob16",
    "raster_scan",
    "restore",
    "select_nodes",
    "shape_to_series",
    "smdl_classify",
    "smdl_train",
    "squash",
    "stretch",
    "__version__",
]
