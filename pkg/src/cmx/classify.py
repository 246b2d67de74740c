"""Compression-based classification.

Three classic procedures over the same idea — a model that compresses a
test string well probably generated it:

* per-class trained snapshots, scored by adaptive cross entropy (the
  cheap one: training data processed once, each test byte once per
  class);
* concatenation differences ``f(A_i T) − f(A_i)`` over archive sizes
  (reprocesses training data for every test file);
* best-compression neighbor: the same difference against every
  individual training file.

Scoring with snapshots deliberately lets the class model keep adapting
while it reads the test string; restoring the snapshot afterwards
discards that adaptation, so test files never contaminate each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .config import Config
from .engine import Predictor, Snapshot, compress, restore
from .errors import InvalidInputError

__all__ = [
    "ClassModel",
    "CostCounter",
    "amdl_classify",
    "bcn_classify",
    "smdl_classify",
    "smdl_train",
]


@dataclass
class CostCounter:
    """Bytes pushed through a compressor, split by data role.

    ``train_bytes`` counts every training byte each time it is
    (re)compressed; ``test_bytes`` likewise for test bytes.  The counts
    expose the asymptotic cost differences between the three methods.
    """

    train_bytes: int = 0
    test_bytes: int = 0


@dataclass(frozen=True)
class ClassModel:
    """A label plus the model state trained on that class's data."""

    label: str
    snap: Snapshot


def _check_classes(
    classes: Mapping[str, Sequence[bytes]]
) -> list[tuple[str, list[bytes]]]:
    if len(classes) < 2:
        raise InvalidInputError("need at least two classes")
    out = []
    for label in sorted(classes):
        files = [bytes(f) for f in classes[label]]
        if not files or all(len(f) == 0 for f in files):
            raise InvalidInputError(f"class {label!r} has no training data")
        out.append((str(label), files))
    return out


def smdl_train(
    classes: Mapping[str, Sequence[bytes]],
    config: Config | None = None,
    counter: CostCounter | None = None,
) -> list[ClassModel]:
    """One snapshot per class, trained on its concatenated files."""
    models = []
    for label, files in _check_classes(classes):
        blob = b"".join(files)
        p = Predictor(config)
        p.train(blob)
        if counter is not None:
            counter.train_bytes += len(blob)
        models.append(ClassModel(label=label, snap=p.snapshot()))
    return models


def smdl_classify(
    models: Sequence[ClassModel],
    test: bytes,
    counter: CostCounter | None = None,
) -> tuple[str, dict[str, float]]:
    """Label of the model that codes ``test`` cheapest, plus all scores.

    Each score is the adaptive cross entropy (bits/byte) of the test
    string under a fresh restore of that class's snapshot.  Ties go to
    the lowest label in sort order.
    """
    if not models:
        raise InvalidInputError("no class models given")
    test = bytes(test)
    if not test:
        raise InvalidInputError("test string must be non-empty")
    scores: dict[str, float] = {}
    for m in models:
        p = restore(m.snap)
        scores[m.label] = p.cross_entropy_of(test)
        if counter is not None:
            counter.test_bytes += len(test)
    best = min(scores.items(), key=lambda kv: (kv[1], kv[0]))[0]
    return best, scores


def _sizer(config: Config | None, counter: CostCounter | None):
    def f(data: bytes, train_part: int, test_part: int) -> int:
        if counter is not None:
            counter.train_bytes += train_part
            counter.test_bytes += test_part
        return len(compress(data, config))

    return f


def amdl_classify(
    classes: Mapping[str, Sequence[bytes]],
    tests: Sequence[bytes],
    config: Config | None = None,
    counter: CostCounter | None = None,
) -> list[str]:
    """Label each test string by min ``f(A_i + T) − f(A_i)``.

    ``f`` is the archive byte size; ``A_i`` the concatenation of class
    i's files, compressed once up front and re-compressed inside every
    concatenation.
    """
    pairs = _check_classes(classes)
    tests = [bytes(t) for t in tests]
    if any(len(t) == 0 for t in tests):
        raise InvalidInputError("test strings must be non-empty")
    f = _sizer(config, counter)
    cat = {label: b"".join(files) for label, files in pairs}
    base = {label: f(cat[label], len(cat[label]), 0) for label, _ in pairs}
    out = []
    for t in tests:
        diffs = {
            label: f(cat[label] + t, len(cat[label]), len(t)) - base[label]
            for label, _ in pairs
        }
        out.append(min(diffs.items(), key=lambda kv: (kv[1], kv[0]))[0])
    return out


def bcn_classify(
    classes: Mapping[str, Sequence[bytes]],
    tests: Sequence[bytes],
    config: Config | None = None,
    counter: CostCounter | None = None,
) -> list[str]:
    """Label each test by its best-compression neighbor.

    Every individual training file ``B`` competes with the difference
    ``f(B + T) − f(B)``; the winning file's class is the answer.
    """
    pairs = _check_classes(classes)
    tests = [bytes(t) for t in tests]
    if any(len(t) == 0 for t in tests):
        raise InvalidInputError("test strings must be non-empty")
    f = _sizer(config, counter)
    files = [
        (label, i, data)
        for label, fs in pairs
        for i, data in enumerate(fs)
        if len(data) > 0
    ]
    base = {
        (label, i): f(data, len(data), 0) for label, i, data in files
    }
    out = []
    for t in tests:
        best = min(
            files,
            key=lambda it: (
                f(it[2] + t, len(it[2]), len(t)) - base[(it[0], it[1])],
                it[0],
                it[1],
            ),
        )
        out.append(best[0])
    return out
