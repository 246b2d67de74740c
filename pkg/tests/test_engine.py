"""Predictor engine: roundtrips, archives, snapshots, and the bit API."""

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import MEDIUM, SMALL
from cmx.config import Config
from cmx.engine import (
    HEADER_LEN,
    MAGIC,
    Predictor,
    Snapshot,
    compress,
    cross_entropy,
    decompress,
    restore,
)
from cmx.errors import (
    BadMagicError,
    ConfigMismatchError,
    CorruptArchiveError,
    InvalidInputError,
    SnapshotVersionError,
    TruncatedArchiveError,
    VersionMismatchError,
)


def _rt(data: bytes, cfg=SMALL) -> bytes:
    blob = compress(data, cfg)
    assert decompress(blob, cfg) == data
    return blob


class TestRoundtrip:
    def test_empty(self):
        blob = compress(b"", SMALL)
        assert len(blob) == HEADER_LEN
        assert decompress(blob, SMALL) == b""

    def test_every_single_byte(self):
        for v in range(256):
            _rt(bytes([v]))

    def test_small_strings(self):
        for data in (b"a", b"ab", b"aaa", b"hello world", bytes(64)):
            _rt(data)

    def test_random_data_several_sizes(self):
        rng = np.random.default_rng(0)
        for size in (2, 17, 256, 4096, 20_000):
            _rt(rng.integers(0, 256, size=size, dtype=np.uint8).tobytes())

    def test_periodic_data(self):
        _rt(b"abcabcabc" * 500)
        _rt(b"\x00\xff" * 3000)

    def test_own_source_file(self):
        import cmx.engine as mod

        with open(mod.__file__, "rb") as fh:
            _rt(fh.read(), MEDIUM)

    def test_all_byte_values_in_one_stream(self):
        _rt(bytes(range(256)) * 8)

    def test_compresses_repetitive_data(self):
        data = b"the quick brown fox jumps over the lazy dog. " * 200
        blob = _rt(data)
        assert len(blob) < len(data) // 10

    def test_random_data_not_fake_compressed(self):
        rng = np.random.default_rng(1)
        data = rng.integers(0, 256, size=10_000, dtype=np.uint8).tobytes()
        blob = _rt(data)
        # truly incompressible input may only grow by bounded overhead
        assert len(blob) <= len(data) + HEADER_LEN + 4 + len(data) // 100

    def test_ekf_roundtrip(self):
        cfg = SMALL.replace(second_layer="ekf")
        data = b"kalman filter roundtrip " * 100
        blob = compress(data, cfg)
        assert decompress(blob, cfg) == data


@given(st.binary(max_size=2000))
@settings(max_examples=120, deadline=None)
def test_roundtrip_property(data):
    blob = compress(data, SMALL)
    assert decompress(blob, SMALL) == data


class TestProbeParity:
    def test_encoder_and_decoder_probabilities_identical(self):
        data = b"mirror mirror on the wall " * 50
        enc_probe, dec_probe = [], []
        blob = compress(data, SMALL, probe=enc_probe)
        assert decompress(blob, SMALL, probe=dec_probe) == data
        assert np.array_equal(enc_probe[0], dec_probe[0])
        assert len(enc_probe[0]) == 8 * len(data)
        assert enc_probe[0].min() >= 1
        assert enc_probe[0].max() <= 65535

    def test_compression_is_deterministic(self):
        data = bytes(range(256)) * 4
        assert compress(data, SMALL) == compress(data, SMALL)


class TestArchiveFormat:
    def test_header_layout(self):
        data = b"layout probe"
        blob = compress(data, SMALL)
        assert blob[:4] == MAGIC
        assert blob[4] == 1  # container version
        assert blob[5] == 0  # flags: gradient second layer
        assert blob[6:14] == SMALL.digest8()
        assert int.from_bytes(blob[14:22], "little") == len(data)

    def test_ekf_flag_bit(self):
        cfg = SMALL.replace(second_layer="ekf")
        blob = compress(b"x", cfg)
        assert blob[5] == 1

    def test_bad_magic(self):
        blob = bytearray(compress(b"payload", SMALL))
        blob[:4] = b"ZMX1"
        with pytest.raises(BadMagicError):
            decompress(bytes(blob), SMALL)

    def test_bad_version(self):
        blob = bytearray(compress(b"payload", SMALL))
        blob[4] = 9
        with pytest.raises(VersionMismatchError):
            decompress(bytes(blob), SMALL)

    def test_config_digest_mismatch(self):
        blob = compress(b"payload", SMALL)
        with pytest.raises(ConfigMismatchError):
            decompress(blob, MEDIUM)

    def test_flag_config_mismatch(self):
        blob = compress(b"payload", SMALL)
        tampered = bytearray(blob)
        tampered[5] = 1  # claim EKF while the digest says otherwise
        with pytest.raises(ConfigMismatchError):
            decompress(bytes(tampered), SMALL)

    def test_truncated_header(self):
        blob = compress(b"payload", SMALL)
        for cut in (0, 3, 10, HEADER_LEN - 1):
            with pytest.raises(TruncatedArchiveError):
                decompress(blob[:cut], SMALL)

    def test_truncated_payload(self):
        rng = np.random.default_rng(3)
        blob = compress(rng.integers(0, 256, 2000, dtype=np.uint8).tobytes(), SMALL)
        assert len(blob) > HEADER_LEN + 100
        with pytest.raises((TruncatedArchiveError, CorruptArchiveError)):
            decompress(blob[: HEADER_LEN + 40], SMALL)

    def test_trailing_garbage(self):
        blob = compress(b"tidy stream", SMALL)
        with pytest.raises(CorruptArchiveError):
            decompress(blob + b"\x00", SMALL)

    def test_empty_stream_with_payload(self):
        blob = compress(b"", SMALL)
        with pytest.raises(CorruptArchiveError):
            decompress(blob + b"\x07", SMALL)


class TestBitLevelApi:
    def test_predict_then_update_tracks_process_byte(self):
        a, b = Predictor(SMALL), Predictor(SMALL)
        data = b"step by step"
        for byte in data:
            for i in range(7, -1, -1):
                bit = (byte >> i) & 1
                a.predict_bit()
                a.update_bit(bit)
            b.process_byte(byte)
        assert a.state_digest() == b.state_digest()
        assert a.bytes_processed == len(data)

    def test_probabilities_are_interior(self):
        p = Predictor(SMALL)
        for byte in b"interior":
            for i in range(7, -1, -1):
                q = p.predict_bit()
                assert 0.0 < q < 1.0
                p.update_bit((byte >> i) & 1)

    def test_update_requires_prior_predict(self):
        p = Predictor(SMALL)
        with pytest.raises(InvalidInputError):
            p.update_bit(1)

    def test_boundary_required_for_block_ops(self):
        p = Predictor(SMALL)
        p.predict_bit()
        p.update_bit(1)  # one bit into a byte now
        for call in (
            lambda: p.train(b"xy"),
            lambda: p.clone(),
            lambda: p.snapshot(),
            lambda: p.state_digest(),
            lambda: p.cross_entropy_of(b"xy"),
        ):
            with pytest.raises(InvalidInputError):
                call()

    def test_learns_a_deterministic_pair(self):
        p = Predictor(SMALL)
        p.train(b"ab" * 10_000)
        dist = p.clone().byte_distribution()
        # after an 'a' ... wait: train ends on 'b', so 'a' is due next
        assert dist[ord("a")] > 0.99

    def test_byte_distribution_sums_to_one(self):
        p = Predictor(SMALL)
        p.train(b"some text to look at")
        dist = p.byte_distribution()
        assert dist.shape == (256,)
        assert float(dist.sum()) == pytest.approx(1.0, abs=1e-9)
        assert (dist > 0).all()

    def test_cross_entropy_of_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            Predictor(SMALL).cross_entropy_of(b"")

    def test_cross_entropy_random_is_eight_bits(self):
        rng = np.random.default_rng(2)
        data = rng.integers(0, 256, size=30_000, dtype=np.uint8).tobytes()
        ce = cross_entropy(data, SMALL)
        assert 7.9 <= ce <= 8.2

    def test_cross_entropy_constant_is_tiny(self):
        assert cross_entropy(b"a" * 10_000, SMALL) < 0.05


class TestCloneAndDigest:
    def test_clone_matches_and_diverges_independently(self):
        p = Predictor(SMALL)
        p.train(b"shared history " * 50)
        q = p.clone()
        assert q.state_digest() == p.state_digest()
        q.train(b"only the clone sees this")
        assert q.state_digest() != p.state_digest()
        # the original is untouched by the clone's life
        r = p.clone()
        assert r.state_digest() == p.state_digest()

    def test_speculation_does_not_touch_state(self):
        p = Predictor(SMALL)
        p.train(b"the cat sat on the mat. " * 30)
        before = p.state_digest()
        p.clone().byte_distribution()
        p.predict_next_chars(40)
        assert p.state_digest() == before

    def test_predict_next_chars_learns_repetition(self):
        p = Predictor(MEDIUM)
        p.train(b"My name is Byron Knoll. " * 60)
        p.train(b"My name is B")
        assert p.predict_next_chars(11).startswith("yron")

    def test_predict_next_chars_length_and_validation(self):
        p = Predictor(SMALL)
        p.train(b"abc")
        assert len(p.predict_next_chars(7)) == 7
        with pytest.raises(InvalidInputError):
            p.predict_next_chars(0)


class TestSnapshot:
    def test_snapshot_restore_identical_future(self):
        p = Predictor(SMALL)
        p.train(b"history before the fork " * 40)
        snap = p.snapshot()
        q = restore(snap)
        assert q.state_digest() == p.state_digest()
        tail = b"continuation that both must code identically"
        assert q.cross_entropy_of(tail) == p.cross_entropy_of(tail)
        assert q.state_digest() == p.state_digest()

    def test_snapshot_bytes_roundtrip(self):
        p = Predictor(SMALL)
        p.train(b"serialize me " * 20)
        blob = p.snapshot().to_bytes()
        q = restore(Snapshot.from_bytes(blob))
        assert q.state_digest() == p.state_digest()

    def test_snapshot_is_a_frozen_copy(self):
        p = Predictor(SMALL)
        p.train(b"frozen at this point")
        snap = p.snapshot()
        digest = p.state_digest()
        p.train(b"moved on since")
        assert restore(snap).state_digest() == digest

    def test_snapshot_size_is_bounded(self):
        p = Predictor(SMALL)
        p.train(b"size probe " * 100)
        blob = p.snapshot().to_bytes()
        live = sum(
            getattr(p, name).nbytes
            for name in ("cnt", "hist", "midx", "seen", "w1", "w2", "P",
                         "apm", "ireg", "freg")
        )
        assert len(blob) < 2 * live

    def test_corrupt_snapshot_rejected(self):
        with pytest.raises(CorruptArchiveError):
            Snapshot.from_bytes(b"not a snapshot at all")

    def test_version_gate(self):
        p = Predictor(SMALL)
        snap = p.snapshot()
        snap.version = 99
        with pytest.raises(SnapshotVersionError):
            restore(snap)
        with pytest.raises(SnapshotVersionError):
            Snapshot.from_bytes(snap.to_bytes())


class TestConfigSurface:
    def test_defaults_match_published_initialization(self):
        cfg = Config()
        assert cfg.ekf_q == 0.15
        assert cfg.ekf_p0 == 60.0
        assert cfg.ekf_w0 == 150.0
        assert cfg.ekf_r == 5.0
        assert cfg.mixer_eta == 0.003
        assert cfg.set_divisor == 4

    def test_digest_differs_between_configs(self):
        assert SMALL.digest8() != MEDIUM.digest8()
        assert SMALL.digest8() != SMALL.replace(second_layer="ekf").digest8()

    def test_digest_is_stable(self):
        # canonical rendering must not drift between runs
        text = SMALL.canonical()
        assert hashlib.sha256(text.encode()).digest()[:8] == SMALL.digest8()

    def test_apm_disabled_still_roundtrips(self):
        cfg = SMALL.replace(apm_enabled=False)
        data = b"no refinement stage " * 50
        assert decompress(compress(data, cfg), cfg) == data

    def test_single_order_config_roundtrips(self):
        cfg = Config(orders=(2,), sparse=False, table_log2=12, seen_log2=9)
        data = b"minimal model set " * 30
        assert decompress(compress(data, cfg), cfg) == data
