"""Byte-level PPM: trie counts, escape blending, and its archive format."""

from fractions import Fraction as F

import numpy as np
import pytest

from cmx.engine import HEADER_LEN, compress as engine_compress, decompress as engine_decompress
from cmx.errors import ConfigMismatchError, CorruptArchiveError, InvalidInputError
from cmx.ppm import PpmModel, ppm_compress, ppm_decompress, ppm_entropy
from helpers import SMALL


def _trained(data: bytes, k: int) -> PpmModel:
    """Replay ``data`` through a fresh model exactly like the entropy loop."""
    model = PpmModel(k)
    for i, b in enumerate(data):
        model.update(b, data[max(0, i - k): i])
    return model


# Hand-derived trie state after "abracadabra" at order 2: every context,
# every count, and the distinct-symbol escape mass.
_ESC = "esc"
_EXPECTED_LEVELS = {
    b"ab": {ord("r"): F(2, 3), _ESC: F(1, 3)},
    b"ac": {ord("a"): F(1, 2), _ESC: F(1, 2)},
    b"ad": {ord("a"): F(1, 2), _ESC: F(1, 2)},
    b"br": {ord("a"): F(2, 3), _ESC: F(1, 3)},
    b"ca": {ord("d"): F(1, 2), _ESC: F(1, 2)},
    b"da": {ord("b"): F(1, 2), _ESC: F(1, 2)},
    b"ra": {ord("c"): F(1, 2), _ESC: F(1, 2)},
    b"a": {
        ord("b"): F(2, 7),
        ord("c"): F(1, 7),
        ord("d"): F(1, 7),
        _ESC: F(3, 7),
    },
    b"b": {ord("r"): F(2, 3), _ESC: F(1, 3)},
    b"c": {ord("a"): F(1, 2), _ESC: F(1, 2)},
    b"d": {ord("a"): F(1, 2), _ESC: F(1, 2)},
    b"r": {ord("a"): F(2, 3), _ESC: F(1, 3)},
    b"": {
        ord("a"): F(5, 16),
        ord("b"): F(2, 16),
        ord("c"): F(1, 16),
        ord("d"): F(1, 16),
        ord("r"): F(2, 16),
        _ESC: F(5, 16),
    },
}


@pytest.fixture(scope="module")
def model():
    return _trained(b"abracadabra", 2)


class TestAbracadabraTrie:
    @pytest.mark.parametrize("ctx", sorted(_EXPECTED_LEVELS), ids=repr)
    def test_level_matches_hand_derivation(self, model, ctx):
        assert model.level(ctx, exact=True) == _EXPECTED_LEVELS[ctx]

    def test_no_other_contexts_stored(self, model):
        assert set(model._ctx) == set(_EXPECTED_LEVELS)

    def test_each_level_sums_to_exactly_one(self, model):
        for ctx in _EXPECTED_LEVELS:
            assert sum(model.level(ctx, exact=True).values()) == F(1)

    def test_unseen_context_has_no_level(self, model):
        assert model.level(b"zz") is None
        assert model.level(b"xq") is None

    def test_blended_probability_of_next_c(self, model):
        # after "...ra": 1/2 from order 2, then down through the escape
        # chain 1/2 * 1/7, 1/2 * 3/7 * 1/16, 1/2 * 3/7 * 5/16 * 1/256
        exact = model.predict_exact(b"abracadabra")
        assert exact[ord("c")] == F(33551, 57344)
        assert model.predict_one(b"abracadabra", ord("c")) == pytest.approx(
            float(F(33551, 57344)), abs=1e-12
        )

    def test_exact_blend_sums_to_one(self, model):
        assert sum(model.predict_exact(b"abracadabra").values()) == F(1)
        assert sum(model.predict_exact(b"").values()) == F(1)
        assert sum(model.predict_exact(b"zz").values()) == F(1)

    def test_float_blend_matches_exact(self, model):
        dist = model.predict(b"abracadabra")
        exact = model.predict_exact(b"abracadabra")
        assert float(dist.sum()) == pytest.approx(1.0, abs=1e-9)
        for sym in (ord("a"), ord("b"), ord("c"), ord("z")):
            assert dist[sym] == pytest.approx(float(exact[sym]), abs=1e-12)

    def test_novel_symbol_gets_only_bottom_mass(self, model):
        # 'z' was never counted anywhere: its mass is the full escape
        # product times the uniform floor
        exact = model.predict_exact(b"abracadabra")
        assert exact[ord("z")] == F(1, 2) * F(3, 7) * F(5, 16) * F(1, 256)


class TestEntropy:
    def test_first_byte_costs_eight_bits(self):
        for k in (0, 2, 5):
            assert ppm_entropy(b"x", k) == pytest.approx(8.0)

    def test_repetition_drives_cost_down(self):
        data = b"abracadabra" * 80
        assert ppm_entropy(data, 5) < 1.0

    def test_context_order_helps(self):
        data = b"the quick brown fox jumps over the lazy dog. " * 60
        h0 = ppm_entropy(data, 0)
        h4 = ppm_entropy(data, 4)
        assert h4 < h0

    def test_empty_input_rejected(self):
        with pytest.raises(InvalidInputError):
            ppm_entropy(b"", 5)

    def test_order_validation(self):
        for bad in (-1, 17, 2.0, "5"):
            with pytest.raises(InvalidInputError):
                ppm_entropy(b"abc", bad)

    def test_update_symbol_validation(self):
        with pytest.raises(InvalidInputError):
            PpmModel(2).update(256, b"")


class TestPpmArchive:
    def test_roundtrip_various(self):
        rng = np.random.default_rng(4)
        cases = [
            b"",
            b"a",
            b"abracadabra" * 20,
            bytes(range(256)),
            rng.integers(0, 256, 1500, dtype=np.uint8).tobytes(),
        ]
        for data in cases:
            for k in (0, 2, 5):
                assert ppm_decompress(ppm_compress(data, k)) == data

    def test_order_rides_in_the_header(self):
        blob = ppm_compress(b"order probe", 7)
        assert blob[5] == 7
        assert ppm_decompress(blob) == b"order probe"

    def test_code_length_tracks_model_entropy(self):
        data = b"such compression, very adaptive. " * 40
        k = 4
        blob = ppm_compress(data, k)
        ideal_bytes = ppm_entropy(data, k) * len(data) / 8
        assert len(blob) - HEADER_LEN <= ideal_bytes * 1.02 + 16

    def test_tampered_order_rejected(self):
        blob = bytearray(ppm_compress(b"payload", 5))
        blob[5] = 3  # order no longer matches the stored digest
        with pytest.raises(ConfigMismatchError):
            ppm_decompress(bytes(blob))

    def test_empty_stream_with_payload_rejected(self):
        blob = ppm_compress(b"", 5)
        with pytest.raises(CorruptArchiveError):
            ppm_decompress(blob + b"\x01")

    def test_archives_are_not_interchangeable_with_the_mixer(self):
        data = b"two formats, one magic, distinct digests"
        with pytest.raises(ConfigMismatchError):
            ppm_decompress(engine_compress(data, SMALL))
        with pytest.raises(ConfigMismatchError):
            engine_decompress(ppm_compress(data, 5), SMALL)
