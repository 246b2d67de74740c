"""Compression distances: exact formulas on a stub, behavior on the engine."""

import pytest

from cmx.distances import EngineCompressor, d_c, d_cdm, d_e1, d_e2, d_ncd
from cmx.engine import cross_entropy
from cmx.errors import InvalidInputError
from cmx.synth import markov2_text
from helpers import SMALL

X, Y = b"xx", b"yyyy"


class StubHandle:
    """Fixed measurement table, so each metric's formula is checkable."""

    _SIZES = {b"xx": 3.0, b"yyyy": 5.0, b"xxyyyy": 7.0, b"yyyyxx": 6.5}
    _COND = {(X, Y): 2.0, (Y, X): 4.0}
    _ENT = {(X, Y): 1.5, (Y, X): 2.5}

    def size_of(self, x):
        return self._SIZES[x]

    def size_of_given(self, x, y):
        return self._COND[(x, y)]

    def entropy_given(self, x, y):
        return self._ENT[(x, y)]


class TestFormulas:
    def test_d_c(self):
        h = StubHandle()
        assert d_c(X, Y, h) == (2.0 + 4.0) / 7.0
        assert d_c(Y, X, h) == (4.0 + 2.0) / 6.5

    def test_d_e1_is_one_sided(self):
        h = StubHandle()
        assert d_e1(X, Y, h) == 1.5
        assert d_e1(Y, X, h) == 2.5

    def test_d_e2_averages_both_directions(self):
        h = StubHandle()
        assert d_e2(X, Y, h) == 2.0
        assert d_e2(Y, X, h) == 2.0

    def test_d_ncd(self):
        h = StubHandle()
        assert d_ncd(X, Y, h) == (7.0 - 3.0) / 5.0
        assert d_ncd(Y, X, h) == (6.5 - 3.0) / 5.0

    def test_d_cdm_uses_canonical_concatenation(self):
        h = StubHandle()
        assert d_cdm(X, Y, h) == 7.0 / 8.0
        assert d_cdm(Y, X, h) == 7.0 / 8.0

    def test_empty_inputs_rejected(self):
        h = StubHandle()
        for fn in (d_c, d_e1, d_e2, d_ncd, d_cdm):
            with pytest.raises(InvalidInputError):
                fn(b"", Y, h)
        for fn in (d_c, d_e2, d_ncd, d_cdm):
            with pytest.raises(InvalidInputError):
                fn(X, b"", h)


@pytest.fixture(scope="module")
def texts():
    a = markov2_text(3000, seed=5)
    b = markov2_text(1500, seed=6)
    return a[:1500], a[1500:], b


@pytest.fixture(scope="module")
def handle():
    return EngineCompressor(SMALL)


class TestEngineBacked:
    def test_size_matches_cross_entropy(self, handle, texts):
        a1, _, _ = texts
        want = cross_entropy(a1, SMALL) * len(a1) / 8.0
        assert handle.size_of(a1) == pytest.approx(want, rel=1e-12)

    def test_conditioning_on_similar_text_helps(self, handle, texts):
        a1, a2, b = texts
        assert handle.size_of_given(a1, a2) < handle.size_of(a1)
        assert handle.entropy_given(a1, a2) < handle.entropy_given(a1, b)

    def test_symmetry_is_exact(self, handle, texts):
        a1, _, b = texts
        assert d_e2(a1, b, handle) == d_e2(b, a1, handle)
        assert d_cdm(a1, b, handle) == d_cdm(b, a1, handle)

    def test_self_distance_is_small(self, handle, texts):
        a1 = texts[0]
        assert d_ncd(a1, a1, handle) < 0.5
        assert d_cdm(a1, a1, handle) < 0.75
        assert d_c(a1, a1, handle) < 0.75

    @pytest.mark.parametrize("fn", [d_c, d_e1, d_e2, d_ncd, d_cdm])
    def test_within_source_beats_across_sources(self, fn, handle, texts):
        a1, a2, b = texts
        assert fn(a1, a2, handle) < fn(a1, b, handle)

    def test_empty_measurement_rejected(self, handle):
        with pytest.raises(InvalidInputError):
            handle.size_of(b"")
