"""Word-vector loading and the two chunk representation modes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chunkalign.corpus import Chunk, Token
from chunkalign.embed import (
    AnnotationError,
    ContextualAnnotation,
    VectorFormatError,
    chunk_boundary,
    chunk_mean,
    load_vectors,
)


def chunk_of(words, start=0):
    tokens = tuple(Token(surface=w, index=start + k) for k, w in enumerate(words))
    return Chunk(tokens=tokens, span=(start, start + len(words)))


def write_vectors(tmp_path, text):
    path = tmp_path / "vecs.txt"
    path.write_text(text)
    return path


class TestLoadVectors:
    def test_basic_table(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 2.0\nb 3.0 4.0\n"))
        assert table.dim == 2
        np.testing.assert_array_equal(table.lookup("a"), [1.0, 2.0])

    def test_dimension_mismatch_reports_line(self, tmp_path):
        with pytest.raises(VectorFormatError, match="line 2"):
            load_vectors(write_vectors(tmp_path, "a 1.0 2.0\nb 3.0 4.0 5.0\n"))

    def test_unparseable_number(self, tmp_path):
        with pytest.raises(VectorFormatError, match="unparseable"):
            load_vectors(write_vectors(tmp_path, "a 1.0 oops\n"))

    def test_missing_word_falls_back_to_zero(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 2.0\n"))
        np.testing.assert_array_equal(table.lookup("absent"), [0.0, 0.0])

    def test_unk_entry_overrides_zero_fallback(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 2.0\n<unk> 9.0 9.0\n"))
        np.testing.assert_array_equal(table.lookup("absent"), [9.0, 9.0])

    def test_lowercase_fallback(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "dog 1.0 2.0\n"))
        np.testing.assert_array_equal(table.lookup("Dog"), [1.0, 2.0])


class TestChunkMean:
    def test_single_token(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 2.0\n"))
        out = chunk_mean(chunk_of(["a"]), table)
        np.testing.assert_array_equal(out.values, [1.0, 2.0])
        assert out.mode == "mean"

    def test_two_tokens_average(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 2.0\nb 3.0 4.0\n"))
        np.testing.assert_array_equal(chunk_mean(chunk_of(["a", "b"]), table).values, [2.0, 3.0])

    def test_all_oov_gives_zero(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 2.0\n"))
        np.testing.assert_array_equal(chunk_mean(chunk_of(["x", "y"]), table).values, [0.0, 0.0])

    @given(st.integers(1, 6), st.floats(-3, 3).filter(lambda s: abs(s) > 1e-3))
    @settings(max_examples=25, deadline=None)
    def test_scaling_table_scales_output(self, count, scale):
        rng = np.random.default_rng(count)
        from chunkalign.embed import EmbeddingTable

        words = [f"w{k}" for k in range(count)]
        vecs = {w: rng.normal(size=3) for w in words}
        base = chunk_mean(chunk_of(words), EmbeddingTable(vecs, 3)).values
        scaled = chunk_mean(chunk_of(words), EmbeddingTable({w: scale * v for w, v in vecs.items()}, 3)).values
        np.testing.assert_allclose(scaled, scale * base, atol=1e-12)

    def test_mean_ignores_token_order(self, tmp_path):
        table = load_vectors(write_vectors(tmp_path, "a 1.0 0.0\nb 0.0 1.0\nc 2.0 2.0\n"))
        fwd = chunk_mean(chunk_of(["a", "b", "c"]), table).values
        rev = chunk_mean(chunk_of(["c", "b", "a"]), table).values
        np.testing.assert_array_equal(fwd, rev)


class TestChunkBoundary:
    def ann(self, nx, ny=1, dim=4):
        rng = np.random.default_rng(nx * 10 + ny)
        return ContextualAnnotation(
            pair_id="p", vectors_x=rng.normal(size=(nx, dim)), vectors_y=rng.normal(size=(ny, dim))
        )

    def test_first_and_last_concatenated(self):
        ann = self.ann(6)
        chunk = chunk_of(["t2", "t3", "t4"], start=2)
        out = chunk_boundary(chunk, ann, "x")
        np.testing.assert_array_equal(out.values, np.concatenate([ann.vectors_x[2], ann.vectors_x[4]]))
        assert out.mode == "boundary"

    def test_single_token_duplicated(self):
        ann = self.ann(3)
        out = chunk_boundary(chunk_of(["t1"], start=1), ann, "x")
        np.testing.assert_array_equal(out.values, np.concatenate([ann.vectors_x[1], ann.vectors_x[1]]))

    def test_output_length_always_double(self):
        ann = self.ann(5, dim=7)
        for start, width in [(0, 1), (1, 3), (2, 3)]:
            chunk = chunk_of([f"t{k}" for k in range(width)], start=start)
            assert chunk_boundary(chunk, ann, "x").values.shape == (14,)

    def test_coverage_error_identifies_token(self):
        ann = self.ann(3)
        with pytest.raises(AnnotationError, match="token 3"):
            chunk_boundary(chunk_of(["a", "b"], start=2), ann, "x")
