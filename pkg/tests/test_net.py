"""Pointer scoring, gates, and the row-softmax model against values
computed directly from their defining formulas."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chunkalign.net import (
    GateVectors,
    PointerParams,
    ScoreMatrix,
    forward_unidirectional,
    gates,
    score_matrix,
)


def scalar_params(W1=1.0, W2=1.0, W3=0.0, v=1.0, phi=0.0, c1=1.0, c2=0.0, d1=1.0, d2=0.0):
    return PointerParams(
        W1=np.array([[W1]]),
        W2=np.array([[W2]]),
        W3=np.array([[W3]]),
        v=np.array([v]),
        phi=np.array([phi]),
        c1=c1,
        c2=c2,
        d1=d1,
        d2=d2,
    )


def softmax(values):
    e = np.exp(np.asarray(values) - np.max(values))
    return e / e.sum()


class TestScoreMatrix:
    def test_zero_weights_give_zero_scores(self):
        params = PointerParams(
            W1=np.zeros((3, 2)), W2=np.zeros((3, 2)), W3=np.zeros((3, 2)),
            v=np.ones(3), phi=np.zeros(2), c1=1.0, c2=0.0, d1=1.0, d2=0.0,
        )
        scores = score_matrix(np.ones((2, 2)), np.ones((3, 2)), params)
        np.testing.assert_array_equal(scores.theta, np.zeros((2, 3)))

    def test_scalar_case_matches_tanh(self):
        scores = score_matrix([[0.5]], [[0.25]], scalar_params())
        assert scores.theta[0, 0] == pytest.approx(math.tanh(0.75), abs=1e-12)
        assert scores.theta[0, 0] == pytest.approx(0.635149, abs=1e-6)

    def test_scalar_phi_score(self):
        scores = score_matrix([[0.5]], [[0.25]], scalar_params())
        assert scores.b_x_phi[0] == pytest.approx(math.tanh(0.5), abs=1e-12)
        assert scores.b_x_phi[0] == pytest.approx(0.462117, abs=1e-6)

    def test_hadamard_term(self):
        scores = score_matrix([[0.5]], [[0.25]], scalar_params(W3=2.0))
        assert scores.theta[0, 0] == pytest.approx(math.tanh(0.5 + 0.25 + 2 * 0.125), abs=1e-12)

    def test_shape_mismatch(self):
        params = PointerParams.init(embed_dim=4, proj_dim=3, seed=0)
        with pytest.raises(ValueError, match="does not match"):
            score_matrix(np.ones((2, 5)), np.ones((2, 4)), params)

    def test_accepts_chunk_vector_lists(self):
        from chunkalign.embed import ChunkVector

        params = scalar_params()
        xs = [ChunkVector(values=np.array([0.5]), mode="mean")]
        ys = [ChunkVector(values=np.array([0.25]), mode="mean")]
        scores = score_matrix(xs, ys, params)
        assert scores.theta[0, 0] == pytest.approx(math.tanh(0.75), abs=1e-12)

    def test_permuting_y_permutes_columns(self):
        rng = np.random.default_rng(0)
        params = PointerParams.init(embed_dim=5, proj_dim=4, seed=1)
        X, Y = rng.normal(size=(3, 5)), rng.normal(size=(4, 5))
        perm = [2, 0, 3, 1]
        base = score_matrix(X, Y, params)
        permuted = score_matrix(X, Y[perm], params)
        np.testing.assert_allclose(permuted.theta, base.theta[:, perm], atol=1e-14)
        np.testing.assert_allclose(permuted.b_y_phi, base.b_y_phi[perm], atol=1e-14)


class TestGates:
    def scores_from_theta(self, theta, b=0.5):
        theta = np.asarray(theta, dtype=float)
        n, m = theta.shape
        return ScoreMatrix(theta=theta, b_x_phi=np.full(n, b), b_y_phi=np.full(m, b))

    def test_sigma_zero_gives_half(self):
        scores = self.scores_from_theta([[0.5, 0.2]], b=0.5)
        out = gates(scores, scalar_params(c1=1.0, c2=0.0))
        assert out.g_x[0] == pytest.approx(0.5)

    def test_constant_gate_when_c1_zero(self):
        scores = self.scores_from_theta([[3.0, -1.0], [0.0, 2.0]])
        out = gates(scores, scalar_params(c1=0.0, c2=3.0))
        np.testing.assert_allclose(out.g_x, 1 / (1 + math.exp(-3)), atol=1e-12)
        assert out.g_x[0] == pytest.approx(0.952574, abs=1e-6)

    def test_row_example(self):
        scores = self.scores_from_theta([[1.0, 2.0]], b=0.5)
        out = gates(scores, scalar_params())
        assert out.g_x[0] == pytest.approx(1 / (1 + math.exp(-1.5)), abs=1e-12)
        assert out.g_x[0] == pytest.approx(0.817574, abs=1e-6)

    def test_gate_uses_theta_prime_when_present(self):
        scores = self.scores_from_theta([[0.0, 0.0]], b=0.0)
        boosted = ScoreMatrix(
            theta=scores.theta, b_x_phi=scores.b_x_phi, b_y_phi=scores.b_y_phi,
            theta_prime=scores.theta + 2.0,
        )
        plain = gates(scores, scalar_params())
        shifted = gates(boosted, scalar_params())
        assert shifted.g_x[0] > plain.g_x[0]

    def test_monotone_in_margin(self):
        margins = np.linspace(-4, 4, 17)
        values = []
        for margin in margins:
            scores = self.scores_from_theta([[margin]], b=0.0)
            values.append(gates(scores, scalar_params()).g_x[0])
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_gate_saturates_to_one(self):
        scores = self.scores_from_theta([[80.0]], b=0.0)
        out = gates(scores, scalar_params())
        assert out.g_x[0] == pytest.approx(1.0, abs=1e-12)

    def test_y_gate_maxes_over_rows(self):
        theta = np.array([[1.0, 0.0], [3.0, -2.0]])
        scores = ScoreMatrix(theta=theta, b_x_phi=np.zeros(2), b_y_phi=np.array([1.0, 0.0]))
        out = gates(scores, scalar_params(d1=1.0, d2=0.0))
        assert out.g_y[0] == pytest.approx(1 / (1 + math.exp(-(3.0 - 1.0))), abs=1e-12)
        assert out.g_y[1] == pytest.approx(0.5, abs=1e-12)


class TestForwardUnidirectional:
    def test_equal_entries_give_uniform(self):
        # g_x = 0.5 makes the phi entry 0.5; theta chosen so the gated
        # products are 0.5 as well, so every pre-softmax entry matches
        theta = np.full((2, 2), 0.5 / (0.5 * 0.8))
        scores = ScoreMatrix(theta=theta, b_x_phi=np.zeros(2), b_y_phi=np.zeros(2))
        g = GateVectors(g_x=np.full(2, 0.5), g_y=np.full(2, 0.8))
        out = forward_unidirectional(scores, g)
        np.testing.assert_allclose(out.rows, np.full((2, 3), 1 / 3), atol=1e-12)

    def test_saturated_entry_takes_all_mass(self):
        theta = np.array([[1000.0, 0.0]])
        scores = ScoreMatrix(theta=theta, b_x_phi=np.zeros(1), b_y_phi=np.zeros(2))
        g = GateVectors(g_x=np.ones(1) * 0.999, g_y=np.ones(2) * 0.999)
        out = forward_unidirectional(scores, g)
        assert out.rows[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_documented_softmax_row(self):
        # pre-softmax row [0.2, 0.4] with phi entry 0.3
        theta = np.array([[0.2, 0.4]])
        scores = ScoreMatrix(theta=theta, b_x_phi=np.zeros(1), b_y_phi=np.zeros(2))
        g = GateVectors(g_x=np.array([0.7]), g_y=np.ones(2))
        out = forward_unidirectional(ScoreMatrix(theta=theta / 0.7, b_x_phi=scores.b_x_phi, b_y_phi=scores.b_y_phi), g)
        np.testing.assert_allclose(out.rows[0], softmax([0.2, 0.4, 0.3]), atol=1e-12)
        np.testing.assert_allclose(out.rows[0], [0.300609, 0.367165, 0.332225], atol=1e-6)

    def test_phi_column_probabilities(self):
        scores = ScoreMatrix(theta=np.zeros((1, 3)), b_x_phi=np.zeros(1), b_y_phi=np.zeros(3))
        g = GateVectors(g_x=np.array([0.5]), g_y=np.array([0.2, 0.5, 0.9]))
        out = forward_unidirectional(scores, g)
        np.testing.assert_allclose(out.p_phi_cols, [0.8, 0.5, 0.1], atol=1e-12)

    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_rows_always_sum_to_one(self, n, m, seed):
        rng = np.random.default_rng(seed)
        params = PointerParams.init(embed_dim=4, proj_dim=3, seed=seed)
        X, Y = rng.normal(size=(n, 4)), rng.normal(size=(m, 4))
        scores = score_matrix(X, Y, params)
        out = forward_unidirectional(scores, gates(scores, params))
        np.testing.assert_allclose(out.rows.sum(axis=1), np.ones(n), atol=1e-9)


class TestCheckpoint:
    def test_save_load_round_trip(self, tmp_path):
        params = PointerParams.init(embed_dim=6, proj_dim=4, seed=3)
        params.c2 = -0.25
        path = tmp_path / "ckpt.npz"
        params.save(path, meta={"preset": "M2"})
        loaded, header = PointerParams.load(path)
        for (name, a), (_, b) in zip(params.arrays(), loaded.arrays()):
            np.testing.assert_array_equal(a, b, err_msg=name)
        assert header["preset"] == "M2"
        assert header["version"] == 1

    def test_version_check(self, tmp_path):
        params = PointerParams.init(embed_dim=2, proj_dim=2, seed=0)
        path = tmp_path / "ckpt.npz"
        params.save(path)
        import json
        import zipfile

        import numpy as np

        # tamper with the header version
        with np.load(path) as data:
            arrays = {k: data[k] for k in data.files}
        header = json.loads(bytes(arrays["__header__"]).decode())
        header["version"] = 99
        arrays["__header__"] = np.bytes_(json.dumps(header).encode())
        np.savez(path, **arrays)
        with pytest.raises(ValueError, match="version"):
            PointerParams.load(path)
