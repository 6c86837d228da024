import numpy as np
import pytest

from controkit import autodiff as ad
from controkit.errors import DimensionError
from controkit.gru import BoundGru, GruParams, gru_step

from oracles import gru_scalar


def zero_params(input_dim, hidden_dim):
    return GruParams.random(input_dim, hidden_dim, np.random.default_rng(0), scale=0.0)


def run_step(x, h_prev, params, dtype=np.float64):
    g = ad.Graph(dtype)
    cell = BoundGru(g, "gru", params)
    out = gru_step(g.constant(x), g.constant(h_prev), cell)
    return out.data


class TestGruStep:
    def test_zero_params_halve_hidden(self):
        # sigma(0) = 0.5 and tanh(0) = 0 force h = 0.5 * h_prev
        h_prev = np.array([0.4, -0.8, 1.2])
        out = run_step(np.array([1.0, 2.0]), h_prev, zero_params(2, 3))
        assert np.allclose(out, 0.5 * h_prev, atol=1e-12)

    def test_zero_hidden_zero_params_gives_zero(self):
        out = run_step(np.array([1.0, -1.0]), np.zeros(3), zero_params(2, 3))
        assert np.array_equal(out, np.zeros(3))

    def test_matches_scalar_oracle(self, rng):
        params = GruParams.random(4, 3, rng, scale=0.7)
        x = rng.normal(size=4)
        h_prev = rng.normal(size=3)
        out = run_step(x, h_prev, params)
        assert np.max(np.abs(out - gru_scalar(x, h_prev, params))) < 1e-6

    def test_batched_rows_match_loop(self, rng):
        params = GruParams.random(3, 2, rng, scale=0.5)
        xs = rng.normal(size=(4, 3))
        hs = rng.normal(size=(4, 2))
        batched = run_step(xs, hs, params)
        for i in range(4):
            assert np.allclose(batched[i], gru_scalar(xs[i], hs[i], params), atol=1e-6)

    def test_shape_mismatch(self, rng):
        params = GruParams.random(3, 2, rng)
        with pytest.raises(DimensionError):
            run_step(np.zeros(5), np.zeros(2), params)
        with pytest.raises(DimensionError):
            run_step(np.zeros(3), np.zeros(4), params)

    def test_update_gate_forced_closed_returns_h_prev(self, rng):
        params = GruParams.random(3, 2, rng, scale=0.3)
        params.b_z[:] = -np.inf  # z = 0 exactly
        h_prev = rng.normal(size=2)
        out = run_step(rng.normal(size=3), h_prev, params)
        assert np.array_equal(out, h_prev)

    def test_update_gate_forced_open_returns_candidate(self, rng):
        params = GruParams.random(3, 2, rng, scale=0.3)
        params.b_z[:] = np.inf  # z = 1 exactly
        x = rng.normal(size=3)
        h_prev = rng.normal(size=2)
        out = run_step(x, h_prev, params)
        ref = gru_scalar(x, h_prev, params)  # with z = 1 this is h_cand
        assert np.allclose(out, ref, atol=1e-12)

    def test_mask_keeps_previous_state(self, rng):
        params = GruParams.random(3, 2, rng, scale=0.4)
        g = ad.Graph(np.float64)
        cell = BoundGru(g, "gru", params)
        x = g.constant(rng.normal(size=(2, 3)))
        h_prev_np = rng.normal(size=(2, 2))
        h_prev = g.constant(h_prev_np)
        mask = g.constant(np.array([[1.0], [0.0]]))
        out = gru_step(x, h_prev, cell, mask=mask)
        assert not np.allclose(out.data[0], h_prev_np[0])
        assert np.array_equal(out.data[1], h_prev_np[1])

    def test_gradients_through_step(self, rng):
        params = GruParams.random(3, 2, rng, scale=0.5)
        g = ad.Graph(np.float64)
        cell = BoundGru(g, "gru", params)
        x = g.constant(rng.normal(size=(1, 3)))
        h0 = g.constant(np.zeros((1, 2)))
        h1 = gru_step(x, h0, cell)
        h2 = gru_step(x, h1, cell)
        report = ad.grad_check(g, ad.sum_all(ad.mul(h2, h2)), 1e-5, 1e-5)
        assert report.passed
