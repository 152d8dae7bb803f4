"""Tests for bi-directional spatial attention."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dual_domain_fusion.core.gradcheck import check_parameters, gradient_check
from dual_domain_fusion.core.spatial import (
    bidir_forward,
    init_bidir_params,
    pool_horizontal,
    pool_vertical,
)
from dual_domain_fusion.core.tensor import Tensor, make_rng, total
from dual_domain_fusion.errors import ConfigurationError, ShapeError


def zero_params(channels, reduction, gate='sigmoid'):
    params = init_bidir_params(channels, reduction, make_rng(0), gate=gate)
    for parameter in params.parameters():
        parameter.value.data[...] = 0.0
    return params


def assert_gates_shrink(seed):
    rng = make_rng(seed)
    params = init_bidir_params(4, 2, rng)
    x = (rng.standard_normal((4, 5, 6)) * 3.0).astype(np.float32)
    x_bi, _ = bidir_forward(Tensor(x), params)
    nonzero = x != 0
    assert np.all(np.abs(x_bi.data[nonzero]) < np.abs(x[nonzero]))


class TestPooling:
    """Test directional average pooling."""

    def test_constant_horizontal(self):
        pooled = pool_horizontal(Tensor(np.full((2, 3, 4), 3.0)))
        assert pooled.shape == (2, 3)
        np.testing.assert_array_equal(pooled.data, 3.0)

    def test_row_mean(self):
        x = np.zeros((1, 2, 3))
        x[0, 1] = [1.0, 2.0, 3.0]
        assert pool_horizontal(Tensor(x)).data[0, 1] == pytest.approx(2.0)

    def test_constant_vertical(self):
        pooled = pool_vertical(Tensor(np.full((2, 3, 4), -1.0)))
        assert pooled.shape == (2, 4)
        np.testing.assert_array_equal(pooled.data, -1.0)

    def test_column_mean(self):
        x = np.zeros((1, 2, 3))
        x[0, :, 2] = [0.0, 4.0]
        assert pool_vertical(Tensor(x)).data[0, 2] == pytest.approx(2.0)

    def test_matches_naive_loops(self, rng):
        x = rng.standard_normal((3, 5, 4)).astype(np.float32)
        rows = np.zeros((3, 5))
        cols = np.zeros((3, 4))
        for c in range(3):
            for h in range(5):
                for w in range(4):
                    rows[c, h] += float(x[c, h, w]) / 4
                    cols[c, w] += float(x[c, h, w]) / 5
        np.testing.assert_allclose(pool_horizontal(Tensor(x)).data, rows, rtol=0, atol=1e-6)
        np.testing.assert_allclose(pool_vertical(Tensor(x)).data, cols, rtol=0, atol=1e-6)

    def test_transpose_symmetry(self, rng):
        """Pooling columns of the transposed map is pooling rows of the original."""
        x = rng.standard_normal((3, 5, 4)).astype(np.float32)
        swapped = np.ascontiguousarray(x.transpose(0, 2, 1))
        np.testing.assert_allclose(pool_vertical(Tensor(swapped)).data, pool_horizontal(Tensor(x)).data, atol=1e-6)
        np.testing.assert_allclose(pool_horizontal(Tensor(swapped)).data, pool_vertical(Tensor(x)).data, atol=1e-6)


class TestBidirForward:
    """Test the directional gates and their product."""

    def test_zero_weights_quarter_input(self, rng):
        x = rng.standard_normal((4, 6, 5))
        x_bi, profiles = bidir_forward(Tensor(x), zero_params(4, 2))
        np.testing.assert_allclose(profiles.g_h.data, 0.5)
        np.testing.assert_allclose(profiles.g_w.data, 0.5)
        np.testing.assert_allclose(x_bi.data, x.astype(np.float32) / 4.0, rtol=1e-6)

    def test_constant_input_scales_uniformly(self, rng):
        params = init_bidir_params(4, 2, rng)
        x = np.full((4, 5, 7), 0.7)
        x_bi, profiles = bidir_forward(Tensor(x), params)
        assert np.ptp(profiles.g_h.data, axis=-1).max() < 1e-6
        assert np.ptp(profiles.g_w.data, axis=-1).max() < 1e-6
        ratio = x_bi.data / 0.7
        assert np.ptp(ratio.reshape(4, -1), axis=1).max() < 1e-5

    def test_profile_shapes(self, rng):
        params = init_bidir_params(8, 4, rng)
        x_bi, profiles = bidir_forward(Tensor(rng.standard_normal((8, 6, 5))), params)
        assert x_bi.shape == (8, 6, 5)
        assert profiles.q.shape == (1, 8, 11)
        assert profiles.f.shape == (1, 2, 11)
        assert profiles.g_h.shape == (1, 8, 6)
        assert profiles.g_w.shape == (1, 8, 5)

    def test_batch_matches_single(self, rng):
        params = init_bidir_params(4, 2, rng)
        batch = rng.standard_normal((3, 4, 6, 6))
        batched, _ = bidir_forward(Tensor(batch), params)
        for i in range(3):
            single, _ = bidir_forward(Tensor(batch[i]), params)
            np.testing.assert_allclose(batched.data[i], single.data, rtol=1e-6, atol=1e-7)

    def test_softmax_gate_normalizes_rows(self, rng):
        params = init_bidir_params(4, 2, rng, gate='softmax')
        _, profiles = bidir_forward(Tensor(rng.standard_normal((4, 6, 5))), params)
        np.testing.assert_allclose(profiles.g_h.data.sum(axis=-1), 1.0, rtol=1e-5)

    def test_ratio_separates_into_gates(self, rng):
        """With no zero entries, X_bi / X is exactly the row gate times the column gate."""
        params = init_bidir_params(4, 2, rng)
        x = (rng.uniform(0.5, 2.0, size=(4, 5, 6)) * rng.choice([-1.0, 1.0], size=(4, 5, 6))).astype(np.float32)
        x_bi, profiles = bidir_forward(Tensor(x), params)
        log_ratio = np.log(x_bi.data.astype(np.float64) / x)
        log_h = np.log(profiles.g_h.data[0].astype(np.float64))
        log_w = np.log(profiles.g_w.data[0].astype(np.float64))
        np.testing.assert_allclose(log_ratio, log_h[:, :, None] + log_w[:, None, :], rtol=0, atol=1e-5)

    def test_channel_permutation_equivariance(self, rng):
        params = init_bidir_params(4, 2, rng)
        perm = np.array([2, 0, 3, 1])
        permuted = init_bidir_params(4, 2, make_rng(0))
        permuted.K1.value.data[...] = params.K1.value.data[:, perm]
        permuted.b1.value.data[...] = params.b1.value.data
        for name in ('Kh', 'bh', 'Kw', 'bw'):
            getattr(permuted, name).value.data[...] = getattr(params, name).value.data[perm]
        x = rng.standard_normal((4, 5, 6)).astype(np.float32)
        expected, _ = bidir_forward(Tensor(x), params)
        result, _ = bidir_forward(Tensor(x[perm]), permuted)
        np.testing.assert_allclose(result.data, expected.data[perm], rtol=1e-5, atol=1e-6)

    def test_channel_mismatch(self, rng):
        params = init_bidir_params(4, 2, rng)
        with pytest.raises(ShapeError):
            bidir_forward(Tensor(np.ones((6, 4, 4))), params)

    def test_reduction_must_divide(self, rng):
        with pytest.raises(ConfigurationError):
            init_bidir_params(6, 4, rng)

    def test_gradients(self, rng):
        params = init_bidir_params(4, 2, rng)
        x = Tensor(rng.standard_normal((4, 5, 6)))
        assert gradient_check(lambda v: total(bidir_forward(v, params)[0]), x, eps=1e-5).max_relative_error < 1e-4
        reports = check_parameters(lambda: total(bidir_forward(x, params)[0]), params.parameters(), eps=1e-5)
        assert max(report.max_relative_error for _, report in reports) < 1e-4

    @given(st.integers(0, 2**32 - 1))
    @settings(deadline=None, max_examples=30)
    def test_gate_bound(self, seed):
        assert_gates_shrink(seed)

    @pytest.mark.slow
    @given(st.integers(0, 2**32 - 1))
    @settings(deadline=None, max_examples=1000)
    def test_gate_bound_thousand_inputs(self, seed):
        assert_gates_shrink(seed)
