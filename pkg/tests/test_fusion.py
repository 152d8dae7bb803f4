"""Tests for the toy backbone, the fusion head and the loss."""

import numpy as np
import pytest

from dual_domain_fusion.core.config import FusionConfig
from dual_domain_fusion.core.fusion import (
    ToyBackbone,
    bce_loss,
    fusion_forward,
    init_fusion_params,
    merge_branches,
)
from dual_domain_fusion.core.gradcheck import check_parameters
from dual_domain_fusion.core.spatial import bidir_forward
from dual_domain_fusion.core.spectral import spectral_forward
from dual_domain_fusion.core.tensor import Tensor
from dual_domain_fusion.errors import ConfigurationError, DomainError, ShapeError


def zero_all(params):
    for parameter in params.all_parameters():
        parameter.value.data[...] = 0.0
    return params


class TestToyBackbone:
    """Test the fixed feature extractor."""

    def test_single_image_shape(self, rng):
        features = ToyBackbone(8)(rng.uniform(0.0, 1.0, size=(32, 32, 3)))
        assert features.shape == (8, 8, 8)
        assert np.all(features.data >= 0.0)

    def test_batch_shape(self, rng):
        features = ToyBackbone(4)(rng.uniform(0.0, 1.0, size=(3, 16, 24, 3)))
        assert features.shape == (3, 4, 4, 6)

    def test_same_seed_same_features(self, rng):
        images = rng.uniform(0.0, 1.0, size=(2, 16, 16, 3))
        np.testing.assert_array_equal(ToyBackbone(4, seed=3)(images).data, ToyBackbone(4, seed=3)(images).data)

    def test_odd_channels(self):
        with pytest.raises(DomainError):
            ToyBackbone(5)

    def test_extent_not_multiple_of_four(self):
        with pytest.raises(ShapeError):
            ToyBackbone(4)(np.zeros((10, 12, 3)))

    def test_grayscale_rejected(self):
        with pytest.raises(ShapeError):
            ToyBackbone(4)(np.zeros((16, 16)))


class TestFusionForward:
    """Test the merged branches, superposition and classifier."""

    def test_zero_features_give_bias(self, small_config):
        params = init_fusion_params(small_config, seed=2)
        params.bias.value.data[...] = 0.3
        logit, p = fusion_forward(Tensor(np.zeros((4, 8, 8))), small_config, params)
        assert logit.shape == ()
        assert logit.item() == pytest.approx(0.3)
        np.testing.assert_array_equal(p.data, 0.0)

    def test_zero_weights(self, small_config, rng):
        params = zero_all(init_fusion_params(small_config))
        logit, p = fusion_forward(Tensor(rng.standard_normal((4, 8, 8))), small_config, params)
        assert logit.item() == 0.0
        np.testing.assert_array_equal(p.data, 0.0)

    def test_merge_is_branch_sum(self, small_config, rng):
        params = init_fusion_params(small_config)
        x = Tensor(rng.standard_normal((4, 8, 8)))
        expected = bidir_forward(x, params.bidir)[0].data + spectral_forward(x, params.spectral).data
        np.testing.assert_allclose(merge_branches(x, small_config, params).data, expected, rtol=1e-6)

    def test_disabled_branches_pass_input(self, small_config, rng):
        cfg = small_config.with_overrides(use_bidir=False, use_spectral=False, use_superposition=False)
        params = init_fusion_params(cfg)
        x = rng.standard_normal((4, 8, 8)).astype(np.float32)
        logit, p = fusion_forward(Tensor(x), cfg, params)
        np.testing.assert_array_equal(p.data, x)
        expected = x.astype(np.float64).mean(axis=(1, 2)) @ params.classifier.value.data
        assert logit.item() == pytest.approx(expected, abs=1e-6)

    def test_batch_logits(self, small_config, rng):
        params = init_fusion_params(small_config)
        batch = rng.standard_normal((3, 4, 8, 8))
        logits, p = fusion_forward(Tensor(batch), small_config, params)
        assert logits.shape == (3,)
        assert p.shape == (3, 4, 8, 8)
        single, _ = fusion_forward(Tensor(batch[1]), small_config, params)
        assert logits.data[1] == pytest.approx(single.item(), abs=1e-5)

    def test_shape_mismatch(self, small_config):
        params = init_fusion_params(small_config)
        with pytest.raises(ConfigurationError):
            fusion_forward(Tensor(np.ones((4, 6, 6))), small_config, params)

    def test_seeded_initialization(self, small_config):
        first = init_fusion_params(small_config, seed=9).by_name()
        second = init_fusion_params(small_config, seed=9).by_name()
        assert first.keys() == second.keys()
        for name in first:
            np.testing.assert_array_equal(first[name].value.data, second[name].value.data)
        assert 'head.classifier' in first and 'head.bias' in first

    def test_parameter_groups_cover_everything(self, small_config):
        params = init_fusion_params(small_config)
        grouped = [p.name for group in params.groups().values() for p in group]
        assert sorted(grouped) == sorted(p.name for p in params.all_parameters())
        assert set(params.groups()) == {'bidir', 'spectral', 'superposition', 'classifier'}

    def test_end_to_end_gradients(self, small_config, rng):
        params = init_fusion_params(small_config, seed=1)
        x = Tensor(rng.uniform(-1.0, 1.0, size=(4, 8, 8)))
        reports = check_parameters(
            lambda: bce_loss(fusion_forward(x, small_config, params)[0], 1), params.all_parameters(), eps=1e-5
        )
        assert max(report.max_relative_error for _, report in reports) < 1e-4


class TestBceLoss:
    """Test binary cross-entropy on logits."""

    def test_zero_logit(self):
        assert bce_loss(Tensor(0.0), 1).item() == pytest.approx(np.log(2.0), abs=1e-6)

    def test_confident_and_correct(self):
        assert bce_loss(Tensor(10.0), 1).item() == pytest.approx(4.54e-5, rel=1e-3)

    @pytest.mark.parametrize('z', [-5.0, -0.3, 0.0, 2.0, 40.0])
    def test_label_symmetry(self, z):
        assert bce_loss(Tensor(z), 1).item() == pytest.approx(bce_loss(Tensor(-z), 0).item(), rel=1e-6)

    def test_large_logit_stays_finite(self):
        assert bce_loss(Tensor(-80.0), 1).item() == pytest.approx(80.0, rel=1e-6)

    def test_batch_mean(self):
        loss = bce_loss(Tensor([0.0, 0.0]), [0, 1])
        assert loss.item() == pytest.approx(np.log(2.0), abs=1e-6)

    def test_invalid_label(self):
        with pytest.raises(DomainError):
            bce_loss(Tensor(0.0), 2)


class TestConfig:
    """Test config validation."""

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            FusionConfig.from_dict({'channels': 4})

    def test_reduction_must_divide(self):
        with pytest.raises(ConfigurationError):
            FusionConfig.from_dict({'C': 6, 'reduction': 4, 'n': 2, 'r_e': 2})

    def test_tokens_must_divide(self):
        with pytest.raises(ConfigurationError):
            FusionConfig.from_dict({'C': 4, 'H': 3, 'W': 3, 'reduction': 2, 'n': 2, 'r_e': 2, 'm': 4})

    def test_freqs_count(self):
        with pytest.raises(ConfigurationError):
            FusionConfig.from_dict({'C': 4, 'reduction': 2, 'n': 2, 'r_e': 2, 'freqs': [[0, 0]]})

    def test_default_freqs_must_be_distinct(self):
        with pytest.raises(ConfigurationError):
            FusionConfig.from_dict({'C': 8, 'H': 2, 'W': 2, 'reduction': 2, 'n': 8, 'r_e': 2, 'm': 4})

    def test_round_trip_through_dict(self, small_config):
        assert FusionConfig.from_dict(small_config.to_dict()) == small_config

    def test_learning_rate_schedule(self):
        cfg = FusionConfig.from_dict(
            {'C': 4, 'reduction': 2, 'n': 2, 'r_e': 2, 'lr': 0.5, 'lr_schedule': [[2, 0.1], [4, 0.01]]}
        )
        assert [cfg.learning_rate(e) for e in range(6)] == [0.5, 0.5, 0.1, 0.1, 0.01, 0.01]
