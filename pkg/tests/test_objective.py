import math

import numpy as np
import pytest
from pydantic import ValidationError

from config.configuration import LossWeights
from numerics.tensor import Tensor
from objective import (
    InstanceCanonicalizer,
    canonicalize_instances,
    instance_loss,
    reconstruction_losses,
    rgb_loss,
    semantic_loss,
    total_loss,
)
from utils.errors import ContractError, DimensionError


class TestCanonicalize:
    def test_ranks_by_area(self):
        instance = np.array([[7, 7, 7, 0], [3, 3, 0, 0], [9, 0, 0, 0]])
        np.testing.assert_array_equal(
            canonicalize_instances(instance, 8), [[1, 1, 1, 0], [2, 2, 0, 0], [3, 0, 0, 0]]
        )

    def test_area_ties_go_to_smaller_id(self):
        instance = np.array([[5, 5, 2, 2]])
        np.testing.assert_array_equal(canonicalize_instances(instance, 8), [[2, 2, 1, 1]])

    def test_overflow_shares_last_label(self):
        instance = np.array([[1, 1, 1, 1, 2, 2, 2, 3, 3, 4]])
        np.testing.assert_array_equal(canonicalize_instances(instance, 2), [[1, 1, 1, 1, 2, 2, 2, 2, 2, 2]])

    def test_background_only(self):
        np.testing.assert_array_equal(canonicalize_instances(np.zeros((2, 2), dtype=np.uint16)), np.zeros((2, 2)))

    def test_ids_are_irrelevant(self):
        instance = np.array([[1, 1, 2, 0]])
        relabeled = np.array([[40, 40, 12, 0]])
        canonicalizer = InstanceCanonicalizer(k_max=4)
        np.testing.assert_array_equal(canonicalizer(instance), canonicalizer(relabeled))


class TestCrossEntropy:
    def test_uniform_logits(self, float64):
        logits = Tensor(np.zeros((2, 4 * 5)))
        target = np.array([[0, 1, 2, 3], [4, 4, 0, 1]])
        loss = semantic_loss(logits, target, np.array([1, 1]), 5)
        assert abs(loss.item() - math.log(5)) < 1e-12

    def test_confident_logits(self, float64):
        target = np.array([[2, 0]])
        logits = np.full((1, 2, 3), -50.0)
        logits[0, 0, 2] = 50.0
        logits[0, 1, 0] = 50.0
        loss = semantic_loss(Tensor(logits.reshape(1, 6)), target, np.array([1]), 3)
        assert loss.item() < 1e-12

    def test_hand_computed(self, float64):
        # one masked patch of two pixels over two classes
        logits = Tensor(np.array([[0.0, math.log(3.0), 0.0, 0.0]]))
        loss = semantic_loss(logits, np.array([[1, 0]]), np.array([1]), 2)
        expected = (-math.log(3 / 4) - math.log(1 / 2)) / 2
        assert abs(loss.item() - expected) < 1e-12

    def test_only_masked_patches_count(self, float64, rng):
        logits = rng.normal(size=(3, 2 * 4))
        target = rng.integers(0, 4, size=(3, 2))
        mask = np.array([0, 1, 0])
        full = semantic_loss(Tensor(logits), target, mask, 4).item()
        alone = semantic_loss(Tensor(logits[1:2]), target[1:2], np.array([1]), 4).item()
        assert abs(full - alone) < 1e-12
        # changing a visible patch changes nothing
        logits[0] += 5.0
        assert semantic_loss(Tensor(logits), target, mask, 4).item() == pytest.approx(full, abs=1e-12)

    def test_nothing_masked(self, float64, rng):
        logits = Tensor(rng.normal(size=(3, 8)), requires_grad=True)
        loss = instance_loss(logits, np.zeros((3, 2), dtype=np.int64), np.zeros(3), 3)
        assert loss.item() == 0.0

    def test_all_patches(self, float64, rng):
        logits = rng.normal(size=(3, 8))
        target = rng.integers(0, 4, size=(3, 2))
        every = semantic_loss(Tensor(logits), target, np.zeros(3), 4, all_patches=True).item()
        masked = semantic_loss(Tensor(logits), target, np.ones(3), 4).item()
        assert abs(every - masked) < 1e-12

    def test_target_out_of_range(self, float64):
        with pytest.raises(ContractError):
            instance_loss(Tensor(np.zeros((1, 4))), np.array([[2, 0]]), np.array([1]), 1)

    def test_shape_mismatch(self, float64):
        with pytest.raises(DimensionError):
            semantic_loss(Tensor(np.zeros((1, 5))), np.array([[0, 0]]), np.array([1]), 2)

    def test_gradient_matches_softmax_minus_onehot(self, float64):
        logits = Tensor(np.array([[1.0, 2.0, 0.5]]), requires_grad=True)
        semantic_loss(logits, np.array([[1]]), np.array([1]), 3).backward()
        probs = np.exp([1.0, 2.0, 0.5]) / np.exp([1.0, 2.0, 0.5]).sum()
        np.testing.assert_allclose(logits.grad[0], probs - np.array([0, 1, 0]), atol=1e-12)


class TestRgbLoss:
    def test_exact_prediction(self, float64, rng):
        target = rng.random((4, 12))
        assert rgb_loss(Tensor(target), target, np.ones(4)).item() == 0.0

    def test_constant_offset(self, float64, rng):
        target = rng.random((4, 12))
        loss = rgb_loss(Tensor(target + 0.1), target, np.array([1, 0, 1, 0]))
        assert abs(loss.item() - 0.01) < 1e-12

    def test_matches_numpy(self, float64, rng):
        pred, target = rng.random((5, 6)), rng.random((5, 6))
        mask = np.array([1, 0, 0, 1, 1])
        expected = ((pred - target)[mask == 1] ** 2).mean()
        assert abs(rgb_loss(Tensor(pred), target, mask).item() - expected) < 1e-12

    def test_nothing_masked(self, float64, rng):
        assert rgb_loss(Tensor(rng.random((2, 3))), rng.random((2, 3)), np.zeros(2)).item() == 0.0

    def test_shape_mismatch(self, float64):
        with pytest.raises(DimensionError):
            rgb_loss(Tensor(np.zeros((2, 3))), np.zeros((2, 4)), np.ones(2))


class TestTotalLoss:
    def test_default_weights_sum(self):
        assert total_loss(1.0, 2.0, 3.0, LossWeights()) == 6.0

    def test_rgb_only(self):
        assert total_loss(1.0, 2.0, 3.0, LossWeights(lambda_s=0.0, lambda_i=0.0)) == 3.0

    def test_weighted(self):
        assert total_loss(1.0, 1.0, 1.0, LossWeights(lambda_s=2.0, lambda_i=1.0, lambda_r=1.0)) == 4.0
        assert total_loss(1.0, 2.0, 3.0, LossWeights(lambda_r=2.0)) == 9.0

    def test_all_zero_weights_rejected(self):
        with pytest.raises(ValidationError):
            LossWeights(lambda_s=0.0, lambda_i=0.0, lambda_r=0.0)

    def test_reconstruction_losses(self, float64, rng):
        predictions = {"S": Tensor(np.zeros((2, 4 * 5))), "I": Tensor(np.zeros((2, 4 * 3))), "R": Tensor(np.zeros((2, 12)))}
        targets = {
            "S": np.zeros((2, 4), dtype=np.int64),
            "I": np.zeros((2, 4), dtype=np.int64),
            "R": np.full((2, 12), 0.5),
        }
        masks = {g: np.array([1, 0]) for g in "SIR"}
        losses = reconstruction_losses(predictions, targets, masks, 5, 2)
        assert losses["S"].item() == pytest.approx(math.log(5))
        assert losses["I"].item() == pytest.approx(math.log(3))
        assert losses["R"].item() == pytest.approx(0.25)

    def test_missing_prediction(self):
        with pytest.raises(ContractError):
            reconstruction_losses({"S": Tensor(np.zeros((1, 1)))}, {}, {}, 5, 8)
