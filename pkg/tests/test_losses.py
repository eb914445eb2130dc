"""Tests for the training objectives."""

import math

import numpy as np
import pytest
import torch

from slotswap.losses import (
    PROBABILITY_EPS,
    LossConfigError,
    LossInputError,
    LossReport,
    LossWeights,
    attribute_consistency_loss,
    back_transfer_loss,
    discriminator_loss,
    discriminator_loss_from_logits,
    distance,
    generation_loss,
    probability_eps,
    transfer_loss,
    transfer_loss_from_logits,
)

F64 = torch.float64


class TestAdversarialLosses:

    def test_transfer_loss_at_chance(self):
        torch.testing.assert_close(
            transfer_loss(torch.tensor([0.5, 0.5], dtype=torch.float64)),
            torch.tensor(math.log(2.0), dtype=torch.float64),
        )

    def test_discriminator_loss_at_chance(self):
        half = torch.full((3,), 0.5, dtype=torch.float64)
        torch.testing.assert_close(
            discriminator_loss(half, half), torch.tensor(2 * math.log(2.0), dtype=torch.float64)
        )

    def test_reference_values(self):
        assert transfer_loss(torch.tensor([0.9, 0.1], dtype=F64)).item() == pytest.approx(
            1.2040, abs=1e-4
        )
        assert discriminator_loss(
            torch.tensor([0.01], dtype=F64), torch.tensor([0.99], dtype=F64)
        ).item() == pytest.approx(0.0201, abs=1e-4)
        assert discriminator_loss(
            torch.tensor([0.99], dtype=F64), torch.tensor([0.01], dtype=F64)
        ).item() == pytest.approx(9.2103, abs=1e-4)

    def test_transfer_loss_decreases_with_confidence(self):
        probs = torch.linspace(0.01, 0.99, 50, dtype=F64)
        losses = torch.stack([transfer_loss(p.reshape(1)) for p in probs])
        assert bool((losses[1:] < losses[:-1]).all())

    def test_perfect_discriminator_is_near_zero(self):
        loss = discriminator_loss(torch.zeros(4, dtype=torch.float64), torch.ones(4, dtype=torch.float64))
        assert 0.0 <= loss.item() < 1e-5

    def test_saturated_probabilities_stay_finite(self):
        assert math.isfinite(transfer_loss(torch.zeros(2)).item())
        assert math.isfinite(discriminator_loss(torch.ones(2), torch.zeros(2)).item())
        assert transfer_loss(torch.zeros(1, dtype=torch.float64)).item() == pytest.approx(
            -math.log(PROBABILITY_EPS)
        )

    def test_empty_batch(self):
        with pytest.raises(LossInputError):
            transfer_loss(torch.tensor([]))
        with pytest.raises(LossInputError):
            discriminator_loss(torch.tensor([0.5]), torch.tensor([]))

    def test_gradcheck(self):
        p = torch.tensor([0.2, 0.7, 0.4], dtype=torch.float64, requires_grad=True)
        q = torch.tensor([0.9, 0.3, 0.6], dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(transfer_loss, (p,))
        assert torch.autograd.gradcheck(discriminator_loss, (p, q))


class TestLogitLosses:

    def test_match_probability_losses(self):
        gen = torch.Generator().manual_seed(0)
        fake = torch.empty(6, dtype=F64).uniform_(-5.0, 5.0, generator=gen)
        real = torch.empty(6, dtype=F64).uniform_(-5.0, 5.0, generator=gen)
        torch.testing.assert_close(
            transfer_loss_from_logits(fake), transfer_loss(torch.sigmoid(fake)), atol=1e-10, rtol=0
        )
        torch.testing.assert_close(
            discriminator_loss_from_logits(fake, real),
            discriminator_loss(torch.sigmoid(fake), torch.sigmoid(real)),
            atol=1e-10,
            rtol=0,
        )

    def test_gradient_survives_saturation(self):
        eps = probability_eps(F64)
        logit = torch.tensor([-40.0], dtype=F64, requires_grad=True)
        transfer_loss(torch.sigmoid(logit).clamp(eps, 1.0 - eps)).backward()
        assert logit.grad.item() == 0.0

        logit.grad = None
        transfer_loss_from_logits(logit).backward()
        assert logit.grad.item() == pytest.approx(-1.0)

        fake = torch.tensor([40.0], dtype=F64, requires_grad=True)
        discriminator_loss_from_logits(fake, torch.tensor([40.0], dtype=F64)).backward()
        assert fake.grad.item() == pytest.approx(1.0)

    def test_empty_batch(self):
        with pytest.raises(LossInputError):
            transfer_loss_from_logits(torch.tensor([]))
        with pytest.raises(LossInputError):
            discriminator_loss_from_logits(torch.tensor([0.0]), torch.tensor([]))

    def test_gradcheck(self):
        a = torch.tensor([-3.0, 0.2, 4.0], dtype=F64, requires_grad=True)
        b = torch.tensor([1.5, -0.7, 0.0], dtype=F64, requires_grad=True)
        assert torch.autograd.gradcheck(transfer_loss_from_logits, (a,))
        assert torch.autograd.gradcheck(discriminator_loss_from_logits, (a, b))


def _huber(d: float, delta: float) -> float:
    return 0.5 * d * d if abs(d) < delta else delta * (abs(d) - 0.5 * delta)


class TestScalarReference:
    """Batched losses against plain per-element loops over 100 random float64 batches."""

    @pytest.fixture
    def batches(self):
        rng = np.random.default_rng(0)
        out = []
        for _ in range(100):
            n = int(rng.integers(1, 6))
            out.append({
                "fake": rng.uniform(0.01, 0.99, n),
                "real": rng.uniform(0.01, 0.99, n),
                "a": rng.normal(size=(n, 3, 2, 2)),
                "b": rng.normal(size=(n, 3, 2, 2)),
                "weights": rng.uniform(0.0, 5.0, 3) + 0.1,
            })
        return out

    def test_adversarial_terms(self, batches):
        for batch in batches:
            fake, real = batch["fake"], batch["real"]
            expected_trans = sum(-math.log(p) for p in fake) / len(fake)
            expected_dis = (
                sum(-math.log(1.0 - p) for p in fake) / len(fake)
                + sum(-math.log(p) for p in real) / len(real)
            )
            fake_t = torch.tensor(fake, dtype=F64)
            real_t = torch.tensor(real, dtype=F64)
            assert abs(transfer_loss(fake_t).item() - expected_trans) < 1e-10
            assert abs(discriminator_loss(fake_t, real_t).item() - expected_dis) < 1e-10

    @pytest.mark.parametrize("metric", ["l1", "l2", "huber"])
    def test_distances(self, batches, metric):
        delta = 0.7
        per_element = {
            "l1": abs,
            "l2": lambda d: d * d,
            "huber": lambda d: _huber(d, delta),
        }[metric]
        for batch in batches:
            diffs = (batch["a"] - batch["b"]).reshape(-1).tolist()
            expected = sum(per_element(d) for d in diffs) / len(diffs)
            a = torch.tensor(batch["a"], dtype=F64)
            b = torch.tensor(batch["b"], dtype=F64)
            assert abs(distance(a, b, metric, delta).item() - expected) < 1e-10
            assert abs(back_transfer_loss(a, b, metric, delta).item() - expected) < 1e-10
            assert abs(attribute_consistency_loss(a, b, metric, delta).item() - expected) < 1e-10

    def test_generation_loss(self, batches):
        for batch in batches:
            l1, l2, l3 = (float(w) for w in batch["weights"])
            weights = LossWeights(lambda1=l1, lambda2=l2, lambda3=l3)
            terms = [float(v) for v in batch["fake"][:1]] + [0.25, 1.5]
            expected = l1 * terms[0] + l2 * terms[1] + l3 * terms[2]
            total = generation_loss(*(torch.tensor(t, dtype=F64) for t in terms), weights)
            assert abs(total.item() - expected) < 1e-10


class TestDistances:

    def test_metrics(self):
        a = torch.tensor([[0.0, 1.0], [2.0, -1.0]])
        b = torch.tensor([[1.0, 1.0], [0.0, -1.0]])
        assert distance(a, b, "l1").item() == pytest.approx(0.75)
        assert distance(a, b, "l2").item() == pytest.approx(1.25)
        # |d| = 1 -> 0.5, |d| = 2 -> 1.5 with delta 1
        assert distance(a, b, "huber", 1.0).item() == pytest.approx(0.5)

    def test_huber_reference_value(self):
        ones = torch.ones(2, 3, 4, 4, dtype=F64)
        assert distance(ones, torch.zeros_like(ones), "huber", 0.5).item() == pytest.approx(0.375)

    @pytest.mark.parametrize("metric", ["l1", "l2", "huber"])
    def test_gradcheck(self, metric):
        gen = torch.Generator().manual_seed(0)
        a = torch.rand(2, 3, 2, 2, dtype=F64, generator=gen).requires_grad_()
        b = torch.rand(2, 3, 2, 2, dtype=F64, generator=gen).requires_grad_()
        assert torch.autograd.gradcheck(lambda x, y: distance(x, y, metric, 0.3), (a, b))

    def test_zero_for_identical(self):
        x = torch.randn(2, 3, 4, 4)
        assert back_transfer_loss(x, x.clone()).item() == 0.0
        assert attribute_consistency_loss(x, x.clone(), "l2").item() == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(LossInputError):
            distance(torch.zeros(2, 3), torch.zeros(3, 2))
        with pytest.raises(LossInputError):
            distance(torch.zeros(0, 3), torch.zeros(0, 3))

    def test_unknown_metric(self):
        with pytest.raises(LossConfigError):
            distance(torch.zeros(2), torch.zeros(2), "cosine")


class TestGenerationLoss:

    def test_weighted_sum(self):
        weights = LossWeights(lambda1=1.0, lambda2=10.0, lambda3=0.5)
        assert generation_loss(0.2, 0.1, 2.0, weights) == pytest.approx(0.2 + 1.0 + 1.0)

    def test_zero_weight_drops_term(self):
        weights = LossWeights(lambda1=1.0, lambda2=1.0, lambda3=0.0)
        assert generation_loss(1.0, 2.0, float("nan"), weights) == pytest.approx(3.0)

    def test_tensor_gradients(self):
        t = torch.tensor(0.3, requires_grad=True)
        total = generation_loss(t, torch.tensor(0.1), torch.tensor(0.2), LossWeights())
        total.backward()
        assert t.grad.item() == pytest.approx(1.0)


class TestLossWeights:

    def test_defaults(self):
        weights = LossWeights()
        assert (weights.lambda1, weights.lambda2, weights.lambda3) == (1.0, 10.0, 10.0)
        assert weights.metric == "l1"

    def test_from_alpha(self):
        weights = LossWeights.from_alpha(0.3)
        assert weights.lambda1 == pytest.approx(0.7)
        assert weights.lambda2 == pytest.approx(0.3)
        assert weights.lambda3 == 0.0
        with pytest.raises(LossConfigError):
            LossWeights.from_alpha(1.5)

    def test_for_domain(self):
        assert LossWeights().for_domain().lambda3 == 0.0
        assert LossWeights().for_domain().lambda2 == 10.0

    @pytest.mark.parametrize("kwargs", [
        {"lambda1": -1.0},
        {"lambda2": float("inf")},
        {"lambda1": 0.0, "lambda2": 0.0, "lambda3": 0.0},
        {"metric": "cosine"},
        {"huber_delta": 0.0},
        {"attr_target": "source"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(LossConfigError):
            LossWeights(**kwargs)

    def test_from_dict(self):
        weights = LossWeights.from_dict({"lambda2": 5, "metric": "L2"})
        assert weights.lambda2 == 5.0 and weights.metric == "l2"
        assert LossWeights.from_dict(weights.to_dict()) == weights

    def test_alpha_overrides_lambdas(self):
        weights = LossWeights.from_dict({"lambda1": 1.0, "lambda2": 10.0, "lambda3": 10.0, "alpha": 0.5})
        assert (weights.lambda1, weights.lambda2, weights.lambda3) == (0.5, 0.5, 0.0)

    def test_unknown_key(self):
        with pytest.raises(LossConfigError):
            LossWeights.from_dict({"lambda4": 1.0})


class TestLossReport:

    def test_record_form(self):
        report = LossReport(value_key=3, transfer=0.7, back=0.2, attr=0.0,
                            generator_total=2.7, discriminator=1.3)
        record = report.to_record(12)
        assert record["iter"] == 12 and record["gen"] == 2.7
        assert LossReport.from_record(record) == report
        assert report.is_finite()
        assert not LossReport(0, float("nan"), 0.0, 0.0, 0.0, 0.0).is_finite()
