"""Tests for training steps, iterations and the training config."""

from dataclasses import replace

import numpy as np
import pytest
import torch

import slotswap.core.translate as translate_module
from slotswap.data import SamplingError
from slotswap.losses import LossWeights
from slotswap.training import (
    TrainConfig,
    TrainConfigError,
    TrainingDivergenceError,
    augmentation_decision,
    create_train_state,
    discriminator_update,
    train_iteration,
    train_step,
)


def _snapshot(module):
    return [p.detach().clone() for p in module.parameters()]


def _unchanged(module, snapshot):
    return all(torch.equal(p, q) for p, q in zip(module.parameters(), snapshot))


@pytest.fixture
def state(micro_model, micro_train_config):
    return create_train_state(micro_train_config, micro_model)


@pytest.fixture
def recorded(monkeypatch):
    """Record encode inputs and codes, decode codes and outputs of the translate module."""
    calls = {"encoded": [], "encodings": [], "codes": [], "decoded": []}
    encode, decode = translate_module.encode, translate_module.decode

    def recording_encode(models, images):
        calls["encoded"].append(images.detach().clone())
        code = encode(models, images)
        calls["encodings"].append(code.detach())
        return code

    def recording_decode(models, code):
        calls["codes"].append(code.detach())
        out = decode(models, code)
        calls["decoded"].append(out.detach().clone())
        return out

    monkeypatch.setattr(translate_module, "encode", recording_encode)
    monkeypatch.setattr(translate_module, "decode", recording_decode)
    return calls


class TestTrainStep:

    def test_updates_only_encoder_generator_and_target_discriminator(self, state, micro_dataset):
        model = state.model
        before = {
            "encoder": _snapshot(model.encoder),
            "generator": _snapshot(model.generator),
            **{k: _snapshot(d) for k, d in enumerate(model.discriminators)},
        }
        _, report = train_step(state, micro_dataset, "color", "blue")
        assert report.value_key == 3
        assert not _unchanged(model.encoder, before["encoder"])
        assert not _unchanged(model.generator, before["generator"])
        assert not _unchanged(model.discriminators[3], before[3])
        for k in (0, 1, 2):
            assert _unchanged(model.discriminators[k], before[k])

    def test_zero_learning_rates_change_nothing(self, micro_model, micro_train_config, micro_dataset):
        config = replace(micro_train_config, lr=0.0, discriminator_lr=0.0)
        state = create_train_state(config, micro_model)
        before = _snapshot(micro_model)
        train_step(state, micro_dataset, "shape", "square")
        assert _unchanged(micro_model, before)

    def test_registries_hold_the_reference_slots(self, state, micro_dataset, micro_train_config):
        train_step(state, micro_dataset, "shape", "circle")
        assert state.registry.count("shape", "circle") == micro_train_config.batch_size
        assert state.registry.mean("shape", "circle").shape == (2, 4, 4)
        assert not state.frozen_registry.is_empty("shape", "circle")
        assert state.registry.is_empty("color", "red")

    def test_report_components(self, state, micro_dataset):
        _, report = train_step(state, micro_dataset, "color", "red")
        weights = state.config.weights
        expected = (
            weights.lambda1 * report.transfer
            + weights.lambda2 * report.back
            + weights.lambda3 * report.attr
        )
        assert report.generator_total == pytest.approx(expected)
        assert report.is_finite()
        assert report.attr > 0.0

    def test_attribute_cycle_runs_in_instance_mode_only(
        self, micro_model, micro_train_config, micro_dataset, monkeypatch
    ):
        calls = []
        original = translate_module.attribute_cycle

        def counting(*args, **kwargs):
            calls.append(args[3])
            return original(*args, **kwargs)

        monkeypatch.setattr(translate_module, "attribute_cycle", counting)
        state = create_train_state(micro_train_config, micro_model)
        train_step(state, micro_dataset, "color", "red")
        assert calls == [1]

        domain = create_train_state(replace(micro_train_config, mode="domain"), micro_model)
        _, report = train_step(domain, micro_dataset, "color", "red")
        assert calls == [1]
        assert report.attr == 0.0

        weights = LossWeights(lambda1=1.0, lambda2=10.0, lambda3=0.0)
        no_attr = create_train_state(replace(micro_train_config, weights=weights), micro_model)
        train_step(no_attr, micro_dataset, "color", "red")
        assert calls == [1]

    def test_domain_mode_transfers_the_reference_batch_mean(
        self, micro_model, micro_train_config, micro_dataset, recorded
    ):
        state = create_train_state(replace(micro_train_config, mode="domain"), micro_model)
        train_step(state, micro_dataset, "color", "blue")
        z_ref = recorded["encodings"][1]
        expected = z_ref.slots[1].mean(dim=0)
        transfer_code = recorded["codes"][0]
        for row in transfer_code.slots[1]:
            torch.testing.assert_close(row, expected)
        torch.testing.assert_close(state.registry.mean("color", "blue"), expected)

    def test_empty_domain(self, state, micro_dataset):
        reds = micro_dataset.subset(micro_dataset.indices(("color", "red")))
        with pytest.raises(SamplingError):
            train_step(state, reds, "color", "blue")

    def test_divergence(self, micro_model, micro_train_config, micro_dataset):
        config = replace(micro_train_config, divergence_threshold=1e-9)
        state = create_train_state(config, micro_model)
        before = _snapshot(micro_model)
        with pytest.raises(TrainingDivergenceError) as info:
            train_step(state, micro_dataset, "shape", "circle")
        assert info.value.iteration == 1
        assert info.value.report.value_key == 0
        assert _unchanged(micro_model, before)


class TestDiscriminatorUpdate:

    def test_no_gradient_reaches_encoder(self, state, micro_dataset):
        model = state.model
        x = torch.rand(2, 3, 16, 16, dtype=torch.float64) * 2 - 1
        x_trans = model.generate(model.encode(x))
        model.zero_grad(set_to_none=True)
        discriminator_update(state, 1, x_trans, x)
        assert all(p.grad is None for p in model.generator_parameters())
        assert model.discriminators[1].net[0][0].weight.grad is not None

    def test_fixed_batch_loss_decreases(self, micro_model, micro_train_config):
        config = replace(micro_train_config, discriminator_lr=1e-2)
        state = create_train_state(config, micro_model)
        g = torch.Generator().manual_seed(0)
        fake = torch.rand(4, 3, 16, 16, generator=g, dtype=torch.float64) * 2 - 1
        real = torch.full((4, 3, 16, 16), 0.5, dtype=torch.float64)
        losses = [discriminator_update(state, 0, fake, real) for _ in range(30)]
        assert losses[-1] < losses[0]


class TestTrainIteration:

    def test_visits_every_value_in_order(self, state, micro_dataset):
        seen = []
        state, reports = train_iteration(
            state, micro_dataset, on_report=lambda i, r: seen.append((i, r.value_key))
        )
        assert [r.value_key for r in reports] == [0, 1, 2, 3]
        assert seen == [(1, 0), (1, 1), (1, 2), (1, 3)]
        assert state.iteration == 1

    def test_same_seed_same_reports(self, micro_config, micro_schema, micro_train_config, micro_dataset):
        from slotswap.nets import build_models

        runs = []
        for _ in range(2):
            model = build_models(micro_config, micro_schema, init_seed=0, dtype=torch.float64)
            state = create_train_state(micro_train_config, model)
            _, reports = train_iteration(state, micro_dataset)
            runs.append(reports)
        assert runs[0] == runs[1]

    def test_augmentation_uses_registry_values(self, micro_model, micro_train_config, micro_dataset):
        config = replace(micro_train_config, multiplex_augment_prob=1.0)
        state = create_train_state(config, micro_model)
        state, reports = train_iteration(state, micro_dataset)
        assert all(r.is_finite() for r in reports)

    def test_augmentation_swaps_in_the_registry_mean(
        self, micro_model, micro_train_config, micro_dataset, recorded
    ):
        config = replace(micro_train_config, multiplex_augment_prob=1.0)
        state = create_train_state(config, micro_model)
        g = torch.Generator().manual_seed(4)
        state.registry.update("color", "blue", torch.randn(2, 2, 4, 4, generator=g, dtype=torch.float64))
        mean = state.registry.mean("color", "blue").clone()

        # target is shape, so the only attribute to convert is color, whose only ready value is blue
        train_step(state, micro_dataset, "shape", "circle")
        augment_code = recorded["codes"][0]
        for row in augment_code.slots[1]:
            torch.testing.assert_close(row, mean)
        torch.testing.assert_close(augment_code.uniqueness, recorded["encodings"][0].uniqueness)
        x_src, x_augmented = recorded["encoded"][0], recorded["encoded"][1]
        assert not torch.equal(x_src, x_augmented)
        torch.testing.assert_close(x_augmented, recorded["decoded"][0])


class TestAugmentationDecision:

    def test_rate_and_targets(self):
        rng = np.random.default_rng(0)
        picks = [augmentation_decision(rng, 0.3, 4, 2) for _ in range(10000)]
        chosen = [p for p in picks if p is not None]
        assert len(chosen) / len(picks) == pytest.approx(0.3, abs=0.02)
        assert 2 not in chosen
        counts = np.bincount(chosen, minlength=4)
        assert counts[2] == 0
        for k in (0, 1, 3):
            assert counts[k] / len(chosen) == pytest.approx(1 / 3, abs=0.03)

    def test_disabled_draws_nothing(self):
        rng = np.random.default_rng(5)
        assert augmentation_decision(rng, 0.0, 3, 0) is None
        assert augmentation_decision(rng, 1.0, 1, 0) is None
        assert rng.random() == np.random.default_rng(5).random()

    def test_certain(self):
        assert augmentation_decision(np.random.default_rng(0), 1.0, 2, 0) == 1
        assert augmentation_decision(np.random.default_rng(0), 1.0, 2, 1) == 0


class TestTrainConfig:

    def test_effective_weights(self):
        assert TrainConfig().effective_weights.lambda3 == 10.0
        assert TrainConfig(mode="domain").effective_weights.lambda3 == 0.0

    @pytest.mark.parametrize("kwargs", [
        {"batch_size": 0},
        {"mode": "pixel"},
        {"multiplex_augment_prob": 1.5},
        {"betas": (0.5, 1.0)},
        {"checkpoint_every": 0},
        {"dtype": "float16"},
        {"registry_ema_rate": 0.0},
        {"held_out_fraction": 1.0},
        {"held_out_fraction": -0.1},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(TrainConfigError):
            TrainConfig(**kwargs)

    def test_dict_form(self):
        config = TrainConfig(iterations=5, betas=(0.0, 0.9), mode="domain")
        assert TrainConfig.from_dict(config.to_dict()) == config

    def test_unknown_key(self):
        with pytest.raises(TrainConfigError):
            TrainConfig.from_dict({"epochs": 3})
