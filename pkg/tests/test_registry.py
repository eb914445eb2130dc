"""Tests for the average-vector registry."""

import pytest
import torch

from slotswap.core import (
    AverageVectorRegistry,
    RegistryNotReadyError,
    SlotShapeError,
    registry_update,
)
from slotswap.exceptions import ValidationError
from slotswap.schema import SchemaLookupError


@pytest.fixture
def registry(micro_schema, micro_config):
    return AverageVectorRegistry(micro_schema, micro_config.layout)


def _slots(*values):
    return torch.stack([torch.full((2, 4, 4), float(v)) for v in values])


class TestUpdate:

    def test_minibatch_replaces(self, registry):
        registry.update("color", "red", _slots(1, 3))
        torch.testing.assert_close(registry.mean("color", "red"), torch.full((2, 4, 4), 2.0))
        registry.update("color", "red", _slots(10))
        torch.testing.assert_close(registry.mean("color", "red"), torch.full((2, 4, 4), 10.0))
        assert registry.count("color", "red") == 3

    def test_ema(self, micro_schema, micro_config):
        registry = AverageVectorRegistry(micro_schema, micro_config.layout, mode="ema", ema_rate=0.25)
        registry.update("shape", "square", _slots(4))
        torch.testing.assert_close(registry.mean("shape", "square"), torch.full((2, 4, 4), 4.0))
        registry.update("shape", "square", _slots(8))
        torch.testing.assert_close(registry.mean("shape", "square"), torch.full((2, 4, 4), 5.0))

    def test_mode_override(self, micro_schema, micro_config):
        registry = AverageVectorRegistry(micro_schema, micro_config.layout, mode="ema", ema_rate=0.5)
        registry.update("shape", "circle", _slots(0))
        registry_update(registry, "shape", "circle", _slots(6), mode="minibatch")
        torch.testing.assert_close(registry.mean("shape", "circle"), torch.full((2, 4, 4), 6.0))

    def test_stored_means_are_detached(self, registry):
        batch = _slots(1, 2).requires_grad_()
        registry.update("color", "blue", batch)
        assert not registry.mean("color", "blue").requires_grad

    def test_wrong_shape(self, registry):
        with pytest.raises(SlotShapeError):
            registry.update("color", "red", torch.zeros(2, 3, 4, 4))
        with pytest.raises(SlotShapeError):
            registry.update("color", "red", torch.zeros(0, 2, 4, 4))

    def test_unknown_value(self, registry):
        with pytest.raises(SchemaLookupError):
            registry.update("color", "green", _slots(1))

    def test_invalid_settings(self, micro_schema, micro_config):
        with pytest.raises(ValidationError):
            AverageVectorRegistry(micro_schema, micro_config.layout, mode="median")
        with pytest.raises(ValidationError):
            AverageVectorRegistry(micro_schema, micro_config.layout, ema_rate=0.0)


class TestLookup:

    def test_empty_entry(self, registry):
        assert registry.is_empty("color", "red")
        with pytest.raises(RegistryNotReadyError) as info:
            registry.mean("color", "red")
        assert (info.value.attribute, info.value.value) == ("color", "red")

    def test_ready_values_in_schema_order(self, registry):
        registry.update("color", "blue", _slots(1))
        assert registry.ready_values("color") == ["blue"]
        registry.update("color", "red", _slots(1))
        assert registry.ready_values("color") == ["red", "blue"]

    def test_state_dict_round_trip(self, registry, micro_schema, micro_config):
        registry.update("color", "blue", _slots(1, 2))
        registry.update("shape", "circle", _slots(5))
        restored = AverageVectorRegistry(micro_schema, micro_config.layout)
        restored.load_state_dict(registry.state_dict())
        assert set(registry.state_dict()) == {
            "avg/color/blue", "count/color/blue", "avg/shape/circle", "count/shape/circle",
        }
        torch.testing.assert_close(restored.mean("color", "blue"), registry.mean("color", "blue"))
        assert restored.count("color", "blue") == 2
        assert restored.is_empty("color", "red")

    def test_copy_is_independent(self, registry):
        registry.update("color", "red", _slots(1))
        frozen = registry.copy()
        registry.update("color", "red", _slots(9))
        torch.testing.assert_close(frozen.mean("color", "red"), torch.full((2, 4, 4), 1.0))
