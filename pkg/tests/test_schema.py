"""Tests for the attribute schema and slot layout."""

import pytest

from slotswap.exceptions import ValidationError
from slotswap.schema import (
    AttributeSchema,
    SchemaLookupError,
    SchemaValidationError,
    SlotLayout,
    build_layout,
)

SPRITES = {
    "attributes": [
        {"name": "shape", "values": ["circle", "square"]},
        {"name": "color", "values": ["red", "green", "blue"]},
        {"name": "size", "values": ["small", "large"]},
    ]
}


@pytest.fixture
def sprites_schema():
    return AttributeSchema.from_dict(SPRITES)


class TestAttributeSchema:

    def test_counts(self, sprites_schema):
        assert sprites_schema.n == 3
        assert sprites_schema.m == 7
        assert sprites_schema.names == ["shape", "color", "size"]

    def test_value_index(self, sprites_schema):
        assert sprites_schema.value_index("color", "blue") == (1, 2, 4)
        assert sprites_schema.value_index("shape", "circle") == (0, 0, 0)
        assert sprites_schema.value_index("size", "large") == (2, 1, 6)

    def test_entries_follow_schema_order(self, sprites_schema):
        entries = list(sprites_schema.entries())
        assert [e.global_index for e in entries] == list(range(7))
        assert [(e.attribute, e.value) for e in entries[:3]] == [
            ("shape", "circle"), ("shape", "square"), ("color", "red"),
        ]
        assert sprites_schema.entry(4).value == "blue"

    def test_unknown_names(self, sprites_schema):
        with pytest.raises(SchemaLookupError):
            sprites_schema.value_index("texture", "rough")
        with pytest.raises(SchemaLookupError) as info:
            sprites_schema.value_index("color", "purple")
        assert info.value.value == "purple"
        with pytest.raises(SchemaLookupError):
            sprites_schema.entry(7)

    def test_duplicate_attribute_rejected(self):
        doc = {"attributes": [{"name": "a", "values": ["x", "y"]}, {"name": "a", "values": ["u", "v"]}]}
        with pytest.raises(SchemaValidationError):
            AttributeSchema.from_dict(doc)

    def test_single_value_rejected(self):
        with pytest.raises(SchemaValidationError):
            AttributeSchema.from_dict({"attributes": [{"name": "a", "values": ["x"]}]})

    def test_duplicate_value_rejected(self):
        with pytest.raises(SchemaValidationError):
            AttributeSchema.from_dict({"attributes": [{"name": "a", "values": ["x", "x"]}]})

    def test_empty_and_malformed_rejected(self):
        with pytest.raises(SchemaValidationError):
            AttributeSchema.from_dict({"attributes": []})
        with pytest.raises(SchemaValidationError):
            AttributeSchema.from_dict({"attrs": []})

    def test_validation_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            AttributeSchema.from_dict({"attributes": []})
        assert issubclass(SchemaValidationError, ValidationError)

    def test_validate_labels(self, sprites_schema):
        sprites_schema.validate_labels({"shape": "square", "color": "red", "size": "small"})
        with pytest.raises(SchemaValidationError):
            sprites_schema.validate_labels({"shape": "square", "color": "red"})
        with pytest.raises(SchemaValidationError):
            sprites_schema.validate_labels(
                {"shape": "square", "color": "red", "size": "small", "angle": "0"}
            )
        with pytest.raises(SchemaLookupError):
            sprites_schema.validate_labels({"shape": "oval", "color": "red", "size": "small"})

    def test_fingerprint_is_order_sensitive(self, sprites_schema):
        reordered = AttributeSchema.from_dict(
            {"attributes": [SPRITES["attributes"][1], SPRITES["attributes"][0], SPRITES["attributes"][2]]}
        )
        assert sprites_schema.fingerprint() == AttributeSchema.from_dict(SPRITES).fingerprint()
        assert sprites_schema.fingerprint() != reordered.fingerprint()

    def test_save_and_load(self, sprites_schema, tmp_path):
        path = tmp_path / "schema.json"
        sprites_schema.save(path)
        assert AttributeSchema.load(path) == sprites_schema

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(SchemaValidationError):
            AttributeSchema.load(tmp_path / "missing.json")


class TestSlotLayout:

    def test_reference_scale_width(self, sprites_schema):
        layout = build_layout(sprites_schema, (32, 32), 256, 100)
        assert layout.total_channels == 556
        assert layout.uniqueness_range == (0, 256)
        assert layout.slot_range(0) == (256, 356)
        assert layout.slot_range(2) == (456, 556)

    def test_desk_scale_width(self, sprites_schema):
        layout = build_layout(sprites_schema, (16, 16), 64, 16)
        assert layout.total_channels == 112
        assert layout.split_sizes() == [64, 16, 16, 16]
        assert layout.slot_shape(1) == (16, 16, 16)

    def test_slot_ranges_partition_channels(self, sprites_schema):
        layout = build_layout(sprites_schema, (4, 4), 5, 3)
        covered = [layout.uniqueness_range] + [layout.slot_range(i) for i in range(layout.n)]
        assert covered[0][0] == 0
        for (_, stop), (start, _) in zip(covered, covered[1:]):
            assert stop == start
        assert covered[-1][1] == layout.total_channels

    def test_slot_range_out_of_bounds(self, sprites_schema):
        layout = build_layout(sprites_schema, (4, 4), 5, 3)
        with pytest.raises(SchemaLookupError):
            layout.slot_range(3)

    @pytest.mark.parametrize("kwargs", [
        {"spatial": (0, 4), "uniqueness_channels": 4, "attribute_channels": (2,)},
        {"spatial": (4, 4), "uniqueness_channels": 0, "attribute_channels": (2,)},
        {"spatial": (4, 4), "uniqueness_channels": 4, "attribute_channels": ()},
        {"spatial": (4, 4), "uniqueness_channels": 4, "attribute_channels": (2, 0)},
    ])
    def test_invalid_layouts(self, kwargs):
        with pytest.raises(SchemaValidationError):
            SlotLayout(**kwargs)

    def test_non_positive_attribute_width(self, sprites_schema):
        with pytest.raises(SchemaValidationError):
            build_layout(sprites_schema, (4, 4), 4, 0)

    def test_dict_form(self, sprites_schema):
        layout = build_layout(sprites_schema, (16, 16), 64, 16)
        assert SlotLayout.from_dict(layout.to_dict()) == layout
