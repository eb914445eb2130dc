"""Synthetic sprite data, manifests and batch sampling."""

from slotswap.data.images import (
    Jitter,
    LabeledImage,
    from_batch,
    read_png,
    to_batch,
    to_float,
    to_uint8,
    write_png,
)
from slotswap.data.sprites import (
    JitterConfig,
    SpriteConfig,
    SpriteOracle,
    SpriteReading,
    draw_jitter,
    estimate_jitter,
    generate_sprite,
    render_sprite,
    rotation_error,
)
from slotswap.data.manifest import (
    DatasetManifest,
    ManifestRecord,
    build_dataset,
    load_manifest,
    load_sprite_config,
    sample_batch,
    sample_indices,
    split_indices,
    split_manifest,
)
from slotswap.data.exceptions import (
    DatasetError,
    DatasetValidationError,
    MalformedRecordError,
    SamplingError,
    SchemaMismatchError,
)

__all__ = [
    "Jitter",
    "LabeledImage",
    "from_batch",
    "read_png",
    "to_batch",
    "to_float",
    "to_uint8",
    "write_png",
    "JitterConfig",
    "SpriteConfig",
    "SpriteOracle",
    "SpriteReading",
    "draw_jitter",
    "estimate_jitter",
    "generate_sprite",
    "render_sprite",
    "rotation_error",
    "DatasetManifest",
    "ManifestRecord",
    "build_dataset",
    "load_manifest",
    "load_sprite_config",
    "sample_batch",
    "sample_indices",
    "split_indices",
    "split_manifest",
    "DatasetError",
    "DatasetValidationError",
    "MalformedRecordError",
    "SamplingError",
    "SchemaMismatchError",
]
