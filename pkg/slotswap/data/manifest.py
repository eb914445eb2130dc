"""Dataset manifests: generation, ingestion and domain-filtered sampling.

On-disk layout of a dataset directory::

    out_dir/images/000000.png ...
    out_dir/manifest.jsonl      header line, then one record per line
    out_dir/schema.json         attribute schema (single source of truth)
    out_dir/sprites.json        sprite config used for rendering
"""

import functools
import itertools
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from slotswap.data.exceptions import (
    DatasetError,
    DatasetValidationError,
    MalformedRecordError,
    SamplingError,
    SchemaMismatchError,
)
from slotswap.data.images import Jitter, LabeledImage, read_png, write_png
from slotswap.data.sprites import SpriteConfig, generate_sprite
from slotswap.schema import AttributeSchema, SchemaError

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"
SCHEMA_NAME = "schema.json"
SPRITES_NAME = "sprites.json"
IMAGES_DIR = "images"


@dataclass(frozen=True)
class ManifestRecord:
    """One image entry of a manifest.

    Attributes:
        path: Path relative to the dataset root
        labels: Attribute name -> value name
        jitter: Recorded rendering jitter (synthetic data only)
    """
    path: str
    labels: Dict[str, str]
    jitter: Optional[Jitter] = None

    def to_json(self) -> str:
        """Serialize as one JSON Lines record."""
        data: Dict[str, object] = {"path": self.path, "labels": self.labels}
        if self.jitter is not None:
            data["jitter"] = self.jitter.to_dict()
        return json.dumps(data, sort_keys=False)


@dataclass(frozen=True)
class DatasetManifest:
    """Validated index of a labelled image dataset.

    Attributes:
        schema: Attribute schema every record validates against
        records: Image records in file order
        schema_file: Schema file name relative to the root
        root: Dataset root directory (not part of equality)
    """
    schema: AttributeSchema
    records: Tuple[ManifestRecord, ...]
    schema_file: str = SCHEMA_NAME
    root: Path = field(default=Path("."), compare=False)

    @property
    def counts(self) -> Dict[Tuple[str, str], int]:
        """(attribute, value) -> number of records carrying that value."""
        counter: Counter = Counter()
        for record in self.records:
            for attribute, value in record.labels.items():
                counter[(attribute, value)] += 1
        return {
            (entry.attribute, entry.value): counter.get((entry.attribute, entry.value), 0)
            for entry in self.schema.entries()
        }

    def __len__(self) -> int:
        return len(self.records)

    def indices(self, filter: Optional[Tuple[str, str]] = None) -> List[int]:
        """Record indices, optionally restricted to one (attribute, value) domain."""
        if filter is None:
            return list(range(len(self.records)))
        attribute, value = filter
        return [i for i, r in enumerate(self.records) if r.labels.get(attribute) == value]

    def load_image(self, index: int) -> LabeledImage:
        """Decode one record into a LabeledImage.

        Raises:
            DatasetError: If the image file cannot be read
        """
        record = self.records[index]
        pixels = _read_cached(str(self.root / record.path))
        return LabeledImage(
            pixels=pixels.copy(),
            labels=dict(record.labels),
            jitter=record.jitter,
            path=record.path,
        )

    def subset(self, indices: Sequence[int]) -> "DatasetManifest":
        """Manifest restricted to the given record indices (order kept)."""
        return DatasetManifest(
            schema=self.schema,
            records=tuple(self.records[i] for i in indices),
            schema_file=self.schema_file,
            root=self.root,
        )


@functools.lru_cache(maxsize=8192)
def _read_cached(path: str) -> np.ndarray:
    return read_png(path)


def _combinations(schema: AttributeSchema) -> List[Dict[str, str]]:
    names = schema.names
    return [
        dict(zip(names, values))
        for values in itertools.product(*(a.values for a in schema.attributes))
    ]


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def build_dataset(
    config: SpriteConfig,
    count_per_combination: int,
    out_dir: Union[str, Path],
) -> DatasetManifest:
    """Render ``count_per_combination`` sprites for every value combination.

    Record ``i`` is rendered from ``default_rng([config.seed, i])`` so the
    dataset is reproducible and records are independent of each other.

    Args:
        config: Sprite configuration (schema, render map, jitter, seed)
        count_per_combination: Images per full attribute-value combination
        out_dir: Output directory

    Returns:
        The written manifest

    Raises:
        DatasetError: On I/O failure
        DatasetValidationError: If count_per_combination is negative
    """
    if count_per_combination < 0:
        raise DatasetValidationError(
            f"count_per_combination must be >= 0, got {count_per_combination}"
        )

    root = Path(out_dir)
    schema = config.schema
    records: List[ManifestRecord] = []
    try:
        root.mkdir(parents=True, exist_ok=True)
        index = 0
        for labels in _combinations(schema):
            for _ in range(count_per_combination):
                rng = np.random.default_rng([config.seed, index])
                image = generate_sprite(config, labels, rng)
                rel = f"{IMAGES_DIR}/{index:06d}.png"
                write_png(root / rel, image.pixels)
                records.append(ManifestRecord(path=rel, labels=dict(labels), jitter=image.jitter))
                index += 1

        schema.save(root / SCHEMA_NAME)
        _atomic_write_text(root / SPRITES_NAME, json.dumps(config.to_dict(), indent=2) + "\n")

        header = {
            "kind": "header",
            "version": MANIFEST_VERSION,
            "schema": SCHEMA_NAME,
            "schema_sha256": schema.fingerprint(),
        }
        lines = [json.dumps(header)] + [r.to_json() for r in records]
        _atomic_write_text(root / MANIFEST_NAME, "\n".join(lines) + "\n")
    except OSError as e:
        raise DatasetError(f"Failed to write dataset to {root}: {e}") from e

    manifest = DatasetManifest(schema=schema, records=tuple(records), root=root.resolve())
    logger.info(
        f"Wrote {len(records)} sprites ({len(_combinations(schema))} combinations "
        f"x {count_per_combination}) to {root}"
    )
    return manifest


def load_manifest(
    path: Union[str, Path],
    schema: Optional[AttributeSchema] = None,
) -> DatasetManifest:
    """Load and validate a manifest.

    Args:
        path: Path to manifest.jsonl, or the dataset directory containing it
        schema: Optional expected schema; must match the referenced one

    Returns:
        Validated DatasetManifest

    Raises:
        DatasetError: If the manifest or schema file is missing
        SchemaMismatchError: If the schema file does not match the header hash
            (or the expected schema)
        MalformedRecordError: If a record cannot be parsed or validated
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise DatasetError(f"Manifest not found: {path}")
    root = path.parent

    with open(path, "r") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise MalformedRecordError("Manifest is empty (missing header)", line_number=1)

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise MalformedRecordError(f"Invalid header JSON: {e}", line_number=1) from e
    if header.get("kind") != "header" or "schema" not in header:
        raise MalformedRecordError("First line must be the manifest header", line_number=1)
    if header.get("version") != MANIFEST_VERSION:
        raise MalformedRecordError(
            f"Unsupported manifest version {header.get('version')}", line_number=1
        )

    schema_path = root / header["schema"]
    if not schema_path.exists():
        raise DatasetError(f"Schema file referenced by manifest not found: {schema_path}")
    try:
        file_schema = AttributeSchema.load(schema_path)
    except SchemaError as e:
        raise SchemaMismatchError(f"Referenced schema is invalid: {e}") from e
    if file_schema.fingerprint() != header.get("schema_sha256"):
        raise SchemaMismatchError(
            f"Schema file {schema_path} does not match the manifest header hash"
        )
    if schema is not None and schema.fingerprint() != file_schema.fingerprint():
        raise SchemaMismatchError("Manifest schema differs from the expected schema")

    records: List[ManifestRecord] = []
    seen = set()
    for line_number, line in enumerate(lines[1:], start=2):
        try:
            data = json.loads(line)
            rel = str(data["path"])
            labels = {str(k): str(v) for k, v in dict(data["labels"]).items()}
            jitter = Jitter.from_dict(data["jitter"]) if data.get("jitter") else None
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise MalformedRecordError(str(e), line_number=line_number, record=line) from e
        try:
            file_schema.validate_labels(labels)
        except SchemaError as e:
            raise MalformedRecordError(str(e), line_number=line_number, record=rel) from e
        if rel in seen:
            raise MalformedRecordError("Duplicate path", line_number=line_number, record=rel)
        seen.add(rel)
        records.append(ManifestRecord(path=rel, labels=labels, jitter=jitter))

    logger.debug(f"Loaded manifest {path} with {len(records)} records")
    return DatasetManifest(
        schema=file_schema,
        records=tuple(records),
        schema_file=str(header["schema"]),
        root=root.resolve(),
    )


def sample_indices(
    manifest: DatasetManifest,
    filter: Optional[Tuple[str, str]],
    batch_size: int,
    rng: np.random.Generator,
) -> List[int]:
    """Uniformly sample record indices with replacement.

    Raises:
        SamplingError: If the (filtered) subset is empty or batch_size < 1
    """
    if batch_size < 1:
        raise SamplingError(f"batch_size must be >= 1, got {batch_size}")
    pool = manifest.indices(filter)
    if not pool:
        label = f"{filter[0]}={filter[1]}" if filter else "dataset"
        raise SamplingError(f"No records to sample from ({label})")
    picks = rng.integers(0, len(pool), size=batch_size)
    return [pool[int(i)] for i in picks]


def sample_batch(
    manifest: DatasetManifest,
    filter: Optional[Tuple[str, str]],
    batch_size: int,
    rng: np.random.Generator,
) -> List[LabeledImage]:
    """Sample a batch from the whole dataset or from one value's domain.

    Args:
        manifest: Dataset manifest
        filter: Optional (attribute, value) domain restriction
        batch_size: Number of images
        rng: Random source; the same seed reproduces the batch exactly

    Returns:
        List of LabeledImage

    Raises:
        SamplingError: If the filtered subset is empty
    """
    return [manifest.load_image(i) for i in sample_indices(manifest, filter, batch_size, rng)]


def split_indices(
    count: int,
    held_out_fraction: float,
    seed: int,
) -> Tuple[List[int], List[int]]:
    """Deterministically split ``range(count)`` into sorted (train, held-out) indices.

    Raises:
        DatasetValidationError: Unless 0 < held_out_fraction < 1
    """
    if not 0.0 < held_out_fraction < 1.0:
        raise DatasetValidationError(
            f"held_out_fraction must be in (0, 1), got {held_out_fraction}"
        )
    order = np.random.default_rng(seed).permutation(count)
    cut = int(round(count * held_out_fraction))
    held = sorted(int(i) for i in order[:cut])
    train = sorted(int(i) for i in order[cut:])
    return train, held


def split_manifest(
    manifest: DatasetManifest,
    held_out_fraction: float,
    seed: int,
) -> Tuple[DatasetManifest, DatasetManifest]:
    """Deterministically split into (train, held-out) manifests."""
    train, held = split_indices(len(manifest), held_out_fraction, seed)
    return manifest.subset(train), manifest.subset(held)


def load_sprite_config(manifest: DatasetManifest) -> SpriteConfig:
    """Read the sprite config a dataset was rendered with.

    Raises:
        DatasetError: If the dataset has no sprites.json
        DatasetValidationError: If the file is invalid
    """
    path = manifest.root / SPRITES_NAME
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except OSError as e:
        raise DatasetError(f"Sprite config not found for dataset {manifest.root}: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetValidationError(f"Invalid sprite config {path}: {e}") from e
    return SpriteConfig.from_dict(data)
