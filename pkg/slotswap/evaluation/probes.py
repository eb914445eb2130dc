"""Attribute probes: classifiers that read attribute values off images.

Probes grade translated images, so they are only trusted when they read
real held-out images almost perfectly (``PROBE_GATE``).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import Pipeline, make_pipeline
from sklearn.preprocessing import StandardScaler

from slotswap.data import (
    DatasetManifest,
    SpriteConfig,
    SpriteOracle,
    load_sprite_config,
    split_manifest,
    to_uint8,
)
from slotswap.evaluation.exceptions import EvaluationInputError, EvaluationVoidError
from slotswap.schema import AttributeSchema

logger = logging.getLogger(__name__)

PROBE_GATE = 0.98
PROBE_KINDS = ("oracle", "learned")
FEATURE_SIZE = 16


class OracleProbe:
    """Reads one attribute with the analytic sprite oracle."""

    def __init__(self, oracle: SpriteOracle, attribute: str):
        self.oracle = oracle
        self.attribute = attribute

    def predict(self, pixels: np.ndarray) -> List[Optional[str]]:
        """Predicted value per image of an N×H×W×3 batch (None if unreadable)."""
        return [self.oracle.read_labels(p).get(self.attribute) for p in pixels]


def probe_features(pixels: np.ndarray) -> np.ndarray:
    """Box-downsampled RGB features (N × 3·16·16) in [0, 1]."""
    rows = []
    for p in pixels:
        small = Image.fromarray(to_uint8(p)).resize((FEATURE_SIZE, FEATURE_SIZE), Image.BOX)
        rows.append(np.asarray(small, dtype=np.float64).reshape(-1) / 255.0)
    return np.stack(rows)


class LearnedProbe:
    """Logistic regression on downsampled pixels for one attribute."""

    def __init__(self, attribute: str, seed: int = 0):
        self.attribute = attribute
        self.pipeline: Pipeline = make_pipeline(
            StandardScaler(),
            LogisticRegression(max_iter=2000, random_state=seed),
        )

    def fit(self, pixels: np.ndarray, labels: Sequence[str]) -> "LearnedProbe":
        if len(set(labels)) < 2:
            raise EvaluationInputError(
                f"Cannot fit a probe for '{self.attribute}': training split has one value only"
            )
        self.pipeline.fit(probe_features(pixels), list(labels))
        return self

    def predict(self, pixels: np.ndarray) -> List[Optional[str]]:
        return [str(v) for v in self.pipeline.predict(probe_features(pixels))]


@dataclass
class ProbeSet:
    """One probe per attribute plus its held-out accuracy on real images.

    Attributes:
        kind: 'oracle' or 'learned'
        probes: Attribute -> probe
        accuracy: Attribute -> held-out accuracy on real data
        held_out: Manifest paths of the held-out images
        gate: Held-out accuracy every probe must reach
    """
    kind: str
    probes: Dict[str, object]
    accuracy: Dict[str, float] = field(default_factory=dict)
    held_out: Tuple[str, ...] = ()
    gate: float = PROBE_GATE

    def predict(self, pixels: np.ndarray) -> Dict[str, List[Optional[str]]]:
        """Attribute -> predicted values for an N×H×W×3 batch."""
        return {attribute: probe.predict(pixels) for attribute, probe in self.probes.items()}

    def check_gate(self, threshold: Optional[float] = None) -> None:
        """Raise EvaluationVoidError unless every probe reaches ``threshold`` (default: ``gate``)."""
        threshold = self.gate if threshold is None else threshold
        if any(acc < threshold for acc in self.accuracy.values()):
            raise EvaluationVoidError(self.accuracy, threshold)


def _load_pixels(manifest: DatasetManifest) -> np.ndarray:
    return np.stack([manifest.load_image(i).pixels for i in range(len(manifest))])


def train_probes(
    manifest: DatasetManifest,
    schema: Optional[AttributeSchema] = None,
    seed: int = 0,
    kind: str = "oracle",
    sprite_config: Optional[SpriteConfig] = None,
    held_out_fraction: float = 0.2,
    gate: float = PROBE_GATE,
) -> ProbeSet:
    """Build and validate one probe per attribute.

    The manifest is split into train and held-out parts by ``seed``; learned
    probes fit on the train part, and every probe is scored on the held-out
    part against the manifest labels.

    Args:
        manifest: Real labelled images
        schema: Attribute schema (defaults to the manifest's)
        seed: Split and fitting seed
        kind: 'oracle' (analytic sprite reader) or 'learned'
        sprite_config: Sprite config for the oracle (read from the dataset's
            sprites.json when omitted)
        held_out_fraction: Fraction of images used for scoring
        gate: Required held-out accuracy

    Returns:
        ProbeSet whose probes all pass the gate

    Raises:
        EvaluationInputError: If kind is unknown or data is insufficient
        EvaluationVoidError: If any probe misses the gate
    """
    if kind not in PROBE_KINDS:
        raise EvaluationInputError(f"kind must be one of {PROBE_KINDS}, got '{kind}'")
    schema = schema or manifest.schema
    train, held = split_manifest(manifest, held_out_fraction, seed)
    if len(held) == 0:
        raise EvaluationInputError("Held-out split is empty")

    probes: Dict[str, object] = {}
    if kind == "oracle":
        oracle = SpriteOracle(sprite_config or load_sprite_config(manifest))
        for attribute in schema.names:
            probes[attribute] = OracleProbe(oracle, attribute)
    else:
        train_pixels = _load_pixels(train)
        for attribute in schema.names:
            labels = [r.labels[attribute] for r in train.records]
            probes[attribute] = LearnedProbe(attribute, seed=seed).fit(train_pixels, labels)

    probe_set = ProbeSet(
        kind=kind, probes=probes, held_out=tuple(r.path for r in held.records), gate=gate
    )
    predictions = probe_set.predict(_load_pixels(held))
    for attribute in schema.names:
        truth = [r.labels[attribute] for r in held.records]
        hits = sum(p == t for p, t in zip(predictions[attribute], truth))
        probe_set.accuracy[attribute] = hits / len(truth)
    logger.info(
        f"Probe accuracy ({kind}, {len(held)} held-out images): "
        + ", ".join(f"{a}={acc:.3f}" for a, acc in probe_set.accuracy.items())
    )
    probe_set.check_gate()
    return probe_set
