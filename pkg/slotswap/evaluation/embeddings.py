"""Attribute-slot embeddings: 2D projection and value separation."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import torch
from sklearn.decomposition import PCA
from sklearn.manifold import TSNE
from sklearn.model_selection import train_test_split
from sklearn.neighbors import NearestCentroid
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from slotswap.core import AverageVectorRegistry, Translator
from slotswap.data import DatasetManifest, to_batch
from slotswap.evaluation.exceptions import EvaluationError, EvaluationInputError
from slotswap.nets import SlotSwapModel

logger = logging.getLogger(__name__)

PROJECTIONS = ("pca", "tsne")
ORIGIN_REAL = "real"
ORIGIN_TRANSLATED = "translated"


@dataclass
class EmbeddingTable:
    """Projected slot vectors of one attribute.

    Attributes:
        attribute: Attribute whose slot is embedded
        points: N×2 projected coordinates
        values: Value label per point (target value for translated points)
        origins: 'real' or 'translated' per point
        vectors: N×C mean-pooled slot vectors
        separation_real: Held-out nearest-centroid accuracy on real slots
        separation_translated: Share of translated slots assigned to their
            target value (None when no translated points were made)
        method: Projection method
    """
    attribute: str
    points: np.ndarray
    values: List[str]
    origins: List[str]
    vectors: np.ndarray
    separation_real: float
    separation_translated: Optional[float]
    method: str

    def scores(self) -> dict:
        return {
            "separation_real": self.separation_real,
            "separation_translated": self.separation_translated,
        }


def pooled_slots(
    translator: Translator,
    images: torch.Tensor,
    attr_index: int,
) -> np.ndarray:
    """Attribute slots of a batch, mean-pooled over the latent grid (N×C)."""
    code = translator.encode(images)
    return code.slots[attr_index].mean(dim=(2, 3)).detach().cpu().double().numpy()


def separation_score(
    train_vectors: np.ndarray,
    train_values: Sequence[str],
    test_vectors: np.ndarray,
    test_values: Sequence[str],
) -> float:
    """Nearest-centroid accuracy in standardized slot space.

    Standardization makes the score invariant to per-dimension positive
    rescaling applied to all vectors alike.
    """
    if len(set(train_values)) < 2:
        raise EvaluationInputError("Separation needs at least two values in the fitting split")
    clf = make_pipeline(StandardScaler(), NearestCentroid())
    clf.fit(train_vectors, list(train_values))
    return float(np.mean(clf.predict(test_vectors) == np.asarray(list(test_values))))


def project(
    vectors: np.ndarray,
    method: str = "pca",
    seed: int = 0,
    fit_rows: Optional[int] = None,
) -> np.ndarray:
    """2D projection; PCA is fit on the first ``fit_rows`` rows (default all)."""
    if method == "pca":
        pca = PCA(n_components=2, random_state=seed)
        pca.fit(vectors[: fit_rows or len(vectors)])
        return pca.transform(vectors)
    if method == "tsne":
        perplexity = float(min(30, max(1, len(vectors) - 1)))
        tsne = TSNE(n_components=2, init="pca", perplexity=perplexity, random_state=seed)
        return tsne.fit_transform(vectors)
    raise EvaluationInputError(f"method must be one of {PROJECTIONS}, got '{method}'")


def embed_attribute(
    models: SlotSwapModel,
    manifest: DatasetManifest,
    attribute: str,
    registry: Optional[AverageVectorRegistry] = None,
    method: str = "pca",
    seed: int = 0,
    sample_count: Optional[int] = None,
    batch_size: int = 64,
) -> EmbeddingTable:
    """Embed real (and translated) images' slots for ``attribute``.

    Real images are encoded directly. When a registry is given, each real
    image is also translated (domain level) to a random other value of the
    attribute and re-encoded; those points carry the target value and
    origin 'translated'. The separation score is computed in the full slot
    space: a nearest-centroid classifier is fit on a value-stratified half of
    the real vectors and scored on the other half, then applied to the
    translated vectors.

    Args:
        models: Trained networks (left unmodified)
        manifest: Real images
        attribute: Attribute whose slot to embed
        registry: Frozen registry enabling translated points
        method: 'pca' (default) or 'tsne'
        seed: Sampling, split and projection seed
        sample_count: Use at most this many real images
        batch_size: Images per forward pass

    Returns:
        EmbeddingTable

    Raises:
        EvaluationInputError: On an unknown method or too little data
    """
    attr_index = models.schema.attr_index(attribute)
    values_of_attr = list(models.schema.attribute(attribute).values)
    if method not in PROJECTIONS:
        raise EvaluationInputError(f"method must be one of {PROJECTIONS}, got '{method}'")

    rng = np.random.default_rng(seed)
    indices = list(range(len(manifest)))
    if sample_count is not None and sample_count < len(indices):
        indices = sorted(int(i) for i in rng.choice(len(indices), size=sample_count, replace=False))
    if len(indices) < 4:
        raise EvaluationInputError(f"Need at least 4 images to embed, got {len(indices)}")

    translator = Translator(models, registry)
    real_vectors: List[np.ndarray] = []
    real_values: List[str] = []
    trans_vectors: List[np.ndarray] = []
    trans_values: List[str] = []
    for start in range(0, len(indices), batch_size):
        chunk = indices[start:start + batch_size]
        images = [manifest.load_image(i) for i in chunk]
        x = to_batch(images)
        real_vectors.append(pooled_slots(translator, x, attr_index))
        real_values.extend(img.labels[attribute] for img in images)
        if registry is None:
            continue
        for img, x_one in zip(images, x.split(1)):
            choices = [
                v for v in values_of_attr
                if v != img.labels[attribute] and not registry.is_empty(attribute, v)
            ]
            if not choices:
                continue
            target = choices[int(rng.integers(len(choices)))]
            x_trans = translator.translate(x_one, attribute, target)
            trans_vectors.append(pooled_slots(translator, x_trans, attr_index))
            trans_values.append(target)

    real = np.concatenate(real_vectors)
    try:
        fit_idx, score_idx = train_test_split(
            np.arange(len(real)), test_size=0.5, stratify=real_values, random_state=seed
        )
    except ValueError as e:
        raise EvaluationInputError(f"Cannot split '{attribute}' slots by value: {e}") from e
    fit_values = [real_values[i] for i in fit_idx]
    separation_real = separation_score(
        real[fit_idx], fit_values, real[score_idx], [real_values[i] for i in score_idx]
    )
    separation_translated = None
    vectors = real
    values = list(real_values)
    origins = [ORIGIN_REAL] * len(real)
    if trans_vectors:
        translated = np.concatenate(trans_vectors)
        separation_translated = separation_score(real[fit_idx], fit_values, translated, trans_values)
        vectors = np.concatenate([real, translated])
        values += trans_values
        origins += [ORIGIN_TRANSLATED] * len(translated)

    points = project(vectors, method=method, seed=seed, fit_rows=len(real))
    logger.info(
        f"Embedded {len(real)} real and {len(vectors) - len(real)} translated '{attribute}' slots "
        f"({method}); separation real={separation_real:.3f}"
        + (f" translated={separation_translated:.3f}" if separation_translated is not None else "")
    )
    return EmbeddingTable(
        attribute=attribute,
        points=points,
        values=values,
        origins=origins,
        vectors=vectors,
        separation_real=separation_real,
        separation_translated=separation_translated,
        method=method,
    )


def write_embeddings(table: EmbeddingTable, out_path: Union[str, Path]) -> Path:
    """Write projected points as CSV with columns x, y, value, origin.

    Raises:
        EvaluationError: If the CSV cannot be written
    """
    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["x", "y", "value", "origin"])
            for (px, py), value, origin in zip(table.points, table.values, table.origins):
                writer.writerow([f"{px:.6f}", f"{py:.6f}", value, origin])
    except OSError as e:
        raise EvaluationError(f"Failed to write embeddings to {out_path}: {e}") from e
    return out_path


def export_embeddings(
    models: SlotSwapModel,
    manifest: DatasetManifest,
    attribute: str,
    out_path: Union[str, Path],
    registry: Optional[AverageVectorRegistry] = None,
    method: str = "pca",
    seed: int = 0,
    sample_count: Optional[int] = None,
    batch_size: int = 64,
) -> EmbeddingTable:
    """Embed ``attribute``'s slots (see ``embed_attribute``) and write the CSV to ``out_path``.

    Raises:
        EvaluationInputError: On an unknown method or too little data
        EvaluationError: If the CSV cannot be written
    """
    table = embed_attribute(
        models, manifest, attribute, registry=registry, method=method, seed=seed,
        sample_count=sample_count, batch_size=batch_size,
    )
    write_embeddings(table, out_path)
    return table
