"""Training loop with metrics logging, periodic checkpoints and resume."""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

from slotswap.data import DatasetManifest, SamplingError, split_indices
from slotswap.nets import NetworkConfig, build_models
from slotswap.schema import AttributeSchema
from slotswap.training.checkpoint import (
    load_checkpoint,
    restore_train_state,
    save_checkpoint,
)
from slotswap.training.exceptions import CheckpointError, TrainingDivergenceError
from slotswap.training.metrics import METRICS_NAME, MetricsWriter
from slotswap.training.trainer import TrainConfig, create_train_state, train_iteration

logger = logging.getLogger(__name__)


def training_split(manifest: DatasetManifest, config: TrainConfig) -> Tuple[List[int], List[int]]:
    """(train, held-out) record indices of a run with ``config``.

    The split depends only on the record count, ``held_out_fraction`` and
    ``seed``, so evaluation recomputes it from the checkpoint's config.
    """
    if config.held_out_fraction == 0.0:
        return list(range(len(manifest))), []
    return split_indices(len(manifest), config.held_out_fraction, config.seed)


def check_domains(manifest: DatasetManifest, schema: AttributeSchema) -> None:
    """Raise SamplingError unless every attribute value has at least one image."""
    if len(manifest) == 0:
        raise SamplingError("Training set is empty")
    empty = [
        f"{entry.attribute}={entry.value}"
        for entry in schema.entries()
        if not manifest.indices((entry.attribute, entry.value))
    ]
    if empty:
        raise SamplingError(f"No training images for {', '.join(empty)}")


def run_training(
    config: TrainConfig,
    manifest: DatasetManifest,
    schema: AttributeSchema,
    out_dir: Union[str, Path],
    network_config: NetworkConfig,
    resume_from: Optional[Union[str, Path]] = None,
) -> Path:
    """Train for ``config.iterations`` iterations and return the final checkpoint.

    A checkpoint is written before the first iteration, every
    ``checkpoint_every`` iterations and after the last one. The metrics
    stream ``out_dir/metrics.jsonl`` gets one record per step; on resume,
    records newer than the checkpoint are dropped first so the stream
    matches an uninterrupted run.

    Args:
        config: Training configuration
        manifest: Dataset; the held-out share given by ``config`` is never
            trained on
        schema: Attribute schema (must match the manifest)
        out_dir: Run directory for checkpoints and metrics
        network_config: Architecture of freshly built networks
        resume_from: Checkpoint file or run directory to continue from

    Returns:
        Path of the final checkpoint

    Raises:
        CheckpointError: If the checkpoint does not fit this run
        TrainingDivergenceError: If training diverges; earlier checkpoints
            are kept
        SamplingError: If some attribute value has no training images;
            raised before anything is written
    """
    if manifest.schema.fingerprint() != schema.fingerprint():
        raise CheckpointError("Manifest schema differs from the training schema")
    train_idx, held_idx = training_split(manifest, config)
    manifest = manifest.subset(train_idx)
    check_domains(manifest, schema)
    logger.info(f"Training on {len(train_idx)} images, {len(held_idx)} held out")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics = MetricsWriter(out_dir / METRICS_NAME)

    if resume_from is not None:
        checkpoint = load_checkpoint(resume_from, device=config.device)
        if checkpoint.schema.fingerprint() != schema.fingerprint():
            raise CheckpointError(f"Checkpoint {checkpoint.path} was trained on another schema")
        state = restore_train_state(checkpoint, config)
        metrics.truncate(state.iteration)
        last = checkpoint.path
        logger.info(f"Resuming from {checkpoint.path} at iteration {state.iteration}")
    else:
        model = build_models(
            network_config,
            schema,
            init_seed=config.seed,
            dtype=config.torch_dtype,
            device=config.device,
        )
        state = create_train_state(config, model)
        metrics.reset()
        last = save_checkpoint(state, out_dir)

    logger.info(
        f"Training {config.mode}-level for {config.iterations} iterations "
        f"({schema.m} steps each, batch {config.batch_size})"
    )
    while state.iteration < config.iterations:
        try:
            state, reports = train_iteration(state, manifest, schema, on_report=metrics.append)
        except TrainingDivergenceError as e:
            logger.error(f"{e}; last checkpoint is {last}")
            raise
        if state.iteration % config.checkpoint_every == 0 or state.iteration == config.iterations:
            last = save_checkpoint(state, out_dir)
            mean_back = sum(r.back for r in reports) / len(reports)
            mean_dis = sum(r.discriminator for r in reports) / len(reports)
            logger.info(
                f"Iteration {state.iteration}/{config.iterations}: "
                f"back={mean_back:.4f} dis={mean_dis:.4f}"
            )

    if last.parent.resolve() != out_dir.resolve():
        last = save_checkpoint(state, out_dir)
    return last
