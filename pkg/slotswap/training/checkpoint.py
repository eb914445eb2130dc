"""Versioned checkpoint archives.

A checkpoint is one ``torch.save`` dictionary holding the schema, network
and training configs, parameter counts, network and optimizer state, both
registries and the sampling random state. Files are named
``ckpt_<iteration>.bin`` and a ``latest`` marker file names the newest one.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch

from slotswap.core.registry import AverageVectorRegistry
from slotswap.nets import NetworkConfig, SlotSwapModel, build_models
from slotswap.schema import AttributeSchema
from slotswap.training.exceptions import CheckpointError
from slotswap.training.trainer import TrainConfig, TrainState, create_train_state

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
LATEST_NAME = "latest"


def checkpoint_name(iteration: int) -> str:
    """File name of the checkpoint written after ``iteration`` iterations."""
    return f"ckpt_{iteration:06d}.bin"


@dataclass
class Checkpoint:
    """A loaded checkpoint.

    Attributes:
        path: Source file
        iteration: Completed training iterations
        schema: Attribute schema
        network_config: Network configuration
        train_config: Training configuration
        model: Networks with restored weights (eval mode)
        registry: Minibatch registry at save time
        frozen_registry: EMA registry for inference
        payload: Raw archive dictionary
    """
    path: Path
    iteration: int
    schema: AttributeSchema
    network_config: NetworkConfig
    train_config: TrainConfig
    model: SlotSwapModel
    registry: AverageVectorRegistry
    frozen_registry: AverageVectorRegistry
    payload: Dict[str, Any]


def _write_latest(out_dir: Path, name: str) -> None:
    tmp = out_dir / (LATEST_NAME + ".tmp")
    tmp.write_text(name + "\n")
    os.replace(tmp, out_dir / LATEST_NAME)


def save_checkpoint(state: TrainState, out_dir: Union[str, Path]) -> Path:
    """Write ``state`` atomically and point ``latest`` at it.

    Returns:
        Path of the written checkpoint

    Raises:
        CheckpointError: On I/O failure
    """
    out_dir = Path(out_dir)
    model = state.model
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "iteration": state.iteration,
        "schema": model.schema.to_dict(),
        "network": model.config.to_dict(),
        "train_config": state.config.to_dict(),
        "parameter_counts": model.parameter_counts(),
        "encoder": model.encoder.state_dict(),
        "generator": model.generator.state_dict(),
        "discriminators": [d.state_dict() for d in model.discriminators],
        "gen_optimizer": state.gen_optimizer.state_dict(),
        "disc_optimizers": [o.state_dict() for o in state.disc_optimizers],
        "registry": state.registry.state_dict(),
        "frozen_registry": state.frozen_registry.state_dict(),
        "rng_state": state.rng.bit_generator.state,
    }
    name = checkpoint_name(state.iteration)
    path = out_dir / name
    tmp = out_dir / (name + ".tmp")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        torch.save(payload, tmp)
        os.replace(tmp, path)
        _write_latest(out_dir, name)
    except OSError as e:
        raise CheckpointError(f"Failed to write checkpoint {path}: {e}") from e
    logger.info(f"Saved checkpoint {path} (iteration {state.iteration})")
    return path


def resolve_checkpoint(path: Union[str, Path]) -> Path:
    """Accept a checkpoint file or a run directory with a ``latest`` marker.

    Raises:
        CheckpointError: If nothing can be resolved
    """
    path = Path(path)
    if path.is_dir():
        marker = path / LATEST_NAME
        if not marker.exists():
            raise CheckpointError(f"No '{LATEST_NAME}' marker in {path}")
        path = path / marker.read_text().strip()
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    return path


def load_checkpoint(
    path: Union[str, Path],
    device: Optional[Union[str, torch.device]] = None,
) -> Checkpoint:
    """Load and validate a checkpoint.

    Args:
        path: Checkpoint file or run directory
        device: Target device (defaults to the one used for training)

    Returns:
        Checkpoint with the model in eval mode

    Raises:
        CheckpointError: On unreadable files, a version mismatch or
            parameter counts that disagree with the stored config
    """
    path = resolve_checkpoint(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"Failed to read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        version = payload.get("format_version") if isinstance(payload, dict) else None
        raise CheckpointError(f"Unsupported checkpoint format version {version} in {path}")

    try:
        schema = AttributeSchema.from_dict(payload["schema"])
        network_config = NetworkConfig.from_dict(payload["network"])
        train_config = TrainConfig.from_dict(payload["train_config"])
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"Invalid configuration in checkpoint {path}: {e}") from e

    device = device or train_config.device
    model = build_models(network_config, schema, dtype=train_config.torch_dtype, device=device)
    counts = model.parameter_counts()
    if counts != payload.get("parameter_counts"):
        raise CheckpointError(
            f"Parameter counts in {path} do not match the stored network config"
        )
    try:
        model.encoder.load_state_dict(payload["encoder"])
        model.generator.load_state_dict(payload["generator"])
        for d, sd in zip(model.discriminators, payload["discriminators"]):
            d.load_state_dict(sd)
    except (KeyError, RuntimeError) as e:
        raise CheckpointError(f"Failed to restore weights from {path}: {e}") from e
    model.eval()

    registry = AverageVectorRegistry(schema, network_config.layout, mode="minibatch")
    registry.load_state_dict(payload.get("registry", {}))
    frozen = AverageVectorRegistry(
        schema, network_config.layout, mode="ema", ema_rate=train_config.registry_ema_rate
    )
    frozen.load_state_dict(payload.get("frozen_registry", {}))
    registry.to(device)
    frozen.to(device)

    logger.debug(f"Loaded checkpoint {path} (iteration {payload['iteration']})")
    return Checkpoint(
        path=path,
        iteration=int(payload["iteration"]),
        schema=schema,
        network_config=network_config,
        train_config=train_config,
        model=model,
        registry=registry,
        frozen_registry=frozen,
        payload=payload,
    )


def restore_train_state(checkpoint: Checkpoint, config: Optional[TrainConfig] = None) -> TrainState:
    """Rebuild a TrainState that continues exactly where the checkpoint left off.

    Args:
        checkpoint: Loaded checkpoint
        config: Training config to continue with (defaults to the stored one;
            only ``iterations`` and ``checkpoint_every`` may differ)

    Raises:
        CheckpointError: If the config changes anything that affects the
            update rule or optimizer state cannot be restored
    """
    stored = checkpoint.train_config
    config = config or stored
    changed = {
        k for k, v in config.to_dict().items()
        if k not in ("iterations", "checkpoint_every") and stored.to_dict().get(k) != v
    }
    if changed:
        raise CheckpointError(
            f"Cannot resume with a different training config ({', '.join(sorted(changed))})"
        )

    state = create_train_state(config, checkpoint.model)
    payload = checkpoint.payload
    try:
        state.gen_optimizer.load_state_dict(payload["gen_optimizer"])
        for opt, sd in zip(state.disc_optimizers, payload["disc_optimizers"]):
            opt.load_state_dict(sd)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"Failed to restore optimizer state: {e}") from e
    state.registry = checkpoint.registry.copy()
    state.frozen_registry = checkpoint.frozen_registry.copy()
    state.iteration = checkpoint.iteration
    rng = np.random.default_rng()
    rng.bit_generator.state = payload["rng_state"]
    state.rng = rng
    state.model.train()
    return state
