#!/usr/bin/env python3
"""slotswap - attribute slot swapping for reconfigurable image translation.

This is the main CLI entry point. Every command validates its inputs before
writing anything and exits with 0 on success, 1 on invalid input and 2 on a
runtime failure.

Usage:
    python -m slotswap make-dataset --count 5 --out data/
    python -m slotswap train --data data/ --out runs/a
    python -m slotswap translate --ckpt runs/a --input a.png --attr color --value blue --out b.png
    python -m slotswap grid --src a.png --ref b.png --result out.png --out fig.png
"""

import argparse
import logging
import os
import re
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ._version import __version__
from .config import ConfigManager
from .core import Translator
from .data import (
    DatasetError,
    DatasetValidationError,
    build_dataset,
    from_batch,
    load_manifest,
    load_sprite_config,
    read_png,
    to_batch,
    write_png,
)
from .evaluation import (
    PROBE_KINDS,
    PROJECTIONS,
    evaluate_model,
    export_embeddings,
    render_grid,
    train_probes,
)
from .exceptions import SlotSwapError, ValidationError
from .training import load_checkpoint, run_training, training_split

LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}
EDIT_PATTERN = re.compile(r"^([^=@]+)([=@])(.+)$")


def resolve_log_level(verbose: bool = False, configured: Optional[str] = None) -> int:
    """Level from ``--verbose``, then ``SLOTSWAP_LOG`` (debug/info/warn), then ``logging.level``."""
    if verbose:
        return logging.DEBUG
    name = os.environ.get("SLOTSWAP_LOG")
    if name is not None:
        return LOG_LEVELS.get(name.strip().lower(), logging.INFO)
    return LOG_LEVELS.get(str(configured or "info").lower(), logging.INFO)


def setup_logging(level: int = logging.INFO, config: Optional[ConfigManager] = None) -> None:
    """Configure logging for the application.

    Args:
        level: Console log level
        config: Adds a DEBUG file handler when ``logging.file`` is set
    """
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        if getattr(handler, "_slotswap", False):
            root_logger.removeHandler(handler)
            handler.close()

    # Console handler with simpler format
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter("%(levelname)s - %(name)s - %(message)s"))
    console_handler._slotswap = True  # type: ignore[attr-defined]
    file_logging = config is not None and bool(config.get("logging.file"))
    root_logger.setLevel(logging.DEBUG if file_logging else level)
    root_logger.addHandler(console_handler)

    # Silence noisy image libraries (even in verbose mode)
    for noisy_logger in ["PIL", "matplotlib"]:
        logging.getLogger(noisy_logger).setLevel(logging.WARNING)

    if config is None:
        return
    log_file = config.get("logging.file")
    if log_file:
        log_path = Path(log_file).expanduser()
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(logging.DEBUG)  # Always DEBUG in file
        file_handler.setFormatter(logging.Formatter(config.get("logging.format")))
        file_handler._slotswap = True  # type: ignore[attr-defined]
        root_logger.addHandler(file_handler)


class CLIParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _edit(text: str) -> Tuple[str, str, str]:
    """Parse ``attr=value`` (domain edit) or ``attr@ref.png`` (instance edit)."""
    match = EDIT_PATTERN.match(text)
    if not match:
        raise argparse.ArgumentTypeError(f"expected attr=value or attr@ref.png, got '{text}'")
    attribute, op, operand = match.groups()
    return attribute.strip(), op, operand.strip()


def _edit_list(text: str) -> List[Tuple[str, str]]:
    """Parse ``attr=value,attr=value`` for multiplex evaluation."""
    edits = []
    for part in text.split(","):
        attribute, op, value = _edit(part)
        if op != "=":
            raise argparse.ArgumentTypeError(
                f"multiplex evaluation takes attr=value edits, got '{part}'"
            )
        edits.append((attribute, value))
    return edits


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Returns:
        Parsed arguments
    """
    parser = CLIParser(
        prog="slotswap",
        description="slotswap - edit image attributes by swapping latent slots",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Render 5 sprites per attribute combination
  slotswap make-dataset --count 5 --out data/

  # Train, then change one attribute of an image
  slotswap train --data data/ --out runs/a
  slotswap translate --ckpt runs/a --input img.png --attr color --value blue --out out.png

  # Take the shape of b.png, then lay the three images out side by side
  slotswap transfer --ckpt runs/a --input a.png --ref b.png --attr shape --out out.png
  slotswap grid --src a.png --ref b.png --result out.png --out fig.png

Verbosity: --verbose or SLOTSWAP_LOG={debug,info,warn}
""",
    )
    parser.add_argument("--version", action="version", version=f"slotswap {__version__}")
    parser.add_argument("--config", metavar="PATH", help="YAML or JSON settings file")
    parser.add_argument("--seed", type=int, help="Seed for every random choice of the command")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")

    # --config and --seed are also accepted after the command name
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument(
        "--config", metavar="PATH", default=argparse.SUPPRESS, help=argparse.SUPPRESS
    )
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CLIParser)
    commands.required = True

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return commands.add_parser(name, help=help_text, parents=[shared])

    p = command("make-dataset", "Render a labelled sprite dataset")
    p.add_argument(
        "--count", type=_positive_int, required=True, help="Images per value combination"
    )
    p.add_argument("--out", required=True, metavar="DIR", help="Dataset directory")

    p = command("train", "Train encoder, generator and discriminators")
    p.add_argument("--data", required=True, metavar="PATH", help="Dataset directory or manifest")
    p.add_argument("--out", required=True, metavar="DIR", help="Run directory")
    p.add_argument("--iterations", type=int, help="Override training.iterations")
    p.add_argument("--mode", choices=["instance", "domain"], help="Override training.mode")
    p.add_argument("--resume", metavar="CKPT", help="Checkpoint file or run directory to resume")

    p = command("translate", "Domain-level translation of one attribute")
    p.add_argument("--ckpt", required=True, help="Checkpoint file or run directory")
    p.add_argument("--input", required=True, help="Source PNG")
    p.add_argument("--attr", required=True, help="Attribute to change")
    p.add_argument("--value", required=True, help="Target value")
    p.add_argument("--out", required=True, help="Output PNG")

    p = command("transfer", "Instance-level transfer from a reference image")
    p.add_argument("--ckpt", required=True, help="Checkpoint file or run directory")
    p.add_argument("--input", required=True, help="Source PNG")
    p.add_argument("--ref", required=True, help="Reference PNG")
    p.add_argument("--attr", required=True, help="Attribute to take from the reference")
    p.add_argument("--out", required=True, help="Output PNG")

    p = command("multiplex", "Change several attributes at once")
    p.add_argument("--ckpt", required=True, help="Checkpoint file or run directory")
    p.add_argument("--input", required=True, help="Source PNG")
    p.add_argument(
        "--edit", type=_edit, action="append", required=True,
        help="attr=value (registry average) or attr@ref.png (reference slot); repeatable",
    )
    p.add_argument("--sequential", action="store_true", help="Apply edits one after another")
    p.add_argument("--out", required=True, help="Output PNG")

    p = command("evaluate", "Grade translations with attribute probes")
    p.add_argument("--ckpt", required=True, help="Checkpoint file or run directory")
    p.add_argument("--data", required=True, help="Dataset directory or manifest")
    p.add_argument("--out", required=True, help="Report JSON")
    p.add_argument("--samples", type=_positive_int, help="Override evaluation.sample_count")
    p.add_argument("--probe", choices=PROBE_KINDS, help="Override evaluation.probe_kind")
    p.add_argument(
        "--multiplex", type=_edit_list, action="append", default=[],
        help="Comma-separated attr=value edits graded together; repeatable",
    )
    p.add_argument(
        "--sequential", action="store_true", help="Apply multiplex edits one after another"
    )
    p.add_argument(
        "--all-sources", action="store_true",
        help="Translate any image, not only those held out of training (for unseen datasets)",
    )

    p = command("embed", "Export 2D embeddings of one attribute's slots")
    p.add_argument("--ckpt", required=True, help="Checkpoint file or run directory")
    p.add_argument("--data", required=True, help="Dataset directory or manifest")
    p.add_argument("--attr", required=True, help="Attribute to embed")
    p.add_argument("--out", required=True, help="Output CSV")
    p.add_argument("--method", choices=PROJECTIONS, help="Override evaluation.embedding_method")
    p.add_argument("--samples", type=_positive_int, help="Use at most this many images")
    p.add_argument("--real-only", action="store_true", help="Skip translated points")

    p = command("grid", "Lay out source, reference and result images")
    p.add_argument("--src", required=True, help="Source PNG")
    p.add_argument("--ref", action="append", default=[], help="Reference PNG; repeatable")
    p.add_argument("--result", required=True, help="Result PNG")
    p.add_argument("--label", help="Caption above the row")
    p.add_argument("--out", required=True, help="Output PNG")

    return parser.parse_args(argv)


def load_config(args: argparse.Namespace) -> ConfigManager:
    """Settings file plus command-line overrides."""
    config = ConfigManager.load(args.config)
    if args.seed is not None:
        for key in ("sprites.seed", "training.seed", "evaluation.seed"):
            config.set(key, args.seed)
    return config


def _read_single(path: str):
    return to_batch([read_png(path)])


def _write_single(path: str, batch) -> None:
    write_png(path, from_batch(batch)[0])


def cmd_make_dataset(args: argparse.Namespace, config: ConfigManager) -> int:
    sprites = config.sprite_config()
    manifest = build_dataset(sprites, args.count, args.out)
    print(f"✓ {len(manifest)} images written to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace, config: ConfigManager) -> int:
    if args.iterations is not None:
        config.set("training.iterations", args.iterations)
    if args.mode is not None:
        config.set("training.mode", args.mode)
    train_config = config.train_config()
    manifest = load_manifest(args.data)
    if len(manifest) == 0:
        raise DatasetValidationError(f"No images in {args.data}")
    input_size = manifest.load_image(0).pixels.shape[0]
    network_config = config.network_config(manifest.schema, input_size)
    final = run_training(
        train_config,
        manifest,
        manifest.schema,
        args.out,
        network_config,
        resume_from=args.resume,
    )
    print(f"✓ Training complete: {final}")
    return 0


def cmd_translate(args: argparse.Namespace, config: ConfigManager) -> int:
    x_src = _read_single(args.input)
    checkpoint = load_checkpoint(args.ckpt)
    translator = Translator(checkpoint.model, checkpoint.frozen_registry)
    _write_single(args.out, translator.translate(x_src, args.attr, args.value))
    print(f"✓ {args.attr}={args.value} written to {args.out}")
    return 0


def cmd_transfer(args: argparse.Namespace, config: ConfigManager) -> int:
    x_src = _read_single(args.input)
    x_ref = _read_single(args.ref)
    checkpoint = load_checkpoint(args.ckpt)
    translator = Translator(checkpoint.model, checkpoint.frozen_registry)
    _write_single(args.out, translator.transfer(x_src, x_ref, args.attr))
    print(f"✓ {args.attr} of {args.ref} transferred, written to {args.out}")
    return 0


def cmd_multiplex(args: argparse.Namespace, config: ConfigManager) -> int:
    x_src = _read_single(args.input)
    edits = [
        (attribute, operand if op == "=" else _read_single(operand))
        for attribute, op, operand in args.edit
    ]
    checkpoint = load_checkpoint(args.ckpt)
    translator = Translator(checkpoint.model, checkpoint.frozen_registry)
    _write_single(args.out, translator.multiplex(x_src, edits, sequential=args.sequential))
    print(f"✓ {len(edits)} edit(s) applied, written to {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace, config: ConfigManager) -> int:
    if args.samples is not None:
        config.set("evaluation.sample_count", args.samples)
    if args.probe is not None:
        config.set("evaluation.probe_kind", args.probe)
    checkpoint = load_checkpoint(args.ckpt)
    manifest = load_manifest(args.data, schema=checkpoint.schema)
    try:
        sprite_config = load_sprite_config(manifest)
    except DatasetError:
        sprite_config = None
    seed = config.get("evaluation.seed", 0)
    probes = train_probes(
        manifest,
        checkpoint.schema,
        seed=seed,
        kind=config.get("evaluation.probe_kind"),
        sprite_config=sprite_config,
        held_out_fraction=config.get("evaluation.held_out_fraction"),
        gate=config.get("evaluation.probe_gate"),
    )
    source_indices = None
    if not args.all_sources:
        _, held = training_split(manifest, checkpoint.train_config)
        if held:
            source_indices = held
        else:
            logging.getLogger(__name__).warning(
                "Run trained on every image; evaluating on training images"
            )
    report = evaluate_model(
        checkpoint.model,
        checkpoint.frozen_registry,
        probes,
        manifest,
        sample_count=config.get("evaluation.sample_count"),
        seed=seed,
        sprite_config=sprite_config,
        multiplex_edits=args.multiplex,
        batch_size=config.get("evaluation.batch_size"),
        source_indices=source_indices,
        sequential=args.sequential,
    )
    report.save(args.out)
    print(f"✓ Report for {len(report.rows)} attribute values written to {args.out}")
    return 0


def cmd_embed(args: argparse.Namespace, config: ConfigManager) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    manifest = load_manifest(args.data, schema=checkpoint.schema)
    table = export_embeddings(
        checkpoint.model,
        manifest,
        args.attr,
        args.out,
        registry=None if args.real_only else checkpoint.frozen_registry,
        method=args.method or config.get("evaluation.embedding_method"),
        seed=config.get("evaluation.seed", 0),
        sample_count=args.samples,
    )
    print(
        f"✓ {len(table.points)} points written to {args.out} "
        f"(separation {table.separation_real:.3f})"
    )
    return 0


def cmd_grid(args: argparse.Namespace, config: ConfigManager) -> int:
    row = [read_png(args.src)] + [read_png(r) for r in args.ref] + [read_png(args.result)]
    labels = [args.label] if args.label else None
    render_grid([row], out_path=args.out, labels=labels)
    print(f"✓ Grid written to {args.out}")
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace, ConfigManager], int]] = {
    "make-dataset": cmd_make_dataset,
    "train": cmd_train,
    "translate": cmd_translate,
    "transfer": cmd_transfer,
    "multiplex": cmd_multiplex,
    "evaluate": cmd_evaluate,
    "embed": cmd_embed,
    "grid": cmd_grid,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the slotswap CLI.

    Returns:
        Exit code (0 success, 1 invalid input, 2 runtime failure, 130 interrupted)
    """
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = resolve_log_level(args.verbose)
    setup_logging(level)
    logger = logging.getLogger(__name__)

    try:
        config = load_config(args)
        level = resolve_log_level(args.verbose, config.get("logging.level"))
        setup_logging(level, config)
        return COMMANDS[args.command](args, config)
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        print(f"✗ {e}", file=sys.stderr)
        return 1
    except (SlotSwapError, OSError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=args.verbose)
        print(f"✗ {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
