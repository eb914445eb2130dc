"""Bordered image panels: source, reference and result columns."""

import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from slotswap.data import to_uint8
from slotswap.evaluation.exceptions import EvaluationError, EvaluationInputError

logger = logging.getLogger(__name__)

ROLE_COLORS = {
    "source": (0, 170, 0),
    "reference": (220, 0, 0),
    "result": (0, 0, 230),
}
CANVAS_COLOR = (255, 255, 255)
CAPTION_HEIGHT = 12


def default_roles(columns: int) -> Tuple[str, ...]:
    """Source first, result last, references in between."""
    if columns == 1:
        return ("result",)
    return ("source",) + ("reference",) * (columns - 2) + ("result",)


def _as_uint8(image: np.ndarray) -> np.ndarray:
    return image if image.dtype == np.uint8 else to_uint8(image)


def render_grid(
    rows: Sequence[Sequence[np.ndarray]],
    out_path: Optional[Union[str, Path]] = None,
    labels: Optional[Sequence[str]] = None,
    roles: Optional[Sequence[str]] = None,
    border: int = 2,
    pad: int = 4,
) -> np.ndarray:
    """Lay images out in a grid with role-colored borders.

    Canvas width is ``cols*S + (cols+1)*pad + cols*2*border``; height follows
    the same rule over rows, plus a caption band per row when ``labels`` are
    given.

    Args:
        rows: Rows of H×W×3 images (uint8, or float in [-1, 1])
        out_path: Optional PNG destination
        labels: Optional caption per row
        roles: Role per column ('source', 'reference', 'result' or 'none');
            defaults to source, references..., result
        border: Border width in pixels
        pad: Gap between cells in pixels

    Returns:
        The canvas as an H×W×3 uint8 array

    Raises:
        EvaluationInputError: On empty rows, mixed image sizes or bad roles
        EvaluationError: If the PNG cannot be written

    Examples:
        >>> render_grid([[src, ref, out]]).shape
        (76, 220, 3)
    """
    if not rows or any(len(r) == 0 for r in rows):
        raise EvaluationInputError("Grid needs at least one non-empty row")
    images = [[_as_uint8(np.asarray(img)) for img in row] for row in rows]
    shape = images[0][0].shape
    if len(shape) != 3 or shape[2] != 3:
        raise EvaluationInputError(f"Grid images must be H×W×3, got {shape}")
    if any(img.shape != shape for row in images for img in row):
        raise EvaluationInputError("All grid images must have the same size")
    if labels is not None and len(labels) != len(rows):
        raise EvaluationInputError(f"Got {len(labels)} labels for {len(rows)} rows")

    cols = max(len(r) for r in images)
    roles = tuple(roles) if roles is not None else default_roles(cols)
    if len(roles) != cols or any(r not in ROLE_COLORS and r != "none" for r in roles):
        raise EvaluationInputError(f"Invalid column roles {roles} for {cols} columns")

    h, w = shape[0], shape[1]
    cell_w, cell_h = w + 2 * border, h + 2 * border
    caption = CAPTION_HEIGHT if labels is not None else 0
    width = cols * cell_w + (cols + 1) * pad
    height = len(images) * (cell_h + caption) + (len(images) + 1) * pad

    canvas = Image.new("RGB", (width, height), CANVAS_COLOR)
    draw = ImageDraw.Draw(canvas)
    font = ImageFont.load_default() if labels is not None else None
    for r, row in enumerate(images):
        top = pad + r * (cell_h + caption + pad)
        if labels is not None:
            draw.text((pad, top), str(labels[r]), fill=(0, 0, 0), font=font)
        top += caption
        for c, img in enumerate(row):
            left = pad + c * (cell_w + pad)
            color = ROLE_COLORS.get(roles[c])
            if color is not None and border > 0:
                draw.rectangle([left, top, left + cell_w - 1, top + cell_h - 1], fill=color)
            canvas.paste(Image.fromarray(img), (left + border, top + border))

    if out_path is not None:
        out_path = Path(out_path)
        try:
            out_path.parent.mkdir(parents=True, exist_ok=True)
            canvas.save(out_path, format="PNG")
        except OSError as e:
            raise EvaluationError(f"Failed to write grid {out_path}: {e}") from e
        logger.info(f"Grid {len(images)}x{cols} written to {out_path}")
    return np.asarray(canvas)
