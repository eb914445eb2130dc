"""Tests for the image grid renderer."""

import numpy as np
import pytest
from PIL import Image

from slotswap.evaluation import ROLE_COLORS, EvaluationInputError, default_roles, render_grid


def _tile(value, size=64):
    return np.full((size, size, 3), value, dtype=np.uint8)


class TestRenderGrid:

    def test_canvas_size(self):
        canvas = render_grid([[_tile(10), _tile(20), _tile(30)]])
        assert canvas.shape == (76, 220, 3)

    def test_borders_follow_roles(self):
        canvas = render_grid([[_tile(10), _tile(20), _tile(30)]], border=2, pad=4)
        assert tuple(canvas[4, 4]) == ROLE_COLORS["source"]
        assert tuple(canvas[4, 4 + 68 + 4]) == ROLE_COLORS["reference"]
        assert tuple(canvas[4, 4 + 2 * (68 + 4)]) == ROLE_COLORS["result"]
        assert tuple(canvas[6, 6]) == (10, 10, 10)

    def test_float_images(self):
        canvas = render_grid([[np.zeros((16, 16, 3), dtype=np.float32)]], border=0, pad=0)
        assert canvas.shape == (16, 16, 3)
        assert canvas[0, 0, 0] == 128

    def test_labels_add_caption_rows(self, tmp_path):
        rows = [[_tile(1, 16), _tile(2, 16)], [_tile(3, 16), _tile(4, 16)]]
        out = tmp_path / "grid.png"
        canvas = render_grid(rows, out_path=out, labels=["one", "two"])
        assert canvas.shape[0] == 2 * (20 + 12) + 3 * 4
        with Image.open(out) as image:
            assert image.size == (canvas.shape[1], canvas.shape[0])

    def test_deterministic(self, tmp_path):
        rows = [[_tile(50, 16), _tile(90, 16)]]
        render_grid(rows, tmp_path / "a.png", labels=["x"])
        render_grid(rows, tmp_path / "b.png", labels=["x"])
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    @pytest.mark.parametrize("rows", [[], [[]]])
    def test_empty(self, rows):
        with pytest.raises(EvaluationInputError):
            render_grid(rows)

    def test_mixed_sizes(self):
        with pytest.raises(EvaluationInputError):
            render_grid([[_tile(0, 16), _tile(0, 32)]])

    def test_bad_roles(self):
        with pytest.raises(EvaluationInputError):
            render_grid([[_tile(0, 16)]], roles=["target"])


class TestDefaultRoles:

    def test_roles(self):
        assert default_roles(1) == ("result",)
        assert default_roles(2) == ("source", "result")
        assert default_roles(4) == ("source", "reference", "reference", "result")
