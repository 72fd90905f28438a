"""Half-stride patch grids over a full image."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .windows import Position, position_for


class Padding(enum.Enum):
    REFLECT = "reflect"
    REJECT = "reject"


class Mode(enum.Enum):
    OVERLAPPING = "overlapping"
    NON_OVERLAPPING = "non-overlapping"


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class PatchGrid:
    image_height: int
    image_width: int
    patch_height: int
    patch_width: int
    rows: int  # non-overlapping patches per column
    cols: int  # non-overlapping patches per row
    pad_bottom: int = 0
    pad_right: int = 0

    @property
    def stride_y(self) -> int:
        return self.patch_height // 2

    @property
    def stride_x(self) -> int:
        return self.patch_width // 2

    @property
    def padded_shape(self) -> tuple[int, int]:
        return self.rows * self.patch_height, self.cols * self.patch_width

    @property
    def overlap_rows(self) -> int:
        return 2 * self.rows - 1

    @property
    def overlap_cols(self) -> int:
        return 2 * self.cols - 1

    @property
    def n_overlapping(self) -> int:
        return self.overlap_rows * self.overlap_cols

    @property
    def n_baseline(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PatchRef:
    """One patch of a grid. ``row``/``col`` index the half-stride lattice."""

    row: int
    col: int
    offset_y: int
    offset_x: int
    position: Position


def plan_grid(
    height: int,
    width: int,
    patch_height: int,
    patch_width: int,
    padding: Padding | str = Padding.REFLECT,
) -> PatchGrid:
    """Lay out a half-stride grid of ``patch_height x patch_width`` patches.

    Under ``Padding.REFLECT`` the canvas is extended at the bottom and right
    to the next multiple of the patch size, and to at least two patches per
    axis. ``Padding.REJECT`` requires the image to already satisfy that.
    """
    padding = Padding(padding)
    for name, size in (("patch height", patch_height), ("patch width", patch_width)):
        if size < 2 or size % 2:
            raise GridError(f"{name} must be even and >= 2, got {size}")
    if height < patch_height or width < patch_width:
        raise GridError(
            f"image {height}x{width} is smaller than the patch {patch_height}x{patch_width}"
        )
    if padding is Padding.REJECT:
        if height % patch_height or width % patch_width:
            raise GridError(
                f"image {height}x{width} is not a multiple of the patch {patch_height}x{patch_width}"
            )
        rows, cols = height // patch_height, width // patch_width
        if rows < 2 or cols < 2:
            raise GridError("at least 2x2 non-overlapping patches are required")
        return PatchGrid(height, width, patch_height, patch_width, rows, cols)
    rows = max(2, -(-height // patch_height))
    cols = max(2, -(-width // patch_width))
    return PatchGrid(
        height,
        width,
        patch_height,
        patch_width,
        rows,
        cols,
        pad_bottom=rows * patch_height - height,
        pad_right=cols * patch_width - width,
    )


def enumerate_patches(grid: PatchGrid, mode: Mode | str = Mode.OVERLAPPING) -> Iterator[PatchRef]:
    """Yield the patches of ``grid`` in row-major order.

    Non-overlapping patches sit on the even lattice positions and are all
    tagged interior, since the baseline does no windowing.
    """
    mode = Mode(mode)
    sy, sx = grid.stride_y, grid.stride_x
    if mode is Mode.NON_OVERLAPPING:
        for r in range(0, grid.overlap_rows, 2):
            for c in range(0, grid.overlap_cols, 2):
                yield PatchRef(r, c, r * sy, c * sx, Position.INTERIOR)
        return
    for r in range(grid.overlap_rows):
        for c in range(grid.overlap_cols):
            pos = position_for(r, c, grid.overlap_rows, grid.overlap_cols)
            yield PatchRef(r, c, r * sy, c * sx, pos)


def reflect_indices(indices: np.ndarray, size: int) -> np.ndarray:
    """Mirror indices into ``[0, size)`` without repeating the edge sample."""
    if size == 1:
        return np.zeros_like(indices)
    period = 2 * (size - 1)
    k = np.mod(indices, period)
    return np.where(k < size, k, period - k)


def check_ref(ref: PatchRef, grid: PatchGrid) -> None:
    if not (0 <= ref.row < grid.overlap_rows and 0 <= ref.col < grid.overlap_cols):
        raise GridError(f"patch ({ref.row}, {ref.col}) lies outside the grid")
    if ref.offset_y != ref.row * grid.stride_y or ref.offset_x != ref.col * grid.stride_x:
        raise GridError(f"patch ({ref.row}, {ref.col}) has inconsistent offsets")


def extract_patch(image: np.ndarray, ref: PatchRef, grid: PatchGrid) -> np.ndarray:
    """Copy the ``C x J x I`` patch at ``ref`` out of a ``C x H x W`` image.

    Pixels falling in the padding region are mirror reflections of the image.
    """
    check_ref(ref, grid)
    if image.shape[1:] != (grid.image_height, grid.image_width):
        raise GridError(
            f"image is {image.shape[1]}x{image.shape[2]}, grid expects "
            f"{grid.image_height}x{grid.image_width}"
        )
    y0, x0 = ref.offset_y, ref.offset_x
    y1, x1 = y0 + grid.patch_height, x0 + grid.patch_width
    if y1 <= grid.image_height and x1 <= grid.image_width:
        return image[:, y0:y1, x0:x1].copy()
    ys = reflect_indices(np.arange(y0, y1), grid.image_height)
    xs = reflect_indices(np.arange(x0, x1), grid.image_width)
    return image[:, ys[:, None], xs[None, :]]


def pad_image(image: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Padded canvas as seen by the patches of ``grid``."""
    return np.pad(image, ((0, 0), (0, grid.pad_bottom), (0, grid.pad_right)), mode="reflect")
