"""Window functions for weighting overlapping patches.

One-dimensional windows are sampled with the periodic convention
(denominator ``I`` rather than ``I - 1``) so that copies shifted by half a
window add up to exactly 1. Two-dimensional windows are outer products of
per-axis factors, except for the Pyramidal window, which is built directly
from distance maps.

Patches on the border of the image get edge and corner variants. Along an
axis where the patch touches the image border, the half facing the border
is held at 1 instead of tapering. Together with the tapered neighbours this
keeps the summed weight at 1 over the whole image.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

BARTLETT_HANN_COEFFS = (0.62, 0.48, 0.38)

# Added to every Pyramidal weight before normalisation. The Pyramidal window
# vanishes on patch borders, so without it the outer frame of the image would
# have zero accumulated weight.
NORMALIZATION_FLOOR = 1e-12


class WindowKind(enum.Enum):
    AVERAGE = "average"
    HANN = "hann"
    BARTLETT_HANN = "bartlett-hann"
    TRIANGULAR = "triangular"
    PYRAMIDAL = "pyramidal"

    @property
    def separable(self) -> bool:
        return self is not WindowKind.PYRAMIDAL

    @property
    def needs_normalization(self) -> bool:
        """True for windows whose shifted copies do not sum to 1."""
        return self is WindowKind.PYRAMIDAL

    @classmethod
    def parse(cls, name: str) -> "WindowKind":
        key = name.strip().lower().replace("_", "-")
        aliases = {"bartletthann": "bartlett-hann", "triangle": "triangular", "avg": "average"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown window kind {name!r}")


class Position(enum.Enum):
    """Location class of a patch within the overlapping grid."""

    INTERIOR = "interior"
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    UP_LEFT = "upleft"
    UP_RIGHT = "upright"
    DOWN_LEFT = "downleft"
    DOWN_RIGHT = "downright"

    @property
    def vertical(self) -> str:
        if self in (Position.UP, Position.UP_LEFT, Position.UP_RIGHT):
            return "first"
        if self in (Position.DOWN, Position.DOWN_LEFT, Position.DOWN_RIGHT):
            return "last"
        return "full"

    @property
    def horizontal(self) -> str:
        if self in (Position.LEFT, Position.UP_LEFT, Position.DOWN_LEFT):
            return "first"
        if self in (Position.RIGHT, Position.UP_RIGHT, Position.DOWN_RIGHT):
            return "last"
        return "full"

    @property
    def is_corner(self) -> bool:
        return self.vertical != "full" and self.horizontal != "full"

    @classmethod
    def from_roles(cls, vertical: str, horizontal: str) -> "Position":
        for pos in cls:
            if pos.vertical == vertical and pos.horizontal == horizontal:
                return pos
        raise ValueError(f"no position for roles ({vertical}, {horizontal})")

    @classmethod
    def parse(cls, name: str) -> "Position":
        key = name.strip().lower().replace("-", "").replace("_", "")
        for pos in cls:
            if pos.value == key:
                return pos
        raise ValueError(f"unknown position {name!r}")


@dataclass(frozen=True, eq=False)
class Window2D:
    kind: WindowKind
    position: Position
    weights: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape


def _check_length(length: int, name: str = "length") -> None:
    if int(length) != length or length < 2 or length % 2:
        raise ValueError(f"{name} must be an even integer >= 2, got {length}")


def make_window_1d(kind: WindowKind, length: int) -> np.ndarray:
    """Periodic 1-D window of ``length`` samples.

    Raises:
        ValueError: for odd or too short lengths, and for the Pyramidal kind,
            which has no separable factor.
    """
    _check_length(length)
    if kind is WindowKind.PYRAMIDAL:
        raise ValueError("the Pyramidal window is not separable and has no 1-D form")
    i = np.arange(length, dtype=np.float64)
    if kind is WindowKind.AVERAGE:
        w = np.full(length, 0.5)
    elif kind is WindowKind.HANN:
        w = 0.5 * (1.0 - np.cos(2.0 * np.pi * i / length))
    elif kind is WindowKind.BARTLETT_HANN:
        a0, a1, a2 = BARTLETT_HANN_COEFFS
        w = a0 - a1 * np.abs(i / length - 0.5) - a2 * np.cos(2.0 * np.pi * i / length)
    elif kind is WindowKind.TRIANGULAR:
        w = 1.0 - np.abs(2.0 * i / length - 1.0)
    else:  # pragma: no cover
        raise ValueError(f"unsupported window kind {kind}")
    # cos() rounding can leave values like -1e-17 at the zero crossing
    return np.clip(w, 0.0, 1.0)


def _axis_factor(kind: WindowKind, length: int, role: str) -> np.ndarray:
    w = make_window_1d(kind, length)
    half = length // 2
    if role == "first":
        w[:half] = 1.0
    elif role == "last":
        w[half:] = 1.0
    return w


def make_pyramidal(height: int, width: int) -> np.ndarray:
    """Distance-ratio window normalised to a mean weight of 1.

    The edge distance is the Chebyshev distance to the nearest patch border
    and the centre distance is Euclidean to the continuous patch centre.
    """
    _check_length(height, "height")
    _check_length(width, "width")
    if height < 4 or width < 4:
        # every pixel of a 2-wide axis lies on the border
        raise ValueError("the Pyramidal window needs patches of at least 4x4")
    j = np.arange(height, dtype=np.float64)[:, None]
    i = np.arange(width, dtype=np.float64)[None, :]
    edge = np.minimum(np.minimum(i, width - 1 - i), np.minimum(j, height - 1 - j))
    center = np.hypot(j - (height - 1) / 2.0, i - (width - 1) / 2.0)
    ratio = edge / (edge + center)
    alpha = height * width / ratio.sum()
    return alpha * ratio


@lru_cache(maxsize=None)
def _cached_window(kind: WindowKind, height: int, width: int, position: Position) -> Window2D:
    if kind is WindowKind.PYRAMIDAL:
        weights = make_pyramidal(height, width)
    else:
        weights = np.outer(
            _axis_factor(kind, height, position.vertical),
            _axis_factor(kind, width, position.horizontal),
        )
    weights.flags.writeable = False
    return Window2D(kind, position, weights)


def make_window_2d(
    kind: WindowKind, height: int, width: int, position: Position = Position.INTERIOR
) -> Window2D:
    """Position-aware 2-D window of shape ``(height, width)``.

    Windows are memoised per ``(kind, height, width, position)`` and their
    weight arrays are read-only.
    """
    _check_length(height, "height")
    _check_length(width, "width")
    if kind is WindowKind.PYRAMIDAL and position is not Position.INTERIOR:
        raise ValueError("the Pyramidal window only exists for interior patches")
    return _cached_window(kind, int(height), int(width), position)


def position_for(row: int, col: int, rows: int, cols: int) -> Position:
    """Position class of patch ``(row, col)`` in a ``rows x cols`` overlapping grid."""
    if rows < 3 or cols < 3:
        raise ValueError("overlapping grids have at least 3 patches per axis")

    def role(index: int, count: int) -> str:
        if index == 0:
            return "first"
        if index == count - 1:
            return "last"
        return "full"

    return Position.from_roles(role(row, rows), role(col, cols))


def _placements(kind: WindowKind, patch_height: int, patch_width: int, rows: int, cols: int):
    if rows < 2 or cols < 2:
        raise ValueError("the base grid needs at least 2x2 patches")
    sy, sx = patch_height // 2, patch_width // 2
    n_rows, n_cols = 2 * rows - 1, 2 * cols - 1
    for r in range(n_rows):
        for c in range(n_cols):
            pos = position_for(r, c, n_rows, n_cols) if kind.separable else Position.INTERIOR
            w = make_window_2d(kind, patch_height, patch_width, pos).weights
            yield (slice(r * sy, r * sy + patch_height), slice(c * sx, c * sx + patch_width)), w


def weight_map(
    kind: WindowKind,
    patch_height: int,
    patch_width: int,
    rows: int,
    cols: int,
    floor: float = 0.0,
) -> np.ndarray:
    """Summed weights of every overlapping window over a ``rows x cols`` base grid.

    The Pyramidal kind uses its interior window for every patch; the other
    kinds use the edge and corner variants. ``floor`` is added to each
    window before summing.
    """
    total = np.zeros((rows * patch_height, cols * patch_width))
    for region, w in _placements(kind, patch_height, patch_width, rows, cols):
        total[region] += w + floor
    return total


def cola_check(
    kind: WindowKind,
    patch_height: int,
    patch_width: int,
    rows: int,
    cols: int,
    normalize: bool | None = None,
) -> float:
    """Maximum deviation from 1 of the summed window weights over a full canvas.

    ``normalize`` defaults to True only for the Pyramidal kind. When set,
    every floored window is divided by the accumulated weight map before
    summing, which is the extra pass the blender performs.
    """
    if normalize is None:
        normalize = kind.needs_normalization
    if not normalize:
        total = weight_map(kind, patch_height, patch_width, rows, cols)
    else:
        norm = weight_map(kind, patch_height, patch_width, rows, cols, NORMALIZATION_FLOOR)
        total = np.zeros_like(norm)
        for region, w in _placements(kind, patch_height, patch_width, rows, cols):
            total[region] += (w + NORMALIZATION_FLOOR) / norm[region]
    return float(np.max(np.abs(total - 1.0)))
