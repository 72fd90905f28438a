"""Overlap-add reconstruction of a full image from predicted patches."""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .predictors import PredictorError, PredictorSpec, predict_many
from .tiling import Mode, PatchGrid, PatchRef, check_ref, enumerate_patches, extract_patch
from .windows import NORMALIZATION_FLOOR, Position, WindowKind, make_window_2d


class BlendError(ValueError):
    pass


class BlendAccumulator:
    """Running sum of weighted patches on the padded canvas.

    ``kind=None`` places patches unweighted on the non-overlapping lattice
    (the baseline). Kinds whose windows do not sum to 1 also keep a weight
    map and divide by it in :meth:`finalize`. Sums are kept in float64.
    """

    def __init__(
        self,
        grid: PatchGrid,
        channels: int,
        kind: Optional[WindowKind] = None,
        normalize: Optional[bool] = None,
    ):
        self.grid = grid
        self.kind = kind
        self.channels = channels
        if normalize is None:
            normalize = kind is not None and kind.needs_normalization
        self.normalize = normalize
        h, w = grid.padded_shape
        self.canvas = np.zeros((channels, h, w))
        self.weight_map = np.zeros((h, w)) if normalize else None
        self.count = 0

    def _weights(self, ref: PatchRef) -> Optional[np.ndarray]:
        if self.kind is None:
            return None
        position = ref.position if self.kind.separable else Position.INTERIOR
        w = make_window_2d(self.kind, self.grid.patch_height, self.grid.patch_width, position).weights
        if self.normalize:
            w = w + NORMALIZATION_FLOOR
        return w

    def add(self, ref: PatchRef, patch: np.ndarray) -> None:
        check_ref(ref, self.grid)
        if self.kind is None and (ref.row % 2 or ref.col % 2):
            raise BlendError(f"baseline patch ({ref.row}, {ref.col}) is not on the non-overlapping lattice")
        patch = np.asarray(patch)
        expected = (self.channels, self.grid.patch_height, self.grid.patch_width)
        if patch.shape != expected:
            raise BlendError(f"patch ({ref.row}, {ref.col}) has shape {patch.shape}, expected {expected}")
        if not np.all(np.isfinite(patch)):
            raise BlendError(f"patch ({ref.row}, {ref.col}) contains NaN or Inf")
        region = (
            slice(ref.offset_y, ref.offset_y + self.grid.patch_height),
            slice(ref.offset_x, ref.offset_x + self.grid.patch_width),
        )
        w = self._weights(ref)
        if w is None:
            self.canvas[(slice(None),) + region] = patch
        else:
            self.canvas[(slice(None),) + region] += w * patch
            if self.weight_map is not None:
                self.weight_map[region] += w
        self.count += 1

    def finalize(self) -> np.ndarray:
        """Cropped ``C x H x W`` result. Leaves the accumulator untouched."""
        out = self.canvas
        if self.weight_map is not None:
            if np.any(self.weight_map <= 0):
                raise BlendError("weight map has uncovered pixels")
            out = out / self.weight_map
        return out[:, : self.grid.image_height, : self.grid.image_width].copy()


def _expected_refs(grid: PatchGrid, mode: Mode) -> dict[tuple[int, int], PatchRef]:
    return {(ref.row, ref.col): ref for ref in enumerate_patches(grid, mode)}


def _ordered(
    patches: Iterable[tuple[PatchRef, np.ndarray]], grid: PatchGrid, mode: Mode
) -> list[tuple[PatchRef, np.ndarray]]:
    expected = _expected_refs(grid, mode)
    seen: dict[tuple[int, int], tuple[PatchRef, np.ndarray]] = {}
    for ref, patch in patches:
        key = (ref.row, ref.col)
        if key not in expected:
            raise BlendError(f"patch ({ref.row}, {ref.col}) does not belong to the {mode.value} grid")
        if key in seen:
            raise BlendError(f"duplicate patch ({ref.row}, {ref.col})")
        seen[key] = (ref, patch)
    if missing := sorted(expected.keys() - seen.keys()):
        raise BlendError(f"{len(missing)} patches missing, first is {missing[0]}")
    # canonical row-major order makes the float sums independent of arrival order
    return [seen[key] for key in sorted(seen)]


def _channels(patches: Sequence[tuple[PatchRef, np.ndarray]]) -> int:
    counts = {np.shape(p)[0] for _, p in patches}
    if len(counts) != 1:
        raise BlendError(f"patches disagree on channel count: {sorted(counts)}")
    return counts.pop()


def blend(
    patches: Iterable[tuple[PatchRef, np.ndarray]],
    grid: PatchGrid,
    kind: WindowKind,
    normalize: Optional[bool] = None,
) -> np.ndarray:
    """Window-weighted sum of every overlapping patch, cropped to the image.

    ``normalize`` defaults to dividing by the accumulated weights only for
    the Pyramidal window.
    """
    ordered = _ordered(patches, grid, Mode.OVERLAPPING)
    acc = BlendAccumulator(grid, _channels(ordered), kind, normalize)
    for ref, patch in ordered:
        acc.add(ref, patch)
    return acc.finalize()


def blend_baseline(patches: Iterable[tuple[PatchRef, np.ndarray]], grid: PatchGrid) -> np.ndarray:
    """Abut the non-overlapping patches without any weighting."""
    ordered = _ordered(patches, grid, Mode.NON_OVERLAPPING)
    acc = BlendAccumulator(grid, _channels(ordered))
    for ref, patch in ordered:
        acc.add(ref, patch)
    return acc.finalize()


def _predicted(
    image: np.ndarray,
    predictor: PredictorSpec,
    grid: PatchGrid,
    refs: Sequence[PatchRef],
    workers: int = 1,
):
    """Yield ``(ref, prediction)`` with failures tagged by the offending patch."""
    inputs = (((ref.offset_y, ref.offset_x), extract_patch(image, ref, grid)) for ref in refs)
    results = predict_many(predictor, inputs, workers)
    done = 0
    try:
        for result in results:
            yield refs[done], result
            done += 1
    except PredictorError as exc:
        bad = exc.index if exc.index is not None else done
        ref = refs[min(bad, len(refs) - 1)]
        raise PredictorError(f"{exc} [patch row={ref.row} col={ref.col}]", bad) from exc
    except Exception as exc:
        ref = refs[min(done, len(refs) - 1)]
        raise PredictorError(f"predictor failed on patch row={ref.row} col={ref.col}: {exc}", done) from exc


def reconstruct(
    image: np.ndarray,
    predictor: PredictorSpec,
    grid: PatchGrid,
    kind: Optional[WindowKind],
    workers: int = 1,
) -> np.ndarray:
    """Predict every patch of ``image`` and blend, holding one patch at a time.

    ``kind=None`` gives the non-overlapping baseline.
    """
    mode = Mode.NON_OVERLAPPING if kind is None else Mode.OVERLAPPING
    refs = list(enumerate_patches(grid, mode))
    acc = BlendAccumulator(grid, image.shape[0], kind)
    for ref, prediction in _predicted(image, predictor, grid, refs, workers):
        acc.add(ref, prediction)
    return acc.finalize()


def blend_progressive(
    image: np.ndarray,
    predictor: PredictorSpec,
    grid: PatchGrid,
    kind: WindowKind,
    emit: Callable[[str, np.ndarray], None],
    reuse: bool = True,
    workers: int = 1,
) -> np.ndarray:
    """Emit a quick non-overlapping ``"preview"``, then the windowed ``"final"``.

    With ``reuse`` the preview predictions are the ones at even lattice
    positions of the overlapping pass, so only the remaining patches are
    predicted the second time around.
    """
    base_refs = list(enumerate_patches(grid, Mode.NON_OVERLAPPING))
    preview = BlendAccumulator(grid, image.shape[0])
    kept: dict[tuple[int, int], np.ndarray] = {}
    for ref, prediction in _predicted(image, predictor, grid, base_refs, workers):
        preview.add(ref, prediction)
        if reuse:
            kept[ref.row, ref.col] = prediction
    emit("preview", preview.finalize())
    del preview

    all_refs = list(enumerate_patches(grid, Mode.OVERLAPPING))
    todo = [ref for ref in all_refs if (ref.row, ref.col) not in kept]
    fresh = _predicted(image, predictor, grid, todo, workers)
    final = BlendAccumulator(grid, image.shape[0], kind)
    for ref in all_refs:
        prediction = kept.pop((ref.row, ref.col), None)
        if prediction is None:
            fresh_ref, prediction = next(fresh)
            assert fresh_ref == ref
        final.add(ref, prediction)
    result = final.finalize()
    emit("final", result)
    return result
