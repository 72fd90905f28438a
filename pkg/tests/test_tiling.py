import numpy as np
import pytest

from patchwin.tiling import (
    GridError,
    Mode,
    Padding,
    PatchRef,
    enumerate_patches,
    extract_patch,
    pad_image,
    plan_grid,
    reflect_indices,
)
from patchwin.windows import Position


def test_full_size_configuration_counts():
    grid = plan_grid(1024, 1024, 128, 128, Padding.REJECT)
    assert (grid.rows, grid.cols) == (8, 8)
    assert grid.n_overlapping == 225
    assert grid.n_baseline == 64


@pytest.mark.parametrize("n", range(2, 13))
@pytest.mark.parametrize("m", range(2, 13))
def test_patch_count_law(n, m):
    grid = plan_grid(16 * n, 16 * m, 16, 16, Padding.REJECT)
    refs = list(enumerate_patches(grid))
    assert len(refs) == grid.n_overlapping == 4 * n * m - 2 * n - 2 * m + 1
    assert len(list(enumerate_patches(grid, Mode.NON_OVERLAPPING))) == n * m


def test_reflect_padding_record():
    grid = plan_grid(1000, 1024, 128, 128, Padding.REFLECT)
    assert grid.pad_bottom == 24 and grid.rows == 8
    assert grid.pad_right == 0


def test_reject_non_multiple():
    with pytest.raises(GridError):
        plan_grid(1000, 1024, 128, 128, Padding.REJECT)


def test_reject_single_patch_row():
    with pytest.raises(GridError):
        plan_grid(128, 1024, 128, 128, Padding.REJECT)


def test_reflect_pads_single_patch_to_two():
    grid = plan_grid(128, 300, 128, 128)
    assert grid.rows == 2 and grid.pad_bottom == 128
    assert grid.cols == 3 and grid.pad_right == 84


@pytest.mark.parametrize("args", [(100, 100, 7, 8), (100, 100, 8, 0), (6, 100, 8, 8)])
def test_bad_dimensions(args):
    with pytest.raises(GridError):
        plan_grid(*args)


def test_first_last_and_left_refs():
    grid = plan_grid(1024, 1024, 128, 128, Padding.REJECT)
    refs = list(enumerate_patches(grid))
    assert refs[0] == PatchRef(0, 0, 0, 0, Position.UP_LEFT)
    assert refs[-1] == PatchRef(14, 14, 896, 896, Position.DOWN_RIGHT)
    by_rc = {(r.row, r.col): r for r in refs}
    assert by_rc[7, 0].position is Position.LEFT
    assert by_rc[0, 7].position is Position.UP
    assert by_rc[7, 7].position is Position.INTERIOR


def test_small_grid_has_every_position_once():
    grid = plan_grid(256, 256, 128, 128, Padding.REJECT)
    positions = [r.position for r in enumerate_patches(grid)]
    assert len(positions) == 9 and set(positions) == set(Position)


def test_row_major_order():
    grid = plan_grid(64, 96, 16, 16)
    keys = [(r.row, r.col) for r in enumerate_patches(grid)]
    assert keys == sorted(keys)


def test_non_overlapping_refs_are_interior():
    grid = plan_grid(64, 64, 16, 16)
    refs = list(enumerate_patches(grid, Mode.NON_OVERLAPPING))
    assert all(r.position is Position.INTERIOR for r in refs)
    assert [(r.offset_y, r.offset_x) for r in refs[:5]] == [(0, 0), (0, 16), (0, 32), (0, 48), (16, 0)]


def test_extract_constant():
    image = np.full((2, 64, 64), 7.0)
    grid = plan_grid(64, 64, 16, 16)
    for ref in enumerate_patches(grid):
        assert np.all(extract_patch(image, ref, grid) == 7.0)


def test_extract_ramp_column():
    image = np.broadcast_to(np.arange(256.0), (1, 256, 256))
    grid = plan_grid(256, 256, 128, 128)
    ref = next(r for r in enumerate_patches(grid) if r.offset_x == 64)
    assert np.all(extract_patch(image, ref, grid)[0, :, 0] == 64)


def test_extract_reflected_rows():
    h = 1000
    image = np.broadcast_to(np.arange(float(h))[:, None], (1, h, 1024))
    grid = plan_grid(h, 1024, 128, 128)
    ref = next(r for r in enumerate_patches(grid) if r.offset_y == 1024 - 128 and r.offset_x == 0)
    patch = extract_patch(image, ref, grid)
    local = np.arange(128) + ref.offset_y
    for p in range(24):
        # padded row h + p mirrors original row h - 2 - p
        assert patch[0, h + p - ref.offset_y, 0] == h - 2 - p
    assert np.array_equal(patch[0, : h - ref.offset_y, 0], local[: h - ref.offset_y])


def test_reflect_indices_handles_wide_padding():
    assert list(reflect_indices(np.arange(0, 10), 3)) == [0, 1, 2, 1, 0, 1, 2, 1, 0, 1]


def test_extract_matches_padded_canvas():
    rng = np.random.default_rng(3)
    image = rng.random((2, 37, 21))
    grid = plan_grid(37, 21, 16, 8)
    canvas = pad_image(image, grid)
    assert canvas.shape[1:] == grid.padded_shape
    for ref in enumerate_patches(grid):
        expected = canvas[:, ref.offset_y : ref.offset_y + 16, ref.offset_x : ref.offset_x + 8]
        assert np.array_equal(extract_patch(image, ref, grid), expected)


def test_extract_rejects_foreign_ref():
    grid = plan_grid(64, 64, 16, 16)
    image = np.zeros((1, 64, 64))
    with pytest.raises(GridError):
        extract_patch(image, PatchRef(7, 0, 56, 0, Position.LEFT), grid)
    with pytest.raises(GridError):
        extract_patch(image, PatchRef(1, 0, 9, 0, Position.LEFT), grid)
    with pytest.raises(GridError):
        extract_patch(np.zeros((1, 60, 64)), PatchRef(0, 0, 0, 0, Position.UP_LEFT), grid)


@pytest.mark.parametrize("shape", [(64, 64), (48, 80), (50, 70)])
def test_coverage_counts(shape):
    grid = plan_grid(*shape, 16, 16)
    count = np.zeros(grid.padded_shape, dtype=int)
    for r in enumerate_patches(grid):
        count[r.offset_y : r.offset_y + 16, r.offset_x : r.offset_x + 16] += 1
    assert set(np.unique(count)) <= {1, 2, 4}
    assert np.all(count[:8, :8] == 1)
    assert np.all(count[8:-8, 8:-8] == 4)
    assert np.all(count[:8, 8:-8] == 2)


def test_non_overlapping_round_trip():
    rng = np.random.default_rng(0)
    image = rng.random((3, 50, 70))
    grid = plan_grid(50, 70, 16, 16)
    out = np.zeros((3, *grid.padded_shape))
    for r in enumerate_patches(grid, Mode.NON_OVERLAPPING):
        out[:, r.offset_y : r.offset_y + 16, r.offset_x : r.offset_x + 16] = extract_patch(image, r, grid)
    assert np.array_equal(out, pad_image(image, grid))
