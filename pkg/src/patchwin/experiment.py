"""Synthetic ground truth and the end-to-end window comparison."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .blending import blend, blend_baseline
from .metrics import SsimParams, adjusted_ssim, seam_band_mae, ssim_multichannel
from .predictors import BorderNoise
from .stats import PairedComparison, paired_t_test
from .tiling import Mode, PatchGrid, enumerate_patches, extract_patch, plan_grid
from .windows import WindowKind

log = logging.getLogger(__name__)

BASELINE = "none"
METHODS = (BASELINE, "average", "pyramidal", "hann", "bartlett-hann", "triangular")


def simulate_truth(
    height: int, width: int, classes: int, seed: int, index: int = 0, smoothing: Optional[float] = None
) -> np.ndarray:
    """One-hot ``classes x H x W`` label map made of smooth random blobs.

    With a single class the map is a binary mask. Image ``index`` of a given
    ``seed`` is always the same.
    """
    if classes < 1 or height < 1 or width < 1:
        raise ValueError("classes and dimensions must be positive")
    rng = np.random.default_rng([seed, index])
    if smoothing is None:
        smoothing = max(2.0, max(height, width) / 64)
    n_fields = max(classes, 1)
    fields = np.stack(
        [ndimage.gaussian_filter(rng.standard_normal((height, width)), smoothing, mode="wrap") for _ in range(n_fields)]
    )
    if classes == 1:
        return (fields[:1] > 0).astype(np.float64)
    labels = fields.argmax(axis=0)
    return (labels[None] == np.arange(classes)[:, None, None]).astype(np.float64)


def image_seed(seed: int, index: int) -> int:
    """Per-image noise seed, so images do not share noise fields."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    seed: int = 7
    images: int = 14
    height: int = 1024
    width: int = 1024
    patch_height: int = 128
    patch_width: int = 128
    classes: int = 3
    amplitude: float = 0.5
    falloff: float = 8.0
    methods: Sequence[str] = field(default_factory=lambda: list(METHODS))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    ssim: dict[str, np.ndarray]
    adjusted: dict[str, np.ndarray]
    seam_mae: dict[str, np.ndarray]

    def compare(self, a: str, b: str = BASELINE) -> PairedComparison:
        return paired_t_test(self.ssim[a], self.ssim[b], strict=False)


def reconstruct_all(
    truth: np.ndarray, grid: PatchGrid, predictor: BorderNoise, methods: Sequence[str]
) -> dict[str, np.ndarray]:
    """Blend one set of patch predictions with every requested method.

    Predictions are computed once for the overlapping grid; the baseline
    reuses the ones on the non-overlapping lattice.
    """
    preds = [
        (ref, predictor(extract_patch(truth, ref, grid), (ref.offset_y, ref.offset_x)))
        for ref in enumerate_patches(grid, Mode.OVERLAPPING)
    ]
    out = {}
    for method in methods:
        if method == BASELINE:
            out[method] = blend_baseline([(r, p) for r, p in preds if r.row % 2 == 0 and r.col % 2 == 0], grid)
        else:
            out[method] = blend(preds, grid, WindowKind.parse(method))
    return out


def run_experiment(config: ExperimentConfig, outdir: Optional[Path] = None) -> ExperimentResult:
    methods = list(config.methods)
    if BASELINE not in methods:
        methods.insert(0, BASELINE)
    grid = plan_grid(config.height, config.width, config.patch_height, config.patch_width)
    params = SsimParams(data_range=1.0)
    scores = {m: np.zeros(config.images) for m in methods}
    seams = {m: np.zeros(config.images) for m in methods}
    for k in range(config.images):
        truth = simulate_truth(config.height, config.width, config.classes, config.seed, k)
        predictor = BorderNoise(config.amplitude, config.falloff, image_seed(config.seed, k))
        for method, recon in reconstruct_all(truth, grid, predictor, methods).items():
            scores[method][k] = ssim_multichannel(truth, recon, params)
            seams[method][k] = seam_band_mae(truth, recon, config.patch_height, config.patch_width)
        log.info("image %d/%d done", k + 1, config.images)
    adjusted = {m: adjusted_ssim(scores[m], scores[BASELINE]) for m in methods}
    result = ExperimentResult(config, scores, adjusted, seams)
    if outdir is not None:
        write_reports(result, Path(outdir))
    return result


def config_header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, default=str)


def image_ids(n: int) -> list[str]:
    return [f"img{k:03d}" for k in range(n)]


def write_long_csv(path: Path, config: dict, ids, ssim_scores, adjusted) -> None:
    """Rows of ``image-id, method, ssim, adjusted-ssim``."""
    with open(path, "w", newline="") as fh:
        fh.write(config_header(config) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["image-id", "method", "ssim", "adjusted-ssim"])
        for method in ssim_scores:
            for k, image_id in enumerate(ids):
                writer.writerow(
                    [image_id, method, f"{ssim_scores[method][k]:.10f}", f"{adjusted[method][k]:.10f}"]
                )


def summary_lines(ssim_scores: dict, baseline: str) -> list[str]:
    methods = [m for m in ssim_scores if m != baseline]
    pairs = [(m, baseline) for m in methods] + list(itertools.combinations(methods, 2))
    lines = []
    for a, b in pairs:
        cmp = paired_t_test(ssim_scores[a], ssim_scores[b], strict=False)
        lines.append(cmp.summary(f"{a} vs {b}:"))
    return lines


def write_reports(result: ExperimentResult, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    config = asdict(result.config)
    ids = image_ids(result.config.images)
    write_long_csv(outdir / "scores.csv", config, ids, result.ssim, result.adjusted)
    with open(outdir / "adjusted_ssim.csv", "w", newline="") as fh:
        fh.write(config_header(config) + "\n")
        writer = csv.writer(fh)
        methods = list(result.adjusted)
        writer.writerow(["image-id", *methods])
        for k, image_id in enumerate(ids):
            writer.writerow([image_id, *(f"{result.adjusted[m][k]:.10f}" for m in methods)])
    with open(outdir / "seam_mae.csv", "w", newline="") as fh:
        fh.write(config_header(config) + "\n")
        writer = csv.writer(fh)
        methods = list(result.seam_mae)
        writer.writerow(["image-id", *methods])
        for k, image_id in enumerate(ids):
            writer.writerow([image_id, *(f"{result.seam_mae[m][k]:.10f}" for m in methods)])
    lines = [config_header(config)] + summary_lines(result.ssim, BASELINE)
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
