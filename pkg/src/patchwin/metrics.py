"""Structural similarity scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0
    sigma: float = 1.5
    radius: int = 5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.data_range <= 0:
            raise ValueError(f"data range must be positive, got {self.data_range}")
        if self.sigma <= 0 or self.radius < 1:
            raise ValueError("Gaussian window needs sigma > 0 and radius >= 1")


def gaussian_taps(sigma: float, radius: int) -> np.ndarray:
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(k**2) / (2.0 * sigma**2))
    return g / g.sum()


def _local_mean(image: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # separable Gaussian; "reflect" mirrors about the edge, repeating the edge pixel
    out = ndimage.correlate1d(image, taps, axis=0, mode="reflect")
    return ndimage.correlate1d(out, taps, axis=1, mode="reflect")


def ssim_map(x: np.ndarray, y: np.ndarray, params: SsimParams = SsimParams()) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise ValueError(f"expected two equal 2-D images, got {x.shape} and {y.shape}")
    taps = gaussian_taps(params.sigma, params.radius)
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2
    mu_x = _local_mean(x, taps)
    mu_y = _local_mean(y, taps)
    var_x = _local_mean(x * x, taps) - mu_x * mu_x
    var_y = _local_mean(y * y, taps) - mu_y * mu_y
    cov = _local_mean(x * y, taps) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim(x: np.ndarray, y: np.ndarray, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM of two single-channel images (``H x W`` or ``1 x H x W``).

    Local statistics use an 11x11 Gaussian window (sigma 1.5 by default)
    with mirrored borders, so every pixel contributes to the mean.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.ndim == 3:
        if x.shape[0] != 1:
            raise ValueError("ssim() takes a single channel; use ssim_multichannel")
        x, y = x[0], y[0]
    return float(np.mean(ssim_map(x, y, params)))


def ssim_multichannel(x: np.ndarray, y: np.ndarray, params: SsimParams = SsimParams()) -> float:
    """Average of the per-channel SSIM of two ``C x H x W`` tensors."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 3:
        raise ValueError(f"expected two equal C x H x W tensors, got {x.shape} and {y.shape}")
    return float(np.mean([ssim(a, b, params) for a, b in zip(x, y)]))


def adjusted_ssim(method_scores, baseline_scores) -> np.ndarray:
    """Per-image improvement of a method over the baseline."""
    method_scores = np.asarray(method_scores, dtype=np.float64)
    baseline_scores = np.asarray(baseline_scores, dtype=np.float64)
    if method_scores.shape != baseline_scores.shape:
        raise ValueError(
            f"score vectors differ in length: {method_scores.shape} vs {baseline_scores.shape}"
        )
    return method_scores - baseline_scores


def seam_band_mae(
    truth: np.ndarray, prediction: np.ndarray, patch_height: int, patch_width: int, width: int = 2
) -> float:
    """Mean absolute error on the bands straddling the non-overlapping patch seams."""
    err = np.abs(np.asarray(prediction, dtype=np.float64) - np.asarray(truth, dtype=np.float64))
    h, w = err.shape[-2:]
    half = width // 2
    rows = np.zeros(h, dtype=bool)
    cols = np.zeros(w, dtype=bool)
    for y in range(patch_height, h, patch_height):
        rows[max(0, y - half) : y + width - half] = True
    for x in range(patch_width, w, patch_width):
        cols[max(0, x - half) : x + width - half] = True
    mask = rows[:, None] | cols[None, :]
    if not mask.any():
        raise ValueError("image has no interior patch seams")
    return float(err[..., mask].mean())
