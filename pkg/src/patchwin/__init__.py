"""Seamless reconstruction of images from overlapping, window-weighted patch predictions."""

from .blending import BlendAccumulator, blend, blend_baseline, blend_progressive, reconstruct
from .metrics import SsimParams, adjusted_ssim, ssim, ssim_multichannel
from .predictors import BorderNoise, External, GaussianBlur, Identity, predict, predict_stream
from .stats import PairedComparison, exact_sign_test, paired_t_test, t_statistic
from .tiling import Mode, Padding, PatchGrid, PatchRef, enumerate_patches, extract_patch, plan_grid
from .windows import Position, Window2D, WindowKind, cola_check, make_pyramidal, make_window_1d, make_window_2d

__version__ = "0.1.0"
