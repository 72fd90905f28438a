"""Command-line interface.

Exit codes: 0 success, 2 invalid configuration or input, 3 external
predictor failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import netpbm
from .blending import BlendError, blend_progressive, reconstruct
from .experiment import (
    BASELINE,
    METHODS,
    ExperimentConfig,
    config_header,
    run_experiment,
    simulate_truth,
    summary_lines,
    write_long_csv,
)
from .metrics import SsimParams, adjusted_ssim, ssim_multichannel
from .predictors import External, PredictorError, format_predictor, parse_predictor
from .tiling import GridError, Padding, plan_grid
from .windows import Position, WindowKind, make_window_2d

log = logging.getLogger("patchwin")

EXIT_CONFIG = 2
EXIT_EXTERNAL = 3


class ConfigError(Exception):
    pass


def parse_size(text: str) -> tuple[int, int]:
    """``"128x64"`` -> (128, 64) as (height, width); a single number is square."""
    parts = text.lower().split("x")
    try:
        if len(parts) == 1:
            return int(parts[0]), int(parts[0])
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "verbose"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def cmd_windows(args) -> int:
    kind = WindowKind.parse(args.kind)
    position = Position.parse(args.position)
    height, width = args.size
    window = make_window_2d(kind, height, width, position)
    netpbm.save_image(args.out, window.weights[None])
    log.info("wrote %s window (%s, %dx%d) to %s", kind.value, position.value, height, width, args.out)
    return 0


def cmd_blend(args) -> int:
    image = netpbm.load_image(args.input)
    ph, pw = args.patch
    grid = plan_grid(image.shape[1], image.shape[2], ph, pw, Padding(args.padding))
    predictor = parse_predictor(args.predictor)
    kind = None if args.window == "none" else WindowKind.parse(args.window)

    calls = 0

    def counted(patch, offset):
        nonlocal calls
        calls += 1
        return predictor(patch, offset)

    # external predictors stream through one child, so pass them unwrapped
    spec = predictor if isinstance(predictor, External) else counted
    if kind is not None and args.preview:
        def emit(stage, result):
            if stage == "preview":
                _save(args.preview, result)
                log.info("wrote preview to %s", args.preview)

        result = blend_progressive(image, spec, grid, kind, emit, workers=args.workers)
    else:
        result = reconstruct(image, spec, grid, kind, workers=args.workers)
        if args.preview:
            _save(args.preview, result)
    if isinstance(predictor, External):
        calls = grid.n_baseline if kind is None else grid.n_overlapping
    _save(args.out, result)
    log.info("config: %s, predictor %s", _config(args), format_predictor(predictor))
    print(f"predicted {calls} patches; wrote {args.out}", file=sys.stderr)
    return 0


def _save(path, image):
    if Path(path).suffix.lower() == ".pgm":
        image = np.clip(image, 0.0, 1.0)
    netpbm.save_image(path, image)


def cmd_simulate(args) -> int:
    height, width = args.size
    if args.images < 1 or args.classes < 1 or height < 1 or width < 1:
        raise ConfigError("images, classes and size must be positive")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for k in range(args.images):
        truth = simulate_truth(height, width, args.classes, args.seed, k)
        netpbm.save_image(outdir / f"img{k:03d}.pfm", truth)
    log.info("wrote %d images to %s", args.images, outdir)
    return 0


def _image_set(directory: Path) -> dict[str, Path]:
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".pfm", ".pgm"))
    return {p.stem: p for p in files}


def cmd_evaluate(args) -> int:
    truth_dir = Path(args.truth)
    truth = _image_set(truth_dir)
    if not truth:
        raise ConfigError(f"no images in {truth_dir}")
    methods: dict[str, dict[str, Path]] = {}
    for item in args.method:
        label, eq, directory = item.partition("=")
        if not eq or not label:
            raise ConfigError(f"--method expects LABEL=DIR, got {item!r}")
        found = _image_set(Path(directory))
        if found.keys() != truth.keys():
            raise ConfigError(f"images in {directory} do not match those in {truth_dir}")
        methods[label] = found
    if args.baseline not in methods:
        raise ConfigError(f"baseline {args.baseline!r} is not one of the methods")
    params = SsimParams(data_range=args.data_range)
    ids = sorted(truth)
    scores = {label: np.zeros(len(ids)) for label in methods}
    for k, image_id in enumerate(ids):
        ref = netpbm.load_image(truth[image_id])
        for label, files in methods.items():
            other = netpbm.load_image(files[image_id])
            if other.shape != ref.shape:
                raise ConfigError(f"{files[image_id]} has shape {other.shape}, truth has {ref.shape}")
            scores[label][k] = ssim_multichannel(ref, other, params)
    adjusted = {label: adjusted_ssim(s, scores[args.baseline]) for label, s in scores.items()}
    write_long_csv(Path(args.out), _config(args), ids, scores, adjusted)
    lines = [config_header(_config(args))]
    if len(ids) >= 2:
        lines += summary_lines(scores, args.baseline)
    else:
        lines.append("fewer than 2 images: no statistics")
    text = "\n".join(lines) + "\n"
    Path(args.out).with_suffix(".summary.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    height, width = args.size
    ph, pw = args.patch
    config = ExperimentConfig(
        seed=args.seed,
        images=args.images,
        height=height,
        width=width,
        patch_height=ph,
        patch_width=pw,
        classes=args.classes,
        amplitude=args.amplitude,
        falloff=args.falloff,
        methods=list(METHODS),
    )
    if config.images < 2:
        raise ConfigError("the experiment needs at least 2 images")
    result = run_experiment(config, Path(args.out))
    sys.stdout.write((Path(args.out) / "summary.txt").read_text())
    for method in result.adjusted:
        if method != BASELINE:
            log.info("%s mean adjusted SSIM %.5f", method, result.adjusted[method].mean())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchwin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("windows", help="export a window as a grayscale PFM")
    p.add_argument("--kind", default="hann")
    p.add_argument("--size", type=parse_size, default=(128, 128))
    p.add_argument("--position", default="interior")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_windows)

    p = sub.add_parser("blend", help="predict patches of an image and blend them")
    p.add_argument("--input", required=True)
    p.add_argument("--patch", type=parse_size, default=(128, 128))
    p.add_argument("--window", default="hann", help="window kind, or 'none' for the baseline")
    p.add_argument("--predictor", default="identity")
    p.add_argument("--padding", choices=[m.value for m in Padding], default="reflect")
    p.add_argument("--preview", help="also write the non-overlapping preview here")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("simulate", help="generate synthetic one-hot ground truth")
    p.add_argument("--images", type=int, default=14)
    p.add_argument("--size", type=parse_size, default=(1024, 1024))
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score methods against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--method", action="append", default=[], metavar="LABEL=DIR")
    p.add_argument("--baseline", default=BASELINE)
    p.add_argument("--data-range", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the full window comparison on synthetic data")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--images", type=int, default=14)
    p.add_argument("--size", type=parse_size, default=(1024, 1024))
    p.add_argument("--patch", type=parse_size, default=(128, 128))
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--falloff", type=float, default=8.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PredictorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    except (ConfigError, GridError, BlendError, netpbm.FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
