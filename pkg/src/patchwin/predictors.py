"""Per-patch predictors standing in for a segmentation network.

Every built-in predictor is a pure function of its parameters, the patch
content and the patch offset. ``External`` streams patches through a child
process as concatenated PFM blobs on stdin/stdout.
"""

from __future__ import annotations

import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from scipy import ndimage

from . import netpbm


class PredictorError(RuntimeError):
    """A predictor failed on a specific patch."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Identity:
    def __call__(self, patch: np.ndarray, offset: tuple[int, int] = (0, 0)) -> np.ndarray:
        return np.array(patch, copy=True)


@dataclass(frozen=True)
class GaussianBlur:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, patch: np.ndarray, offset: tuple[int, int] = (0, 0)) -> np.ndarray:
        radius = math.ceil(3 * self.sigma)
        # scipy's "reflect" repeats the edge sample, which keeps the patch mean
        return np.stack(
            [
                ndimage.gaussian_filter(np.asarray(ch, dtype=np.float64), self.sigma, mode="reflect", radius=radius)
                for ch in patch
            ]
        )


@dataclass(frozen=True)
class BorderNoise:
    """Additive Gaussian noise whose scale decays away from the patch border.

    The noise scale at a pixel is ``amplitude * exp(-d / falloff)`` with
    ``d`` the Chebyshev distance to the nearest patch border. Normal draws
    come from a Philox stream keyed by the seed and the patch offset, so a
    patch placed at the same offset always receives the same noise field.
    """

    amplitude: float = 0.5
    falloff: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.falloff > 0:
            raise ValueError(f"falloff must be positive, got {self.falloff}")

    def scale(self, height: int, width: int) -> np.ndarray:
        j = np.arange(height)[:, None]
        i = np.arange(width)[None, :]
        d = np.minimum(np.minimum(i, width - 1 - i), np.minimum(j, height - 1 - j))
        return self.amplitude * np.exp(-d / self.falloff)

    def noise(self, shape: tuple[int, int, int], offset: tuple[int, int]) -> np.ndarray:
        oy, ox = offset
        key = [self.seed & 0xFFFFFFFFFFFFFFFF, ((oy & 0xFFFFFFFF) << 32) | (ox & 0xFFFFFFFF)]
        rng = np.random.Generator(np.random.Philox(key=key))
        return rng.standard_normal(shape)

    def __call__(self, patch: np.ndarray, offset: tuple[int, int] = (0, 0)) -> np.ndarray:
        patch = np.asarray(patch, dtype=np.float64)
        if self.amplitude == 0:
            return patch.copy()
        c, h, w = patch.shape
        return patch + self.scale(h, w) * self.noise((c, h, w), offset)


@dataclass(frozen=True)
class External:
    command: tuple[str, ...]

    def __post_init__(self):
        if not self.command:
            raise ValueError("external predictor needs a command")
        object.__setattr__(self, "command", tuple(self.command))

    def __call__(self, patch: np.ndarray, offset: tuple[int, int] = (0, 0)) -> np.ndarray:
        return predict_stream(self.command, [patch])[0]


PredictorSpec = Union[Identity, GaussianBlur, BorderNoise, External]


def predict(spec: PredictorSpec, patch: np.ndarray, offset: tuple[int, int] = (0, 0)) -> np.ndarray:
    return spec(patch, offset)


def predict_many(
    spec: PredictorSpec,
    patches: Iterable[tuple[tuple[int, int], np.ndarray]],
    workers: int = 1,
) -> Iterator[np.ndarray]:
    """Predict ``(offset, patch)`` pairs lazily, preserving input order.

    External predictors run through a single child process; built-in ones
    may fan out over ``workers`` threads.
    """
    if isinstance(spec, External):
        yield from iter_stream(spec.command, (patch for _, patch in patches))
        return
    if workers <= 1:
        for offset, patch in patches:
            yield spec(patch, offset)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(workers) as pool:
        # bounded look-ahead keeps memory proportional to the worker count
        pending: queue.SimpleQueue = queue.SimpleQueue()
        size = 0
        for offset, patch in patches:
            pending.put(pool.submit(spec, patch, offset))
            size += 1
            if size > 2 * workers:
                yield pending.get().result()
                size -= 1
        while size:
            yield pending.get().result()
            size -= 1


def parse_predictor(text: str) -> PredictorSpec:
    """Parse ``identity``, ``blur:sigma=S``, ``bordernoise:amp=A,falloff=F,seed=K``
    or ``external:CMD ...``."""
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    if name == "identity":
        return Identity()
    if name == "external":
        command = shlex.split(rest)
        if not command:
            raise ValueError("external predictor needs a command")
        return External(tuple(command))
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {item!r}")
        params[key.strip().lower()] = value.strip()
    if name == "blur":
        allowed, required = {"sigma"}, {"sigma"}
    elif name == "bordernoise":
        allowed, required = {"amp", "falloff", "seed"}, set()
    else:
        raise ValueError(f"unknown predictor {name!r}")
    if unknown := set(params) - allowed:
        raise ValueError(f"{name}: unknown parameters {sorted(unknown)}")
    if missing := required - set(params):
        raise ValueError(f"{name}: missing parameters {sorted(missing)}")
    if name == "blur":
        return GaussianBlur(float(params["sigma"]))
    return BorderNoise(
        amplitude=float(params.get("amp", 0.5)),
        falloff=float(params.get("falloff", 8.0)),
        seed=int(params.get("seed", 0)),
    )


def format_predictor(spec: PredictorSpec) -> str:
    if isinstance(spec, Identity):
        return "identity"
    if isinstance(spec, GaussianBlur):
        return f"blur:sigma={spec.sigma:g}"
    if isinstance(spec, BorderNoise):
        return f"bordernoise:amp={spec.amplitude:g},falloff={spec.falloff:g},seed={spec.seed}"
    return "external:" + shlex.join(spec.command)


_DONE = object()


def iter_stream(command: Sequence[str], patches: Iterable[np.ndarray]) -> Iterator[np.ndarray]:
    """Round-trip patches through a child process, yielding responses in order.

    The child receives every patch as PFM on stdin (stdin is closed after the
    last one) and must answer with one PFM blob per patch, same dimensions,
    same order. Failures raise :class:`PredictorError` carrying the 0-based
    index of the first patch without a valid response.
    """
    try:
        proc = subprocess.Popen(
            list(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE
        )
    except OSError as exc:
        raise PredictorError(f"cannot start external predictor: {exc}", 0) from exc

    shapes: queue.Queue = queue.Queue()
    writer_error: list[BaseException] = []
    stderr_chunks: list[bytes] = []

    def write_all():
        try:
            for patch in patches:
                patch = np.asarray(patch)
                shapes.put(patch.shape)
                proc.stdin.write(netpbm.encode_tensor(patch))
        except BrokenPipeError:
            pass
        except BaseException as exc:  # surfaced to the caller below
            writer_error.append(exc)
        finally:
            shapes.put(_DONE)
            try:
                proc.stdin.close()
            except BrokenPipeError:
                pass

    def drain_stderr():
        stderr_chunks.append(proc.stderr.read())

    writer = threading.Thread(target=write_all, daemon=True)
    reader = threading.Thread(target=drain_stderr, daemon=True)
    writer.start()
    reader.start()

    def failure(message: str, index: int) -> PredictorError:
        proc.kill()
        proc.wait()
        reader.join()
        detail = b"".join(stderr_chunks).decode(errors="replace").strip()
        if proc.returncode:
            message += f" (exit status {proc.returncode})"
        if detail:
            message += f": {detail.splitlines()[-1]}"
        return PredictorError(message, index)

    index = 0
    try:
        while True:
            shape = shapes.get()
            if shape is _DONE:
                break
            try:
                blobs = []
                for _ in range(netpbm.blobs_per_tensor(shape[0])):
                    blob = netpbm.read_pfm_from(proc.stdout)
                    if blob is None:
                        raise netpbm.FormatError("missing response")
                    blobs.append(blob)
            except netpbm.FormatError as exc:
                raise failure(f"external predictor failed at patch {index}: {exc}", index) from None
            result = np.concatenate(blobs, axis=0)
            if result.shape != tuple(shape):
                raise failure(
                    f"external predictor returned shape {result.shape} for patch {index} "
                    f"of shape {tuple(shape)}",
                    index,
                )
            yield result
            index += 1
        writer.join()
        if writer_error:
            raise writer_error[0]
        if proc.stdout.read(1):
            raise failure(f"external predictor sent data beyond patch {index - 1}", index)
        proc.wait()
        reader.join()
        if proc.returncode:
            raise failure(f"external predictor exited after {index} patches", index)
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()
        proc.stdout.close()


def predict_stream(command: Sequence[str], patches: Iterable[np.ndarray]) -> list[np.ndarray]:
    return list(iter_stream(command, patches))
