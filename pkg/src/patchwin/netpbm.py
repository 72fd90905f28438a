"""PFM and binary PGM codecs.

Tensors are ``C x H x W`` float arrays stored top row first; the bottom-up
row order of PFM stays inside this module. The PFM writer is canonical
(little-endian, scale ``-1.0``), so equal tensors always encode to equal
bytes. Tensors with a channel count other than 1 or 3 are stored as one
grayscale blob per channel, concatenated.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import BinaryIO

import numpy as np


class FormatError(ValueError):
    pass


_WHITESPACE = b" \t\r\n"


def _read_token(stream: BinaryIO, allow_eof: bool = False) -> bytes | None:
    """Next whitespace-delimited header token; consumes one trailing whitespace byte."""
    c = stream.read(1)
    while c and (c in _WHITESPACE or c == b"#"):
        if c == b"#":
            while c and c != b"\n":
                c = stream.read(1)
        c = stream.read(1)
    if not c:
        if allow_eof:
            return None
        raise FormatError("unexpected end of data in header")
    token = bytearray()
    while c and c not in _WHITESPACE:
        token += c
        if len(token) > 64:
            raise FormatError("header token too long")
        c = stream.read(1)
    return bytes(token)


def _parse_int(token: bytes, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"bad {what}: {token!r}") from None
    if value <= 0:
        raise FormatError(f"{what} must be positive, got {value}")
    return value


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise FormatError(f"truncated payload: expected {n} bytes, got {n - remaining}")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_pfm_from(stream: BinaryIO) -> np.ndarray | None:
    """Read one PFM blob from a binary stream.

    Returns None on a clean end of stream before any header byte.
    """
    tag = _read_token(stream, allow_eof=True)
    if tag is None:
        return None
    if tag == b"PF":
        channels = 3
    elif tag == b"Pf":
        channels = 1
    else:
        raise FormatError(f"unsupported PFM tag {tag!r}")
    width = _parse_int(_read_token(stream), "width")
    height = _parse_int(_read_token(stream), "height")
    scale_token = _read_token(stream)
    try:
        scale = float(scale_token)
    except ValueError:
        raise FormatError(f"bad scale {scale_token!r}") from None
    if scale == 0 or not np.isfinite(scale):
        raise FormatError(f"bad scale {scale_token!r}")
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    payload = _read_exact(stream, 4 * width * height * channels)
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width, channels)
    return np.ascontiguousarray(data[::-1].transpose(2, 0, 1)).astype(np.float32)


def read_pfm_all(data: bytes) -> list[np.ndarray]:
    """Decode every concatenated PFM blob in ``data``."""
    stream = io.BytesIO(data)
    blobs = []
    while (blob := read_pfm_from(stream)) is not None:
        blobs.append(blob)
    if not blobs:
        raise FormatError("no PFM data")
    return blobs


def read_pfm(data: bytes) -> np.ndarray:
    """Decode exactly one PFM blob; trailing bytes are an error."""
    stream = io.BytesIO(data)
    image = read_pfm_from(stream)
    if image is None:
        raise FormatError("no PFM data")
    if stream.read(1):
        raise FormatError("declared dimensions do not match the byte count")
    return image


def pfm_header(channels: int, height: int, width: int) -> bytes:
    tag = {1: b"Pf", 3: b"PF"}.get(channels)
    if tag is None:
        raise FormatError(f"PFM holds 1 or 3 channels, got {channels}")
    return tag + b"\n%d %d\n-1.0\n" % (width, height)


def write_pfm(image: np.ndarray) -> bytes:
    """Encode a ``C x H x W`` tensor with ``C`` in {1, 3} as one canonical blob."""
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    c, h, w = image.shape
    header = pfm_header(c, h, w)
    payload = np.ascontiguousarray(image.transpose(1, 2, 0)[::-1], dtype="<f4").tobytes()
    return header + payload


def encode_tensor(image: np.ndarray) -> bytes:
    """Encode any channel count; one blob, or one grayscale blob per channel."""
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    if image.shape[0] in (1, 3):
        return write_pfm(image)
    return b"".join(write_pfm(channel[None]) for channel in image)


def blobs_per_tensor(channels: int) -> int:
    return 1 if channels in (1, 3) else channels


def decode_tensor(data: bytes) -> np.ndarray:
    """Inverse of :func:`encode_tensor`: stack all blobs along the channel axis."""
    blobs = read_pfm_all(data)
    if len({b.shape[1:] for b in blobs}) != 1:
        raise FormatError("blobs in one file have different sizes")
    return np.concatenate(blobs, axis=0)


def write_pgm(image: np.ndarray, maxval: int = 255) -> bytes:
    """Binary (P5) PGM of a ``1 x H x W`` or ``H x W`` image with values in [0, 1]."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        if image.shape[0] != 1:
            raise FormatError(f"PGM is single-channel, got {image.shape[0]} channels")
        image = image[0]
    if maxval not in (255, 65535):
        raise FormatError(f"maxval must be 255 or 65535, got {maxval}")
    if not np.all(np.isfinite(image)) or image.min() < 0.0 or image.max() > 1.0:
        raise FormatError("PGM values must lie in [0, 1]")
    levels = np.rint(image * maxval)
    dtype = np.dtype("u1") if maxval == 255 else np.dtype(">u2")
    h, w = image.shape
    return b"P5\n%d %d\n%d\n" % (w, h, maxval) + levels.astype(dtype).tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    """Decode a binary PGM into a ``1 x H x W`` float array scaled to [0, 1]."""
    stream = io.BytesIO(data)
    if _read_token(stream) != b"P5":
        raise FormatError("not a binary PGM (P5)")
    width = _parse_int(_read_token(stream), "width")
    height = _parse_int(_read_token(stream), "height")
    maxval = _parse_int(_read_token(stream), "maxval")
    if maxval > 65535:
        raise FormatError(f"maxval {maxval} out of range")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    payload = _read_exact(stream, dtype.itemsize * width * height)
    if stream.read(1):
        raise FormatError("declared dimensions do not match the byte count")
    levels = np.frombuffer(payload, dtype=dtype).reshape(1, height, width)
    return levels.astype(np.float64) / maxval


def load_image(path: str | Path) -> np.ndarray:
    """Read a ``.pgm`` or ``.pfm`` file into a ``C x H x W`` float64 array."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P5":
        return read_pgm(data)
    if data[:2] in (b"PF", b"Pf"):
        return decode_tensor(data).astype(np.float64)
    raise FormatError(f"{path}: unrecognised image format")


def save_image(path: str | Path, image: np.ndarray, maxval: int = 255) -> None:
    """Write by extension: ``.pgm`` (quantised) or anything else as PFM."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        path.write_bytes(write_pgm(image, maxval))
    else:
        path.write_bytes(encode_tensor(image))
