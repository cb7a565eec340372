"""Image and depth containers, PNG/PFM I/O and seeded random streams.

Images are plain ``numpy`` arrays of shape ``(H, W, C)`` with ``C`` in
``{1, 3}``, stored as float32 in ``[0, 1]``.  Depth maps carry a flag telling
whether they were normalized to ``[0, 1]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

FLOAT = np.float32


class ImageFormatError(ValueError):
    """Raised for unreadable or unsupported image and depth files."""


def as_image(data, *, name: str = "image") -> np.ndarray:
    """Validate ``data`` and return it as an ``(H, W, C)`` float32 array."""
    arr = np.asarray(data, dtype=FLOAT)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"{name} must be HxW, HxWx1 or HxWx3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma as an ``(H, W)`` array; single-channel input passes through."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


@dataclass(frozen=True)
class DepthMap:
    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=FLOAT)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim != 2:
            raise ValueError(f"depth must be HxW, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("depth contains non-finite values")
        if np.any(arr < 0):
            raise ValueError("negative depth")
        if self.normalized and arr.size and arr.max() > 1:
            raise ValueError("normalized depth exceeds 1")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def normalize_depth(depth: DepthMap) -> DepthMap:
    """Scale depth by its maximum so the farthest point sits at exactly 1."""
    peak = float(depth.data.max()) if depth.data.size else 0.0
    if peak == 0.0:
        return DepthMap(np.zeros_like(depth.data), normalized=True)
    out = depth.data / FLOAT(peak)
    # float32 division by the max itself is exact, but guard against drift
    out = np.minimum(out, FLOAT(1.0))
    return DepthMap(out, normalized=True)


# -- random streams ----------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(root_seed, stream_index)``.

    Backed by numpy's counter-based Philox bit generator; each call to
    :meth:`generator` restarts the stream from its beginning.
    """

    root_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for field in ("root_seed", "stream_index"):
            value = getattr(self, field)
            if not 0 <= int(value) < 2**64:
                raise ValueError(f"{field} must be a 64-bit unsigned integer, got {value}")
            object.__setattr__(self, field, int(value))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(seq))


def split_stream(rng: RngStream, sample_index: int) -> RngStream:
    """Per-sample stream; depends only on the root seed and the index."""
    return RngStream(rng.root_seed, sample_index)


# -- PNG ---------------------------------------------------------------------


def load_image(path) -> np.ndarray:
    """Read an 8- or 16-bit grayscale/RGB PNG into a float32 image in [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise ImageFormatError(f"cannot read image: {path} does not exist")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError(f"cannot decode image: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageFormatError(f"unsupported bit depth {raw.dtype} in {path}")
    if raw.ndim == 2:
        raw = raw[:, :, None]
    elif raw.shape[2] == 3:
        raw = raw[:, :, ::-1]
    else:
        raise ImageFormatError(f"unsupported channel count {raw.shape[2]} in {path}")
    return (raw.astype(np.float64) / scale).astype(FLOAT)


def quantize16(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 65535.0).astype(np.uint16)


def save_image(path, img: np.ndarray, bits: int = 16) -> Path:
    """Write a [0, 1] image as PNG; values outside the range are clipped."""
    path = Path(path)
    img = as_image(img)
    if bits == 16:
        raw = quantize16(img)
    elif bits == 8:
        raw = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    else:
        raise ValueError(f"bits must be 8 or 16, got {bits}")
    raw = raw[:, :, 0] if raw.shape[2] == 1 else raw[:, :, ::-1]
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), np.ascontiguousarray(raw)):
        raise ImageFormatError(f"failed to write {path}")
    return path


# -- depth -------------------------------------------------------------------


def read_pfm(path) -> np.ndarray:
    """Read a grayscale ``Pf`` PFM file into an ``(H, W)`` float32 array."""
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header != b"Pf":
            raise ImageFormatError(f"malformed PFM header {header!r} in {path} (expected 'Pf')")
        dims = fh.readline().decode("ascii", "replace")
        match = re.fullmatch(r"\s*(\d+)\s+(\d+)\s*", dims)
        if not match:
            raise ImageFormatError(f"malformed PFM dimensions {dims!r} in {path}")
        width, height = int(match.group(1)), int(match.group(2))
        try:
            scale = float(fh.readline())
        except ValueError as exc:
            raise ImageFormatError(f"malformed PFM scale line in {path}") from exc
        if scale == 0:
            raise ImageFormatError(f"malformed PFM scale 0 in {path}")
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(), dtype=dtype)
    if data.size != width * height:
        raise ImageFormatError(f"PFM {path}: expected {width * height} values, got {data.size}")
    # rows are stored bottom-to-top
    return np.flipud(data.reshape(height, width)).astype(FLOAT)


def write_pfm(path, data: np.ndarray) -> Path:
    """Write an ``(H, W)`` array as little-endian grayscale PFM."""
    arr = np.asarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"PFM writer expects HxW data, got {arr.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(np.flipud(arr)).tobytes())
    return path


def load_depth(path, depth_scale: float | None = None) -> DepthMap:
    """Load raw (unnormalized) depth from PFM or a scaled 16-bit PNG.

    ``depth_scale`` converts 16-bit PNG codes to depth units and is required
    for PNG input.
    """
    path = Path(path)
    if not path.is_file():
        raise ImageFormatError(f"cannot read depth: {path} does not exist")
    if path.suffix.lower() == ".pfm":
        data = read_pfm(path)
    elif path.suffix.lower() == ".png":
        if depth_scale is None:
            raise ImageFormatError(f"PNG depth {path} needs a depth scale (--depth-scale)")
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise ImageFormatError(f"cannot decode depth image: {path}")
        if raw.dtype != np.uint16 or raw.ndim != 2:
            raise ImageFormatError(f"depth PNG must be 16-bit grayscale: {path}")
        data = (raw.astype(np.float64) * depth_scale).astype(FLOAT)
    else:
        raise ImageFormatError(f"unsupported depth format: {path.suffix}")
    if np.any(data < 0):
        raise ImageFormatError(f"negative depth in {path}")
    return DepthMap(data, normalized=False)
