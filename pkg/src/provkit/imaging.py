"""Image decoding and preprocessing.

All pixel data inside the package travels as :class:`ImageTensor`: a
float64 array of shape (height, width, channels) with values in [0, 1].
Decoding and resampling of raw bytes is delegated to Pillow; the exact
area-average resampler used by the deterministic stub embedder is
implemented here in plain numpy so it has no library dependence.
"""

from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError

# ITU-R 601-2 luma weights, matching Pillow's "L" conversion.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class ImageTensor:
    """A decoded image: row-major float values in [0, 1].

    values has shape (height, width, channels) with channels 1 or 3.
    """

    width: int
    height: int
    channels: int
    values: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.values.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"({self.height}, {self.width}, {self.channels})"
            )
        lo, hi = float(self.values.min(initial=0.0)), float(self.values.max(initial=0.0))
        if lo < -1e-12 or hi > 1.0 + 1e-12:
            raise ValueError(f"values outside [0, 1]: min={lo}, max={hi}")

    @property
    def plane(self) -> np.ndarray:
        """The single channel as a 2-D array; grayscale tensors only."""
        if self.channels != 1:
            raise ValueError("plane is only defined for grayscale tensors")
        return self.values[:, :, 0]


def tensor_from_array(values: np.ndarray) -> ImageTensor:
    """Wrap a (h, w) or (h, w, c) float array, clamping tiny round-off."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ValueError(f"expected 2-D or 3-D array, got shape {arr.shape}")
    arr = np.clip(arr, 0.0, 1.0)
    h, w, c = arr.shape
    return ImageTensor(width=w, height=h, channels=c, values=arr)


def to_grayscale(t: ImageTensor) -> ImageTensor:
    """Collapse an RGB tensor to one luminance channel (no-op when already gray)."""
    if t.channels == 1:
        return t
    gray = t.values @ _LUMA
    return tensor_from_array(gray)


def preprocess(raw_bytes: bytes, target_side: int = 224, gray: bool = False) -> ImageTensor:
    """Decode bytes and normalize to a square target_side tensor.

    The shorter side is scaled to target_side (bilinear), then the long
    axis is center-cropped, preserving aspect ratio. gray=True converts
    to a single luminance channel before resampling.

    Raises ImageDecodeError for undecodable bytes or zero-area images,
    ValueError for a non-positive target_side.
    """
    if target_side < 1:
        raise ValueError(f"target_side must be >= 1, got {target_side}")
    try:
        img = Image.open(io.BytesIO(raw_bytes))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image bytes: {exc}") from exc
    if img.width == 0 or img.height == 0:
        raise ImageDecodeError("zero-area image")

    img = img.convert("L" if gray else "RGB")
    w, h = img.size
    if w <= h:
        new_w = target_side
        new_h = max(target_side, round(h * target_side / w))
    else:
        new_h = target_side
        new_w = max(target_side, round(w * target_side / h))
    img = img.resize((new_w, new_h), Image.Resampling.BILINEAR)

    left = (new_w - target_side) // 2
    top = (new_h - target_side) // 2
    img = img.crop((left, top, left + target_side, top + target_side))

    arr = np.asarray(img, dtype=np.float64) / 255.0
    return tensor_from_array(arr)


@functools.lru_cache(maxsize=64)
def _overlap_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) matrix of exact interval overlaps."""
    scale = n_in / n_out
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        start = i * scale
        end = (i + 1) * scale
        j0 = int(math.floor(start))
        j1 = min(int(math.ceil(end)), n_in)
        for j in range(j0, j1):
            weights[i, j] = min(end, j + 1) - max(start, j)
    weights /= scale
    weights.setflags(write=False)
    return weights


def box_resize(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Exact area-average resize of a 2-D array.

    Each output pixel is the mean of its (possibly fractional) source
    rectangle. Deterministic and dependency-free; used by the stub
    embedder and as an independent resampling reference in tests.
    """
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-D array, got shape {arr.shape}")
    rows = _overlap_weights(arr.shape[0], out_h)
    cols = _overlap_weights(arr.shape[1], out_w)
    return rows @ arr @ cols.T


def encode_png(t: ImageTensor) -> bytes:
    """Encode a tensor as PNG bytes (8-bit, for transport to providers)."""
    arr = np.clip(np.rint(t.values * 255.0), 0, 255).astype(np.uint8)
    if t.channels == 1:
        img = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        img = Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
