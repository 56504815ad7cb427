import io

import numpy as np
import pytest
from PIL import Image

from provkit.errors import ImageDecodeError
from provkit.imaging import (
    ImageTensor,
    box_resize,
    preprocess,
    tensor_from_array,
    to_grayscale,
)


def png_bytes(arr: np.ndarray) -> bytes:
    img = Image.fromarray(arr)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def smooth_rgb(width: int, height: int) -> np.ndarray:
    """A low-frequency fixture where any reasonable resampler agrees."""
    x = np.linspace(0, 2 * np.pi, width)
    y = np.linspace(0, 2 * np.pi, height)
    yy, xx = np.meshgrid(y, x, indexing="ij")
    base = 0.5 + 0.35 * np.sin(xx) * np.cos(yy)
    channels = [base, 0.5 + 0.3 * np.cos(xx * 0.7), 0.5 + 0.25 * np.sin(yy * 0.5)]
    return (np.clip(np.stack(channels, axis=-1), 0, 1) * 255).astype(np.uint8)


def naive_bilinear(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Plain bilinear sampling at output pixel centers (no antialias)."""
    h, w = plane.shape
    out = np.zeros((out_h, out_w))
    for i in range(out_h):
        sy = min(max((i + 0.5) * h / out_h - 0.5, 0.0), h - 1.0)
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for j in range(out_w):
            sx = min(max((j + 0.5) * w / out_w - 0.5, 0.0), w - 1.0)
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            top = plane[y0, x0] * (1 - fx) + plane[y0, x1] * fx
            bot = plane[y1, x0] * (1 - fx) + plane[y1, x1] * fx
            out[i, j] = top * (1 - fy) + bot * fy
    return out


def test_exact_downscale_shape():
    data = png_bytes(smooth_rgb(448, 448))
    t = preprocess(data, target_side=224)
    assert (t.width, t.height, t.channels) == (224, 224, 3)
    assert t.values.shape == (224, 224, 3)
    assert 0.0 <= t.values.min() and t.values.max() <= 1.0


def test_landscape_resize_matches_independent_resampler():
    # 300x200 -> shorter side to 224 (336x224), center-crop to 224x224
    raw = smooth_rgb(300, 200)
    t = preprocess(png_bytes(raw), target_side=224)
    assert (t.width, t.height) == (224, 224)

    decoded = np.asarray(Image.open(io.BytesIO(png_bytes(raw))).convert("RGB"), dtype=np.float64)
    diffs = []
    for c in range(3):
        resized = naive_bilinear(decoded[:, :, c], 224, 336)
        left = (336 - 224) // 2
        cropped = resized[:, left : left + 224] / 255.0
        diffs.append(np.abs(cropped - t.values[:, :, c]))
    assert float(np.mean(diffs)) < 0.02


def test_portrait_orientation_crops_tall_axis():
    t = preprocess(png_bytes(smooth_rgb(200, 300)), target_side=100)
    assert (t.width, t.height) == (100, 100)


def test_gray_preprocess_single_channel():
    t = preprocess(png_bytes(smooth_rgb(64, 64)), target_side=32, gray=True)
    assert t.channels == 1
    assert t.plane.shape == (32, 32)


def test_truncated_bytes_raise_decode_error():
    data = png_bytes(smooth_rgb(64, 64))
    with pytest.raises(ImageDecodeError):
        preprocess(data[: len(data) // 2], target_side=32)


def test_garbage_bytes_raise_decode_error():
    with pytest.raises(ImageDecodeError):
        preprocess(b"not an image at all", target_side=32)


def test_bad_target_side_rejected():
    with pytest.raises(ValueError):
        preprocess(png_bytes(smooth_rgb(32, 32)), target_side=0)


def test_tensor_validation():
    with pytest.raises(ValueError):
        ImageTensor(width=2, height=2, channels=2, values=np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        ImageTensor(width=2, height=2, channels=1, values=np.zeros((3, 2, 1)))
    with pytest.raises(ValueError):
        tensor_from_array(np.zeros((2, 2, 2)))  # 2 channels


def test_tensor_from_array_clamps_round_off():
    t = tensor_from_array(np.array([[1.0 + 1e-15, -1e-15]]))
    assert t.values.max() <= 1.0
    assert t.values.min() >= 0.0


def test_to_grayscale_luma_weights():
    rgb = np.zeros((1, 3, 3))
    rgb[0, 0] = [1.0, 0.0, 0.0]
    rgb[0, 1] = [0.0, 1.0, 0.0]
    rgb[0, 2] = [0.0, 0.0, 1.0]
    g = to_grayscale(tensor_from_array(rgb)).plane[0]
    assert g == pytest.approx([0.299, 0.587, 0.114], abs=1e-12)


def test_box_resize_block_means():
    plane = np.array(
        [
            [0.0, 1.0, 2.0, 3.0],
            [4.0, 5.0, 6.0, 7.0],
            [8.0, 9.0, 10.0, 11.0],
            [12.0, 13.0, 14.0, 15.0],
        ]
    )
    out = box_resize(plane, 2, 2)
    expected = np.array([[2.5, 4.5], [10.5, 12.5]])  # exact 2x2 block means
    assert np.allclose(out, expected, atol=1e-12)


def test_box_resize_preserves_constants_and_mean():
    plane = np.full((10, 7), 0.37)
    out = box_resize(plane, 3, 5)
    assert np.allclose(out, 0.37, atol=1e-12)
    rng = np.random.default_rng(3)
    plane = rng.random((12, 18))
    out = box_resize(plane, 4, 6)
    # area averaging preserves the global mean exactly
    assert out.mean() == pytest.approx(plane.mean(), abs=1e-12)
