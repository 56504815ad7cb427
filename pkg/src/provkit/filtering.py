"""Gaussian smoothing and edge-enhancement.

The smoothing kernel samples the isotropic 2-D Gaussian

    G(x, y) = 1 / (2 pi sigma^2) * exp(-(x^2 + y^2) / (2 sigma^2))

on an integer grid of radius r and renormalizes the samples to sum to
one (the continuous normalizer no longer sums to one after truncation;
renormalizing preserves the image mean under blurring).

The edge map is a difference of Gaussians: the absolute difference of
blurs at sigma and 1.6 * sigma, the standard ratio at which DoG
approximates the Laplacian of Gaussian, linearly rescaled to [0, 1].
Borders are handled by mirror reflection, so output size equals input
size. Two convolution paths are provided: a separable one (the default,
two 1-D passes) and a direct 2-D one, used to cross-check the separable
path in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import ImageTensor, tensor_from_array

DOG_SIGMA_RATIO = 1.6


@dataclass(frozen=True)
class GaussianKernel:
    """Normalized (2*radius+1)^2 grid of Gaussian weights."""

    sigma: float
    radius: int
    weights: np.ndarray

    def __post_init__(self):
        side = 2 * self.radius + 1
        if self.weights.shape != (side, side):
            raise ValueError(f"weights shape {self.weights.shape}, expected ({side}, {side})")


def required_radius(sigma: float) -> int:
    """Smallest admissible truncation radius for a given sigma."""
    return math.ceil(3.0 * sigma)


def gaussian_kernel(sigma: float, radius: int | None = None) -> GaussianKernel:
    """Sample and renormalize the Gaussian on a (2*radius+1)^2 grid.

    radius defaults to ceil(3*sigma); smaller radii are rejected because
    the truncated tail would no longer be negligible.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    min_radius = required_radius(sigma)
    if radius is None:
        radius = min_radius
    if radius < min_radius:
        raise ValueError(f"radius {radius} below ceil(3*sigma) = {min_radius}")
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax, indexing="xy")
    grid = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)
    return GaussianKernel(sigma=sigma, radius=radius, weights=grid / grid.sum())


def _gaussian_1d(sigma: float, radius: int) -> np.ndarray:
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    line = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    return line / line.sum()


def _pad_reflect(plane: np.ndarray, radius: int) -> np.ndarray:
    if min(plane.shape) <= radius:
        raise ValueError(
            f"image sides {plane.shape} too small for mirror padding at radius {radius}"
        )
    return np.pad(plane, radius, mode="reflect")


def convolve(plane: np.ndarray, kernel: GaussianKernel, method: str = "separable") -> np.ndarray:
    """Blur a 2-D array with mirror-reflected borders; output size = input size.

    method "separable" runs two 1-D passes over a single padded copy;
    "direct" evaluates the full 2-D sum. Both compute the same
    correlation and agree to floating-point round-off.
    """
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected 2-D array, got shape {arr.shape}")
    r = kernel.radius
    padded = _pad_reflect(arr, r)
    if method == "separable":
        line = _gaussian_1d(kernel.sigma, r)
        rows = np.lib.stride_tricks.sliding_window_view(padded, line.size, axis=1) @ line
        cols = np.lib.stride_tricks.sliding_window_view(rows, line.size, axis=0)
        return np.einsum("ijk,k->ij", cols, line)
    if method == "direct":
        windows = np.lib.stride_tricks.sliding_window_view(padded, kernel.weights.shape)
        return np.einsum("ijkl,kl->ij", windows, kernel.weights)
    raise ValueError(f"unknown convolution method {method!r}")


def edge_map(t: ImageTensor, sigma: float, method: str = "separable") -> ImageTensor:
    """Difference-of-Gaussians edge response, rescaled to [0, 1].

    Computes |blur(t, sigma) - blur(t, 1.6*sigma)| on a grayscale tensor
    and linearly stretches the result to the unit interval; a uniformly
    zero difference (any constant image) yields an all-zero map.
    """
    if t.channels != 1:
        raise ValueError(f"edge_map requires a grayscale tensor, got {t.channels} channels")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    narrow = gaussian_kernel(sigma)
    wide = gaussian_kernel(DOG_SIGMA_RATIO * sigma)
    plane = t.plane
    diff = np.abs(convolve(plane, narrow, method) - convolve(plane, wide, method))
    lo = diff.min()
    hi = diff.max()
    if hi == lo:
        return tensor_from_array(np.zeros_like(plane))
    return tensor_from_array((diff - lo) / (hi - lo))
