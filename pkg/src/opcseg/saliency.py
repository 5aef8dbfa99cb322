"""Frequency-tuned saliency: distance of each blurred pixel from the image mean.

Each fluorescence channel carries a single scalar feature, so the vector
norm of the general formulation reduces to an absolute difference. Maps are
normalized to a peak of 1 before thresholding so that saliency levels are
bit-depth-free quantities in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .imaging import GaussianKernel, binomial_kernel, gaussian_blur

DEFAULT_KERNEL_RADIUS = 2


@dataclass(frozen=True)
class SaliencyMap:
    """Non-negative per-pixel saliency plus the mean feature it was measured against."""

    values: np.ndarray
    mean_feature: float
    normalized: bool = False

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError("saliency values must be 2D")
        v.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def ft_saliency(img: np.ndarray, kernel: GaussianKernel | None = None) -> SaliencyMap:
    """Compute |mean(img) - blur(img)| per pixel. Output is not yet normalized."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("image must be a non-empty 2D array")
    if kernel is None:
        kernel = binomial_kernel(DEFAULT_KERNEL_RADIUS)
    mu = float(a.mean())
    values = np.abs(mu - gaussian_blur(a, kernel))
    return SaliencyMap(values=values, mean_feature=mu, normalized=False)


def normalize(smap: SaliencyMap) -> SaliencyMap:
    """Scale so the peak value is 1; an identically-zero map is returned as-is.

    Idempotent: normalizing a normalized map changes nothing.
    """
    peak = float(smap.values.max())
    if peak == 0.0:
        return replace(smap, normalized=True)
    return SaliencyMap(values=smap.values / peak, mean_feature=smap.mean_feature, normalized=True)
