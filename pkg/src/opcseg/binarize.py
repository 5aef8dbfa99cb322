"""Binarization paths: Otsu, Canny + hole filling, fixed-level and Bradley.

Comparison conventions are fixed so boundary behavior is testable:
saliency-level thresholding uses >=, the Bradley local test uses strict >.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import GaussianKernel, binomial_kernel, gaussian_blur
from .saliency import SaliencyMap

EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CannyParams:
    """Edge detector settings; thresholds are fractions of the max gradient magnitude."""

    blur_kernel: GaussianKernel
    low_ratio: float = 0.10
    high_ratio: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.low_ratio < self.high_ratio < 1.0):
            raise ValueError("need 0 < low_ratio < high_ratio < 1")

    @classmethod
    def default(cls) -> "CannyParams":
        return cls(blur_kernel=binomial_kernel(2))


def otsu_threshold(hist) -> float:
    """Level in [0, 1] of the histogram bin maximizing between-class variance.

    A split at bin t places bins <= t in the background class. Ties are
    broken toward the lowest bin; a single-bin histogram returns that bin's
    level (degenerate: the caller may treat the image as uniform).
    """
    h = np.asarray(hist, dtype=np.float64)
    if h.ndim != 1 or len(h) == 0:
        raise ValueError("histogram must be a non-empty 1D sequence")
    total = h.sum()
    if total <= 0:
        raise ValueError("histogram must have positive total count")
    nbins = len(h)
    nonzero = np.flatnonzero(h)
    if len(nonzero) == 1:
        return float(nonzero[0]) / (nbins - 1)
    p = h / total
    levels = np.arange(nbins, dtype=np.float64)
    w0 = np.cumsum(p)
    mu0 = np.cumsum(p * levels)
    mu_total = mu0[-1]
    denom = w0 * (1.0 - w0)
    var_between = np.zeros(nbins)
    valid = denom > 0
    var_between[valid] = (mu_total * w0[valid] - mu0[valid]) ** 2 / denom[valid]
    return float(np.argmax(var_between)) / (nbins - 1)


def threshold_at(smap: SaliencyMap, level: float) -> np.ndarray:
    """Binary map of pixels with saliency >= level. Requires a normalized map."""
    if not smap.normalized:
        raise ValueError("threshold_at requires a normalized saliency map")
    return smap.values >= level


def _sobel(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Separable Sobel with replicated borders: smooth (1,2,1) across,
    # difference (-1,0,1) along the derivative axis.
    p = np.pad(img, 1, mode="edge")
    smooth_y = p[:-2, :] + 2.0 * p[1:-1, :] + p[2:, :]
    gx = smooth_y[:, 2:] - smooth_y[:, :-2]
    smooth_x = p[:, :-2] + 2.0 * p[:, 1:-1] + p[:, 2:]
    gy = smooth_x[2:, :] - smooth_x[:-2, :]
    return gx, gy


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    # Quantize gradient direction to 4 sectors and compare against the two
    # neighbors along it. A plateau of equal magnitudes keeps only the pixel
    # on the positive side (> one way, >= the other) so edges stay thin.
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag

    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.floor((angle + np.pi / 8) / (np.pi / 4)).astype(np.int8) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}  # (dy, dx) per sector

    keep = np.zeros_like(mag, dtype=bool)
    for s, (dy, dx) in offsets.items():
        sel = sector == s
        fwd = padded[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx]
        back = padded[1 - dy : h + 1 - dy, 1 - dx : w + 1 - dx]
        keep |= sel & (mag > fwd) & (mag >= back)
    return keep & (mag > 0)


def canny_edges(img: np.ndarray, params: CannyParams | None = None) -> np.ndarray:
    """Thin edge map: blur, Sobel, non-maximum suppression, hysteresis.

    The double threshold is (low_ratio, high_ratio) times the maximum
    gradient magnitude; weak edge pixels survive only in 8-connected
    components that contain at least one strong pixel.
    """
    if params is None:
        params = CannyParams.default()
    a = np.asarray(img, dtype=np.float64)
    blurred = gaussian_blur(a, params.blur_kernel)
    gx, gy = _sobel(blurred)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0.0:
        return np.zeros(a.shape, dtype=bool)
    thin = _nonmax_suppress(mag, gx, gy)
    weak = thin & (mag >= params.low_ratio * peak)
    strong = thin & (mag >= params.high_ratio * peak)
    if not strong.any():
        return np.zeros(a.shape, dtype=bool)
    lab, n = ndimage.label(weak, structure=EIGHT)
    has_strong = np.zeros(n + 1, dtype=bool)
    has_strong[lab[strong]] = True
    has_strong[0] = False
    return has_strong[lab]


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Foreground plus any background region not 4-connected to the border."""
    return ndimage.binary_fill_holes(np.asarray(mask, dtype=bool))


def fuse_white(b1: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """Pixelwise OR of two binary maps of equal shape."""
    if b1.shape != b2.shape:
        raise ValueError(f"shape mismatch: {b1.shape} vs {b2.shape}")
    return b1 | b2


def bradley_threshold(img: np.ndarray, window: int, sensitivity: float) -> np.ndarray:
    """Local adaptive baseline: foreground iff value > local_mean * (1 - sensitivity).

    The local mean is the true mean of the window x window neighborhood
    clamped to the image bounds, computed from an integral image.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    if not (0.0 <= sensitivity <= 1.0):
        raise ValueError("sensitivity must be in [0, 1]")
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    r = window // 2

    ii = np.zeros((h + 1, w + 1))
    ii[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)

    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    y0 = np.clip(ys - r, 0, h)
    y1 = np.clip(ys + r + 1, 0, h)
    x0 = np.clip(xs - r, 0, w)
    x1 = np.clip(xs + r + 1, 0, w)

    sums = ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0]
    counts = (y1 - y0) * (x1 - x0)
    local_mean = sums / counts
    return a > local_mean * (1.0 - sensitivity)
