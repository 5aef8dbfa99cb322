"""Image I/O, channel decomposition and shared filtering primitives.

All pixel data is held in numpy arrays with intensities normalized to
[0, 1] regardless of the source bit depth:

* intensity image -- 2D float64 array, shape (height, width)
* combined image  -- 3D float64 array, shape (height, width, 3), RGB order

Arrays produced by this module are marked read-only; every function is a
pure function of its inputs and safe to call from concurrent workers.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

_SUPPORTED_FORMATS = {"PNG", "TIFF"}


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def load_image(path) -> np.ndarray:
    """Load a PNG or TIFF file, scaled to [0, 1].

    Grayscale sources (8/16-bit) yield a 2D intensity image; 8-bit RGB
    sources yield a (h, w, 3) combined image.

    Raises:
        OSError: unreadable or missing file.
        ValueError: unsupported format/mode, multi-plane TIFF, zero-area image.
    """
    try:
        img = Image.open(path)
    except UnidentifiedImageError as exc:
        raise ValueError(f"unsupported or corrupt image file: {path}") from exc
    with img:
        if img.format not in _SUPPORTED_FORMATS:
            raise ValueError(f"unsupported format {img.format!r} for {path} (PNG/TIFF only)")
        if getattr(img, "n_frames", 1) > 1:
            raise ValueError(f"multi-plane image not supported: {path}")
        if img.width == 0 or img.height == 0:
            raise ValueError(f"zero-area image: {path}")
        mode = img.mode
        if mode == "L":
            arr = np.asarray(img, dtype=np.float64) / 255.0
        elif mode in ("I;16", "I;16B", "I;16L"):
            arr = np.asarray(img.convert("I"), dtype=np.float64) / 65535.0
        elif mode == "I":
            data = np.asarray(img, dtype=np.float64)
            if data.max(initial=0.0) > 65535.0:
                raise ValueError(f"integer image exceeds 16-bit range: {path}")
            arr = data / 65535.0
        elif mode == "RGB":
            arr = np.asarray(img, dtype=np.float64) / 255.0
        else:
            raise ValueError(f"unsupported image mode {mode!r} for {path}")
    return _freeze(arr)


def atomic_write_bytes(path, data: bytes) -> None:
    """Write a file via temp-and-rename so readers never see partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _png_bytes(img: Image.Image) -> bytes:
    import io

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_gray_png(path, values: np.ndarray, bit_depth: int = 8) -> None:
    """Write a [0, 1] intensity array as an 8- or 16-bit grayscale PNG."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    if bit_depth == 8:
        img = Image.fromarray(np.rint(v * 255.0).astype(np.uint8))
    elif bit_depth == 16:
        img = Image.fromarray(np.rint(v * 65535.0).astype(np.uint16))
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    atomic_write_bytes(path, _png_bytes(img))


def save_label_png(path, label_map: np.ndarray) -> None:
    """Write an integer label map as a 16-bit grayscale PNG."""
    lab = np.asarray(label_map)
    if lab.min(initial=0) < 0 or lab.max(initial=0) > 65535:
        raise ValueError("label values must fit in 16 bits")
    atomic_write_bytes(path, _png_bytes(Image.fromarray(lab.astype(np.uint16))))


def save_rgb_png(path, rgb: np.ndarray) -> None:
    """Write a (h, w, 3) array in [0, 1] as an 8-bit RGB PNG."""
    v = np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    atomic_write_bytes(path, _png_bytes(Image.fromarray(np.rint(v * 255.0).astype(np.uint8), "RGB")))


def extract_channels(combined: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a pseudo-colored green/white composite into its two channels.

    A pure white rendering contributes equally to r, g and b, so the white
    signal is min(r, g, b) and the residual green (g - white) is the
    surface-marker signal. Both outputs are clamped to [0, 1].

    Returns (green, white) intensity images.
    """
    c = np.asarray(combined, dtype=np.float64)
    if c.ndim != 3 or c.shape[2] != 3 or c.shape[0] == 0 or c.shape[1] == 0:
        raise ValueError("combined image must be a non-empty (h, w, 3) array")
    white = c.min(axis=2)
    green = np.clip(c[:, :, 1] - white, 0.0, 1.0)
    return _freeze(green), _freeze(np.clip(white, 0.0, 1.0))


def compose_channels(green: np.ndarray, white: np.ndarray) -> np.ndarray:
    """Recompose the pseudo-colored rendering: r = b = white, g = green + white."""
    if green.shape != white.shape:
        raise ValueError("channel shapes differ")
    out = np.empty(green.shape + (3,), dtype=np.float64)
    out[:, :, 0] = white
    out[:, :, 1] = np.clip(green + white, 0.0, 1.0)
    out[:, :, 2] = white
    return _freeze(out)


@dataclass(frozen=True)
class GaussianKernel:
    """A 1D symmetric blur kernel applied separably in x and y.

    The binomial rows produced by :func:`binomial_kernel` approximate a
    narrow Gaussian; the wide-Gaussian side of the band-pass that motivates
    the saliency measure is realized by mean subtraction rather than by an
    explicit second blur, so no second kernel exists at runtime.
    """

    radius: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if self.radius < 0 or w.ndim != 1 or len(w) != 2 * self.radius + 1:
            raise ValueError("weights must be a 1D array of length 2*radius+1")
        if np.any(w < 0):
            raise ValueError("kernel weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("kernel weights must sum to 1 within 1e-9")
        if not np.array_equal(w, w[::-1]):
            raise ValueError("kernel weights must be symmetric")
        object.__setattr__(self, "weights", _freeze(w))


def binomial_kernel(radius: int) -> GaussianKernel:
    """Binomial approximation to a Gaussian; radius 2 gives (1,4,6,4,1)/16."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    row = np.array([math.comb(2 * radius, i) for i in range(2 * radius + 1)], dtype=np.float64)
    return GaussianKernel(radius=radius, weights=row / row.sum())


def _convolve_axis(img: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    r = (len(weights) - 1) // 2
    if r == 0:
        return img * weights[0]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="edge")
    out = np.zeros_like(img)
    n = img.shape[axis]
    for i, w in enumerate(weights):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += w * padded[tuple(sl)]
    return out


def gaussian_blur(img: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """Separable blur (horizontal then vertical) with replicated borders.

    Border replication avoids the artificial dark halo a zero pad would
    create, which would otherwise inflate saliency along image edges.
    """
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("intensity image must be 2D")
    out = _convolve_axis(a, kernel.weights, axis=1)
    out = _convolve_axis(out, kernel.weights, axis=0)
    return _freeze(out)


def histogram(img: np.ndarray, bins: int) -> np.ndarray:
    """Histogram of a [0, 1] image; value v falls in bin floor(v*(bins-1) + 0.5)."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    v = np.asarray(img, dtype=np.float64)
    idx = np.floor(v * (bins - 1) + 0.5).astype(np.int64)
    return np.bincount(idx.ravel(), minlength=bins)
