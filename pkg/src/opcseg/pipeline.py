"""End-to-end detection: saliency, white/green binarization, counting, watershed.

The OSLO method selects the green-channel saliency level by minimax
optimization; the three baseline methods swap that selection for a direct
binarization of the same saliency map (global Otsu, Canny edges with hole
filling, or Bradley's local adaptive threshold) and share the rest of the
pipeline, so comparisons isolate binarization quality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import binarize, imaging, levelselect, regions, segment
from .distance import edt_squared
from .errors import PipelineError
from .saliency import SaliencyMap, ft_saliency, normalize
from .segment import Detection, SegmentationResult

METHODS = ("oslo", "otsu_baseline", "canny_baseline", "bradley_baseline")

HISTOGRAM_BINS = 256


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs for one detection run; defaults follow the reference setup."""

    blur_radius: int = 2
    canny_blur_radius: int = 2
    canny_low: float = 0.10
    canny_high: float = 0.25
    level_grid_size: int = levelselect.DEFAULT_LEVEL_GRID_SIZE
    lambda_grid_size: int = levelselect.DEFAULT_LAMBDA_GRID_SIZE
    min_region_area: int = regions.DEFAULT_MIN_REGION_AREA
    surface_mode: str = "distance"  # or "gradient"
    match_radius: float = 15.0
    fixed_lambda: float | None = None
    bradley_window: int = 0  # 0 = derive from image size
    bradley_sensitivity: float = 0.15

    def __post_init__(self):
        if self.blur_radius < 0 or self.canny_blur_radius < 0:
            raise ValueError("blur radii must be >= 0")
        if not (0.0 < self.canny_low < self.canny_high < 1.0):
            raise ValueError("need 0 < canny_low < canny_high < 1")
        if self.level_grid_size < 2 or self.lambda_grid_size < 2:
            raise ValueError("grids need at least 2 points")
        if self.min_region_area < 1:
            raise ValueError("min_region_area must be >= 1")
        if self.surface_mode not in ("distance", "gradient"):
            raise ValueError("surface_mode must be 'distance' or 'gradient'")
        if self.match_radius <= 0:
            raise ValueError("match_radius must be > 0")
        if self.fixed_lambda is not None and not (0.0 <= self.fixed_lambda <= 1.0):
            raise ValueError("fixed_lambda must be in [0, 1]")
        if self.bradley_window != 0 and (self.bradley_window < 3 or self.bradley_window % 2 == 0):
            raise ValueError("bradley_window must be 0 (auto) or odd >= 3")
        if not (0.0 <= self.bradley_sensitivity <= 1.0):
            raise ValueError("bradley_sensitivity must be in [0, 1]")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, mapping) -> "PipelineConfig":
        kwargs = {}
        for f in fields(cls):
            if f.name not in mapping:
                continue
            raw = mapping[f.name]
            if f.name == "surface_mode":
                kwargs[f.name] = str(raw)
            elif f.name == "fixed_lambda":
                kwargs[f.name] = None if raw in (None, "", "none") else float(raw)
            elif f.name in ("canny_low", "canny_high", "match_radius", "bradley_sensitivity"):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = int(raw)
        unknown = set(mapping) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)


@dataclass
class PipelineRun:
    """A detection result plus the diagnostics the summary report needs."""

    method: str
    segmentation: SegmentationResult
    level: float | None = None        # level applied to the green saliency map
    lambda_star: float | None = None  # minimax weight (OSLO only)
    e_star: float | None = None
    m_count: int = 0
    r_uwi: float | None = None
    timings: dict = field(default_factory=dict)
    stages: dict | None = None
    minimax: levelselect.MinimaxResult | None = None

    @property
    def count(self) -> int:
        return self.segmentation.count


def _empty_result(shape) -> SegmentationResult:
    return SegmentationResult(label_map=np.zeros(shape, dtype=np.int32),
                              detections=(), count=0)


def _bradley_window(config: PipelineConfig, shape) -> int:
    if config.bradley_window:
        return config.bradley_window
    # Matlab-style default neighborhood: 2*floor(size/16)+1.
    return 2 * (min(shape) // 16) + 1


def gradient_surface(green: np.ndarray, blur_radius: int) -> np.ndarray:
    """Sobel gradient magnitude of the blurred green channel (alternative surface)."""
    blurred = imaging.gaussian_blur(green, imaging.binomial_kernel(blur_radius))
    gx, gy = binarize._sobel(blurred)
    return np.hypot(gx, gy)


def _binarize_green(method: str, s_g: SaliencyMap, config: PipelineConfig, run: PipelineRun):
    """Produce the green foreground for the requested method."""
    if method == "oslo":
        raise AssertionError("oslo handled by the level-selection path")
    if method == "otsu_baseline":
        level = binarize.otsu_threshold(imaging.histogram(s_g.values, HISTOGRAM_BINS))
        run.level = level
        return binarize.threshold_at(s_g, level)
    if method == "canny_baseline":
        params = binarize.CannyParams(
            blur_kernel=imaging.binomial_kernel(config.canny_blur_radius),
            low_ratio=config.canny_low, high_ratio=config.canny_high)
        return binarize.fill_holes(binarize.canny_edges(s_g.values, params))
    if method == "bradley_baseline":
        return binarize.bradley_threshold(s_g.values, _bradley_window(config, s_g.shape),
                                          config.bradley_sensitivity)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def detect_cells(green: np.ndarray, white: np.ndarray,
                 config: PipelineConfig | None = None,
                 method: str = "oslo",
                 keep_stages: bool = False) -> PipelineRun:
    """Run the full detection pipeline on a green/white channel pair."""
    if config is None:
        config = PipelineConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    green = np.asarray(green, dtype=np.float64)
    white = np.asarray(white, dtype=np.float64)
    if green.ndim != 2 or green.shape != white.shape:
        raise ValueError("green and white channels must be 2D arrays of equal shape")

    run = PipelineRun(method=method, segmentation=_empty_result(green.shape))
    timings = run.timings
    stages: dict = {}
    t0 = time.perf_counter()

    kernel = imaging.binomial_kernel(config.blur_radius)
    s_g = normalize(ft_saliency(green, kernel))
    s_w = normalize(ft_saliency(white, kernel))
    timings["saliency"] = time.perf_counter() - t0
    if keep_stages:
        stages["s_g"] = s_g.values
        stages["s_w"] = s_w.values
        run.stages = stages

    # A uniform channel has an identically-zero saliency map: no salient
    # structure at all, so there is nothing to detect.
    if s_g.values.max() == 0.0 or s_w.values.max() == 0.0:
        return run

    t = time.perf_counter()
    b_w1 = binarize.threshold_at(
        s_w, binarize.otsu_threshold(imaging.histogram(s_w.values, HISTOGRAM_BINS)))
    canny_params = binarize.CannyParams(
        blur_kernel=imaging.binomial_kernel(config.canny_blur_radius),
        low_ratio=config.canny_low, high_ratio=config.canny_high)
    edges_w = binarize.canny_edges(s_w.values, canny_params)
    b_w2 = binarize.fill_holes(edges_w)
    b_w = binarize.fuse_white(b_w1, b_w2)
    white_set = regions.filter_small(regions.label_components(b_w, 8), config.min_region_area)
    timings["white_channel"] = time.perf_counter() - t
    if keep_stages:
        stages.update(b_w1=b_w1, b_w2=b_w2, b_w=b_w)
    if len(white_set) == 0:
        return run

    t = time.perf_counter()
    if method == "oslo":
        level_grid = levelselect.default_level_grid(config.level_grid_size)
        lambda_grid = levelselect.default_lambda_grid(config.lambda_grid_size)
        table = levelselect.build_level_table(s_g, white_set, level_grid,
                                              config.min_region_area)
        if config.fixed_lambda is not None:
            mm = levelselect.evaluate_fixed_lambda(config.fixed_lambda, level_grid, table)
        else:
            mm = levelselect.minimax_select(lambda_grid, level_grid, table)
        run.lambda_star = mm.lambda_star
        run.e_star = mm.e_star
        run.level = mm.l_g
        run.minimax = mm if keep_stages else None
        b_g = binarize.threshold_at(s_g, mm.l_g)
    else:
        b_g = _binarize_green(method, s_g, config, run)
    timings["green_binarization"] = time.perf_counter() - t
    if keep_stages:
        stages["b_g"] = b_g

    t = time.perf_counter()
    green_set = regions.filter_small(regions.label_components(b_g, 8), config.min_region_area)
    pairing = regions.pair_regions(b_g, white_set, green_set)
    run.m_count = pairing.m_count
    if pairing.m_count == 0:
        timings["pairing"] = time.perf_counter() - t
        return run
    bound = segment.ratio_upper_bound(pairing.r_wi_values())
    run.r_uwi = bound
    detections = segment.count_and_mark(pairing, bound)
    timings["pairing"] = time.perf_counter() - t
    if not detections:
        return run

    t = time.perf_counter()
    b_c = segment.candidate_map(b_w, b_g)
    markers, detections = segment.markers_from_detections(detections, b_c.shape)
    if config.surface_mode == "distance":
        surface = -edt_squared(b_c).astype(np.float64)
    else:
        surface = gradient_surface(green, config.blur_radius)
    run.segmentation = segment.watershed(surface, markers, b_c, detections)
    timings["segmentation"] = time.perf_counter() - t
    if keep_stages:
        stages.update(b_c=b_c, markers=markers.label_map, surface=surface)
    timings["total"] = time.perf_counter() - t0
    return run


def run_pipeline(green: np.ndarray, white: np.ndarray,
                 config: PipelineConfig | None = None) -> SegmentationResult:
    """Composed detection run returning only the segmentation."""
    return detect_cells(green, white, config, method="oslo").segmentation
