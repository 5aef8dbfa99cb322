"""Two-channel fluorescence microscopy cell detection, counting and segmentation.

The pipeline computes frequency-tuned saliency per channel, binarizes the
nucleus (white) channel by fusing Otsu and hole-filled Canny maps, selects
the cell-body (green) saliency level by minimax-weighted ratio
optimization, gates candidate regions by a nucleus/intersection ratio
bound, and splits touching cells with a marker-controlled watershed.
"""

from .errors import NoFeasibleLevelError, NoIntersectionsError, PipelineError
from .evaluation import (
    EvalReport,
    EvalRow,
    GroundTruth,
    evaluate_dataset,
    f1_score,
    match_detections,
)
from .imaging import (
    GaussianKernel,
    binomial_kernel,
    extract_channels,
    gaussian_blur,
    histogram,
    load_image,
)
from .levelselect import (
    LevelCostTable,
    MinimaxResult,
    build_level_table,
    cost_at,
    inner_minimize,
    minimax_select,
)
from .pipeline import METHODS, PipelineConfig, PipelineRun, detect_cells, run_pipeline
from .regions import Region, RegionPairing, RegionSet, label_components, mean_ratio, pair_regions
from .saliency import SaliencyMap, ft_saliency, normalize
from .segment import (
    Detection,
    SegmentationResult,
    candidate_map,
    count_and_mark,
    ratio_upper_bound,
    watershed,
)
from .synthetic import SynthConfig, SynthSample, generate, generate_suite
from .binarize import (
    CannyParams,
    bradley_threshold,
    canny_edges,
    fill_holes,
    fuse_white,
    otsu_threshold,
    threshold_at,
)

__version__ = "0.1.0"

__all__ = [
    "CannyParams",
    "Detection",
    "EvalReport",
    "EvalRow",
    "GaussianKernel",
    "GroundTruth",
    "LevelCostTable",
    "METHODS",
    "MinimaxResult",
    "NoFeasibleLevelError",
    "NoIntersectionsError",
    "PipelineConfig",
    "PipelineError",
    "PipelineRun",
    "Region",
    "RegionPairing",
    "RegionSet",
    "SaliencyMap",
    "SegmentationResult",
    "SynthConfig",
    "SynthSample",
    "binomial_kernel",
    "bradley_threshold",
    "build_level_table",
    "candidate_map",
    "canny_edges",
    "cost_at",
    "count_and_mark",
    "detect_cells",
    "evaluate_dataset",
    "extract_channels",
    "f1_score",
    "fill_holes",
    "ft_saliency",
    "fuse_white",
    "gaussian_blur",
    "generate",
    "generate_suite",
    "histogram",
    "inner_minimize",
    "label_components",
    "load_image",
    "match_detections",
    "mean_ratio",
    "minimax_select",
    "normalize",
    "otsu_threshold",
    "pair_regions",
    "ratio_upper_bound",
    "run_pipeline",
    "threshold_at",
    "watershed",
]
