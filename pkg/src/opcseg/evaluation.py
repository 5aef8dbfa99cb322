"""Detection scoring against ground truth and multi-method dataset reports.

Matching is greedy one-to-one on centroid distance: candidate pairs are
sorted by distance (ties by index) and accepted while both endpoints are
unmatched and within the radius. Precision, recall and F1 all map 0/0
to 0.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class GroundTruth:
    """Expert-marked cell centroids for one image, with optional mask labels."""

    image_id: str
    cells: tuple[tuple[float, float], ...]
    labels: tuple[int, ...] | None = None


def load_ground_truth(path, image_id: str | None = None) -> GroundTruth:
    """Load truth from a centroid CSV (header image_id,x,y) or a 16-bit label-mask PNG."""
    path = os.fspath(path)
    if path.lower().endswith(".csv"):
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["image_id", "x", "y"]:
                raise ValueError(f"ground-truth CSV {path} must have header image_id,x,y")
            rows = [r for r in reader if image_id is None or r["image_id"] == image_id]
        if image_id is None:
            ids = {r["image_id"] for r in rows}
            if len(ids) > 1:
                raise ValueError(f"{path} holds several image ids; pass image_id to select one")
            image_id = next(iter(ids)) if ids else ""
        return GroundTruth(
            image_id=image_id,
            cells=tuple((float(r["x"]), float(r["y"])) for r in rows),
        )
    from .imaging import load_image  # local import: imaging does not know about truth files

    mask = np.rint(np.asarray(load_image(path)) * 65535.0).astype(np.int64)
    labels = np.unique(mask)
    labels = labels[labels > 0]
    h, w = mask.shape
    cells = []
    for lab in labels:
        idx = np.flatnonzero(mask.ravel() == lab)
        cells.append((float((idx % w).mean()), float((idx // w).mean())))
    return GroundTruth(
        image_id=image_id if image_id is not None else os.path.basename(path),
        cells=tuple(cells),
        labels=tuple(int(v) for v in labels),
    )


def match_detections(pred, truth: GroundTruth, radius: float) -> tuple[int, int, int]:
    """Greedy nearest-first one-to-one matching; returns (tp, fp, fn)."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    cells = truth.cells
    candidates = []
    for i, (px, py) in enumerate(pred):
        for j, (tx, ty) in enumerate(cells):
            d = math.hypot(px - tx, py - ty)
            if d <= radius:
                candidates.append((d, i, j))
    candidates.sort()
    matched_pred: set[int] = set()
    matched_truth: set[int] = set()
    for _d, i, j in candidates:
        if i in matched_pred or j in matched_truth:
            continue
        matched_pred.add(i)
        matched_truth.add(j)
    tp = len(matched_pred)
    return tp, len(list(pred)) - tp, len(cells) - tp


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean 2pr/(p+r), defined as 0 when both rates are 0."""
    if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
        raise ValueError("precision and recall must be in [0, 1]")
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class EvalRow:
    image_id: str
    method: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    error: str | None = None


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    averages: dict

    @classmethod
    def from_rows(cls, rows) -> "EvalReport":
        rows = tuple(sorted(rows, key=lambda r: (r.image_id, r.method)))
        averages: dict = {}
        for method in sorted({r.method for r in rows}):
            ok = [r for r in rows if r.method == method and r.error is None]
            n = len(ok)
            averages[method] = {
                "images": n,
                "failed": sum(1 for r in rows if r.method == method and r.error is not None),
                "precision": sum(r.precision for r in ok) / n if n else 0.0,
                "recall": sum(r.recall for r in ok) / n if n else 0.0,
                "f1": sum(r.f1 for r in ok) / n if n else 0.0,
            }
        return cls(rows=rows, averages=averages)


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    green_path: str
    white_path: str
    truth_path: str


MANIFEST_HEADER = ["image_id", "green_path", "white_path", "truth_path"]


def load_manifest(path) -> tuple[ManifestEntry, ...]:
    """Read a dataset manifest CSV; relative paths resolve against its directory."""
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != MANIFEST_HEADER:
            raise ValueError(f"manifest {path} must have header {','.join(MANIFEST_HEADER)}")
        entries = [
            ManifestEntry(
                image_id=r["image_id"],
                green_path=os.path.join(base, r["green_path"]),
                white_path=os.path.join(base, r["white_path"]),
                truth_path=os.path.join(base, r["truth_path"]),
            )
            for r in reader
        ]
    if not entries:
        raise ValueError(f"manifest {path} lists no images")
    return tuple(sorted(entries, key=lambda e: e.image_id))


def _evaluate_entry(args) -> list[EvalRow]:
    entry, methods, config = args
    from .imaging import load_image
    from .pipeline import detect_cells

    rows: list[EvalRow] = []
    try:
        green = load_image(entry.green_path)
        white = load_image(entry.white_path)
        truth = load_ground_truth(entry.truth_path, image_id=entry.image_id)
        if green.ndim != 2 or white.ndim != 2:
            raise ValueError(f"{entry.image_id}: channel images must be grayscale")
    except Exception as exc:  # per-image failure hits every requested method
        return [
            EvalRow(entry.image_id, m, 0, 0, 0, 0.0, 0.0, 0.0, error=str(exc))
            for m in methods
        ]
    for method in methods:
        try:
            run = detect_cells(green, white, config, method=method)
            pred = [d.nucleus_centroid for d in run.segmentation.detections]
            tp, fp, fn = match_detections(pred, truth, config.match_radius)
            precision, recall = precision_recall(tp, fp, fn)
            rows.append(EvalRow(entry.image_id, method, tp, fp, fn, precision,
                                recall, f1_score(precision, recall)))
        except Exception as exc:
            rows.append(EvalRow(entry.image_id, method, 0, 0, 0, 0.0, 0.0, 0.0,
                                error=str(exc)))
    return rows


def evaluate_dataset(manifest, methods, config=None, workers: int = 1) -> EvalReport:
    """Run the selected methods over every manifest image and tabulate F1.

    `manifest` is a manifest path or a sequence of ManifestEntry. Per-image
    failures are recorded on their rows rather than aborting the run.
    """
    from .pipeline import METHODS, PipelineConfig

    if config is None:
        config = PipelineConfig()
    if isinstance(manifest, (str, os.PathLike)):
        entries = load_manifest(manifest)
    else:
        entries = tuple(sorted(manifest, key=lambda e: e.image_id))
        if not entries:
            raise ValueError("manifest lists no images")
    methods = tuple(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; expected a subset of {METHODS}")
    if not methods:
        raise ValueError("no methods selected")

    tasks = [(entry, methods, config) for entry in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_entry, tasks))
    else:
        results = [_evaluate_entry(t) for t in tasks]
    return EvalReport.from_rows([row for rows in results for row in rows])


def report_to_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_id", "method", "tp", "fp", "fn", "precision", "recall", "f1", "error"])
    for r in report.rows:
        writer.writerow([r.image_id, r.method, r.tp, r.fp, r.fn,
                         f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}",
                         r.error or ""])
    return buf.getvalue()


def report_to_json(report: EvalReport) -> str:
    payload = {"rows": [asdict(r) for r in report.rows], "averages": report.averages}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


_DISPLAY = {"otsu_baseline": "Otsu", "canny_baseline": "Canny",
            "bradley_baseline": "Bradley", "oslo": "OSLO"}
_COLUMN_ORDER = ["otsu_baseline", "canny_baseline", "bradley_baseline", "oslo"]


def report_to_table(report: EvalReport) -> str:
    """Aligned per-image F1 table with one column per method and an Ave row."""
    methods = [m for m in _COLUMN_ORDER if m in report.averages]
    methods += [m for m in sorted(report.averages) if m not in methods]
    image_ids = sorted({r.image_id for r in report.rows})
    cell = {(r.image_id, r.method): r for r in report.rows}
    lines = []
    header = ["No."] + [_DISPLAY.get(m, m) for m in methods]
    lines.append("  ".join(f"{h:>8}" for h in header))
    for k, image_id in enumerate(image_ids, start=1):
        vals = []
        for m in methods:
            r = cell.get((image_id, m))
            vals.append("fail" if r is None or r.error else f"{r.f1:.2f}")
        lines.append("  ".join([f"{'#%d' % k:>8}"] + [f"{v:>8}" for v in vals]))
    ave = [f"{report.averages[m]['f1']:.2f}" for m in methods]
    lines.append("  ".join([f"{'Ave':>8}"] + [f"{v:>8}" for v in ave]))
    legend = [f"#{k} = {image_id}" for k, image_id in enumerate(image_ids, start=1)]
    return "\n".join(lines) + "\n\n" + "\n".join(legend) + "\n"
