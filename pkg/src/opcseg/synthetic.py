"""Deterministic two-channel synthetic microscopy images with ground truth.

Each cell is a soft-edged bright disk (body) in the green channel with
2-3 px wide random-walk strokes (processes) radiating from its rim, and a
smaller soft disk (nucleus) in the white channel centered inside the body.
Distractor nuclei have no green body. All randomness flows from numpy's
PCG64 generator seeded from the config, so a config fully determines the
sample bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .evaluation import GroundTruth

PLACEMENT_ATTEMPTS = 2000  # rejection-sampling budget per placed object


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    width: int = 1024
    height: int = 1024
    cell_count: int = 20
    nucleus_radius: tuple[float, float] = (4.0, 6.5)
    body_radius: tuple[float, float] = (10.0, 15.0)
    process_count: tuple[int, int] = (3, 6)
    process_length: tuple[int, int] = (20, 45)
    min_separation: float = 48.0
    noise_sigma: float = 0.01
    background_level: float = 0.06
    distractor_nuclei: int = 0
    body_brightness: tuple[float, float] = (0.7, 0.95)
    nucleus_brightness: tuple[float, float] = (0.85, 0.95)
    dim_nucleus_fraction: float = 0.0
    dim_nucleus_scale: float = 0.6
    process_width: tuple[float, float] = (1.0, 1.6)
    process_brightness: tuple[float, float] = (0.85, 1.05)  # relative to the body rim level
    body_falloff: float = 0.3       # radial intensity drop from body center to rim
    body_edge_softness: float = 1.0  # width (px) of the body rim transition
    body_halo: float = 0.0          # faint membrane glow around the body, as a fraction of its brightness
    nucleus_dip: float = 0.55       # green intensity dip over the nucleus disk
    bridge_processes: bool = False  # force >= 1 pair of touching processes
    haze_blobs: int = 0             # faint wide green clutter (neuropil mat)
    haze_amplitude: float = 0.0
    haze_radius: tuple[float, float] = (40.0, 90.0)
    distractor_near_fraction: float = 0.0  # fraction of distractors placed close to a cell
    debris_specks: int = 0          # sharp-edged bright clumps with no nucleus
    debris_radius: tuple[float, float] = (6.0, 14.0)
    debris_brightness: tuple[float, float] = (0.9, 1.0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if self.cell_count < 0 or self.distractor_nuclei < 0 or self.haze_blobs < 0:
            raise ValueError("counts must be >= 0")
        if self.nucleus_radius[1] >= self.body_radius[0]:
            raise ValueError("nucleus radius range must lie below body radius range")
        if self.min_separation < 0 or self.noise_sigma < 0:
            raise ValueError("min_separation and noise_sigma must be >= 0")
        if not (0.0 <= self.dim_nucleus_fraction <= 1.0):
            raise ValueError("dim_nucleus_fraction must be in [0, 1]")


@dataclass(frozen=True)
class SynthSample:
    green: np.ndarray
    white: np.ndarray
    truth: GroundTruth
    touching_pairs: tuple[tuple[int, int], ...] = ()  # 1-based cell ids that share strokes

    def __post_init__(self):
        self.green.setflags(write=False)
        self.white.setflags(write=False)


def _stamp_disk(canvas: np.ndarray, cx: float, cy: float, radius: float, amp: float,
                falloff: float = 0.0, soft: float = 1.0) -> None:
    # Soft-edged disk with optional radial intensity falloff (bright center,
    # dimmer rim); `soft` is the width of the rim transition in pixels.
    h, w = canvas.shape
    pad = soft + 1
    x0 = max(0, int(math.floor(cx - radius - pad)))
    x1 = min(w, int(math.ceil(cx + radius + pad + 1)))
    y0 = max(0, int(math.floor(cy - radius - pad)))
    y1 = min(h, int(math.ceil(cy + radius + pad + 1)))
    if x0 >= x1 or y0 >= y1:
        return
    ys = np.arange(y0, y1)[:, None]
    xs = np.arange(x0, x1)[None, :]
    d = np.hypot(xs - cx, ys - cy)
    prof = amp * np.clip((radius + soft / 2.0 - d) / soft, 0.0, 1.0)
    if falloff > 0.0:
        prof = prof * (1.0 - falloff * np.clip(d / radius, 0.0, 1.0) ** 2)
    np.maximum(canvas[y0:y1, x0:x1], prof, out=canvas[y0:y1, x0:x1])


def _stamp_body(green: np.ndarray, cx: float, cy: float, radius: float, amp: float,
                falloff: float, soft: float, nx: float, ny: float, n_radius: float,
                dip: float) -> None:
    # Cell body disk: radial falloff toward the rim plus an intensity dip
    # over the nucleus (surface-marker signal thins where the nucleus sits).
    h, w = green.shape
    pad = soft + 1
    x0 = max(0, int(math.floor(cx - radius - pad)))
    x1 = min(w, int(math.ceil(cx + radius + pad + 1)))
    y0 = max(0, int(math.floor(cy - radius - pad)))
    y1 = min(h, int(math.ceil(cy + radius + pad + 1)))
    if x0 >= x1 or y0 >= y1:
        return
    ys = np.arange(y0, y1)[:, None]
    xs = np.arange(x0, x1)[None, :]
    d = np.hypot(xs - cx, ys - cy)
    prof = amp * np.clip((radius + soft / 2.0 - d) / soft, 0.0, 1.0)
    prof = prof * (1.0 - falloff * np.clip(d / radius, 0.0, 1.0) ** 2)
    if dip > 0.0:
        # Smoothstep bowl: zero slope at the nucleus center and boundary so
        # the dip never creates a sharper gradient than the body rim.
        dn = np.hypot(xs - nx, ys - ny)
        u = np.clip(1.0 - dn / n_radius, 0.0, 1.0)
        prof = prof * (1.0 - dip * (3.0 * u * u - 2.0 * u ** 3))
    np.maximum(green[y0:y1, x0:x1], prof, out=green[y0:y1, x0:x1])


def _claim_point(owner: np.ndarray, cx: float, cy: float, cell_id: int,
                 touched: set[tuple[int, int]]) -> None:
    # Stroke-core ownership; claiming a pixel owned by another cell records
    # a touching pair.
    h, w = owner.shape
    x = int(round(cx))
    y = int(round(cy))
    if not (0 <= x < w and 0 <= y < h):
        return
    prev = int(owner[y, x])
    if prev != 0 and prev != cell_id:
        touched.add((min(prev, cell_id), max(prev, cell_id)))
    owner[y, x] = cell_id


def _claim_disk(owner: np.ndarray, cx: float, cy: float, radius: float,
                cell_id: int, touched: set[tuple[int, int]]) -> None:
    h, w = owner.shape
    x0 = max(0, int(cx - radius) - 1)
    x1 = min(w, int(cx + radius) + 2)
    y0 = max(0, int(cy - radius) - 1)
    y1 = min(h, int(cy + radius) + 2)
    ys = np.arange(y0, y1)[:, None]
    xs = np.arange(x0, x1)[None, :]
    core = np.hypot(xs - cx, ys - cy) <= radius
    sub = owner[y0:y1, x0:x1]
    for prev in np.unique(sub[core]):
        if prev != 0 and prev != cell_id:
            touched.add((min(int(prev), cell_id), max(int(prev), cell_id)))
    sub[core] = cell_id


def _draw_process(green: np.ndarray, owner: np.ndarray, cell_id: int,
                  cx: float, cy: float, body_r: float, length: int,
                  width: float, amp: float, start_angle: float,
                  turns: np.ndarray, touched: set[tuple[int, int]]) -> None:
    ang = start_angle
    px = cx + body_r * math.cos(ang)
    py = cy + body_r * math.sin(ang)
    h, w = green.shape
    for i in range(length):
        ang += turns[i]
        px += 1.2 * math.cos(ang)
        py += 1.2 * math.sin(ang)
        if px < 1 or px >= w - 1 or py < 1 or py >= h - 1:
            break
        _stamp_disk(green, px, py, width, amp, soft=2.0)
        _claim_point(owner, px, py, cell_id, touched)


def _draw_bridge(green: np.ndarray, owner: np.ndarray, centers: np.ndarray,
                 radii: np.ndarray, a: int, b: int, width: float, amp: float,
                 touched: set[tuple[int, int]]) -> None:
    # Straight stroke between two cell rims; guarantees one touching pair.
    ax, ay = centers[a]
    bx, by = centers[b]
    dist = math.hypot(bx - ax, by - ay)
    ux, uy = (bx - ax) / dist, (by - ay) / dist
    t = radii[a]
    while t <= dist - radii[b]:
        px, py = ax + ux * t, ay + uy * t
        _stamp_disk(green, px, py, width, amp, soft=2.0)
        _claim_point(owner, px, py, a + 1, touched)
        t += 1.0
    touched.add((min(a, b) + 1, max(a, b) + 1))


def _place_points(rng: np.random.Generator, count: int, width: int, height: int,
                  margin: float, min_dist: float, existing: list[tuple[float, float]],
                  min_dist_existing: float, what: str) -> list[tuple[float, float]]:
    placed: list[tuple[float, float]] = []
    for _ in range(count):
        for _attempt in range(PLACEMENT_ATTEMPTS):
            x = rng.uniform(margin, width - margin)
            y = rng.uniform(margin, height - margin)
            ok = all(math.hypot(x - px, y - py) >= min_dist for px, py in placed) and all(
                math.hypot(x - px, y - py) >= min_dist_existing for px, py in existing
            )
            if ok:
                placed.append((x, y))
                break
        else:
            raise RuntimeError(
                f"could not place {count} {what} with spacing {min_dist:g} "
                f"in a {width}x{height} frame within {PLACEMENT_ATTEMPTS} attempts"
            )
    return placed


def _place_distractors(rng: np.random.Generator, config: SynthConfig,
                       centers, nucleus_centers, anchors,
                       haze: np.ndarray | None, margin: float) -> list[tuple[float, float]]:
    """Position nuclei that have no cell body.

    A configured fraction sits in bright local context (just outside a
    debris clump, or a cell body when no debris exists); the rest go far
    from every cell. When a clutter mat is present, all of them land on
    it, mimicking lineage-marked nuclei scattered through the tissue
    rather than on empty glass.
    """
    h, w = config.height, config.width
    sep = 2.0 * config.nucleus_radius[1] + 4.0
    body_clear = config.body_radius[1] + config.nucleus_radius[1] + 3.0
    far_min = min(150.0, 0.3 * min(w, h))
    n_near = int(round(config.distractor_near_fraction * config.distractor_nuclei))
    if not anchors:
        anchors = list(centers)
    spots: list[tuple[float, float]] = []

    def acceptable(x: float, y: float, near: bool) -> bool:
        if not (margin <= x <= w - margin and margin <= y <= h - margin):
            return False
        if haze is not None and haze[int(y), int(x)] < 0.5 * config.haze_amplitude:
            return False
        if any(math.hypot(x - px, y - py) < sep for px, py in spots):
            return False
        if any(math.hypot(x - px, y - py) < sep for px, py in nucleus_centers):
            return False
        dists = [math.hypot(x - cx, y - cy) for cx, cy in centers]
        if dists and min(dists) < body_clear + 4.0:
            return False
        if not near and dists and min(dists) < far_min:
            return False
        return True

    for k in range(config.distractor_nuclei):
        near = k < n_near and len(anchors) > 0
        for _attempt in range(PLACEMENT_ATTEMPTS):
            if near:
                ax, ay = anchors[int(rng.integers(len(anchors)))]
                ang = rng.uniform(0.0, 2.0 * math.pi)
                rad = rng.uniform(config.debris_radius[1] + sep / 2.0 + 4.0,
                                  config.debris_radius[1] + sep / 2.0 + 28.0)
                x, y = ax + rad * math.cos(ang), ay + rad * math.sin(ang)
            else:
                x = rng.uniform(margin, w - margin)
                y = rng.uniform(margin, h - margin)
            if acceptable(x, y, near):
                spots.append((x, y))
                break
        else:
            kind = "bright-context" if near else "far-field"
            raise RuntimeError(
                f"could not place {kind} distractor nucleus {k + 1} of "
                f"{config.distractor_nuclei} on the clutter mat within "
                f"{PLACEMENT_ATTEMPTS} attempts"
            )
    return spots


def generate(config: SynthConfig, image_id: str | None = None) -> SynthSample:
    """Render one deterministic sample; ground truth holds nucleus centroids."""
    rng = np.random.default_rng(config.seed)
    h, w = config.height, config.width
    green = np.zeros((h, w), dtype=np.float64)
    white = np.zeros((h, w), dtype=np.float64)
    owner = np.zeros((h, w), dtype=np.int32)

    margin = config.body_radius[1] + 4
    centers = _place_points(rng, config.cell_count, w, h, margin,
                            config.min_separation, [], 0.0, "cells")

    body_r = rng.uniform(*config.body_radius, size=config.cell_count)
    nucl_r = rng.uniform(*config.nucleus_radius, size=config.cell_count)
    body_amp = rng.uniform(*config.body_brightness, size=config.cell_count)
    nucl_amp = rng.uniform(*config.nucleus_brightness, size=config.cell_count)
    dim = rng.random(config.cell_count) < config.dim_nucleus_fraction
    nucl_amp = np.where(dim, nucl_amp * config.dim_nucleus_scale, nucl_amp)

    touched: set[tuple[int, int]] = set()
    nucleus_centers: list[tuple[float, float]] = []
    for i, (cx, cy) in enumerate(centers):
        # Nucleus stays strictly inside the body disk.
        jmax = max(0.0, min(2.0, body_r[i] - nucl_r[i] - 1.0))
        jr = rng.uniform(0.0, jmax)
        jang = rng.uniform(0.0, 2.0 * math.pi)
        nx, ny = cx + jr * math.cos(jang), cy + jr * math.sin(jang)

        if config.body_halo > 0.0:
            _stamp_disk(green, cx, cy, body_r[i] + 6.0, config.body_halo * body_amp[i],
                        falloff=0.2, soft=6.0)
        _stamp_body(green, cx, cy, body_r[i], body_amp[i], config.body_falloff,
                    config.body_edge_softness, nx, ny, nucl_r[i], config.nucleus_dip)
        _claim_disk(owner, cx, cy, body_r[i], i + 1, touched)

        # Processes sit near the body-rim brightness, so they drop out of
        # the foreground at moderate saliency levels while the body remains.
        n_proc = int(rng.integers(config.process_count[0], config.process_count[1] + 1))
        proc_amp = (body_amp[i] * (1.0 - config.body_falloff)
                    * rng.uniform(*config.process_brightness))
        for _ in range(n_proc):
            length = int(rng.integers(config.process_length[0], config.process_length[1] + 1))
            width_px = rng.uniform(*config.process_width)
            start = rng.uniform(0.0, 2.0 * math.pi)
            turns = rng.normal(0.0, 0.3, size=length)
            _draw_process(green, owner, i + 1, cx, cy, body_r[i], length,
                          width_px, proc_amp, start, turns, touched)

        _stamp_disk(white, nx, ny, nucl_r[i], nucl_amp[i])
        nucleus_centers.append((nx, ny))

    if config.bridge_processes and config.cell_count >= 2 and not touched:
        arr = np.asarray(centers)
        best, pair = np.inf, (0, 1)
        for a in range(len(arr)):
            for b in range(a + 1, len(arr)):
                d = math.hypot(*(arr[a] - arr[b]))
                if d < best:
                    best, pair = d, (a, b)
        bridge_amp = (float(np.mean(config.body_brightness))
                      * (1.0 - config.body_falloff)
                      * float(np.mean(config.process_brightness)))
        _draw_bridge(green, owner, arr, body_r, pair[0], pair[1],
                     float(np.mean(config.process_width)), bridge_amp, touched)

    haze = None
    if config.haze_blobs > 0 and config.haze_amplitude > 0:
        haze = np.zeros_like(green)
        for _ in range(config.haze_blobs):
            hx = rng.uniform(0, w)
            hy = rng.uniform(0, h)
            hr = rng.uniform(*config.haze_radius)
            amp = config.haze_amplitude * rng.uniform(0.7, 1.0)
            _stamp_disk(haze, hx, hy, hr, amp, soft=max(6.0, 0.2 * hr))
        green = np.clip(green + haze, 0.0, 1.0)

    debris_spots: list[tuple[float, float]] = []
    if config.debris_specks > 0:
        debris_spots = _place_points(rng, config.debris_specks, w, h, margin,
                                     2.0 * config.debris_radius[1] + 4.0,
                                     list(centers), config.min_separation, "debris specks")
        s_r = rng.uniform(*config.debris_radius, size=config.debris_specks)
        s_amp = rng.uniform(*config.debris_brightness, size=config.debris_specks)
        for i, (dx, dy) in enumerate(debris_spots):
            # Debris clumps are hard-edged: they anchor the image's maximum
            # gradient well above any soft cell rim.
            _stamp_disk(green, dx, dy, s_r[i], s_amp[i], soft=0.5)

    if config.distractor_nuclei > 0:
        spots = _place_distractors(rng, config, centers, nucleus_centers,
                                   debris_spots, haze, margin)
        d_r = rng.uniform(*config.nucleus_radius, size=config.distractor_nuclei)
        d_amp = rng.uniform(*config.nucleus_brightness, size=config.distractor_nuclei)
        for i, (dx, dy) in enumerate(spots):
            _stamp_disk(white, dx, dy, d_r[i], d_amp[i])

    green = np.clip(green + config.background_level, 0.0, 1.0)
    white = np.clip(white + config.background_level, 0.0, 1.0)
    if config.noise_sigma > 0:
        green = np.clip(green + rng.normal(0.0, config.noise_sigma, green.shape), 0.0, 1.0)
        white = np.clip(white + rng.normal(0.0, config.noise_sigma, white.shape), 0.0, 1.0)

    truth = GroundTruth(
        image_id=image_id if image_id is not None else f"synth-{config.seed:016x}",
        cells=tuple(nucleus_centers),
    )
    return SynthSample(green=green, white=white, truth=truth,
                       touching_pairs=tuple(sorted(touched)))


def suite_config(name: str, seed: int = 0) -> SynthConfig:
    """Preset generator configs for the two benchmark suites.

    The easy suite is well-separated bright cells over a dark background
    with low noise. The hard suite emulates cluttered intravital data:
    close cells with touching processes, lineage-marked nuclei without a
    cell body, a fraction of low-contrast nuclei, higher noise, and
    bright autofluorescent debris clumps that dominate the upper end of
    the green histogram while the cells themselves stay dim.
    """
    if name == "easy":
        return SynthConfig(seed=seed)
    if name == "hard":
        return SynthConfig(
            seed=seed,
            min_separation=36.0,
            process_count=(3, 6),
            process_length=(30, 60),
            nucleus_radius=(7.0, 10.0),
            body_radius=(12.0, 16.0),
            body_brightness=(0.4, 0.58),
            nucleus_dip=0.45,
            body_falloff=0.3,
            body_edge_softness=5.0,
            body_halo=0.4,
            process_brightness=(0.25, 0.4),
            background_level=0.1,
            distractor_nuclei=8,
            dim_nucleus_fraction=0.3,
            bridge_processes=True,
            noise_sigma=0.035,
            debris_specks=12,
            debris_radius=(14.0, 40.0),
            debris_brightness=(0.95, 1.0),
        )
    raise ValueError(f"unknown suite {name!r} (expected 'easy' or 'hard')")


SUITE_SIZE = 50


def generate_suite(name: str, seed: int = 0, count: int = SUITE_SIZE) -> list[SynthSample]:
    """Generate the named benchmark suite; sample ids are '<name>-<index>'."""
    base = suite_config(name, seed)
    rng = np.random.default_rng(seed)
    child_seeds = rng.integers(0, 2**62, size=count)
    return [
        generate(replace(base, seed=int(child_seeds[i])), image_id=f"{name}-{i:03d}")
        for i in range(count)
    ]


def write_suite(samples, outdir) -> str:
    """Write samples as 16-bit PNG pairs plus truth CSVs and a manifest.

    Returns the manifest path. All files are written atomically with fixed
    formatting, so identical samples produce identical bytes.
    """
    import os

    from .imaging import atomic_write_bytes, save_gray_png

    os.makedirs(outdir, exist_ok=True)
    manifest_lines = ["image_id,green_path,white_path,truth_path"]
    for sample in samples:
        image_id = sample.truth.image_id
        green_name = f"{image_id}_green.png"
        white_name = f"{image_id}_white.png"
        truth_name = f"{image_id}_truth.csv"
        save_gray_png(os.path.join(outdir, green_name), sample.green, bit_depth=16)
        save_gray_png(os.path.join(outdir, white_name), sample.white, bit_depth=16)
        truth_lines = ["image_id,x,y"] + [
            f"{image_id},{x:.4f},{y:.4f}" for x, y in sample.truth.cells
        ]
        atomic_write_bytes(os.path.join(outdir, truth_name),
                           ("\n".join(truth_lines) + "\n").encode())
        manifest_lines.append(f"{image_id},{green_name},{white_name},{truth_name}")
    manifest_path = os.path.join(outdir, "manifest.csv")
    atomic_write_bytes(manifest_path, ("\n".join(manifest_lines) + "\n").encode())
    return manifest_path
