"""Final detection: candidate map, counting gate, markers and watershed.

A pairing entry is accepted as one cell when its nucleus/intersection
ratio stays within mean + 3 population standard deviations of all such
ratios. The accepted nucleus-plus-body union regions become the internal
markers for watershed flooding over a topographic surface restricted to
the candidate foreground.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NoIntersectionsError
from .regions import Region, RegionPairing, RegionSet


@dataclass(frozen=True)
class Detection:
    """One counted cell: its marker region, nucleus and gating ratio."""

    id: int
    marker_region: Region
    nucleus_centroid: tuple[float, float]
    r_wi: float
    nucleus_region: Region | None = None


@dataclass(frozen=True)
class SegmentationResult:
    """Cell label map (0 = background) with the detections that seeded it."""

    label_map: np.ndarray
    detections: tuple[Detection, ...]
    count: int

    def __post_init__(self):
        self.label_map.setflags(write=False)
        if self.count != len(self.detections):
            raise ValueError("count must equal the number of detections")


def candidate_map(b_w: np.ndarray, b_g: np.ndarray) -> np.ndarray:
    """Pixelwise OR of the white and green foregrounds."""
    if b_w.shape != b_g.shape:
        raise ValueError(f"shape mismatch: {b_w.shape} vs {b_g.shape}")
    return b_w | b_g


def ratio_upper_bound(r_wi_values) -> float:
    """Mean plus 3 population standard deviations of the given ratios."""
    v = np.asarray(r_wi_values, dtype=np.float64)
    if v.size == 0:
        raise NoIntersectionsError("no intersections survived; ratio bound undefined")
    return float(v.mean() + 3.0 * v.std(ddof=0))


def count_and_mark(pairing: RegionPairing, bound: float) -> tuple[Detection, ...]:
    """Accept entries with r_wi <= bound; each accepted nucleus+body union is one cell.

    Multiple intersection entries over the same nucleus/body pair collapse
    into a single detection (keeping the smallest ratio). Detections are
    numbered 1..K in entry order.
    """
    h, w = pairing.shape
    groups: dict[tuple[int, int], list] = {}
    order: list[tuple[int, int]] = []
    for entry in pairing.entries:
        if entry.r_wi > bound:
            continue
        key = (entry.nucleus.label, entry.body.label)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(entry)
    detections = []
    for det_id, key in enumerate(order, start=1):
        entries = groups[key]
        nucleus = entries[0].nucleus
        body = entries[0].body
        union_pixels = np.union1d(nucleus.pixels, body.pixels)
        xs = union_pixels % w
        ys = union_pixels // w
        marker = Region(
            label=det_id,
            area=len(union_pixels),
            centroid=(float(xs.mean()), float(ys.mean())),
            pixels=union_pixels,
        )
        detections.append(
            Detection(
                id=det_id,
                marker_region=marker,
                nucleus_centroid=nucleus.centroid,
                r_wi=min(e.r_wi for e in entries),
                nucleus_region=nucleus,
            )
        )
    return tuple(detections)


def markers_from_detections(
    detections: tuple[Detection, ...], shape: tuple[int, int]
) -> tuple[RegionSet, tuple[Detection, ...]]:
    """Paint detection markers into a disjoint label map.

    Marker regions can overlap when several nuclei share one body
    component. Each detection always keeps its own nucleus pixels;
    contested body pixels go to the lowest detection id. A detection
    losing all of its pixels is dropped and the survivors renumbered, so
    the returned detections always agree with the returned label map.
    """
    label_map = np.zeros(shape, dtype=np.int32)
    flat = label_map.ravel()
    for det in sorted(detections, key=lambda d: d.id, reverse=True):
        flat[det.marker_region.pixels] = det.id
    for det in detections:
        if det.nucleus_region is not None:
            flat[det.nucleus_region.pixels] = det.id
    out_dets = []
    for det in detections:
        pixels = det.marker_region.pixels
        owned = pixels[flat[pixels] == det.id]
        if len(owned) == 0:
            continue
        new_id = len(out_dets) + 1
        if len(owned) == len(pixels) and new_id == det.id:
            out_dets.append(det)
            continue
        xs = owned % shape[1]
        ys = owned // shape[1]
        marker = Region(label=new_id, area=len(owned),
                        centroid=(float(xs.mean()), float(ys.mean())), pixels=owned)
        out_dets.append(Detection(id=new_id, marker_region=marker,
                                  nucleus_centroid=det.nucleus_centroid, r_wi=det.r_wi,
                                  nucleus_region=det.nucleus_region))
    label_map = np.zeros(shape, dtype=np.int32)
    flat = label_map.ravel()
    for det in out_dets:
        flat[det.marker_region.pixels] = det.id
    regions = tuple(det.marker_region for det in out_dets)
    return RegionSet(label_map=label_map, regions=regions), tuple(out_dets)


@njit(cache=True)
def _flood(surface, labels, mask, seeds, h, w):
    # Meyer-style flooding: a binary min-heap keyed by (surface value,
    # insertion sequence). A pixel is claimed the moment a popped neighbor
    # reaches it, so each pixel enters the heap at most once.
    n_mask = 0
    for p in range(h * w):
        if mask[p]:
            n_mask += 1
    cap = n_mask + len(seeds) + 1
    hkey = np.empty(cap, np.float64)
    hcnt = np.empty(cap, np.int64)
    hpix = np.empty(cap, np.int64)
    size = 0
    counter = 0

    for i in range(len(seeds)):
        p = seeds[i]
        # sift up
        hkey[size] = surface[p]
        hcnt[size] = counter
        hpix[size] = p
        counter += 1
        c = size
        size += 1
        while c > 0:
            parent = (c - 1) // 2
            if hkey[c] < hkey[parent] or (hkey[c] == hkey[parent] and hcnt[c] < hcnt[parent]):
                hkey[c], hkey[parent] = hkey[parent], hkey[c]
                hcnt[c], hcnt[parent] = hcnt[parent], hcnt[c]
                hpix[c], hpix[parent] = hpix[parent], hpix[c]
                c = parent
            else:
                break

    while size > 0:
        p = hpix[0]
        # pop root, sift down
        size -= 1
        hkey[0] = hkey[size]
        hcnt[0] = hcnt[size]
        hpix[0] = hpix[size]
        c = 0
        while True:
            left = 2 * c + 1
            if left >= size:
                break
            right = left + 1
            m = left
            if right < size and (hkey[right] < hkey[left] or
                                 (hkey[right] == hkey[left] and hcnt[right] < hcnt[left])):
                m = right
            if hkey[m] < hkey[c] or (hkey[m] == hkey[c] and hcnt[m] < hcnt[c]):
                hkey[c], hkey[m] = hkey[m], hkey[c]
                hcnt[c], hcnt[m] = hcnt[m], hcnt[c]
                hpix[c], hpix[m] = hpix[m], hpix[c]
                c = m
            else:
                break

        lab = labels[p]
        y = p // w
        x = p - y * w
        for dy in range(-1, 2):
            ny = y + dy
            if ny < 0 or ny >= h:
                continue
            for dx in range(-1, 2):
                if dy == 0 and dx == 0:
                    continue
                nx = x + dx
                if nx < 0 or nx >= w:
                    continue
                q = ny * w + nx
                if mask[q] and labels[q] == 0:
                    labels[q] = lab
                    # push q
                    hkey[size] = surface[q]
                    hcnt[size] = counter
                    hpix[size] = q
                    counter += 1
                    c = size
                    size += 1
                    while c > 0:
                        parent = (c - 1) // 2
                        if hkey[c] < hkey[parent] or (hkey[c] == hkey[parent] and hcnt[c] < hcnt[parent]):
                            hkey[c], hkey[parent] = hkey[parent], hkey[c]
                            hcnt[c], hcnt[parent] = hcnt[parent], hcnt[c]
                            hpix[c], hpix[parent] = hpix[parent], hpix[c]
                            c = parent
                        else:
                            break


def watershed(
    surface: np.ndarray,
    markers: RegionSet,
    mask: np.ndarray,
    detections: tuple[Detection, ...] | None = None,
) -> SegmentationResult:
    """Flood the masked surface from the marker regions.

    Flooding pops the lowest-surface pixel first, breaking ties by
    insertion order (FIFO), so results are deterministic. Marker pixels
    keep their own labels; mask pixels unreachable from any marker stay
    background. When no detections are supplied, one detection per marker
    region is synthesized.
    """
    m = np.asarray(mask, dtype=bool)
    surf = np.asarray(surface, dtype=np.float64)
    if surf.shape != m.shape or markers.shape != m.shape:
        raise ValueError("surface, markers and mask must share dimensions")
    if len(markers) == 0:
        raise ValueError("watershed requires at least one marker")
    if np.any(markers.foreground & ~m):
        raise ValueError("every marker pixel must lie inside the mask")
    if not np.all(np.isfinite(surf[m])):
        raise ValueError("surface must be finite on the mask")

    labels = markers.label_map.astype(np.int32).copy()
    seeds = np.concatenate([r.pixels for r in markers.regions]).astype(np.int64)
    h, w = m.shape
    _flood(surf.ravel(), labels.ravel(), m.ravel(), seeds, h, w)

    if detections is None:
        detections = tuple(
            Detection(id=r.label, marker_region=r, nucleus_centroid=r.centroid, r_wi=1.0)
            for r in markers.regions
        )
    elif len(detections) != len(markers):
        raise ValueError("detections and markers must correspond one-to-one")
    return SegmentationResult(label_map=labels, detections=detections,
                              count=len(detections))
