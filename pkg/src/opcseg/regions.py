"""Connected-component labeling and the nucleus/body region algebra.

Foreground components are 8-connected everywhere (cell processes are thin
and often diagonal); background connectivity is the 4-connected dual.
Labels are contiguous 1..K in raster-scan order of each component's first
pixel, so identical maps always produce identical labelings.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import NoIntersectionsError

FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = np.ones((3, 3), dtype=bool)

#: Components smaller than this are treated as noise and dropped before pairing.
DEFAULT_MIN_REGION_AREA = 5


@dataclass(frozen=True)
class Region:
    """One labeled component: area, centroid and flat row-major pixel indices."""

    label: int
    area: int
    centroid: tuple[float, float]  # (x, y)
    pixels: np.ndarray

    def __post_init__(self):
        self.pixels.setflags(write=False)
        if self.area != len(self.pixels) or self.area < 1:
            raise ValueError("region area must equal its pixel count and be >= 1")


@dataclass(frozen=True)
class RegionSet:
    """Disjoint labeled regions plus the label map they were built from."""

    label_map: np.ndarray
    regions: tuple[Region, ...]

    def __post_init__(self):
        self.label_map.setflags(write=False)

    def __len__(self) -> int:
        return len(self.regions)

    @property
    def shape(self) -> tuple[int, int]:
        return self.label_map.shape

    @property
    def foreground(self) -> np.ndarray:
        return self.label_map > 0

    def areas(self) -> np.ndarray:
        """Region areas indexed by label (index 0 unused)."""
        out = np.zeros(len(self.regions) + 1, dtype=np.int64)
        for r in self.regions:
            out[r.label] = r.area
        return out


def _regions_from_label_map(label_map: np.ndarray, count: int) -> tuple[Region, ...]:
    h, w = label_map.shape
    flat = label_map.ravel()
    fg_idx = np.flatnonzero(flat)
    labels = flat[fg_idx]
    if count == 0:
        return ()
    areas = np.bincount(labels, minlength=count + 1)
    xs = (fg_idx % w).astype(np.float64)
    ys = (fg_idx // w).astype(np.float64)
    cx = np.bincount(labels, weights=xs, minlength=count + 1)
    cy = np.bincount(labels, weights=ys, minlength=count + 1)
    order = np.argsort(labels, kind="stable")
    bounds = np.cumsum(areas[1:])
    pixel_lists = np.split(fg_idx[order], bounds[:-1])
    return tuple(
        Region(
            label=lab,
            area=int(areas[lab]),
            centroid=(cx[lab] / areas[lab], cy[lab] / areas[lab]),
            pixels=pixel_lists[lab - 1],
        )
        for lab in range(1, count + 1)
    )


def label_components(mask: np.ndarray, connectivity: int = 8) -> RegionSet:
    """Label maximal foreground components under 4- or 8-connectivity."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    m = np.asarray(mask, dtype=bool)
    structure = EIGHT if connectivity == 8 else FOUR
    raw, n = ndimage.label(m, structure=structure)
    if n == 0:
        return RegionSet(label_map=np.zeros(m.shape, dtype=np.int32), regions=())
    # Renumber in raster order of each component's first pixel.
    flat = raw.ravel()
    fg_idx = np.flatnonzero(flat)
    _, first_pos = np.unique(flat[fg_idx], return_index=True)
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[flat[fg_idx[np.sort(first_pos)]]] = np.arange(1, n + 1, dtype=np.int32)
    label_map = remap[raw]
    return RegionSet(label_map=label_map, regions=_regions_from_label_map(label_map, n))


def filter_small(region_set: RegionSet, min_area: int) -> RegionSet:
    """Drop regions below min_area pixels, relabeling the survivors 1..K."""
    if min_area <= 1:
        return region_set
    kept = [r for r in region_set.regions if r.area >= min_area]
    if len(kept) == len(region_set.regions):
        return region_set
    remap = np.zeros(len(region_set.regions) + 1, dtype=np.int32)
    for new_label, r in enumerate(kept, start=1):
        remap[r.label] = new_label
    return RegionSet(
        label_map=remap[region_set.label_map],
        regions=tuple(replace(r, label=i) for i, r in enumerate(kept, start=1)),
    )


@dataclass(frozen=True)
class PairEntry:
    """One intersecting region with its nucleus/body references and area ratios."""

    intersection: Region
    nucleus: Region
    body: Region
    r_wi: float  # nucleus area / intersection area
    r_gw: float  # body area / intersection area


@dataclass(frozen=True)
class RegionPairing:
    """All intersecting regions between the green and white foregrounds."""

    entries: tuple[PairEntry, ...]
    shape: tuple[int, int]

    @property
    def m_count(self) -> int:
        return len(self.entries)

    def r_wi_values(self) -> np.ndarray:
        return np.array([e.r_wi for e in self.entries], dtype=np.float64)

    def r_gw_values(self) -> np.ndarray:
        return np.array([e.r_gw for e in self.entries], dtype=np.float64)


def pair_regions(b_g: np.ndarray, white_set: RegionSet, green_set: RegionSet) -> RegionPairing:
    """Pair each component of (green AND white) with its nucleus and body.

    The green set must be the labeling of b_g (possibly with small
    components filtered out). Every intersection component lies inside
    exactly one white region and one green region by construction; this is
    asserted, not handled.
    """
    if white_set.shape != green_set.shape or b_g.shape != white_set.shape:
        raise ValueError("binary map and region sets must share dimensions")
    assert not np.any(green_set.foreground & ~np.asarray(b_g, dtype=bool)), (
        "green region set is inconsistent with the green binary map"
    )
    inter_mask = green_set.foreground & white_set.foreground
    inter_set = label_components(inter_mask, connectivity=8)
    white_flat = white_set.label_map.ravel()
    green_flat = green_set.label_map.ravel()
    entries = []
    for inter in inter_set.regions:
        wl = int(white_flat[inter.pixels[0]])
        gl = int(green_flat[inter.pixels[0]])
        assert np.all(white_flat[inter.pixels] == wl), "intersection straddles white regions"
        assert np.all(green_flat[inter.pixels] == gl), "intersection straddles green regions"
        nucleus = white_set.regions[wl - 1]
        body = green_set.regions[gl - 1]
        entries.append(
            PairEntry(
                intersection=inter,
                nucleus=nucleus,
                body=body,
                r_wi=nucleus.area / inter.area,
                r_gw=body.area / inter.area,
            )
        )
    return RegionPairing(entries=tuple(entries), shape=white_set.shape)


def mean_ratio(values) -> float:
    """Arithmetic mean of a non-empty ratio sequence."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise NoIntersectionsError("no intersecting regions at this level")
    return float(v.mean())
