"""Saliency-level selection by weighted ratio cost and the minimax principle.

For a weight lam in [0, 1] and level L the cost is

    E(lam, L) = lam * mean(nucleus/intersection ratios at L)
              + (1 - lam) * mean(body/intersection ratios at L)

The first term favors low levels (the body grows to cover its nucleus);
the second penalizes them (merged bodies dwarf their intersections). For
each lam the level minimizing E is found by exhaustive search over a fixed
grid; lam itself is chosen to maximize that minimum so neither term is
underweighted. Levels with zero intersecting regions are infeasible and
cost +inf. Ties always resolve to the smallest level and smallest weight.

Cost evaluation is separable: the two ratio means depend on the level
only, so they are computed once per level into a :class:`LevelCostTable`
and the lam sweep is pure arithmetic on that table. The table itself is
built by a single incremental union-find pass over descending levels,
which visits each pixel once instead of re-labeling the image per level;
:func:`cost_at` is the direct re-computation used to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import NoFeasibleLevelError
from .regions import DEFAULT_MIN_REGION_AREA, RegionSet, filter_small, label_components, pair_regions
from .saliency import SaliencyMap
from .binarize import threshold_at

DEFAULT_LEVEL_GRID_SIZE = 256
DEFAULT_LAMBDA_GRID_SIZE = 101


def default_level_grid(size: int = DEFAULT_LEVEL_GRID_SIZE) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


def default_lambda_grid(size: int = DEFAULT_LAMBDA_GRID_SIZE) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


@dataclass(frozen=True)
class LevelCostTable:
    """Per-level ratio means over a level grid; NaN marks infeasible levels."""

    levels: np.ndarray
    r1: np.ndarray  # mean nucleus/intersection ratio per level
    r2: np.ndarray  # mean body/intersection ratio per level
    m: np.ndarray   # intersecting-region count per level

    def __post_init__(self):
        for arr in (self.levels, self.r1, self.r2, self.m):
            if arr.shape != self.levels.shape:
                raise ValueError("table arrays must share the level grid's shape")
            arr.setflags(write=False)

    def costs(self, lam: float) -> np.ndarray:
        """E(lam, L) over the level grid, +inf where no intersections exist."""
        raw = lam * self.r1 + (1.0 - lam) * self.r2
        return np.where(self.m > 0, raw, np.inf)


class CostSample(NamedTuple):
    e: float
    r1_mean: float
    r2_mean: float
    m_count: int


@dataclass(frozen=True)
class CostCurve:
    """E(lam, .) over the level grid for one weight, with its minimizer."""

    lam: float
    levels: np.ndarray
    costs: np.ndarray
    best_level: float
    best_cost: float


@dataclass(frozen=True)
class MinimaxResult:
    """Selected weight and level: the argmax over weights of the per-weight minimum."""

    lambda_star: float
    l_g: float
    e_star: float
    curves: tuple[CostCurve, ...]


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]


@njit(cache=True)
def _sweep_kernel(qmax, order, wlab, warea, h, w, n_levels, min_body_area,
                  out_r1, out_r2, out_m):
    # Activate pixels level by level (descending); the green union-find
    # tracks body components over the whole frame while a second union-find
    # restricted to white-foreground pixels tracks intersection components.
    # Two adjacent white-foreground pixels always share a white component,
    # so the restricted union-find never crosses a nucleus boundary.
    n = h * w
    parent_g = np.full(n, -1, np.int64)
    size_g = np.zeros(n, np.int64)
    parent_i = np.full(n, -1, np.int64)
    size_i = np.zeros(n, np.int64)

    n_white_fg = 0
    for p in range(n):
        if wlab[p] > 0:
            n_white_fg += 1
    root_list = np.empty(n_white_fg, np.int64)
    n_roots = 0

    pos = 0
    for j in range(n_levels - 1, -1, -1):
        while pos < n:
            p = order[pos]
            if qmax[p] != j:
                break
            pos += 1
            parent_g[p] = p
            size_g[p] = 1
            y = p // w
            x = p - y * w
            is_white = wlab[p] > 0
            if is_white:
                parent_i[p] = p
                size_i[p] = 1
                root_list[n_roots] = p
                n_roots += 1
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
                    if parent_g[q] >= 0:
                        _union(parent_g, size_g, p, q)
                        if is_white and parent_i[q] >= 0:
                            _union(parent_i, size_i, p, q)

        count = 0
        s1 = 0.0
        s2 = 0.0
        for k in range(n_roots):
            r = root_list[k]
            if parent_i[r] != r:
                continue  # merged into another intersection component
            body_area = size_g[_find(parent_g, r)]
            if body_area < min_body_area:
                continue  # body discarded as noise before pairing
            inter_area = size_i[r]
            count += 1
            s1 += warea[wlab[r]] / inter_area
            s2 += body_area / inter_area
        out_m[j] = count
        if count > 0:
            out_r1[j] = s1 / count
            out_r2[j] = s2 / count
        else:
            out_r1[j] = np.nan
            out_r2[j] = np.nan


def build_level_table(
    s_g: SaliencyMap,
    white_set: RegionSet,
    levels: np.ndarray | None = None,
    min_body_area: int = DEFAULT_MIN_REGION_AREA,
) -> LevelCostTable:
    """Compute the per-level ratio means for every level in one pass.

    For each grid level L this evaluates the green foreground {saliency >= L},
    drops green components below min_body_area, intersects with the white
    foreground, and averages the nucleus/intersection and body/intersection
    area ratios over the resulting components. The white set must already
    have its noise components filtered.
    """
    if not s_g.normalized:
        raise ValueError("build_level_table requires a normalized saliency map")
    if white_set.shape != s_g.shape:
        raise ValueError("saliency map and white region set must share dimensions")
    if levels is None:
        levels = default_level_grid()
    levels = np.asarray(levels, dtype=np.float64)
    if levels.size == 0 or np.any(np.diff(levels) <= 0):
        raise ValueError("level grid must be non-empty and strictly ascending")

    h, w = s_g.shape
    sal_flat = s_g.values.ravel()
    # Highest grid index at which each pixel is foreground; -1 if never.
    qmax = (np.searchsorted(levels, sal_flat, side="right") - 1).astype(np.int64)
    order = np.argsort(-qmax, kind="stable").astype(np.int64)
    # Trim pixels that never activate so the kernel's level walk can stop early.
    active_total = int(np.count_nonzero(qmax >= 0))
    order = order[:active_total]

    wlab = white_set.label_map.ravel().astype(np.int64)
    warea = white_set.areas().astype(np.float64)

    n_levels = len(levels)
    out_r1 = np.empty(n_levels, dtype=np.float64)
    out_r2 = np.empty(n_levels, dtype=np.float64)
    out_m = np.empty(n_levels, dtype=np.int64)
    _sweep_kernel(qmax, order, wlab, warea, h, w, n_levels, min_body_area,
                  out_r1, out_r2, out_m)
    return LevelCostTable(levels=levels, r1=out_r1, r2=out_r2, m=out_m)


def cost_at(
    lam: float,
    level: float,
    b_w_regions: RegionSet,
    s_g: SaliencyMap,
    min_body_area: int = DEFAULT_MIN_REGION_AREA,
) -> CostSample:
    """Evaluate the weighted cost at one (lam, level) point from scratch.

    This is the direct route: threshold, label, pair, average. It exists
    both as the single-point API and as the independent cross-check for
    the incremental table builder.
    """
    if not (0.0 <= lam <= 1.0):
        raise ValueError("lam must be in [0, 1]")
    b_g = threshold_at(s_g, level)
    green_set = filter_small(label_components(b_g, connectivity=8), min_body_area)
    pairing = pair_regions(b_g, b_w_regions, green_set)
    if pairing.m_count == 0:
        return CostSample(e=np.inf, r1_mean=np.nan, r2_mean=np.nan, m_count=0)
    r1 = float(pairing.r_wi_values().mean())
    r2 = float(pairing.r_gw_values().mean())
    return CostSample(e=lam * r1 + (1.0 - lam) * r2, r1_mean=r1, r2_mean=r2,
                      m_count=pairing.m_count)


def inner_minimize(lam: float, level_grid: np.ndarray, table: LevelCostTable):
    """Minimize E(lam, .) over the level grid.

    Returns (best_level, best_cost), taking the smallest level on ties, or
    None when every level is infeasible.
    """
    if not np.array_equal(np.asarray(level_grid, dtype=np.float64), table.levels):
        raise ValueError("level grid does not match the cost table")
    costs = table.costs(lam)
    idx = int(np.argmin(costs))  # first minimum = smallest level on ties
    if not np.isfinite(costs[idx]):
        return None
    return float(table.levels[idx]), float(costs[idx])


def minimax_select(lambda_grid: np.ndarray, level_grid: np.ndarray,
                   table: LevelCostTable) -> MinimaxResult:
    """Pick the weight whose best achievable cost is largest, then its level.

    The returned weight is the smallest maximizer and the level the
    smallest minimizer for that weight.
    """
    lams = np.asarray(lambda_grid, dtype=np.float64)
    if lams.size == 0 or np.any(np.diff(lams) <= 0):
        raise ValueError("lambda grid must be non-empty and strictly ascending")
    if lams[0] != 0.0 or lams[-1] != 1.0:
        raise ValueError("lambda grid must span [0, 1] inclusive")
    if not np.array_equal(np.asarray(level_grid, dtype=np.float64), table.levels):
        raise ValueError("level grid does not match the cost table")
    if not np.any(table.m > 0):
        raise NoFeasibleLevelError("no intersecting regions at any level")

    # E is linear in lam per level; feasibility depends on the level only.
    e_all = np.outer(lams, table.r1) + np.outer(1.0 - lams, table.r2)
    e_all[:, table.m == 0] = np.inf

    best_idx = np.argmin(e_all, axis=1)  # first minimum per row
    rows = np.arange(len(lams))
    best_costs = e_all[rows, best_idx]

    star = int(np.argmax(best_costs))  # first maximum = smallest lambda on ties
    curves = tuple(
        CostCurve(
            lam=float(lams[i]),
            levels=table.levels,
            costs=e_all[i],
            best_level=float(table.levels[best_idx[i]]),
            best_cost=float(best_costs[i]),
        )
        for i in range(len(lams))
    )
    return MinimaxResult(
        lambda_star=float(lams[star]),
        l_g=float(table.levels[best_idx[star]]),
        e_star=float(best_costs[star]),
        curves=curves,
    )


def evaluate_fixed_lambda(lam: float, level_grid: np.ndarray,
                          table: LevelCostTable) -> MinimaxResult:
    """Level selection with the weight pinned (global-weight override)."""
    if not (0.0 <= lam <= 1.0):
        raise ValueError("lam must be in [0, 1]")
    best = inner_minimize(lam, level_grid, table)
    if best is None:
        raise NoFeasibleLevelError("no intersecting regions at any level")
    level, cost = best
    curve = CostCurve(lam=lam, levels=table.levels, costs=table.costs(lam),
                      best_level=level, best_cost=cost)
    return MinimaxResult(lambda_star=lam, l_g=level, e_star=cost, curves=(curve,))
