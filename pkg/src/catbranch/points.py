"""
points.py
=========
Level-t genealogical point processes.

The population alive at height t, read in the forest's linear order, is
summarized by the consecutive-neighbor MRCA heights: point i sits at
(i * spacing, h_i) where h_i is the splitting height between neighbors i and
i+1.  Neighbors in distinct trees split at the glued root, h = 0, and these
zero marks count tree separations.  All pairwise distances at the level are
recovered by the ultrametric closure

    d(x_i, x_j) = 2 * (t - min(h_i, ..., h_{j-1})),

the max-of-consecutive-distances rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO, Union

import numpy as np

from .contour import Excursion
from .errors import InputError
from .forest import FamilyForest


@dataclass
class GenealogicalPointProcess:
    level: float
    spacing: float
    heights: list[float]  # neighbor MRCA heights, linear order

    def __post_init__(self) -> None:
        if self.spacing <= 0:
            raise InputError("spacing must be > 0")
        if self.level <= 0 and self.heights:
            raise InputError("nonempty point process needs level > 0")
        for h in self.heights:
            if not 0.0 <= h < self.level:
                raise InputError("point heights must lie in [0, t)")

    @property
    def points(self) -> list[tuple[float, float]]:
        return [((i + 1) * self.spacing, h) for i, h in enumerate(self.heights)]

    @property
    def zero_marks(self) -> int:
        return sum(1 for h in self.heights if h == 0.0)

    def write(self, fh: TextIO) -> None:
        fh.write("# t=%r spacing=%r zero_marks=%d\n"
                 % (self.level, self.spacing, self.zero_marks))
        fh.write("ell,h\n")
        for ell, h in self.points:
            fh.write(f"{ell!r},{h!r}\n")

    @classmethod
    def read(cls, fh: TextIO) -> "GenealogicalPointProcess":
        header = fh.readline()
        if not header.startswith("#"):
            raise InputError("missing point-process header")
        fields = dict(tok.split("=", 1) for tok in header[1:].split())
        level = float(fields["t"])
        spacing = float(fields["spacing"])
        fh.readline()  # column names
        heights = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            heights.append(float(line.split(",")[1]))
        return cls(level, spacing, heights)


def point_process_at_level(f: FamilyForest, t: float,
                           spacing: float) -> GenealogicalPointProcess:
    """Neighbor MRCA heights of the ordered level-t population.

    Computed in one depth-first sweep: between two consecutive level
    crossings the splitting height is the lowest branch (or root-glue)
    height the traversal dips to, which is exactly the valley floor of the
    contour between the two visits.
    """
    if t <= 0:
        raise InputError("level must be > 0 for a point process")
    if f.height_cap is not None and t > f.height_cap:
        raise InputError("level above forest height cap")
    heights: list[float] = []
    pending_min = t  # lowest height dipped to since the previous crossing
    seen_any = False

    for r in f.roots:
        stack: list[tuple[int, int]] = [(r, 0)]
        while stack:
            v, ci = stack.pop()
            kids = f.children[v]
            d = f.death_height(v)
            if ci == 0:
                # climbing this edge: does it cross the level?
                if f.birth[v] < t <= d:
                    if seen_any:
                        heights.append(pending_min)
                    seen_any = True
                    pending_min = t
            if ci > 0:
                pending_min = min(pending_min, d)  # dip to the branch height
            if ci < len(kids):
                stack.append((v, ci + 1))
                stack.append((kids[ci], 0))
        pending_min = 0.0  # dip to the glued root between trees
    return GenealogicalPointProcess(t, spacing, heights)


def reconstruct_distance_matrix(p: GenealogicalPointProcess) -> np.ndarray:
    """(k+1) x (k+1) pairwise distances of the level population from the k
    neighbor points, by the ultrametric max rule."""
    k = len(p.heights)
    t = p.level
    n = k + 1
    d = np.zeros((n, n), dtype=float)
    for i in range(n):
        running = t
        for j in range(i + 1, n):
            running = min(running, p.heights[j - 1])
            val = 2.0 * (t - running)
            d[i, j] = val
            d[j, i] = val
    return d


def pairwise_level_distances(f: FamilyForest, t: float) -> np.ndarray:
    """Direct pairwise distances of the level-t population (independent
    route used to cross-check the point-process reconstruction)."""
    pts = f.level_set(t)
    n = len(pts)
    d = np.zeros((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            val = f.genealogical_distance(pts[i], pts[j])
            d[i, j] = val
            d[j, i] = val
    return d


PathLike = Union[Excursion, Sequence[float], np.ndarray]


def excursion_depths_below_level(path: PathLike, t: float,
                                 depth_floor: float = 0.0,
                                 with_local_time: bool = False,
                                 local_time_band: float | None = None):
    """Maximal depths of the complete downward excursions of a path below t.

    Returns a list of (index, depth) pairs, one per excursion that starts
    and ends at the level; the leading segment before the first visit of t
    and the trailing segment after the last are incomplete and are dropped.
    For exact piecewise-linear excursions the index is the excursion
    ordinal; for sampled paths it is the cumulative local-time estimate at
    the level when requested, and dips shallower than the floor are
    discarded as discretization noise.
    """
    if isinstance(path, Excursion):
        return _depths_exact(path.e, t, depth_floor)
    values = np.asarray(path, dtype=float)
    return _depths_sampled(values, t, depth_floor, with_local_time,
                           local_time_band)


def _depths_exact(hs: Sequence[float], t: float, floor: float):
    out = []
    count = 0
    above = hs[0] >= t
    seen_above = above
    run_min = None if above else hs[0]
    for h in hs[1:]:
        if above:
            if h < t:
                above = False
                run_min = h
        else:
            if h >= t:
                if seen_above:
                    depth = t - run_min
                    if depth >= floor:
                        count += 1
                        out.append((count, depth))
                seen_above = True
                above = True
                run_min = None
            else:
                run_min = min(run_min, h)
    return out


def _depths_sampled(values: np.ndarray, t: float, floor: float,
                    with_local_time: bool, band):
    below = values < t
    if not below.any() or below.all():
        return []
    idx = np.flatnonzero(below)
    starts = idx[np.r_[True, np.diff(idx) > 1]]
    ends = idx[np.r_[np.diff(idx) > 1, True]]
    # complete excursions only: drop runs touching either end of the path
    if starts.size and starts[0] == 0:
        starts, ends = starts[1:], ends[1:]
    if starts.size and ends[-1] == len(values) - 1:
        starts, ends = starts[:-1], ends[:-1]
    local = None
    if with_local_time:
        from .diffusion import cumulative_local_time
        eps = band if band is not None else max(floor / 2.0, 1e-9)
        local = cumulative_local_time(values, t, eps)
    out = []
    count = 0
    for s, e_ in zip(starts, ends):
        depth = t - float(values[s:e_ + 1].min())
        if depth < floor:
            continue
        count += 1
        index = float(local[s]) if local is not None else count
        out.append((index, depth))
    return out
