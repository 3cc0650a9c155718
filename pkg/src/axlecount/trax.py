"""TRAX axle counting: tire-track extraction in projected (t, z) space.

The tire observations of one vehicle are projected onto their principal
spatial axis, the projection is normalised to [0, 1] and passed through
``1 / (1 + c*z)``, and tracks are grown greedily frame by frame along a
single global slope. Each accepted track is one axle.
"""

from __future__ import annotations

import bisect
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np


class TirePoint(NamedTuple):
    x: float
    y: float
    t: int


class ProjectedPoint(NamedTuple):
    t: int
    z: float


@dataclass(frozen=True)
class AxleTrack:
    points: Tuple[ProjectedPoint, ...]
    accepted: bool

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class TraxParams:
    c: float = 0.25
    match_window: float = 0.05
    max_gap: int = 5
    min_track_len: int = 5

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be > 0")
        if not self.match_window > 0:
            raise ValueError("match_window must be > 0")
        if self.max_gap < 0:
            raise ValueError("max_gap must be >= 0")
        if self.min_track_len < 2:
            raise ValueError("min_track_len must be >= 2")


class DegenerateProjection(ValueError):
    """All tire points coincide, so there is no motion axis."""


def _principal_z(points: Sequence[TirePoint]) -> Tuple[np.ndarray, np.ndarray]:
    if len(points) < 2:
        raise DegenerateProjection("need at least two points")
    # fromiter avoids numpy's slow per-tuple sequence sniffing
    arr = np.fromiter(itertools.chain.from_iterable(points), float, 3 * len(points)).reshape(-1, 3)
    xy, t = arr[:, :2], arr[:, 2]
    centered = xy - xy.mean(axis=0)
    if not np.any(centered):
        raise DegenerateProjection("all points coincide")
    cov = centered.T @ centered / len(points)
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    z = centered @ axis
    corr = float(np.dot(z, t - t.mean()))
    # orientation: by correlation with time, else a fixed half-plane
    if corr < 0 or (corr == 0 and (axis[0] < 0 or (axis[0] == 0 and axis[1] < 0))):
        axis, z = -axis, -z
    return z, axis


def project(points: Sequence[TirePoint]) -> Tuple[List[ProjectedPoint], Tuple[float, float]]:
    """Project points on the principal axis of their spatial covariance.

    The axis is oriented so that z does not decrease with t on average.
    """
    z, axis = _principal_z(points)
    return [ProjectedPoint(p.t, v) for p, v in zip(points, z.tolist())], (float(axis[0]), float(axis[1]))


def rescale(z: float, c: float) -> float:
    """Inverse transform ``1 / (1 + c*z)``."""
    if not c > 0:
        raise ValueError("c must be > 0")
    denom = 1.0 + c * z
    if denom <= 0:
        raise ValueError(f"1 + c*z = {denom} is not positive")
    return 1.0 / denom


def _rescale_array(zs: np.ndarray, c: float) -> np.ndarray:
    if not c > 0:
        raise ValueError("c must be > 0")
    lo, spread = zs.min(), zs.max() - zs.min()
    if spread <= 0:
        return np.ones_like(zs)
    # normalised z lies in [0, 1], so 1 + c*z > 0 always
    return 1.0 / (1.0 + c * ((zs - lo) / spread))


def rescale_points(points: Sequence[ProjectedPoint], c: float) -> List[ProjectedPoint]:
    """Normalise z to [0, 1] by its range, then apply ``rescale``."""
    if not points:
        return []
    out = _rescale_array(np.array([p.z for p in points], dtype=float), c)
    return [ProjectedPoint(p.t, v) for p, v in zip(points, out.tolist())]


def _by_time(points: Sequence[ProjectedPoint]) -> Dict[int, List[float]]:
    groups: Dict[int, List[float]] = {}
    for p in points:
        groups.setdefault(p.t, []).append(p.z)
    for zs in groups.values():
        zs.sort()
    return groups


def _nearest(sorted_zs: List[float], target: float) -> float:
    i = bisect.bisect_left(sorted_zs, target)
    best = None
    for j in (i - 1, i):
        if 0 <= j < len(sorted_zs):
            if best is None or abs(sorted_zs[j] - target) < abs(best - target):
                best = sorted_zs[j]
    return best


def estimate_slope(points: Sequence[ProjectedPoint]) -> float:
    """Median per-frame z change between nearest points of consecutive observed frames.

    Frames t_a < t_b that are adjacent in the data contribute
    ``(z_b - z_a) / (t_b - t_a)`` for every point at t_a, paired with the
    nearest-in-z point at t_b.
    """
    groups = _by_time(points)
    times = sorted(groups)
    if len(times) < 2:
        raise ValueError("need at least two distinct t values")
    diffs = []
    for ta, tb in zip(times, times[1:]):
        dt = tb - ta
        later = groups[tb]
        for z in groups[ta]:
            diffs.append((_nearest(later, z) - z) / dt)
    return float(np.median(diffs))


class _Pool:
    """Remaining points keyed by time, each time's z values kept sorted."""

    def __init__(self, points: Sequence[ProjectedPoint]):
        self.groups: Dict[int, List[Tuple[float, int]]] = {}
        for i, p in enumerate(points):
            self.groups.setdefault(p.t, []).append((p.z, i))
        for g in self.groups.values():
            g.sort()
        self.times = sorted(self.groups)
        self._head = 0
        self.size = len(points)

    def pop_first(self) -> int:
        while not self.groups[self.times[self._head]]:
            self._head += 1
        t = self.times[self._head]
        _, idx = self.groups[t].pop(0)
        self.size -= 1
        return idx

    def nearest(self, t: int, target: float, window: float):
        """``(distance, position)`` of the closest point at ``t`` within ``window``."""
        group = self.groups.get(t)
        if not group:
            return None
        i = bisect.bisect_left(group, (target, -1))
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(group):
                dist = abs(group[j][0] - target)
                if dist <= window and (best is None or dist < best[0]):
                    best = (dist, j)
        return best

    def take(self, t: int, position: int) -> int:
        _, idx = self.groups[t].pop(position)
        self.size -= 1
        return idx


def extract_tracks(points: Sequence[ProjectedPoint], params: TraxParams = TraxParams(),
                   slope: float = None) -> List[AxleTrack]:
    """Greedily partition points into tracks.

    Seeds go in (t, z) order. A track ending at (t, z) looks at frames
    t+1 .. t+1+max_gap in turn and takes, from the first frame that has
    one, the point closest to ``z + slope * dt`` within the match window.
    Tracks shorter than ``min_track_len`` are kept but marked as not
    accepted.
    """
    points = list(points)
    if not points:
        return []
    if slope is None:
        slope = estimate_slope(points) if len({p.t for p in points}) >= 2 else 0.0
    zs = [p.z for p in points]
    window = params.match_window * (max(zs) - min(zs))

    pool = _Pool(points)
    tracks = []
    while pool.size:
        idx = pool.pop_first()
        members = [idx]
        t, z = points[idx].t, points[idx].z
        while True:
            best = None
            for dt in range(1, params.max_gap + 2):
                found = pool.nearest(t + dt, z + slope * dt, window)
                if found is not None:
                    best = (t + dt, found[1])
                    break
            if best is None:
                break
            nxt = pool.take(*best)
            members.append(nxt)
            t, z = points[nxt].t, points[nxt].z
        track_points = tuple(points[i] for i in members)
        tracks.append(AxleTrack(track_points, len(track_points) >= params.min_track_len))
    return tracks


def trax_tracks(points: Sequence[TirePoint], params: TraxParams = TraxParams()) -> List[AxleTrack]:
    """Full TRAX pass over one vehicle's tire points."""
    if not points:
        return []
    if len(points) < 2:
        return [AxleTrack((ProjectedPoint(points[0].t, 1.0),), False)]
    try:
        z, _ = _principal_z(points)
    except DegenerateProjection:
        z = np.zeros(len(points))
    rescaled = _rescale_array(z, params.c).tolist()
    return extract_tracks([ProjectedPoint(p.t, v) for p, v in zip(points, rescaled)], params)


def count_axles(points: Sequence[TirePoint], params: TraxParams = TraxParams()) -> int:
    return sum(1 for tr in trax_tracks(points, params) if tr.accepted)


def mode_baseline(per_frame_tire_counts: Sequence[int]) -> int:
    """Most frequent per-frame tire count; ties go to the larger count."""
    counts = Counter(per_frame_tire_counts)
    if not counts:
        raise ValueError("mode_baseline needs at least one frame")
    return max(counts, key=lambda k: (counts[k], k))
