"""Greedy IoU tracking-by-detection for vehicle boxes.

Stand-in for an appearance-based tracker: constant-velocity prediction on
the box centre, shape held from the last observation, greedy one-to-one
matching by descending IoU.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .detections import FrameDetections, VehicleClass, VehicleDetection
from .geometry import OrientedBox, iou_with_bounds


class TrackState(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class TrackerConfig:
    iou_gate: float = 0.3
    min_hits: int = 3
    max_age: int = 10

    def __post_init__(self):
        if not 0.0 <= self.iou_gate <= 1.0:
            raise ValueError("iou_gate must be in [0, 1]")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")
        if self.max_age < 0:
            raise ValueError("max_age must be >= 0")


@dataclass
class VehicleTrack:
    track_id: int
    history: List[Tuple[int, OrientedBox]] = field(default_factory=list)
    state: TrackState = TrackState.TENTATIVE
    misses: int = 0
    hits: int = 0
    class_votes: Counter = field(default_factory=Counter)
    ever_confirmed: bool = False

    @property
    def cls(self) -> VehicleClass:
        # most frequent label; earliest seen wins ties (Counter keeps insertion order)
        votes = self.class_votes
        if len(votes) == 1:
            return next(iter(votes))
        return max(votes, key=votes.__getitem__)

    @property
    def last_frame(self) -> int:
        return self.history[-1][0]

    @property
    def first_frame(self) -> int:
        return self.history[0][0]

    @property
    def last_box(self) -> OrientedBox:
        return self.history[-1][1]

    def velocity(self) -> Tuple[float, float]:
        if len(self.history) < 2:
            return (0.0, 0.0)
        (f0, b0), (f1, b1) = self.history[-2], self.history[-1]
        dt = f1 - f0
        return ((b1.cx - b0.cx) / dt, (b1.cy - b0.cy) / dt)

    def predict(self, frame_index: int) -> OrientedBox:
        vx, vy = self.velocity()
        dt = frame_index - self.last_frame
        return self.last_box.translated(vx * dt, vy * dt)

    def centers(self, window: Optional[int] = None) -> List[Tuple[float, float]]:
        hist = self.history if window is None else self.history[-window:]
        return [(b.cx, b.cy) for _, b in hist]


def greedy_match(tracks: List[VehicleTrack], boxes: List[OrientedBox], frame_index: int,
                 gate: float) -> List[Tuple[int, int]]:
    """Pairs ``(track position, detection position)`` by descending IoU.

    Ties resolve toward the lower track id, then the lower detection index.
    """
    det_bounds = [box.bounds() for box in boxes]
    candidates = []
    for ti, track in enumerate(tracks):
        pred = track.predict(frame_index)
        pb = x0, y0, x1, y1 = pred.bounds()
        for di, box in enumerate(boxes):
            db = bx0, by0, bx1, by1 = det_bounds[di]
            if x1 <= bx0 or bx1 <= x0 or y1 <= by0 or by1 <= y0:
                continue
            score = iou_with_bounds(pred, pb, box, db)
            if score > 0.0 and score >= gate:
                candidates.append((-score, track.track_id, di, ti))
    candidates.sort()
    used_t, used_d, pairs = set(), set(), []
    for _, _, di, ti in candidates:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        pairs.append((ti, di))
    return pairs


class VehicleTracker:
    def __init__(self, config: TrackerConfig = None):
        self.config = config or TrackerConfig()
        self.tracks: List[VehicleTrack] = []
        self._next_id = 1
        self._last_frame: Optional[int] = None
        self._terminated: List[VehicleTrack] = []

    def update(self, frame: FrameDetections) -> List[Tuple[int, VehicleDetection]]:
        if self._last_frame is not None and frame.frame_index <= self._last_frame:
            raise ValueError(
                f"frame {frame.frame_index} presented after frame {self._last_frame}")
        self._last_frame = frame.frame_index
        cfg = self.config

        dets = list(frame.vehicles)
        pairs = greedy_match(self.tracks, [d.box for d in dets], frame.frame_index, cfg.iou_gate)
        matched_t = {ti for ti, _ in pairs}
        matched_d = {di for _, di in pairs}

        out = []
        for ti, di in pairs:
            track = self.tracks[ti]
            self._observe(track, frame.frame_index, dets[di])
            out.append((track.track_id, dets[di]))

        for ti, track in enumerate(self.tracks):
            if ti in matched_t:
                continue
            track.misses += 1
            track.hits = 0
            if track.misses > cfg.max_age:
                track.state = TrackState.TERMINATED

        for di, det in enumerate(dets):
            if di in matched_d:
                continue
            track = VehicleTrack(self._next_id)
            self._next_id += 1
            self._observe(track, frame.frame_index, det)
            self.tracks.append(track)
            out.append((track.track_id, det))

        self._terminated.extend(t for t in self.tracks if t.state is TrackState.TERMINATED)
        self.tracks = [t for t in self.tracks if t.state is not TrackState.TERMINATED]
        out.sort(key=lambda pair: pair[0])
        return out

    def _observe(self, track: VehicleTrack, frame_index: int, det: VehicleDetection):
        track.history.append((frame_index, det.box))
        track.class_votes[det.cls] += 1
        track.misses = 0
        track.hits += 1
        if track.hits >= self.config.min_hits:
            track.state = TrackState.CONFIRMED
            track.ever_confirmed = True

    def pop_terminated(self) -> List[VehicleTrack]:
        done, self._terminated = self._terminated, []
        return done

    def close(self) -> List[VehicleTrack]:
        """Terminate every live track (end of stream) and return all closed tracks."""
        for t in self.tracks:
            t.state = TrackState.TERMINATED
        self._terminated.extend(self.tracks)
        self.tracks = []
        return self.pop_terminated()

    def get(self, track_id: int) -> Optional[VehicleTrack]:
        for t in self.tracks:
            if t.track_id == track_id:
                return t
        return None

    @property
    def live(self) -> Dict[int, VehicleTrack]:
        return {t.track_id: t for t in self.tracks}
