"""Stream orchestration: tracking, association, trailer linking, axle counting, evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ._gc import gc_paused
from .association import DEFAULT_TIRE_IOU_THRESHOLD, TrailerRegistry, associate_tires, combine_axle_counts
from .detections import FrameDetections, StreamError, VehicleClass
from .simulator import GroundTruth
from .tracker import TrackerConfig, VehicleTrack, VehicleTracker
from .trax import AxleTrack, ProjectedPoint, TirePoint, TraxParams, mode_baseline, trax_tracks


@dataclass(frozen=True)
class PipelineConfig:
    tracker: TrackerConfig = TrackerConfig()
    trax: TraxParams = TraxParams()
    tire_iou_threshold: float = DEFAULT_TIRE_IOU_THRESHOLD
    motion_window: int = 5
    min_motion: float = 1.0
    frame_width: float = 1280.0
    frame_height: float = 720.0


@dataclass(frozen=True)
class VehicleResult:
    track_id: int
    cls: VehicleClass
    trax_axles: int
    mode_axles: int
    trailer_axles: Optional[int]
    combined_axles: int
    combined_mode_axles: int
    first_frame: int
    last_frame: int
    tracks: Tuple[AxleTrack, ...] = ()
    trailers: Tuple["VehicleResult", ...] = ()
    # tire points fed to TRAX; kept in memory only
    points: Tuple[TirePoint, ...] = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "class": self.cls.value,
            "trax_axles": self.trax_axles,
            "mode_axles": self.mode_axles,
            "trailer_axles": self.trailer_axles,
            "combined_axles": self.combined_axles,
            "combined_mode_axles": self.combined_mode_axles,
            "first_frame": self.first_frame,
            "last_frame": self.last_frame,
            "tracks": [{"accepted": tr.accepted,
                        "t": [p.t for p in tr.points],
                        "z": [p.z for p in tr.points]} for tr in self.tracks],
            "trailers": [tr.to_dict() for tr in self.trailers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VehicleResult":
        tracks = tuple(
            AxleTrack(tuple(ProjectedPoint(int(t), float(z)) for t, z in zip(tr["t"], tr["z"])),
                      bool(tr["accepted"]))
            for tr in d.get("tracks", []))
        return cls(
            int(d["track_id"]), VehicleClass(d["class"]), int(d["trax_axles"]), int(d["mode_axles"]),
            None if d.get("trailer_axles") is None else int(d["trailer_axles"]),
            int(d["combined_axles"]), int(d.get("combined_mode_axles", d["mode_axles"])),
            int(d["first_frame"]), int(d["last_frame"]), tracks,
            tuple(cls.from_dict(t) for t in d.get("trailers", [])))

    def find(self, track_id: int) -> Optional["VehicleResult"]:
        if self.track_id == track_id:
            return self
        for t in self.trailers:
            if t.track_id == track_id:
                return t
        return None


@dataclass
class _Observations:
    points: List[TirePoint] = field(default_factory=list)
    per_frame: List[int] = field(default_factory=list)


class AxleCounter:
    """Incremental pipeline. ``feed`` frames in order, then ``finish``.

    Results are released as soon as a vehicle and every trailer linked to
    it have been closed by the tracker.
    """

    def __init__(self, config: PipelineConfig = None):
        self.config = config or PipelineConfig()
        self.tracker = VehicleTracker(self.config.tracker)
        self.registry = TrailerRegistry()
        self._obs: Dict[int, _Observations] = {}
        self._closed: Dict[int, VehicleResult] = {}
        self._dropped: set = set()

    def feed(self, frame: FrameDetections) -> List[VehicleResult]:
        cfg = self.config
        try:
            matched = self.tracker.update(frame)
        except ValueError as exc:
            raise StreamError(str(exc), field="frame") from None
        live = [(tid, det.box) for tid, det in matched]
        counts = {tid: 0 for tid, _ in matched}
        for tid in counts:
            if tid not in self._obs:
                self._obs[tid] = _Observations()
        for a in associate_tires(frame.tires, live, cfg.tire_iou_threshold):
            cx, cy = frame.tires[a.tire].box.center
            self._obs[a.target].points.append(TirePoint(cx, cy, frame.frame_index))
            counts[a.target] += 1
        for tid, n in counts.items():
            self._obs[tid].per_frame.append(n)

        seen = [self.tracker.get(tid) for tid, _ in matched]
        self.registry.update(seen, (cfg.frame_width, cfg.frame_height),
                             cfg.motion_window, cfg.min_motion)

        for track in self.tracker.pop_terminated():
            self._close(track)
        return self._release()

    def finish(self) -> List[VehicleResult]:
        for track in self.tracker.close():
            self._close(track)
        out = self._release()
        assert not self._closed, "unreleased results after stream end"
        return out

    def _close(self, track: VehicleTrack):
        obs = self._obs.pop(track.track_id, _Observations())
        if not track.ever_confirmed:
            self._dropped.add(track.track_id)
            return
        tracks = tuple(trax_tracks(obs.points, self.config.trax))
        trax = sum(1 for tr in tracks if tr.accepted)
        mode = mode_baseline(obs.per_frame) if obs.per_frame else 0
        self._closed[track.track_id] = VehicleResult(
            track.track_id, track.cls, trax, mode, None, trax, mode,
            track.first_frame, track.last_frame, tracks, (), tuple(obs.points))

    def _release(self) -> List[VehicleResult]:
        if not self._closed:
            return []
        live = self.tracker.live
        out = []
        for tid in sorted(self._closed):
            res = self._closed.get(tid)
            if res is None:
                continue
            carrier = self.registry.carrier_of(tid)
            if carrier is not None and carrier not in self._dropped:
                # reported through its carrier
                continue
            trailer_ids = self.registry.trailers_of(tid)
            if any(t in live for t in trailer_ids):
                continue
            trailers = tuple(self._closed.pop(t) for t in trailer_ids if t in self._closed)
            del self._closed[tid]
            out.append(_fold(res, trailers))
        return out


def _fold(res: VehicleResult, trailers: Sequence[VehicleResult]) -> VehicleResult:
    if not trailers:
        return res
    trailer_axles = sum(t.trax_axles for t in trailers)
    trailer_mode = sum(t.mode_axles for t in trailers)
    return VehicleResult(
        res.track_id, res.cls, res.trax_axles, res.mode_axles, trailer_axles,
        combine_axle_counts(res.trax_axles, trailer_axles),
        combine_axle_counts(res.mode_axles, trailer_mode),
        res.first_frame, res.last_frame, res.tracks, tuple(trailers), res.points)


def run(frames: Iterable[FrameDetections], config: PipelineConfig = None) -> List[VehicleResult]:
    counter = AxleCounter(config)
    out = []
    with gc_paused():
        for frame in frames:
            try:
                out.extend(counter.feed(frame))
            except StreamError as exc:
                raise StreamError(f"frame {frame.frame_index}: {exc}", exc.line, exc.field) from None
        out.extend(counter.finish())
    return out


def results_to_jsonl(results: Iterable[VehicleResult]) -> str:
    return "".join(json.dumps(r.to_dict(), separators=(",", ":")) + "\n" for r in results)


def results_from_jsonl(text: str) -> List[VehicleResult]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(VehicleResult.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise StreamError(f"bad result record ({exc})", lineno) from None
    return out


# ---------------------------------------------------------------------------
# evaluation


def _overlap(a0: int, a1: int, b0: int, b1: int) -> int:
    return max(0, min(a1, b1) - max(a0, b0) + 1)


def evaluate(results: Sequence[VehicleResult], truth: GroundTruth) -> dict:
    """Match results to true vehicles by frame-interval overlap and score both counters."""
    pairs = []
    for v in truth.vehicles:
        for r in results:
            ov = _overlap(v.spawn_frame, v.despawn_frame, r.first_frame, r.last_frame)
            if ov > 0:
                pairs.append((-ov, v.vehicle_id, r.track_id, v, r))
    pairs.sort(key=lambda p: p[:3])
    used_v, used_r, match = set(), set(), {}
    for _, vid, rid, v, r in pairs:
        if vid in used_v or rid in used_r:
            continue
        used_v.add(vid)
        used_r.add(rid)
        match[vid] = r

    rows, flags = [], []
    for v in truth.vehicles:
        r = match.get(v.vehicle_id)
        row = {"vehicle_id": v.vehicle_id, "difficulty": v.difficulty, "true_axles": v.axles,
               "track_id": None, "trax_axles": None, "mode_axles": None,
               "trax_correct": False, "mode_correct": False}
        if r is None:
            flags.append(f"vehicle {v.vehicle_id}: no matching result")
        else:
            row.update(track_id=r.track_id, trax_axles=r.combined_axles,
                       mode_axles=r.combined_mode_axles,
                       trax_correct=r.combined_axles == v.axles,
                       mode_correct=r.combined_mode_axles == v.axles)
        rows.append(row)
    for r in results:
        if r.track_id not in used_r:
            flags.append(f"track {r.track_id}: no matching vehicle")
    return summarize(rows, flags)


def summarize(rows: List[dict], flags: List[str]) -> dict:
    tiers: Dict[str, dict] = {}
    for row in rows:
        tier = tiers.setdefault(row["difficulty"], {"n": 0, "trax_correct": 0, "mode_correct": 0})
        tier["n"] += 1
        tier["trax_correct"] += int(row["trax_correct"])
        tier["mode_correct"] += int(row["mode_correct"])
    total = {"n": 0, "trax_correct": 0, "mode_correct": 0}
    for tier in tiers.values():
        for k in total:
            total[k] += tier[k]
    for rec in list(tiers.values()) + [total]:
        n = rec["n"]
        rec["trax_accuracy"] = rec["trax_correct"] / n if n else 0.0
        rec["mode_accuracy"] = rec["mode_correct"] / n if n else 0.0
    order = {"easy": 0, "medium": 1, "hard": 2}
    return {
        "tiers": {k: tiers[k] for k in sorted(tiers, key=lambda k: (order.get(k, 9), k))},
        "overall": total,
        "flags": flags,
        "rows": rows,
    }


def merge_metrics(records: Iterable[dict]) -> dict:
    rows, flags = [], []
    for rec in records:
        rows.extend(rec["rows"])
        flags.extend(rec["flags"])
    return summarize(rows, flags)
