"""Tire-to-vehicle and trailer-to-carrier association."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .detections import TireDetection, VehicleClass
from .geometry import OrientedBox, Ray, iou_with_bounds, ray_box_distance, ray_rect_span
from .tracker import VehicleTrack

DEFAULT_TIRE_IOU_THRESHOLD = 0.002


class TireAssignment(NamedTuple):
    tire: int
    target: int
    iou: float


@dataclass(frozen=True)
class TrailerLink:
    trailer: int
    carrier: int
    hit_distance: float


def associate_tires(tires: Sequence[TireDetection], vehicles: Sequence[Tuple[int, OrientedBox]],
                    threshold: float = DEFAULT_TIRE_IOU_THRESHOLD) -> List[TireAssignment]:
    """Give each tire to the vehicle it overlaps most, if that IoU beats ``threshold``.

    Equal IoUs go to the lower track id.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    boxes = [(track_id, box, box.bounds()) for track_id, box in vehicles]
    out = []
    for i, tire in enumerate(tires):
        tb = tire.box
        x0, y0 = tb.x, tb.y
        x1, y1 = x0 + tb.w, y0 + tb.h
        best_id, best_iou = None, 0.0
        for track_id, box, (bx0, by0, bx1, by1) in boxes:
            if x1 <= bx0 or bx1 <= x0 or y1 <= by0 or by1 <= y0:
                continue
            score = iou_with_bounds(tb, (x0, y0, x1, y1), box, (bx0, by0, bx1, by1))
            if score > best_iou or (score == best_iou and best_id is not None and track_id < best_id):
                best_id, best_iou = track_id, score
        if best_id is not None and best_iou > threshold:
            out.append(TireAssignment(i, best_id, best_iou))
    return out


def motion_direction(track: VehicleTrack, window: int = 5,
                     min_motion: float = 1.0) -> Optional[Tuple[float, float]]:
    """Unit displacement between the oldest and newest centre in the last ``window`` entries."""
    if window < 2:
        raise ValueError("window must be >= 2")
    centers = track.centers(window)
    if len(centers) < 2:
        return None
    (x0, y0), (x1, y1) = centers[0], centers[-1]
    dx, dy = x1 - x0, y1 - y0
    norm = math.hypot(dx, dy)
    if norm < min_motion or norm == 0.0:
        return None
    return (dx / norm, dy / norm)


def associate_trailer(trailer: VehicleTrack, vehicles: Iterable[VehicleTrack],
                      frame_size: Tuple[float, float], window: int = 5,
                      min_motion: float = 1.0, frame_origin: Tuple[float, float] = (0.0, 0.0)
                      ) -> Optional[TrailerLink]:
    """Cast a ray from the trailer centre along its motion and link the nearest vehicle hit.

    Only hits before the ray leaves the frame count. Other trailers are
    skipped, as is the trailer itself.
    """
    if trailer.cls is not VehicleClass.TRAILER:
        raise ValueError(f"track {trailer.track_id} is not a trailer")
    direction = motion_direction(trailer, window, min_motion)
    if direction is None:
        return None
    box = trailer.last_box
    ray = Ray((box.cx, box.cy), direction)

    ox, oy = frame_origin
    span = ray_rect_span(ray.origin, direction, ox, oy, ox + frame_size[0], oy + frame_size[1])
    if span is None or span[1] < 0:
        return None
    exit_distance = span[1]

    best = None
    for v in vehicles:
        if v.track_id == trailer.track_id or v.cls is VehicleClass.TRAILER:
            continue
        d = ray_box_distance(ray, v.last_box)
        if d is None or d > exit_distance:
            continue
        if best is None or d < best[0] or (d == best[0] and v.track_id < best[1]):
            best = (d, v.track_id)
    if best is None:
        return None
    return TrailerLink(trailer.track_id, best[1], best[0])


def combine_axle_counts(vehicle_axles: int, trailer_axles: int) -> int:
    if vehicle_axles < 0 or trailer_axles < 0:
        raise ValueError("axle counts must be non-negative")
    return vehicle_axles + trailer_axles


class TrailerRegistry:
    """Trailer links for one stream; a link never changes once made."""

    def __init__(self):
        self.links: Dict[int, TrailerLink] = {}

    def update(self, tracks: Iterable[VehicleTrack], frame_size: Tuple[float, float],
               window: int = 5, min_motion: float = 1.0) -> List[TrailerLink]:
        tracks = list(tracks)
        new = []
        for t in tracks:
            if t.track_id in self.links or t.cls is not VehicleClass.TRAILER:
                continue
            link = associate_trailer(t, tracks, frame_size, window, min_motion)
            if link is not None:
                self.links[t.track_id] = link
                new.append(link)
        return new

    def carrier_of(self, trailer_id: int) -> Optional[int]:
        link = self.links.get(trailer_id)
        return None if link is None else link.carrier

    def trailers_of(self, carrier_id: int) -> List[int]:
        return sorted(l.trailer for l in self.links.values() if l.carrier == carrier_id)
