"""Rectangle algebra for vehicle and tire boxes.

All coordinates are image pixels (origin top-left, y grows downward).
Polygons are plain sequences of ``(x, y)`` tuples in counter-clockwise
order, where "counter-clockwise" means positive shoelace area in the
(x, y) coordinate system as written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Optional, Sequence, Tuple

Point2 = Tuple[float, float]
Polygon = Sequence[Point2]

EPS = 1e-9
_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class AlignedBox:
    """Axis-aligned box given by its top-left corner and size."""

    x: float
    y: float
    w: float
    h: float
    # lets code treat both box kinds alike
    theta: ClassVar[float] = 0.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"AlignedBox needs w > 0 and h > 0, got w={self.w}, h={self.h}")

    @property
    def center(self) -> Point2:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def bounds(self) -> Tuple[float, float, float, float]:
        b = self.__dict__.get("_bounds")
        if b is None:
            b = self.__dict__["_bounds"] = (self.x, self.y, self.x + self.w, self.y + self.h)
        return b

    def corners(self) -> list:
        x0, y0, x1, y1 = self.bounds()
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def _canonical(w: float, h: float, theta: float) -> Tuple[float, float, float]:
    if h > w:
        w, h = h, w
        theta += math.pi / 2.0
    # wrap into (-pi/2, pi/2]
    theta = math.fmod(theta, math.pi)
    if theta <= -math.pi / 2.0:
        theta += math.pi
    elif theta > math.pi / 2.0:
        theta -= math.pi
    if abs(theta) < 1e-15:
        theta = 0.0
    # snap the vertical orientation so 9-digit serialized angles round-trip
    elif abs(abs(theta) - math.pi / 2.0) < 5e-9:
        theta = math.pi / 2.0
    return w, h, theta


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle, stored canonically with ``w >= h`` and theta in (-pi/2, pi/2]."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"OrientedBox needs w > 0 and h > 0, got w={self.w}, h={self.h}")
        if not (math.isfinite(self.cx) and math.isfinite(self.cy) and math.isfinite(self.theta)):
            raise ValueError("OrientedBox fields must be finite")
        if self.theta == 0.0 and self.w >= self.h:
            object.__setattr__(self, "theta", 0.0)  # folds -0.0
            return
        w, h, theta = _canonical(self.w, self.h, self.theta)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "theta", theta)

    @property
    def center(self) -> Point2:
        return (self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def is_axis_aligned(self) -> bool:
        return self.theta == 0.0 or self.theta == math.pi / 2.0

    def bounds(self) -> Tuple[float, float, float, float]:
        """Axis-aligned bounding rectangle ``(x0, y0, x1, y1)``, computed once."""
        b = self.__dict__.get("_bounds")
        if b is None:
            c, s = abs(math.cos(self.theta)), abs(math.sin(self.theta))
            hx = 0.5 * (self.w * c + self.h * s)
            hy = 0.5 * (self.w * s + self.h * c)
            b = self.__dict__["_bounds"] = (self.cx - hx, self.cy - hy, self.cx + hx, self.cy + hy)
        return b

    def translated(self, dx: float, dy: float) -> "OrientedBox":
        moved = object.__new__(OrientedBox)
        # already canonical, so skip validation
        moved.__dict__.update(cx=self.cx + dx, cy=self.cy + dy, w=self.w, h=self.h, theta=self.theta)
        return moved


def corners(box: OrientedBox) -> list:
    """The four vertices of ``box`` in counter-clockwise order."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = box.w / 2.0, box.h / 2.0
    out = []
    for lx, ly in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
        out.append((box.cx + lx * c - ly * s, box.cy + lx * s + ly * c))
    return out


def polygon_area(poly: Polygon) -> float:
    """Signed shoelace area; positive for counter-clockwise input."""
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return acc / 2.0


def clip_convex(subject: Polygon, clip: Polygon) -> list:
    """Sutherland-Hodgman clipping of ``subject`` against convex CCW ``clip``."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        norm = math.hypot(ex, ey)
        if norm <= EPS:
            continue
        inp = output
        output = []
        # signed distance of p to the edge line, positive on the inside
        dists = [(ex * (py - ay) - ey * (px - ax)) / norm for px, py in inp]
        m = len(inp)
        for j in range(m):
            cur, prev = inp[j], inp[j - 1]
            dc, dp = dists[j], dists[j - 1]
            if dc >= -EPS:
                if dp < -EPS:
                    output.append(_lerp(prev, cur, dp, dc))
                output.append(cur)
            elif dp >= -EPS:
                output.append(_lerp(prev, cur, dp, dc))
    return output


def _lerp(p: Point2, q: Point2, dp: float, dq: float) -> Point2:
    denom = dp - dq
    if abs(denom) <= EPS:
        return q
    u = dp / denom
    return (p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1]))


def intersection_area(a: Polygon, b: Polygon) -> float:
    """Area of the intersection of two convex CCW polygons."""
    if abs(polygon_area(a)) <= EPS or abs(polygon_area(b)) <= EPS:
        return 0.0
    clipped = clip_convex(a, b)
    if len(clipped) < 3:
        return 0.0
    area = polygon_area(clipped)
    return max(area, 0.0)


def _as_polygon(box) -> list:
    if isinstance(box, OrientedBox):
        return corners(box)
    return box.corners()


def _aligned(box) -> bool:
    return box.theta == 0.0 or box.theta == _HALF_PI


def box_intersection(a, b) -> float:
    """Intersection area of two boxes (``AlignedBox`` or ``OrientedBox``)."""
    return _intersection(a, a.bounds(), b, b.bounds())


def _intersection(a, ba, b, bb) -> float:
    w = min(ba[2], bb[2]) - max(ba[0], bb[0])
    h = min(ba[3], bb[3]) - max(ba[1], bb[1])
    if w <= 0 or h <= 0:
        return 0.0
    if _aligned(a) and _aligned(b):
        return w * h
    return intersection_area(_as_polygon(a), _as_polygon(b))


def box_iou(a, b) -> float:
    """Intersection over union of two boxes of either kind."""
    return iou_with_bounds(a, a.bounds(), b, b.bounds())


def iou_with_bounds(a, ba, b, bb) -> float:
    """``box_iou`` with the boxes' ``bounds()`` already in hand (hot loops)."""
    w = min(ba[2], bb[2]) - max(ba[0], bb[0])
    h = min(ba[3], bb[3]) - max(ba[1], bb[1])
    if w <= 0 or h <= 0:
        return 0.0
    if (a.theta == 0.0 or a.theta == _HALF_PI) and (b.theta == 0.0 or b.theta == _HALF_PI):
        inter = w * h
    else:
        inter = intersection_area(_as_polygon(a), _as_polygon(b))
        if inter <= 0.0:
            return 0.0
    return min(1.0, inter / (a.w * a.h + b.w * b.h - inter))


def iou(tire: AlignedBox, vehicle: OrientedBox) -> float:
    """IoU between a tire AABB and a vehicle OBB."""
    return box_iou(tire, vehicle)


@dataclass(frozen=True)
class Ray:
    origin: Point2
    direction: Point2

    def __post_init__(self):
        norm = math.hypot(*self.direction)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"Ray direction must be a unit vector, got norm {norm}")


def _slab(o: float, d: float, lo: float, hi: float) -> Optional[Tuple[float, float]]:
    if abs(d) <= EPS:
        if o < lo - EPS or o > hi + EPS:
            return None
        return (-math.inf, math.inf)
    t0, t1 = (lo - o) / d, (hi - o) / d
    return (t0, t1) if t0 <= t1 else (t1, t0)


def ray_rect_span(origin: Point2, direction: Point2, x0: float, y0: float, x1: float, y1: float):
    """Parameter interval ``(t_enter, t_exit)`` where the ray's line is inside the rectangle."""
    sx = _slab(origin[0], direction[0], x0, x1)
    sy = _slab(origin[1], direction[1], y0, y1)
    if sx is None or sy is None:
        return None
    t_enter, t_exit = max(sx[0], sy[0]), min(sx[1], sy[1])
    if t_exit < t_enter - EPS:
        return None
    return t_enter, t_exit


def ray_box_distance(ray: Ray, box: OrientedBox) -> Optional[float]:
    """Smallest t >= 0 with ``origin + t * direction`` inside ``box``, or None."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    px, py = ray.origin[0] - box.cx, ray.origin[1] - box.cy
    # into the box frame
    lo = (px * c + py * s, -px * s + py * c)
    ld = (ray.direction[0] * c + ray.direction[1] * s, -ray.direction[0] * s + ray.direction[1] * c)
    span = ray_rect_span(lo, ld, -box.w / 2.0, -box.h / 2.0, box.w / 2.0, box.h / 2.0)
    if span is None:
        return None
    t_enter, t_exit = span
    if t_exit < -EPS:
        return None
    return max(t_enter, 0.0)
