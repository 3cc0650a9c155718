"""Per-frame detection records and the newline-delimited stream format.

One frame per line, each line a JSON object::

    {"frame": 12, "ts": 0.4,
     "vehicles": [{"cx": .., "cy": .., "w": .., "h": .., "theta": .., "class": "Truck", "conf": 0.9}],
     "tires": [{"x": .., "y": .., "w": .., "h": .., "conf": 0.8}]}

Angles are written with 9 significant digits; every other number is
written in shortest round-trip form.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, TextIO, Tuple, Union

from .geometry import AlignedBox, OrientedBox


class VehicleClass(str, enum.Enum):
    SUV = "SUV"
    SEDAN = "Sedan"
    PICKUP_TRUCK = "Pickup_Truck"
    TRUCK = "Truck"
    SEMI_TRUCK = "Semi_truck"
    VAN = "Van"
    TRAILER = "Trailer"
    HATCHBACK = "Hatchback"
    BUS = "Bus"

    def __str__(self):
        return self.value


class StreamError(ValueError):
    """Malformed detection stream; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int = None, field: str = None):
        self.line = line
        self.field = field
        prefix = f"line {line}: " if line is not None else ""
        if field:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class VehicleDetection:
    box: OrientedBox
    cls: VehicleClass
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class TireDetection:
    box: AlignedBox
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class FrameDetections:
    frame_index: int
    timestamp: float
    vehicles: Tuple[VehicleDetection, ...] = field(default_factory=tuple)
    tires: Tuple[TireDetection, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "tires", tuple(self.tires))


def format_angle(theta: float) -> float:
    """Quantize an angle the way it is written to disk."""
    return float(f"{theta:.9g}")


def _vehicle_record(v: VehicleDetection) -> dict:
    b = v.box
    return {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h,
            "theta": format_angle(b.theta), "class": v.cls.value, "conf": v.confidence}


def _tire_record(t: TireDetection) -> dict:
    b = t.box
    return {"x": b.x, "y": b.y, "w": b.w, "h": b.h, "conf": t.confidence}


def frame_to_line(frame: FrameDetections) -> str:
    rec = {
        "frame": frame.frame_index,
        "ts": frame.timestamp,
        "vehicles": [_vehicle_record(v) for v in frame.vehicles],
        "tires": [_tire_record(t) for t in frame.tires],
    }
    return json.dumps(rec, separators=(",", ":"), allow_nan=False)


def write_stream(frames: Iterable[FrameDetections], out: TextIO = None) -> str:
    """Serialize frames; writes to ``out`` if given and returns the text."""
    text = "".join(frame_to_line(f) + "\n" for f in frames)
    if out is not None:
        out.write(text)
    return text


def _number(rec: dict, key: str, line: int, prefix: str = "") -> float:
    name = prefix + key
    if key not in rec:
        raise StreamError("missing", line, name)
    value = rec[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise StreamError(f"expected a number, got {value!r}", line, name)
    value = float(value)
    if not math.isfinite(value):
        raise StreamError("must be finite", line, name)
    return value


def _confidence(rec: dict, line: int, prefix: str) -> float:
    conf = _number(rec, "conf", line, prefix)
    if not 0.0 <= conf <= 1.0:
        raise StreamError(f"confidence {conf} outside [0, 1]", line, prefix + "conf")
    return conf


def _positive(rec: dict, key: str, line: int, prefix: str) -> float:
    value = _number(rec, key, line, prefix)
    if value <= 0:
        raise StreamError(f"must be > 0, got {value}", line, prefix + key)
    return value


_NUMERIC = {int, float}
_CLASSES = {c.value: c for c in VehicleClass}


def _trusted(kind, **values):
    """Instance of a frozen dataclass whose fields were already validated."""
    obj = object.__new__(kind)
    obj.__dict__.update(values)
    return obj


def _fast_vehicle(v) -> VehicleDetection:
    """Well-formed vehicle record without per-field diagnostics, else None."""
    try:
        vals = (v["cx"], v["cy"], v["w"], v["h"], v["theta"], v["conf"])
        cls = _CLASSES[v["class"]]
    except (KeyError, TypeError):
        return None
    cx, cy, w, h, theta, conf = vals
    if not set(map(type, vals)) <= _NUMERIC or not math.isfinite(cx + cy + w + h + theta):
        return None
    if not (w > 0 and h > 0 and 0 <= conf <= 1):
        return None
    if theta == 0 and w >= h:
        box = _trusted(OrientedBox, cx=float(cx), cy=float(cy), w=float(w), h=float(h), theta=0.0)
    else:
        box = OrientedBox(float(cx), float(cy), float(w), float(h), float(theta))
    return _trusted(VehicleDetection, box=box, cls=cls, confidence=float(conf))


def _fast_tire(t) -> TireDetection:
    try:
        vals = (t["x"], t["y"], t["w"], t["h"], t["conf"])
    except (KeyError, TypeError):
        return None
    x, y, w, h, conf = vals
    if not set(map(type, vals)) <= _NUMERIC or not math.isfinite(x + y + w + h):
        return None
    if not (w > 0 and h > 0 and 0 <= conf <= 1):
        return None
    box = _trusted(AlignedBox, x=float(x), y=float(y), w=float(w), h=float(h))
    return _trusted(TireDetection, box=box, confidence=float(conf))


def parse_line(text: str, line: int = None) -> FrameDetections:
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StreamError(f"invalid JSON ({exc.msg})", line) from None
    if not isinstance(rec, dict):
        raise StreamError("record must be an object", line)

    if "frame" not in rec:
        raise StreamError("missing", line, "frame")
    frame = rec["frame"]
    if isinstance(frame, bool) or not isinstance(frame, int) or frame < 0:
        raise StreamError(f"expected a non-negative integer, got {frame!r}", line, "frame")
    ts = _number(rec, "ts", line)

    vehicles = []
    for i, v in enumerate(_list(rec, "vehicles", line)):
        det = _fast_vehicle(v)
        if det is not None:
            vehicles.append(det)
            continue
        # slow path pinpoints the offending field
        p = f"vehicles[{i}]."
        if not isinstance(v, dict):
            raise StreamError("must be an object", line, p[:-1])
        box = OrientedBox(_number(v, "cx", line, p), _number(v, "cy", line, p),
                          _positive(v, "w", line, p), _positive(v, "h", line, p),
                          _number(v, "theta", line, p))
        cls_name = v.get("class")
        try:
            cls = VehicleClass(cls_name)
        except ValueError:
            raise StreamError(f"unknown vehicle class {cls_name!r}", line, p + "class") from None
        vehicles.append(VehicleDetection(box, cls, _confidence(v, line, p)))

    tires = []
    for i, t in enumerate(_list(rec, "tires", line)):
        det = _fast_tire(t)
        if det is not None:
            tires.append(det)
            continue
        p = f"tires[{i}]."
        if not isinstance(t, dict):
            raise StreamError("must be an object", line, p[:-1])
        box = AlignedBox(_number(t, "x", line, p), _number(t, "y", line, p),
                         _positive(t, "w", line, p), _positive(t, "h", line, p))
        tires.append(TireDetection(box, _confidence(t, line, p)))

    return FrameDetections(frame, ts, tuple(vehicles), tuple(tires))


def _list(rec: dict, key: str, line: int) -> list:
    if key not in rec:
        raise StreamError("missing", line, key)
    value = rec[key]
    if not isinstance(value, list):
        raise StreamError("expected a list", line, key)
    return value


def iter_stream(source: Union[str, TextIO, Iterable[str]]) -> Iterator[FrameDetections]:
    """Lazily parse a stream, validating frame ordering as it goes."""
    lines = source.splitlines() if isinstance(source, str) else source
    prev = None
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.rstrip("\n")
        if not raw.strip():
            continue
        frame = parse_line(raw, lineno)
        if prev is not None:
            if frame.frame_index <= prev.frame_index:
                raise StreamError(
                    f"frame index {frame.frame_index} not greater than previous {prev.frame_index}",
                    lineno, "frame")
            if frame.timestamp < prev.timestamp:
                raise StreamError(
                    f"timestamp {frame.timestamp} decreases (previous {prev.timestamp})",
                    lineno, "ts")
        prev = frame
        yield frame


def parse_stream(source: Union[str, TextIO, Iterable[str]]) -> List[FrameDetections]:
    return list(iter_stream(source))
