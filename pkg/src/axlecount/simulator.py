"""Deterministic side-view traffic simulator with axle ground truth.

Camera model: orthographic side view. Vehicles travel along their heading
(0 = left to right, pi = right to left) starting with the front bumper on
the entry edge of the visibility band. Only the part of a vehicle inside
the band is reported as a box; a tire is reported while its contact point
is inside the band.

Randomness comes from SplitMix64 (Steele, Lea & Flood 2014) so that a
stream depends only on the scenario seed:

* uniform draw: ``(next_u64() >> 11) * 2**-53``
* normal draw: Box-Muller with ``u1 = 1 - uniform()``; ``normal`` keeps the
  cosine value, ``normal_pair`` (tire jitter) returns cosine and sine values
* Poisson draw: Knuth's product method
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from ._gc import gc_paused
from .detections import FrameDetections, TireDetection, VehicleClass, VehicleDetection, _trusted
from .geometry import AlignedBox, OrientedBox

MASK64 = (1 << 64) - 1
TIRE_SIZE_RATIO = 0.06
TRAILER_GAP_PX = 16.0
MIN_VISIBLE_PX = 2.0
VEHICLE_CONF = 0.95
TIRE_CONF = 0.9
SPURIOUS_CONF = 0.5

DIFFICULTIES = ("easy", "medium", "hard")
EASY_CLASSES = (VehicleClass.SEDAN, VehicleClass.SUV, VehicleClass.VAN, VehicleClass.HATCHBACK)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        # next_u64 inlined; this sits on the simulator's hot path
        self.state = z = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return ((z ^ (z >> 31)) >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Integer in ``[lo, hi]`` inclusive."""
        return lo + min(int(self.random() * (hi - lo + 1)), hi - lo)

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        u1 = 1.0 - self.random()
        u2 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normal_pair(self) -> Tuple[float, float]:
        """Two independent standard normals from one Box-Muller draw."""
        r = math.sqrt(-2.0 * math.log(1.0 - self.random()))
        a = 2.0 * math.pi * self.random()
        return r * math.cos(a), r * math.sin(a)

    def poisson(self, lam: float) -> int:
        limit, k, p = math.exp(-lam), 0, 1.0
        while True:
            p *= self.random()
            if p <= limit:
                return k
            k += 1


# ---------------------------------------------------------------------------
# scenario description


@dataclass(frozen=True)
class CameraSpec:
    image_width: float = 1280.0
    image_height: float = 720.0
    fps: float = 30.0
    visibility_band: Tuple[float, float] = (0.0, 1280.0)

    def __post_init__(self):
        object.__setattr__(self, "visibility_band", tuple(self.visibility_band))
        b0, b1 = self.visibility_band
        if not (0.0 <= b0 < b1 <= self.image_width):
            raise ValueError(f"visibility band {self.visibility_band} not inside [0, {self.image_width}]")
        if self.fps <= 0:
            raise ValueError("fps must be > 0")

    @property
    def band_width(self) -> float:
        return self.visibility_band[1] - self.visibility_band[0]


@dataclass(frozen=True)
class VehicleSpec:
    """One vehicle. For a towed trailer only class, size and axles are used;
    its motion follows the carrier at ``TRAILER_GAP_PX`` behind the rear bumper."""

    cls: VehicleClass
    length: float
    height: float
    axle_offsets: Tuple[float, ...]
    speed: float = 4.0
    heading: float = 0.0
    spawn_frame: int = 0
    lane_y: float = 360.0
    towed_trailer: Optional["VehicleSpec"] = None

    def __post_init__(self):
        object.__setattr__(self, "cls", VehicleClass(self.cls))
        object.__setattr__(self, "axle_offsets", tuple(float(o) for o in self.axle_offsets))
        if self.length <= 0 or self.height <= 0:
            raise ValueError("vehicle length and height must be > 0")
        offs = self.axle_offsets
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValueError(f"axle offsets must be strictly increasing: {offs}")
        if offs and (offs[0] < 0 or offs[-1] > self.length):
            raise ValueError(f"axle offsets must lie within [0, {self.length}]")
        if self.speed <= 0:
            raise ValueError("speed must be > 0")
        if self.towed_trailer is not None and self.towed_trailer.towed_trailer is not None:
            raise ValueError("trailer chains are not supported")

    @property
    def axle_count(self) -> int:
        n = len(self.axle_offsets)
        if self.towed_trailer is not None:
            n += len(self.towed_trailer.axle_offsets)
        return n

    def bodies(self) -> List[Tuple["VehicleSpec", float]]:
        """``(body, along-axis offset of its front bumper)`` for carrier and trailer."""
        out = [(self, 0.0)]
        if self.towed_trailer is not None:
            out.append((self.towed_trailer, self.length + TRAILER_GAP_PX))
        return out

    def axle_positions(self) -> List[float]:
        return [start + o for body, start in self.bodies() for o in body.axle_offsets]

    def axle_span(self) -> float:
        pos = self.axle_positions()
        return pos[-1] - pos[0] if pos else 0.0

    @property
    def total_length(self) -> float:
        body, start = self.bodies()[-1]
        return start + body.length


@dataclass(frozen=True)
class OccluderEvent:
    frames: Tuple[int, int]
    xs: Tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(int(f) for f in self.frames))
        object.__setattr__(self, "xs", tuple(float(x) for x in self.xs))

    def hides(self, frame: int, x: float) -> bool:
        return self.frames[0] <= frame <= self.frames[1] and self.xs[0] <= x <= self.xs[1]


@dataclass(frozen=True)
class NoiseSpec:
    pos_sigma: float = 0.0
    dropout_prob: float = 0.0
    false_positive_rate: float = 0.0
    occluder_events: Tuple[OccluderEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "occluder_events", tuple(
            e if isinstance(e, OccluderEvent) else OccluderEvent(**e) for e in self.occluder_events))
        if self.pos_sigma < 0:
            raise ValueError("pos_sigma must be >= 0")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must be in [0, 1]")
        if self.false_positive_rate < 0:
            raise ValueError("false_positive_rate must be >= 0")


@dataclass(frozen=True)
class Scenario:
    camera: CameraSpec
    vehicles: Tuple[VehicleSpec, ...]
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0
    difficulty: str = "medium"

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))

    def to_dict(self) -> dict:
        return {
            "difficulty": self.difficulty,
            "seed": self.seed,
            "camera": asdict(self.camera),
            "noise": asdict(self.noise),
            "vehicles": [_vehicle_dict(v) for v in self.vehicles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        cam = d["camera"]
        camera = CameraSpec(cam["image_width"], cam["image_height"], cam["fps"],
                            tuple(cam["visibility_band"]))
        noise = NoiseSpec(**d.get("noise", {}))
        vehicles = tuple(_vehicle_from_dict(v) for v in d["vehicles"])
        return cls(camera, vehicles, noise, int(d["seed"]), d["difficulty"])


def _vehicle_dict(v: VehicleSpec) -> dict:
    d = {
        "class": v.cls.value, "length": v.length, "height": v.height,
        "axle_offsets": list(v.axle_offsets), "speed": v.speed, "heading": v.heading,
        "spawn_frame": v.spawn_frame, "lane_y": v.lane_y,
    }
    d["towed_trailer"] = None if v.towed_trailer is None else _vehicle_dict(v.towed_trailer)
    return d


def _vehicle_from_dict(d: dict) -> VehicleSpec:
    trailer = d.get("towed_trailer")
    return VehicleSpec(
        VehicleClass(d["class"]), d["length"], d["height"], tuple(d["axle_offsets"]),
        d.get("speed", 4.0), d.get("heading", 0.0), d.get("spawn_frame", 0), d.get("lane_y", 360.0),
        None if trailer is None else _vehicle_from_dict(trailer))


# ---------------------------------------------------------------------------
# ground truth


@dataclass(frozen=True)
class TruthVehicle:
    vehicle_id: int
    cls: VehicleClass
    axles: int
    carrier_axles: int
    trailer_axles: Optional[int]
    trailer_class: Optional[VehicleClass]
    spawn_frame: int
    despawn_frame: int
    difficulty: str

    def to_dict(self) -> dict:
        return {
            "class": self.cls.value, "axles": self.axles, "carrier_axles": self.carrier_axles,
            "trailer_axles": self.trailer_axles,
            "trailer_class": None if self.trailer_class is None else self.trailer_class.value,
            "spawn_frame": self.spawn_frame, "despawn_frame": self.despawn_frame,
            "difficulty": self.difficulty,
        }


@dataclass(frozen=True)
class GroundTruth:
    vehicles: Tuple[TruthVehicle, ...]
    difficulty: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "difficulty": self.difficulty,
            "seed": self.seed,
            "vehicles": {str(v.vehicle_id): v.to_dict() for v in self.vehicles},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        vehicles = []
        for key, v in sorted(d["vehicles"].items(), key=lambda kv: int(kv[0])):
            tc = v.get("trailer_class")
            vehicles.append(TruthVehicle(
                int(key), VehicleClass(v["class"]), int(v["axles"]), int(v["carrier_axles"]),
                v.get("trailer_axles"), None if tc is None else VehicleClass(tc),
                int(v["spawn_frame"]), int(v["despawn_frame"]), v.get("difficulty", d["difficulty"])))
        return cls(tuple(vehicles), d["difficulty"], int(d.get("seed", 0)))


# ---------------------------------------------------------------------------
# generation


def check_difficulty(scenario: Scenario) -> None:
    """Raise ValueError when the difficulty tag contradicts the vehicles."""
    tag = scenario.difficulty
    if tag not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {tag!r}")
    band = scenario.camera.band_width
    spans = [v.axle_span() * abs(math.cos(v.heading)) for v in scenario.vehicles]
    if tag == "hard":
        if not any(s > band for s in spans):
            raise ValueError("hard scenario needs a vehicle whose axles never fit the band at once")
        return
    if any(s > band for s in spans):
        raise ValueError(f"{tag} scenario has a vehicle whose axles never fit the band at once")
    if tag == "easy":
        for v in scenario.vehicles:
            if v.cls not in EASY_CLASSES or len(v.axle_offsets) != 2 or v.towed_trailer is not None:
                raise ValueError(f"easy scenario has a non-easy vehicle ({v.cls.value}, {v.axle_count} axles)")


class _Kinematics:
    def __init__(self, spec: VehicleSpec, camera: CameraSpec):
        self.spec = spec
        self.d = (math.cos(spec.heading), math.sin(spec.heading))
        if self.d[0] >= 0:
            self.normal = (-self.d[1], self.d[0])
        else:
            self.normal = (self.d[1], -self.d[0])
        b0, b1 = camera.visibility_band
        self.x0 = b0 if self.d[0] >= 0 else b1
        self.band = (b0, b1)
        # boxes of a vehicle moving along x canonicalise to theta = 0
        self.level = abs(self.d[1]) < 1e-15

    def front(self, frame: int) -> Tuple[float, float]:
        k = (frame - self.spec.spawn_frame) * self.spec.speed
        return (self.x0 + k * self.d[0], self.spec.lane_y + k * self.d[1])

    def point(self, front, u: float, lateral: float = 0.0) -> Tuple[float, float]:
        return (front[0] - u * self.d[0] + lateral * self.normal[0],
                front[1] - u * self.d[1] + lateral * self.normal[1])

    def visible_interval(self, front, ua: float, ub: float) -> Optional[Tuple[float, float]]:
        b0, b1 = self.band
        c = self.d[0]
        if abs(c) < 1e-12:
            return (ua, ub) if b0 <= front[0] <= b1 else None
        lo, hi = sorted(((front[0] - b1) / c, (front[0] - b0) / c))
        lo, hi = max(lo, ua), min(hi, ub)
        if hi - lo < MIN_VISIBLE_PX:
            return None
        return (lo, hi)

    def last_frame(self) -> int:
        """First frame at which the whole unit has left the band."""
        spec = self.spec
        c = abs(self.d[0])
        if c < 1e-12:
            raise ValueError("vehicles must move with a horizontal component")
        b0, b1 = self.band
        travel = (b1 - b0) + spec.total_length * c
        return spec.spawn_frame + int(math.ceil(travel / (spec.speed * c))) + 1


def generate(scenario: Scenario) -> Tuple[List[FrameDetections], GroundTruth]:
    """Render the scenario to a detection stream plus its ground truth."""
    check_difficulty(scenario)
    with gc_paused():
        return _render(scenario)


def _render(scenario: Scenario) -> Tuple[List[FrameDetections], GroundTruth]:
    cam, noise = scenario.camera, scenario.noise
    rng = SplitMix64(scenario.seed)
    kins = [_Kinematics(v, cam) for v in scenario.vehicles]
    last = max((k.last_frame() for k in kins), default=0)
    b0, b1 = cam.visibility_band
    occluders = noise.occluder_events

    seen: Dict[int, List[int]] = {}
    frames = []
    for f in range(0, last + 1):
        vehicles, tires = [], []
        for vid, kin in enumerate(kins):
            if f < kin.spec.spawn_frame:
                continue
            front = kin.front(f)
            for body, start in kin.spec.bodies():
                vis = kin.visible_interval(front, start, start + body.length)
                if vis is not None:
                    uc = 0.5 * (vis[0] + vis[1])
                    cx, cy = kin.point(front, uc)
                    w = vis[1] - vis[0]
                    if kin.level and w >= body.height:
                        box = _trusted(OrientedBox, cx=cx, cy=cy, w=w, h=body.height, theta=0.0)
                    else:
                        box = OrientedBox(cx, cy, w, body.height, kin.spec.heading)
                    vehicles.append(_trusted(VehicleDetection, box=box, cls=body.cls,
                                             confidence=VEHICLE_CONF))
                    if body is kin.spec:
                        seen.setdefault(vid, []).append(f)
                size = TIRE_SIZE_RATIO * body.length
                for off in body.axle_offsets:
                    u = start + off
                    contact_x = front[0] - u * kin.d[0]
                    if not (b0 <= contact_x <= b1):
                        continue
                    # draws happen before suppression so noise settings don't shift the stream
                    dropped = rng.random() < noise.dropout_prob
                    nx, ny = rng.normal_pair()
                    if dropped:
                        continue
                    cx, cy = kin.point(front, u, body.height / 2.0 - size / 2.0)
                    if occluders and any(e.hides(f, cx) for e in occluders):
                        continue
                    cx += noise.pos_sigma * nx
                    cy += noise.pos_sigma * ny
                    box = _trusted(AlignedBox, x=cx - size / 2.0, y=cy - size / 2.0, w=size, h=size)
                    tires.append(_trusted(TireDetection, box=box, confidence=TIRE_CONF))
        if noise.false_positive_rate > 0:
            for _ in range(rng.poisson(noise.false_positive_rate)):
                size = rng.uniform(10.0, 40.0)
                x = rng.uniform(b0, b1 - size)
                y = rng.uniform(0.0, cam.image_height - size)
                tires.append(TireDetection(AlignedBox(x, y, size, size), SPURIOUS_CONF))
        frames.append(_trusted(FrameDetections, frame_index=f, timestamp=f / cam.fps,
                               vehicles=tuple(vehicles), tires=tuple(tires)))

    truth = []
    for vid, spec in enumerate(scenario.vehicles):
        frames_seen = seen.get(vid, [])
        trailer = spec.towed_trailer
        truth.append(TruthVehicle(
            vid, spec.cls, spec.axle_count, len(spec.axle_offsets),
            None if trailer is None else len(trailer.axle_offsets),
            None if trailer is None else trailer.cls,
            frames_seen[0] if frames_seen else -1, frames_seen[-1] if frames_seen else -1,
            scenario.difficulty))
    return frames, GroundTruth(tuple(truth), scenario.difficulty, scenario.seed)


# ---------------------------------------------------------------------------
# suites

IMAGE_W, IMAGE_H = 1280.0, 720.0

# axle layouts as fractions of body length
_LAYOUTS = {
    "pickup2": (0.16, 0.78),
    "truck2": (0.14, 0.74),
    "truck3": (0.12, 0.70, 0.80),
    "truck4": (0.10, 0.21, 0.72, 0.82),
    "bus2": (0.14, 0.76),
    "bus3": (0.12, 0.72, 0.81),
    "semi3": (0.08, 0.42, 0.90),
    "semi4": (0.07, 0.35, 0.84, 0.93),
    "semi5": (0.07, 0.33, 0.41, 0.85, 0.93),
    "semi6": (0.06, 0.30, 0.38, 0.79, 0.87, 0.95),
    "trailer1": (0.70,),
    "trailer2": (0.62, 0.78),
}


def _layout(rng: SplitMix64, name: str, length: float) -> Tuple[float, ...]:
    fracs = _LAYOUTS[name]
    jitter = [rng.uniform(-0.008, 0.008) for _ in fracs]
    return tuple(round((f + j) * length, 3) for f, j in zip(fracs, jitter))


def _common(rng: SplitMix64, band_width: float) -> dict:
    heading = 0.0 if rng.random() < 0.5 else math.pi
    speed = round(band_width * rng.uniform(0.003, 0.006), 3)
    return {"heading": heading, "speed": speed, "spawn_frame": rng.randint(0, 10),
            "lane_y": round(rng.uniform(300.0, 420.0), 3)}


def _easy_vehicle(rng: SplitMix64, band_width: float) -> VehicleSpec:
    cls = rng.choice(EASY_CLASSES)
    lo, hi = {VehicleClass.SEDAN: (180, 230), VehicleClass.HATCHBACK: (150, 190),
              VehicleClass.SUV: (190, 240), VehicleClass.VAN: (210, 260)}[cls]
    length = round(rng.uniform(lo, hi), 3)
    height = round(length * rng.uniform(0.32, 0.45), 3)
    axles = (round(length * rng.uniform(0.14, 0.20), 3), round(length * rng.uniform(0.75, 0.85), 3))
    return VehicleSpec(cls, length, height, axles, **_common(rng, band_width))


def _medium_vehicle(rng: SplitMix64, band_width: float) -> VehicleSpec:
    kind = rng.choice(("pickup", "truck", "bus", "semi", "truck_trailer"))
    common = _common(rng, band_width)
    limit = 0.75 * band_width
    if kind == "pickup":
        length = rng.uniform(230, 280)
        return VehicleSpec(VehicleClass.PICKUP_TRUCK, round(length, 3), round(length * 0.4, 3),
                           _layout(rng, "pickup2", length), **common)
    if kind == "truck":
        length = rng.uniform(300, 450)
        layout = rng.choice(("truck2", "truck3", "truck4"))
        return VehicleSpec(VehicleClass.TRUCK, round(length, 3), round(length * 0.38, 3),
                           _layout(rng, layout, length), **common)
    if kind == "bus":
        length = rng.uniform(450, 600)
        layout = rng.choice(("bus2", "bus3"))
        return VehicleSpec(VehicleClass.BUS, round(length, 3), round(length * 0.28, 3),
                           _layout(rng, layout, length), **common)
    if kind == "semi":
        length = rng.uniform(600, min(limit / 0.9, 1000))
        layout = rng.choice(("semi3", "semi4", "semi5"))
        return VehicleSpec(VehicleClass.SEMI_TRUCK, round(length, 3), round(length * 0.2, 3),
                           _layout(rng, layout, length), **common)
    length = rng.uniform(280, 380)
    tlen = rng.uniform(200, min(300, limit - length - TRAILER_GAP_PX))
    trailer = VehicleSpec(VehicleClass.TRAILER, round(tlen, 3), round(length * 0.34, 3),
                          _layout(rng, rng.choice(("trailer1", "trailer2")), tlen))
    layout = rng.choice(("truck2", "truck3"))
    return VehicleSpec(VehicleClass.TRUCK, round(length, 3), round(length * 0.36, 3),
                       _layout(rng, layout, length), towed_trailer=trailer, **common)


def _hard_vehicle(rng: SplitMix64, band_width: float) -> VehicleSpec:
    cls, layout = rng.choice((
        (VehicleClass.SEMI_TRUCK, "semi4"), (VehicleClass.SEMI_TRUCK, "semi5"),
        (VehicleClass.SEMI_TRUCK, "semi6"), (VehicleClass.BUS, "bus3"),
        (VehicleClass.TRUCK, "truck3"), (VehicleClass.TRUCK, "truck4"),
    ))
    fracs = _LAYOUTS[layout]
    span_frac = fracs[-1] - fracs[0] - 0.016
    length = band_width * rng.uniform(1.08, 1.35) / span_frac
    height_ratio = 0.2 if cls is VehicleClass.SEMI_TRUCK else 0.28
    return VehicleSpec(cls, round(length, 3), round(length * height_ratio, 3),
                       _layout(rng, layout, length), **_common(rng, band_width))


def build_suite(difficulty: str, n: int, master_seed: int) -> List[Scenario]:
    """``n`` single-vehicle scenarios of one tier, noise-free.

    easy: two-axle cars, full-width band. medium: long vehicles and
    truck-trailer units whose axles all fit the full-width band at once.
    hard: a band of 500-700 px and a vehicle whose axle span exceeds it.
    """
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {difficulty!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    seeder = SplitMix64(master_seed)
    out = []
    for _ in range(n):
        seed = seeder.next_u64()
        rng = SplitMix64(seed)
        if difficulty == "hard":
            width = round(rng.uniform(500.0, 700.0), 3)
            left = round((IMAGE_W - width) / 2.0, 3)
            camera = CameraSpec(IMAGE_W, IMAGE_H, 30.0, (left, left + width))
            vehicle = _hard_vehicle(rng, width)
        else:
            camera = CameraSpec(IMAGE_W, IMAGE_H, 30.0, (0.0, IMAGE_W))
            make = _easy_vehicle if difficulty == "easy" else _medium_vehicle
            vehicle = make(rng, IMAGE_W)
        out.append(Scenario(camera, (vehicle,), NoiseSpec(), seed, difficulty))
    return out


def with_noise(scenario: Scenario, pos_sigma: float = 0.0, dropout_prob: float = 0.0,
               false_positive_rate: float = 0.0, occluders: int = 0,
               occluder_frames: Tuple[int, int] = (1, 3),
               occluder_width: Tuple[float, float] = (0.15, 0.35)) -> Scenario:
    """Copy of ``scenario`` with detector noise and transient occluders.

    Each occluder hides tires inside an x-interval (``occluder_width`` as a
    fraction of the band) for a run of ``occluder_frames`` frames placed
    while the first vehicle is in view. Placement is drawn from the
    scenario seed.
    """
    rng = SplitMix64(scenario.seed ^ 0x5DEECE66D)
    events = []
    if occluders:
        b0, b1 = scenario.camera.visibility_band
        band = b1 - b0
        kin = _Kinematics(scenario.vehicles[0], scenario.camera)
        first, last = scenario.vehicles[0].spawn_frame, kin.last_frame()
        for _ in range(occluders):
            dur = rng.randint(*occluder_frames)
            start = rng.randint(first, max(first, last - dur))
            width = band * rng.uniform(*occluder_width)
            x0 = rng.uniform(b0, b1 - width)
            events.append(OccluderEvent((start, start + dur - 1), (round(x0, 3), round(x0 + width, 3))))
    noise = NoiseSpec(pos_sigma, dropout_prob, false_positive_rate, tuple(events))
    return replace(scenario, noise=noise)


def traffic_scenario(n_frames: int, lanes: int = 5, seed: int = 0) -> Scenario:
    """Multi-lane traffic with at most one vehicle per lane in view at a time."""
    rng = SplitMix64(seed)
    lane_gap = IMAGE_H / (lanes + 1)
    vehicles = []
    for lane in range(lanes):
        lane_y = lane_gap * (lane + 1)
        frame = rng.randint(0, 40)
        heading = 0.0 if lane % 2 == 0 else math.pi
        while frame < n_frames:
            length = round(rng.uniform(150.0, 300.0), 3)
            height = round(min(0.8 * lane_gap, length * 0.35), 3)
            axles = (round(length * 0.16, 3), round(length * 0.8, 3))
            if length > 240:
                axles = (round(length * 0.12, 3), round(length * 0.7, 3), round(length * 0.8, 3))
            speed = round(rng.uniform(4.0, 8.0), 3)
            cls = VehicleClass.TRUCK if len(axles) == 3 else VehicleClass.SEDAN
            spec = VehicleSpec(cls, length, height, axles, speed, heading, frame, round(lane_y, 3))
            vehicles.append(spec)
            # one vehicle per lane at a time: the next enters once this one has left
            frame += int(math.ceil((IMAGE_W + length) / speed)) + rng.randint(1, 10)
    vehicles.sort(key=lambda v: (v.spawn_frame, v.lane_y))
    camera = CameraSpec(IMAGE_W, IMAGE_H, 30.0, (0.0, IMAGE_W))
    return Scenario(camera, tuple(vehicles), NoiseSpec(), seed, "medium")
