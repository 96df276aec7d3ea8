"""Deterministic robot simulator: disc kinematics on the occupancy grid.

Motion integrates in fixed ticks at fixed speeds. Distance bookkeeping is
exact: each tick recomputes position from the primitive's start pose, so a
completed translate lands on the closed-form endpoint to the bit. A
translate stops early when the next tick's position would overlap an
occupied cell; rotation in place never collides.

After a primitive completes, blocks, or is halted, the robot rescans and
emits a pose event (then a map delta if anything new was discovered).
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from ozbench.protocol import CAPTURE, HALT, TRANSLATE, MessageKind, MotionPrimitive
from ozbench.world import (
    DEFAULT_MAX_RANGE,
    LidarScan,
    MapCell,
    OccupancyGrid,
    Pose,
    WorldError,
    integrate_scan,
    raycast,
    scan,
)

CAMERA_WIDTH = 160
CAMERA_HEIGHT = 120
CAMERA_FOV_DEG = 90.0
_SKY = 40
_FLOOR = 90


@dataclass(frozen=True)
class SimConfig:
    robot_radius: float = 0.2  # meters
    linear_speed: float = 0.5  # m/s
    angular_speed: float = 45.0  # deg/s
    tick_ms: int = 50
    lidar_max_range: float = DEFAULT_MAX_RANGE

    @property
    def tick_s(self) -> float:
        return self.tick_ms / 1000.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "robot_radius": self.robot_radius,
            "linear_speed": self.linear_speed,
            "angular_speed": self.angular_speed,
            "tick_ms": self.tick_ms,
            "lidar_max_range": self.lidar_max_range,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SimConfig":
        defaults = cls()
        return cls(
            robot_radius=float(doc.get("robot_radius", defaults.robot_radius)),
            linear_speed=float(doc.get("linear_speed", defaults.linear_speed)),
            angular_speed=float(doc.get("angular_speed", defaults.angular_speed)),
            tick_ms=int(doc.get("tick_ms", defaults.tick_ms)),
            lidar_max_range=float(doc.get("lidar_max_range", defaults.lidar_max_range)),
        )


COMPLETED = "completed"
BLOCKED = "blocked"
HALTED = "halted"


@dataclass(frozen=True)
class Outcome:
    """Result of a primitive: how it ended and how far it got (m or deg)."""

    kind: str
    amount: float


@dataclass(frozen=True)
class SensorEvent:
    kind: MessageKind
    payload: dict[str, Any]


@dataclass(frozen=True)
class RobotState:
    pose: Pose
    radius: float
    linear_speed: float
    angular_speed: float
    active: Optional[str]  # "translate" | "rotate" | None


class SimBusyError(RuntimeError):
    """A motion primitive is already executing."""


@dataclass
class _Active:
    primitive: str  # TRANSLATE | ROTATE
    total: float  # absolute magnitude
    sign: float
    start: Pose
    progressed: float = 0.0
    heading: tuple[float, float] = field(default=(1.0, 0.0))


def disc_overlaps(grid: OccupancyGrid, x: float, y: float, radius: float) -> bool:
    """True when the robot disc at (x, y) overlaps any occupied cell."""
    res = grid.resolution
    cx_lo = int(math.floor((x - radius) / res))
    cx_hi = int(math.floor((x + radius) / res))
    cy_lo = int(math.floor((y - radius) / res))
    cy_hi = int(math.floor((y + radius) / res))
    r_sq = radius * radius
    for cy in range(max(cy_lo, 0), min(cy_hi, grid.height - 1) + 1):
        for cx in range(max(cx_lo, 0), min(cx_hi, grid.width - 1) + 1):
            if not grid.occupied(cx, cy):
                continue
            nearest_x = min(max(x, cx * res), (cx + 1) * res)
            nearest_y = min(max(y, cy * res), (cy + 1) * res)
            dx = x - nearest_x
            dy = y - nearest_y
            if dx * dx + dy * dy < r_sq:
                return True
    return False


def pose_payload(pose: Pose) -> dict[str, Any]:
    return {"x": pose.x, "y": pose.y, "theta": pose.theta}


def map_delta_payload(cells: list[MapCell]) -> dict[str, Any]:
    return {"cells": [c.to_payload() for c in cells]}


def render_frame(grid: OccupancyGrid, pose: Pose, max_range: float = DEFAULT_MAX_RANGE) -> bytes:
    """First-person grayscale frame as binary PGM (P5), 160x120.

    One ray per column across a 90 degree field of view centered on the
    heading. Wall band height falls off with range; shade darkens with
    range. Pure function of (grid, pose): byte-identical across runs.
    """
    w, h = CAMERA_WIDTH, CAMERA_HEIGHT
    half_fov = CAMERA_FOV_DEG / 2.0
    step = CAMERA_FOV_DEG / w  # 0.5625, exact in binary
    buf = bytearray(w * h)
    for col in range(w):
        # column w/2 looks exactly along the heading
        bearing = pose.theta + half_fov - col * step
        r = raycast(grid, (pose.x, pose.y), bearing, max_range)
        band = min(h, math.floor(h * 0.5 / r))
        shade = 255 - min(200, math.floor(r / max_range * 200.0))
        top = (h - band) // 2
        bottom = top + band
        for row in range(h):
            if row < top:
                value = _SKY
            elif row < bottom:
                value = shade
            else:
                value = _FLOOR
            buf[row * w + col] = value
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + bytes(buf)


def image_payload(frame: bytes) -> dict[str, Any]:
    return {"format": "pgm", "data": base64.b64encode(frame).decode("ascii")}


class Simulator:
    """Single-writer robot state machine driven by motion frames and ticks."""

    def __init__(self, grid: OccupancyGrid, start: Pose, config: SimConfig | None = None):
        self.grid = grid
        self.config = config or SimConfig()
        if disc_overlaps(grid, start.x, start.y, self.config.robot_radius):
            raise WorldError("start_in_obstacle", "robot disc overlaps an occupied cell at start")
        self.pose = start
        self._active: Optional[_Active] = None

    # --- inspection ---------------------------------------------------------

    @property
    def busy(self) -> bool:
        return self._active is not None

    def state(self) -> RobotState:
        return RobotState(
            pose=self.pose,
            radius=self.config.robot_radius,
            linear_speed=self.config.linear_speed,
            angular_speed=self.config.angular_speed,
            active=self._active.primitive if self._active else None,
        )

    # --- control ------------------------------------------------------------

    def apply(self, prim: MotionPrimitive) -> tuple[Optional[Outcome], list[SensorEvent]]:
        """Accept a motion frame.

        translate/rotate start a primitive (SimBusyError when one is
        active); halt stops whatever is running and reports progress so
        far; capture renders an image from the current pose. The returned
        events are sensor frames to dispatch; an Outcome is returned only
        when the frame resolved something immediately (halt, capture has
        none).
        """
        if prim.primitive == HALT:
            if self._active is None:
                return Outcome(HALTED, 0.0), []
            progressed = self._active.progressed
            self._active = None
            return Outcome(HALTED, progressed), self._completion_events()
        if prim.primitive == CAPTURE:
            return None, [self.capture()]
        if not math.isfinite(prim.magnitude):
            raise ValueError("magnitude must be finite")
        if self._active is not None:
            raise SimBusyError("a primitive is already executing")
        sign = 1.0 if prim.magnitude >= 0 else -1.0
        self._active = _Active(
            primitive=prim.primitive,
            total=abs(prim.magnitude),
            sign=sign,
            start=self.pose,
            heading=self.pose.heading(),
        )
        return None, []

    def tick(self) -> tuple[Optional[Outcome], list[SensorEvent]]:
        """Advance the active primitive by one tick of tick_ms."""
        active = self._active
        if active is None:
            return None, []
        if active.primitive == TRANSLATE:
            step = self.config.linear_speed * self.config.tick_s
            target = min(active.total, active.progressed + step)
            hx, hy = active.heading
            nx = active.start.x + active.sign * target * hx
            ny = active.start.y + active.sign * target * hy
            if disc_overlaps(self.grid, nx, ny, self.config.robot_radius):
                traveled = active.progressed
                self._active = None
                return Outcome(BLOCKED, traveled), self._completion_events()
            self.pose = Pose(nx, ny, active.start.theta)
            active.progressed = target
            if target >= active.total:
                self._active = None
                return Outcome(COMPLETED, active.total), self._completion_events()
            return None, []
        # rotate: collision-free for a disc
        step = self.config.angular_speed * self.config.tick_s
        target = min(active.total, active.progressed + step)
        self.pose = Pose(
            active.start.x, active.start.y, active.start.theta + active.sign * target
        )
        active.progressed = target
        if target >= active.total:
            self._active = None
            return Outcome(COMPLETED, active.total), self._completion_events()
        return None, []

    def run_primitive(self, prim: MotionPrimitive) -> tuple[Outcome, list[SensorEvent]]:
        """Execute a primitive to completion synchronously (replay, tests)."""
        outcome, events = self.apply(prim)
        if outcome is not None or prim.primitive == CAPTURE:
            return outcome or Outcome(COMPLETED, 0.0), events
        collected: list[SensorEvent] = []
        while True:
            outcome, events = self.tick()
            collected.extend(events)
            if outcome is not None:
                return outcome, collected

    def set_pose(self, pose: Pose) -> list[SensorEvent]:
        """Teleport (replay of an interrupted primitive); rescans there."""
        if disc_overlaps(self.grid, pose.x, pose.y, self.config.robot_radius):
            raise WorldError("start_in_obstacle", "pose overlaps an occupied cell")
        self.pose = pose
        self._active = None
        return self._completion_events()

    # --- sensors --------------------------------------------------------------

    def initial_events(self) -> list[SensorEvent]:
        """Pose plus first scan-derived map delta, for the session start."""
        return self._completion_events()

    def capture(self) -> SensorEvent:
        frame = render_frame(self.grid, self.pose, self.config.lidar_max_range)
        return SensorEvent(MessageKind.IMAGE, image_payload(frame))

    def live_frame(self) -> SensorEvent:
        frame = render_frame(self.grid, self.pose, self.config.lidar_max_range)
        return SensorEvent(MessageKind.LIVE_VIEW, image_payload(frame))

    def scan_now(self) -> LidarScan:
        return scan(self.grid, self.pose, self.config.lidar_max_range)

    def _completion_events(self) -> list[SensorEvent]:
        current = self.scan_now()
        cells = integrate_scan(self.grid, self.pose, current)
        events = [SensorEvent(MessageKind.POSE, pose_payload(self.pose))]
        if cells:
            events.append(SensorEvent(MessageKind.MAP_DELTA, map_delta_payload(cells)))
        events.append(SensorEvent(MessageKind.SCAN, current.to_payload()))
        return events
