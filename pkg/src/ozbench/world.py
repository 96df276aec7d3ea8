"""Occupancy-grid world: loading, exact ray traversal, scans, discovery.

The grid is closed (border cells occupied) and static. Discovery state is
a per-cell overlay that only ever moves unknown -> seen_free/seen_occupied;
it is what the participant's map actually shows, and its byte array is the
session's map hash input.

Cell (cx, cy) covers [cx*res, (cx+1)*res) x [cy*res, (cy+1)*res) in world
coordinates, with cy counted from the bottom row. World files list rows
top to bottom.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

OCCUPIED_GLYPH = "#"
FREE_GLYPH = "."

# overlay states, one byte per cell
UNKNOWN = 0
SEEN_FREE = 1
SEEN_OCCUPIED = 2

DEFAULT_MAX_RANGE = 8.0
SCAN_RAYS = 360


class WorldError(ValueError):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}{': ' + detail if detail else ''}")


def normalize_deg(theta: float) -> float:
    """Map any angle to [0, 360)."""
    theta = math.fmod(theta, 360.0)
    if theta < 0:
        theta += 360.0
    return theta if theta < 360.0 else 0.0


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float  # degrees in [0, 360), 0 = +x, counterclockwise positive

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_deg(self.theta))

    def heading(self) -> tuple[float, float]:
        rad = math.radians(self.theta)
        return math.cos(rad), math.sin(rad)


@dataclass(frozen=True)
class MapCell:
    cx: int
    cy: int
    state: str  # "free" | "occupied"

    def to_payload(self) -> dict[str, Any]:
        return {"cx": self.cx, "cy": self.cy, "state": self.state}


class OccupancyGrid:
    """Static occupancy plus the mutable discovered overlay.

    occ is row-major from the bottom row (index cy * width + cx).
    """

    def __init__(self, width: int, height: int, resolution: float, occ: bytes):
        if len(occ) != width * height:
            raise ValueError("occupancy array does not match dimensions")
        self.width = width
        self.height = height
        self.resolution = resolution
        self.occ = occ
        self.overlay = bytearray(width * height)  # all UNKNOWN

    def in_bounds(self, cx: int, cy: int) -> bool:
        return 0 <= cx < self.width and 0 <= cy < self.height

    def occupied(self, cx: int, cy: int) -> bool:
        return self.occ[cy * self.width + cx] == 1

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))

    def size_m(self) -> tuple[float, float]:
        return self.width * self.resolution, self.height * self.resolution

    def map_hash(self) -> str:
        """SHA-256 over the overlay bytes, row-major from the bottom row."""
        return hashlib.sha256(bytes(self.overlay)).hexdigest()

    def overlay_state(self, cx: int, cy: int) -> int:
        return self.overlay[cy * self.width + cx]


def parse_world(text: str) -> tuple[OccupancyGrid, Pose]:
    """Parse a world file body. Raises WorldError with a stable code."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorldError("bad_json", str(exc)) from None
    if not isinstance(doc, dict):
        raise WorldError("bad_schema", "top level is not an object")

    resolution = doc.get("resolution", 0.1)
    if not isinstance(resolution, (int, float)) or isinstance(resolution, bool) or resolution <= 0:
        raise WorldError("bad_schema", "resolution must be a positive number")
    resolution = float(resolution)

    rows = doc.get("rows")
    if not isinstance(rows, list) or not rows or not all(isinstance(r, str) for r in rows):
        raise WorldError("bad_schema", "rows must be a non-empty list of strings")

    height = len(rows)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise WorldError("non_rectangular", f"row {i} has length {len(row)}, expected {width}")
    if width < 3 or height < 3:
        raise WorldError("bad_schema", "world must be at least 3x3 cells")

    occ = bytearray(width * height)
    for file_row, row in enumerate(rows):
        cy = height - 1 - file_row  # rows listed top to bottom
        for cx, glyph in enumerate(row):
            if glyph == OCCUPIED_GLYPH:
                occ[cy * width + cx] = 1
            elif glyph != FREE_GLYPH:
                raise WorldError("unknown_glyph", f"{glyph!r} at row {file_row}, column {cx}")

    for cx in range(width):
        if occ[cx] == 0 or occ[(height - 1) * width + cx] == 0:
            raise WorldError("open_border", f"column {cx}")
    for cy in range(height):
        if occ[cy * width] == 0 or occ[cy * width + width - 1] == 0:
            raise WorldError("open_border", f"row {cy}")

    start = doc.get("start")
    if not isinstance(start, dict):
        raise WorldError("bad_schema", "start must be an object with x, y, theta")
    try:
        pose = Pose(float(start["x"]), float(start["y"]), float(start.get("theta", 0.0)))
    except (KeyError, TypeError, ValueError):
        raise WorldError("bad_schema", "start must carry numeric x, y, theta") from None

    grid = OccupancyGrid(width, height, resolution, bytes(occ))
    size_x, size_y = grid.size_m()
    if not (0 <= pose.x < size_x and 0 <= pose.y < size_y):
        raise WorldError("start_in_obstacle", "start pose outside the world")
    scx, scy = grid.cell_of(pose.x, pose.y)
    if grid.occupied(scx, scy):
        raise WorldError("start_in_obstacle", f"start cell ({scx}, {scy}) is occupied")

    return grid, pose


def load_world(path: str | Path) -> tuple[OccupancyGrid, Pose]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise WorldError("file_not_found", str(path)) from None
    except OSError as exc:
        raise WorldError("unreadable", f"{path}: {exc}") from None
    return parse_world(text)


def traverse_ray(
    grid: OccupancyGrid,
    ox: float,
    oy: float,
    bearing_deg: float,
    max_range: float = DEFAULT_MAX_RANGE,
) -> tuple[tuple[int, int] | None, float, list[tuple[int, int]]]:
    """Walk the ray cell by cell and stop at the first occupied cell.

    Returns (hit cell or None, distance, free cells entered in order).
    The distance is to the entry boundary of the hit cell, capped at
    max_range. Exact traversal: every cell the ray passes through is
    visited in order; when the ray crosses a cell corner exactly, it steps
    diagonally, matching point-sampling semantics.
    """
    res = grid.resolution
    cx, cy = grid.cell_of(ox, oy)
    if not grid.in_bounds(cx, cy):
        raise ValueError(f"ray origin ({ox}, {oy}) outside the world")
    if grid.occupied(cx, cy):
        raise ValueError(f"ray origin ({ox}, {oy}) inside an occupied cell")

    rad = math.radians(bearing_deg)
    dx, dy = math.cos(rad), math.sin(rad)
    step_x = 1 if dx > 0 else (-1 if dx < 0 else 0)
    step_y = 1 if dy > 0 else (-1 if dy < 0 else 0)

    # Boundary distances are recomputed from cell indices each step rather
    # than accumulated, so a wall face at an exactly representable
    # coordinate yields an exactly representable range.
    def next_tx(cx_: int) -> float:
        if step_x == 0:
            return math.inf
        boundary = (cx_ + 1) * res if step_x > 0 else cx_ * res
        return (boundary - ox) / dx

    def next_ty(cy_: int) -> float:
        if step_y == 0:
            return math.inf
        boundary = (cy_ + 1) * res if step_y > 0 else cy_ * res
        return (boundary - oy) / dy

    visited = [(cx, cy)]
    while True:
        tx, ty = next_tx(cx), next_ty(cy)
        if tx < ty:
            t_entry = tx
            cx += step_x
        elif ty < tx:
            t_entry = ty
            cy += step_y
        else:  # exact corner crossing: step both axes
            t_entry = tx
            cx += step_x
            cy += step_y
        if t_entry > max_range:
            return None, max_range, visited
        if not grid.in_bounds(cx, cy):
            return None, max_range, visited
        if grid.occupied(cx, cy):
            return (cx, cy), max(t_entry, 0.0), visited
        visited.append((cx, cy))


def raycast(
    grid: OccupancyGrid,
    origin: tuple[float, float],
    bearing_deg: float,
    max_range: float = DEFAULT_MAX_RANGE,
) -> float:
    """Distance to the first occupied-cell boundary, capped at max_range."""
    _hit, dist, _visited = traverse_ray(grid, origin[0], origin[1], bearing_deg, max_range)
    return dist


@dataclass(frozen=True)
class LidarScan:
    """360 ranges in meters; index = bearing in degrees from the world +x axis."""

    ranges: tuple[float, ...]
    max_range: float = DEFAULT_MAX_RANGE

    def __post_init__(self) -> None:
        if len(self.ranges) != SCAN_RAYS:
            raise ValueError(f"scan must have exactly {SCAN_RAYS} ranges")
        if any(not (0 < r <= self.max_range) for r in self.ranges):
            raise ValueError("every range must lie in (0, max_range]")

    def to_payload(self) -> dict[str, Any]:
        return {"ranges": list(self.ranges)}


def scan(grid: OccupancyGrid, pose: Pose, max_range: float = DEFAULT_MAX_RANGE) -> LidarScan:
    """One full 360-ray sweep from the pose. Pure function of (grid, pose)."""
    ranges = tuple(
        raycast(grid, (pose.x, pose.y), float(bearing), max_range)
        for bearing in range(SCAN_RAYS)
    )
    return LidarScan(ranges, max_range)


def integrate_scan(
    grid: OccupancyGrid,
    pose: Pose,
    scan_: LidarScan,
) -> list[MapCell]:
    """Fold a scan into the discovered overlay; return only changed cells.

    Every traversed cell becomes seen_free and every hit cell
    seen_occupied. Discovery is monotone: cells never become unknown
    again, and in a static world seen_free never flips to seen_occupied.
    """
    changed: dict[tuple[int, int], MapCell] = {}
    width = grid.width
    overlay = grid.overlay
    for bearing in range(SCAN_RAYS):
        hit, _dist, visited = traverse_ray(
            grid, pose.x, pose.y, float(bearing), scan_.max_range
        )
        for cx, cy in visited:
            idx = cy * width + cx
            if overlay[idx] != SEEN_FREE:
                overlay[idx] = SEEN_FREE
                changed[(cx, cy)] = MapCell(cx, cy, "free")
        if hit is not None:
            idx = hit[1] * width + hit[0]
            if overlay[idx] != SEEN_OCCUPIED:
                overlay[idx] = SEEN_OCCUPIED
                changed[hit] = MapCell(hit[0], hit[1], "occupied")
    return sorted(changed.values(), key=lambda c: (c.cy, c.cx))
