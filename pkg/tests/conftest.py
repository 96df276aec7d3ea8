import json
import math
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent

RULES_PATH = REPO_ROOT / "rules" / "default.json"
WORLDS_DIR = REPO_ROOT / "worlds"


def world_rows(width, height, obstacles=()):
    """Rows for a closed rectangular world, listed top to bottom."""
    rows = []
    for cy in reversed(range(height)):
        row = []
        for cx in range(width):
            border = cx in (0, width - 1) or cy in (0, height - 1)
            row.append("#" if border or (cx, cy) in obstacles else ".")
        rows.append("".join(row))
    return rows


def world_text(width, height, start=(1.05, 1.05, 0.0), resolution=0.1, obstacles=()):
    return json.dumps(
        {
            "resolution": resolution,
            "start": {"x": start[0], "y": start[1], "theta": start[2]},
            "rows": world_rows(width, height, obstacles),
        }
    )


@pytest.fixture
def write_world(tmp_path):
    def _write(name="w.json", **kwargs):
        path = tmp_path / name
        path.write_text(world_text(**kwargs))
        return path

    return _write


@pytest.fixture
def rules_path():
    return RULES_PATH


@pytest.fixture
def room_world():
    return WORLDS_DIR / "room_6x4.json"


@pytest.fixture
def pillars_world():
    return WORLDS_DIR / "pillars_6x6.json"


class FakeTransport:
    """Collects frames a session delivers to one attached role."""

    def __init__(self):
        self.raw = []

    def send_text(self, text):
        self.raw.append(text)

    @property
    def frames(self):
        from ozbench.protocol import decode

        return [decode(t) for t in self.raw]


@pytest.fixture
def fake_transport():
    return FakeTransport


# --- independent oracles (kept free of the implementations they check) -----


def marching_raycast(grid, ox, oy, bearing_deg, max_range=8.0, step=1e-4):
    """Brute-force ray march: sample every `step` meters, report the first
    sample that lands in an occupied cell. Vectorized for speed."""
    import numpy as np

    occ = np.frombuffer(grid.occ, dtype=np.uint8).reshape(grid.height, grid.width)
    rad = math.radians(bearing_deg)
    t = np.arange(step, max_range + step / 2, step)
    xs = ox + t * math.cos(rad)
    ys = oy + t * math.sin(rad)
    cx = np.floor(xs / grid.resolution).astype(np.int64)
    cy = np.floor(ys / grid.resolution).astype(np.int64)
    inside = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
    hit = np.zeros(len(t), dtype=bool)
    hit[inside] = occ[cy[inside], cx[inside]] == 1
    idx = int(np.argmax(hit)) if hit.any() else -1
    if idx < 0:
        return max_range
    return min(float(t[idx]), max_range)


def circle_overlaps_cell(x, y, radius, cx, cy, resolution):
    """Independent disc-vs-cell test: distance from the disc center to the
    cell rectangle is strictly less than the radius."""
    x0, x1 = cx * resolution, (cx + 1) * resolution
    y0, y1 = cy * resolution, (cy + 1) * resolution
    nx = min(max(x, x0), x1)
    ny = min(max(y, y0), y1)
    return (x - nx) ** 2 + (y - ny) ** 2 < radius * radius


def disc_free(grid, x, y, radius):
    """True when the robot disc does not overlap any occupied cell.

    Only cells whose rectangle could possibly reach the disc are tested;
    the overlap predicate itself is the independent circle-vs-rectangle
    distance check above.
    """
    res = grid.resolution
    cx_lo = max(0, int(math.floor((x - radius) / res)) - 1)
    cx_hi = min(grid.width - 1, int(math.floor((x + radius) / res)) + 1)
    cy_lo = max(0, int(math.floor((y - radius) / res)) - 1)
    cy_hi = min(grid.height - 1, int(math.floor((y + radius) / res)) + 1)
    for cy in range(cy_lo, cy_hi + 1):
        for cx in range(cx_lo, cx_hi + 1):
            if grid.occupied(cx, cy) and circle_overlaps_cell(x, y, radius, cx, cy, res):
                return False
    return True


def marching_max_travel(grid, start_x, start_y, heading_deg, limit, radius, step=1e-4):
    """Fine-step translate oracle: the largest distance along the heading
    the disc can travel before overlapping an occupied cell."""
    rad = math.radians(heading_deg)
    hx, hy = math.cos(rad), math.sin(rad)
    n = int(limit / step)
    traveled = 0.0
    for k in range(1, n + 1):
        t = k * step
        if not disc_free(grid, start_x + t * hx, start_y + t * hy, radius):
            return traveled
        traveled = t
    return min(limit, traveled if n else 0.0)
