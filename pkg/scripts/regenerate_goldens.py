#!/usr/bin/env python3
"""Regenerate the golden camera frames under tests/golden/.

Run only when the renderer's contract deliberately changes; the golden
tests exist to catch accidental drift, so regeneration must be a
conscious act.
"""

from pathlib import Path

from ozbench.simulator import render_frame
from ozbench.world import Pose, load_world

REPO = Path(__file__).resolve().parent.parent
GOLDEN = REPO / "tests" / "golden"

FIXTURES = {
    # name -> (world file, pose)
    "room_corner": ("worlds/room_6x4.json", Pose(1.05, 1.05, 0.0)),
    "pillars_ahead": ("worlds/pillars_6x6.json", Pose(3.05, 1.05, 90.0)),
    "corridor_east": ("worlds/corridor_8m.json", Pose(0.65, 0.65, 0.0)),
}


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for name, (world_file, pose) in FIXTURES.items():
        grid, _start = load_world(REPO / world_file)
        frame = render_frame(grid, pose)
        out = GOLDEN / f"{name}.pgm"
        out.write_bytes(frame)
        print(f"{out} ({len(frame)} bytes)")


if __name__ == "__main__":
    main()
