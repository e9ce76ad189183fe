"""Regenerate the shipped replay fixtures.

Run from the repository root: python scenarios/make_fixtures.py
"""

import math
from pathlib import Path

import numpy as np

from socsim.harness import write_ground_truth, write_trace
from socsim.mobility import TraceFrame

FIXTURES = Path(__file__).parent / "fixtures"


def static_groups(centers_and_sizes, duration, dt, spacing=0.58):
    """Static agents arranged in rings around group centers, facing the
    center; ground truth labels each ring as one situation."""
    ids, pos, ang, blocks = [], [], [], []
    aid = 1
    for (cx, cy), size in centers_and_sizes:
        block = []
        for k in range(size):
            theta = 2 * math.pi * k / size
            x, y = cx + spacing * math.cos(theta), cy + spacing * math.sin(theta)
            ids.append(aid)
            block.append(aid)
            pos.append((x, y))
            ang.append(math.atan2(cy - y, cx - x) % (2 * math.pi))
            aid += 1
        blocks.append(frozenset(block))
    frames, truth = [], []
    for step in range(int(round(duration / dt)) + 1):
        frames.append(TraceFrame(step * dt, tuple(ids), np.array(pos), np.array(ang)))
        truth.append(tuple(blocks))
    return frames, truth


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)

    frames, truth = static_groups(
        [((10.0, 10.0), 3), ((40.0, 10.0), 3), ((25.0, 43.0), 3)], duration=115.0, dt=0.5
    )
    write_trace(FIXTURES / "triads_trace.csv", frames)
    write_ground_truth(FIXTURES / "triads_truth.csv", frames, truth)

    frames, truth = static_groups([((25.0, 25.0), 4)], duration=45.0, dt=0.5, spacing=0.7)
    write_trace(FIXTURES / "quad_trace.csv", frames)
    write_ground_truth(FIXTURES / "quad_truth.csv", frames, truth)

    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
