#!/usr/bin/env python3
"""Generate the synthetic riverine flood grids shipped in data/.

Three meandering rivers cross an 80x50 grid. A cell's flood depth grows
with ln(return period) once the return period passes an onset that rises
with distance from the nearest channel. Depth per cell is non-decreasing
in return period by construction.

Usage: python3 scripts/make_synthetic_grid.py [out_dir]
"""
import math
import random
import sys
from pathlib import Path

WIDTH, HEIGHT = 80, 50
RPS = [2, 5, 10, 25, 50, 100, 250, 500, 1000]
SEED = 20200101


def river_cells(rng):
    cells = set()
    for base_y, amp, freq, phase in [(10, 4.0, 0.09, 0.3), (26, 6.0, 0.06, 1.7), (41, 3.0, 0.12, 2.9)]:
        for x in range(WIDTH):
            y = base_y + amp * math.sin(freq * x + phase) + rng.uniform(-0.6, 0.6)
            cells.add((x, int(round(y))))
    return cells


def depth(rp, dist, roughness):
    onset = 2.0 * math.exp(0.55 * dist)
    if dist > 10 or rp <= onset:
        return 0.0
    peak = 6.0 * math.exp(-dist / 3.0) * roughness
    return peak * math.log(rp / onset) / math.log(1000.0 / onset) if onset < 1000 else 0.0


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    rivers = river_cells(rng)
    dist = [[min(max(abs(x - rx), abs(y - ry)) for rx, ry in rivers) for x in range(WIDTH)] for y in range(HEIGHT)]
    rough = [[rng.uniform(0.8, 1.2) for _ in range(WIDTH)] for _ in range(HEIGHT)]

    lines = [f"{WIDTH} {HEIGHT} {len(RPS)}", " ".join(str(r) for r in RPS)]
    for rp in RPS:
        for y in range(HEIGHT):
            lines.append(" ".join(f"{depth(rp, dist[y][x], rough[y][x]):.3f}" for x in range(WIDTH)))
    (out / "flood_rcp85.txt").write_text("\n".join(lines) + "\n")

    zero = [f"{WIDTH} {HEIGHT} {len(RPS)}", " ".join(str(r) for r in RPS)]
    zero += [" ".join(["0"] * WIDTH) for _ in RPS for _ in range(HEIGHT)]
    (out / "flood_zero.txt").write_text("\n".join(zero) + "\n")


if __name__ == "__main__":
    main()
