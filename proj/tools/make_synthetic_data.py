#!/usr/bin/env python3
"""Regenerates the synthetic maps and bus routes under data/.

grid_2km.wkt      11 x 11 street grid, 200 m blocks, one LINESTRING per street.
routes/routeN.wkt 8 overlapping bus routes along the grid streets, one segment
                  per street leg (long legs split), stops every 50 m.
sample_paths.csv  small path export with a highway column, including tracks.
"""
import os
import sys

BLOCK = 200.0
N = 11
STOP_SPACING = 50.0
MAX_SEGMENT = 16

# Routes as corner sequences in grid coordinates (column, row).
ROUTES = [
    [(0, 5), (10, 5)],
    [(5, 0), (5, 10)],
    [(0, 0), (5, 0), (5, 5), (10, 5), (10, 10)],
    [(0, 10), (3, 10), (3, 2), (8, 2), (8, 8)],
    [(1, 1), (1, 5), (6, 5), (6, 9), (9, 9)],
    [(10, 0), (10, 3), (2, 3), (2, 7), (7, 7)],
    [(4, 10), (4, 6), (9, 6), (9, 1)],
    [(0, 8), (5, 8), (5, 3), (10, 3)],
]


def fmt(v):
    return f"{v:.10g}"


def linestring(points):
    return "LINESTRING (" + ", ".join(f"{fmt(x)} {fmt(y)}" for x, y in points) + ")"


def grid_lines():
    lines = []
    for r in range(N):
        lines.append([(c * BLOCK, r * BLOCK) for c in range(N)])
    for c in range(N):
        lines.append([(c * BLOCK, r * BLOCK) for r in range(N)])
    return lines


def leg(a, b):
    (c0, r0), (c1, r1) = a, b
    assert c0 == c1 or r0 == r1, "legs follow streets"
    x0, y0, x1, y1 = c0 * BLOCK, r0 * BLOCK, c1 * BLOCK, r1 * BLOCK
    length = abs(x1 - x0) + abs(y1 - y0)
    steps = int(round(length / STOP_SPACING))
    return [(x0 + (x1 - x0) * i / steps, y0 + (y1 - y0) * i / steps) for i in range(steps + 1)]


def main(root):
    maps = os.path.join(root, "maps")
    routes = os.path.join(root, "routes")
    os.makedirs(maps, exist_ok=True)
    os.makedirs(routes, exist_ok=True)

    with open(os.path.join(maps, "grid_2km.wkt"), "w") as f:
        for line in grid_lines():
            f.write(linestring(line) + "\n")

    for i, corners in enumerate(ROUTES, start=1):
        with open(os.path.join(routes, f"route{i}.wkt"), "w") as f:
            f.write(f"POINT ({fmt(corners[0][0] * BLOCK)} {fmt(corners[0][1] * BLOCK)})\n")
            for a, b in zip(corners, corners[1:]):
                pts = leg(a, b)
                # Long legs are cut into pieces of at most MAX_SEGMENT stops.
                for start in range(0, len(pts) - 1, MAX_SEGMENT):
                    f.write(linestring(pts[start:start + MAX_SEGMENT + 1]) + "\n")

    with open(os.path.join(maps, "sample_paths.csv"), "w") as f:
        f.write("osm_id,highway,WKT\n")
        rows = [
            (101, "residential", [(0, 0), (200, 0), (400, 0)]),
            (102, "residential", [(400, 0), (400, 200)]),
            (103, "track", [(400, 200), (600, 350)]),
            (104, "primary", [(0, 0), (0, 200), (0, 400)]),
            (105, "track", [(0, 400), (150, 500)]),
            (106, "footway", [(0, 200), (200, 200), (400, 200)]),
        ]
        for osm_id, cls, pts in rows:
            f.write(f'{osm_id},{cls},"{linestring(pts)}"\n')


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data"))
