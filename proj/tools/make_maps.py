#!/usr/bin/env python3
"""Regenerates the committed occupancy maps under data/maps/."""

import argparse
from pathlib import Path


def blank(width_m, height_m, res):
    w, h = round(width_m / res), round(height_m / res)
    return [[False] * w for _ in range(h)], w, h


def fill(cells, res, x0, y0, x1, y1):
    for y, row in enumerate(cells):
        cy = (y + 0.5) * res
        if not (y0 <= cy <= y1):
            continue
        for x in range(len(row)):
            cx = (x + 0.5) * res
            if x0 <= cx <= x1:
                row[x] = True


def carve(cells, res, x0, y0, x1, y1):
    for y, row in enumerate(cells):
        cy = (y + 0.5) * res
        if not (y0 <= cy <= y1):
            continue
        for x in range(len(row)):
            cx = (x + 0.5) * res
            if x0 <= cx <= x1:
                row[x] = False


def border(cells, res, width_m, height_m, t=0.2):
    fill(cells, res, 0, 0, width_m, t)
    fill(cells, res, 0, height_m - t, width_m, height_m)
    fill(cells, res, 0, 0, t, height_m)
    fill(cells, res, width_m - t, 0, width_m, height_m)


def write(path, cells, w, h, res):
    with open(path, "w") as f:
        f.write(f"width {w}\nheight {h}\nresolution {res:g}\n")
        for row in reversed(cells):
            f.write("".join("#" if c else "." for c in row) + "\n")


def warehouse(res=0.1):
    W, H = 32.0, 20.0
    cells, w, h = blank(W, H, res)
    border(cells, res, W, H)
    # Shelf block between the halls; passages are carved out of it.
    fill(cells, res, 10.5, 0.0, 21.5, H)
    carve(cells, res, 10.5, 17.3, 21.5, 18.9)   # top route
    carve(cells, res, 10.5, 15.3, 21.5, 16.7)   # corridor A
    carve(cells, res, 10.5, 7.75, 21.5, 12.25)  # central passage B
    fill(cells, res, 10.5, 7.75, 11.5, 9.45)    # gate at the entrance of B
    fill(cells, res, 10.5, 10.55, 11.5, 12.25)
    fill(cells, res, 3.5, 6.3, 10.5, 9.45)      # entry alley in front of the gate
    fill(cells, res, 3.5, 10.55, 10.5, 11.25)
    carve(cells, res, 10.5, 4.3, 21.5, 5.7)     # corridor C
    carve(cells, res, 10.5, 2.5, 21.5, 3.9)     # bottom route (D)
    return cells, w, h, res


def room(res=0.05):
    W, H = 10.0, 8.0
    cells, w, h = blank(W, H, res)
    border(cells, res, W, H)
    fill(cells, res, 4.9, 0.0, 5.1, H)
    carve(cells, res, 4.9, 3.4, 5.1, 4.6)       # single doorway
    return cells, w, h, res


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parent.parent / "data" / "maps", type=Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, build in (("warehouse", warehouse), ("room", room)):
        cells, w, h, res = build()
        write(args.out / f"{name}.map", cells, w, h, res)
        print(f"{name}.map {w}x{h} @ {res} m")


if __name__ == "__main__":
    main()
