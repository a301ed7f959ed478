#!/usr/bin/env python3
"""Standalone perceptual-hash reference implementation.

Independent of the engine: pure-Python exact rational arithmetic
(fractions.Fraction) over PIL pixel data. Used to compute the committed
reference hash fixtures and to cross-check the engine's numpy path.

Definition (must match the engine):
  luma  = floor(0.299 R + 0.587 G + 0.114 B + 0.5); grayscale used as-is
  cell (r, c) of a 16x16 grid covers x in [c*W/16, (c+1)*W/16),
  y in [r*H/16, (r+1)*H/16); its mean is the area-weighted average of
  covered pixels (fractional coverage exact)
  bit[r*16+c] = 1 iff mean > median of the 256 means (median = average of
  the two middle values; ties are 0); bits packed MSB-first -> 64 hex

Usage: phash_reference.py IMAGE [IMAGE...]
"""

import math
import sys
from fractions import Fraction

from PIL import Image

GRID = 16


def luma_pixels(image):
    if image.mode in ("L", "I", "I;16"):
        gray = image.convert("L")
        width, height = gray.size
        data = list(gray.getdata())
        return [[Fraction(data[y * width + x]) for x in range(width)]
                for y in range(height)]
    rgb = image.convert("RGB")
    width, height = rgb.size
    data = list(rgb.getdata())
    rows = []
    for y in range(height):
        row = []
        for x in range(width):
            r, g, b = data[y * width + x]
            value = (Fraction(299, 1000) * r + Fraction(587, 1000) * g
                     + Fraction(114, 1000) * b + Fraction(1, 2))
            row.append(Fraction(math.floor(value)))
        rows.append(row)
    return rows


def interval_overlap(lo, hi, px):
    """Length of [lo, hi) overlapping pixel [px, px+1), exact."""
    left = max(lo, Fraction(px))
    right = min(hi, Fraction(px + 1))
    return right - left if right > left else Fraction(0)


def cell_mean(pixels, height, width, row, col):
    y_lo = Fraction(row * height, GRID)
    y_hi = Fraction((row + 1) * height, GRID)
    x_lo = Fraction(col * width, GRID)
    x_hi = Fraction((col + 1) * width, GRID)
    total = Fraction(0)
    for py in range(math.floor(y_lo), min(math.ceil(y_hi), height)):
        wy = interval_overlap(y_lo, y_hi, py)
        if wy == 0:
            continue
        for px in range(math.floor(x_lo), min(math.ceil(x_hi), width)):
            wx = interval_overlap(x_lo, x_hi, px)
            if wx == 0:
                continue
            total += wy * wx * pixels[py][px]
    area = (y_hi - y_lo) * (x_hi - x_lo)
    return total / area


def reference_hash(path):
    image = Image.open(path)
    image.load()
    width, height = image.size
    assert width >= GRID and height >= GRID, "image too small"
    pixels = luma_pixels(image)
    means = [cell_mean(pixels, height, width, r, c)
             for r in range(GRID) for c in range(GRID)]
    ordered = sorted(means)
    median = (ordered[127] + ordered[128]) / 2
    bits = 0
    for mean in means:
        bits = (bits << 1) | (1 if mean > median else 0)
    return bits.to_bytes(32, "big").hex()


def main(argv):
    for path in argv[1:]:
        print(f"{reference_hash(path)}  {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
