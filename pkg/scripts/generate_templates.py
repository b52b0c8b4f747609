#!/usr/bin/env python3
"""Rasterize the 26 lowercase letter templates shipped with the package.

Each template is a 64x64 grayscale PGM: one letter of an oblique monospace
face, rendered with 4x supersampling for smooth edges, intensity-normalized
to peak at 1.0, and shifted so its intensity centroid sits exactly at the
canvas center (31.5, 31.5).  Centering at the canvas center keeps rotations
about the log-polar origin from dragging letters off-center.

Run from the repository root:

    python3 scripts/generate_templates.py
"""

import os
import string
import sys

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy import ndimage

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
from scenefactor import netpbm  # noqa: E402

# Font size is chosen so that every centered glyph, including the tall
# ascender/descender outliers (j, i, f), keeps all of its ink within 11.5 px
# of the canvas center.  Benchmark scenes shift letters by up to +/-19 px,
# so this guarantees no glyph pixel ever reaches the image border.
CANVAS = 64
SUPERSAMPLE = 4
FONT_SIZE = 20
MAX_HALF_EXTENT = 11.5
OUT_DIR = os.path.join(
    os.path.dirname(__file__), "..", "src", "scenefactor", "assets", "templates"
)


def find_font() -> str:
    import matplotlib

    path = os.path.join(
        os.path.dirname(matplotlib.__file__),
        "mpl-data",
        "fonts",
        "ttf",
        "DejaVuSansMono-Oblique.ttf",
    )
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return path


def rasterize(letter: str, font: ImageFont.FreeTypeFont) -> np.ndarray:
    big = CANVAS * SUPERSAMPLE
    img = Image.new("L", (big, big), 0)
    draw = ImageDraw.Draw(img)
    draw.text((big // 2, big // 2), letter, fill=255, font=font, anchor="mm")
    small = img.resize((CANVAS, CANVAS), Image.BOX)
    pixels = np.asarray(small, dtype=np.float64).T / 255.0  # (x, y) order
    if pixels.max() <= 0:
        raise RuntimeError(f"letter {letter!r} rendered empty")
    pixels /= pixels.max()

    # move the intensity centroid onto the canvas center
    xs, ys = np.meshgrid(np.arange(CANVAS), np.arange(CANVAS), indexing="ij")
    mass = pixels.sum()
    cx = (xs * pixels).sum() / mass
    cy = (ys * pixels).sum() / mass
    target = (CANVAS - 1) / 2.0
    centered = ndimage.shift(
        pixels, (target - cx, target - cy), order=1, mode="constant", cval=0.0
    )
    centered = np.clip(centered, 0.0, 1.0)
    return centered / centered.max()


def main() -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    font = ImageFont.truetype(find_font(), FONT_SIZE * SUPERSAMPLE)
    for letter in string.ascii_lowercase:
        pixels = rasterize(letter, font)
        quantized = np.round(pixels * 255) / 255.0
        nonzero = np.argwhere(quantized > 0)
        center = (CANVAS - 1) / 2.0
        half_extent = max(center - nonzero.min(), nonzero.max() - center)
        if half_extent > MAX_HALF_EXTENT:
            raise RuntimeError(
                f"letter {letter!r} extends {half_extent:.1f} px from center"
            )
        out = os.path.join(OUT_DIR, f"{letter}.pgm")
        netpbm.write_netpbm(out, pixels)
        print(f"{out}: mass={pixels.sum():.1f} half_extent={half_extent:.1f}")


if __name__ == "__main__":
    main()
