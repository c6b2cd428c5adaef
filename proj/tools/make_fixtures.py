"""Regenerates the toy fixtures in fixtures/ (deterministic)."""

import colorsys
from pathlib import Path

from PIL import Image, ImageDraw

SIZE = 64
OUT = Path(__file__).resolve().parent.parent / "fixtures"


def toy() -> Image.Image:
    img = Image.new("RGB", (SIZE, SIZE), (70, 130, 200))
    draw = ImageDraw.Draw(img)
    draw.rectangle([0, 40, SIZE - 1, SIZE - 1], fill=(60, 160, 70))
    draw.ellipse([18, 10, 45, 37], fill=(220, 60, 40))
    return img


def hue_shift(img: Image.Image, turn: float) -> Image.Image:
    out = img.copy()
    px = out.load()
    for y in range(out.height):
        for x in range(out.width):
            r, g, b = (c / 255 for c in px[x, y])
            h, s, v = colorsys.rgb_to_hsv(r, g, b)
            r, g, b = colorsys.hsv_to_rgb((h + turn) % 1.0, s, v)
            px[x, y] = tuple(int(round(c * 255)) for c in (r, g, b))
    return out


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    base = toy()
    base.save(OUT / "toy.png")
    hue_shift(base, 1 / 3).save(OUT / "toy_hue.png")
