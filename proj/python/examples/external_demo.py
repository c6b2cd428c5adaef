"""Edit a 512x512 image through the external (TorchScript) backend.

Exports a small pair of encoders into --workdir, writes a synthetic input and
a config with backend.kind = "external", then runs the full edit schedule
and writes snapshot frames. The encoders are stand-ins with random weights:
the image encoder is a mean-pooled convolution, and the text encoder maps
color words to the image embedding of a swatch of that color. Swap in real
exported models by pointing backend.text_model / backend.image_model at them.

    python3 python/examples/external_demo.py --workdir /tmp/vexel_demo
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np
import torch

import vexel
from vexel.backends import register_external

COLORS = {
    "red": (0.85, 0.15, 0.1),
    "green": (0.15, 0.7, 0.2),
    "blue": (0.15, 0.3, 0.85),
    "yellow": (0.95, 0.85, 0.1),
    "photo": (0.5, 0.5, 0.5),
}


class ImageEncoder(torch.nn.Module):
    def __init__(self, size: int, dim: int):
        super().__init__()
        self.input_size = size
        self.conv1 = torch.nn.Conv2d(3, 32, 5, stride=2, padding=2)
        self.conv2 = torch.nn.Conv2d(32, dim, 3, stride=2, padding=1)

    def forward(self, x):
        h = torch.tanh(self.conv1(x * 2.0 - 1.0))
        return torch.tanh(self.conv2(h)).mean(dim=(2, 3))


class TextEncoder(torch.nn.Module):
    def __init__(self, words: dict):
        super().__init__()
        self.words = words
        self.dim = next(iter(words.values())).shape[0]

    def forward(self, texts: list[str]):
        out = []
        for t in texts:
            acc = torch.zeros(self.dim)
            n = 0
            for w in t.lower().split():
                if w in self.words:
                    acc = acc + self.words[w]
                    n += 1
            out.append(acc / max(n, 1))
        return torch.stack(out)


def export_models(workdir: Path, size: int, dim: int):
    torch.manual_seed(0)
    image = ImageEncoder(size, dim).eval()
    with torch.no_grad():
        words = {w: image(torch.tensor(c).view(1, 3, 1, 1).expand(1, 3, size, size))[0] for w, c in COLORS.items()}
    torch.jit.script(image).save(str(workdir / "image_encoder.pt"))
    torch.jit.script(TextEncoder(words)).save(str(workdir / "text_encoder.pt"))


def synthetic_input(path: Path, size: int):
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    img = np.empty((size, size, 3))
    img[:] = (0.55, 0.75, 0.95)
    img[yy > 0.7 * size] = (0.35, 0.6, 0.3)
    disk = (xx - 0.45 * size) ** 2 + (yy - 0.4 * size) ** 2 < (0.2 * size) ** 2
    img[disk] = COLORS["red"]
    vexel.write_png(str(path), img)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workdir", default="/tmp/vexel_demo")
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--iterations", type=int, default=150)
    parser.add_argument("--prompt", default="yellow")
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    export_models(work, size=64, dim=32)
    synthetic_input(work / "input.png", args.size)
    config = {
        "input": "input.png",
        "output": "edited.svg",
        "guidance": {"rois": [{"rect": [0, 0, args.size, args.size], "prompt": args.prompt}]},
        "optimizer": {"iterations": args.iterations},
        "backend": {"kind": "external", "text_model": "text_encoder.pt", "image_model": "image_encoder.pt"},
    }
    (work / "config.json").write_text(json.dumps(config, indent=2))

    register_external()
    start = time.time()
    report = vexel.edit(work / "config.json", frames=work / "frames")
    losses = report["losses"]
    frames = sorted((work / "frames").glob("frame_*.png"))
    print(f"iterations: {len(losses)}")
    print(f"loss: first {losses[0]:.4f}, last {losses[-1]:.4f}")
    print(f"frames: {len(frames)} in {work / 'frames'}")
    print(f"elements: {report['document'].element_count}, time: {time.time() - start:.1f} s")


if __name__ == "__main__":
    main()
