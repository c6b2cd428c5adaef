import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import vexel

FIXTURES = Path(__file__).resolve().parents[2] / "fixtures"


def toy_config(tmp_path, **optimizer):
    cfg = json.loads((FIXTURES / "toy_edit.json").read_text())
    cfg["input"] = str(FIXTURES / "toy.png")
    cfg["backend"]["text_from_image"] = {
        "a hue-shifted toy": str(FIXTURES / "toy_hue.png"),
        "photo": str(FIXTURES / "toy.png"),
    }
    cfg["optimizer"].update(optimizer)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return vexel.Config.load(str(path))


def test_vectorize_render_and_svg_round_trip():
    image = vexel.read_png(str(FIXTURES / "toy.png"))
    assert image.shape == (64, 64, 3)
    doc = vexel.vectorize(image, seed=2)
    assert len(doc.rounds) == 2
    assert [r.precision for r in doc.rounds] == [10, 30]
    out = vexel.render(doc)
    assert out.shape == image.shape
    assert 10 * np.log10(1 / np.mean((out - image) ** 2)) > 25
    back = vexel.VectorDocument.from_svg(doc.to_svg())
    assert back.to_svg() == doc.to_svg()
    assert vexel.render(doc, size=(32, 16)).shape == (16, 32, 3)


def test_document_construction_and_params():
    doc = vexel.VectorDocument(16, 16)
    r = vexel.Round()
    r.precision = 4
    square = np.array([[2, 2], [6, 2], [10, 2], [14, 2], [14, 8], [14, 14], [8, 14], [2, 14], [2, 8]], float)
    r.elements = [vexel.PathElement(square, (0.2, 0.4, 0.6, 1.0), 0)]
    doc.rounds = [r]
    p = vexel.flatten_params(doc)
    assert p.shape == (9 * 2 + 4,)
    moved = vexel.apply_params(doc, p + 0.5)
    assert moved.rounds[0].elements[0].fill == (0.7, 0.9, 1.0, 1.0)
    with pytest.raises(vexel.Error, match="expected 22 values"):
        vexel.apply_params(doc, p[:3])
    with pytest.raises(vexel.Error):
        vexel.PathElement(square[:4], (0, 0, 0, 1), 1)


def test_render_backward_matches_finite_differences():
    image = vexel.read_png(str(FIXTURES / "toy.png"))
    doc = vexel.vectorize(image)
    weights = np.random.default_rng(0).uniform(-1, 1, image.shape)
    grad = vexel.render_backward(doc, weights)
    base = vexel.flatten_params(doc)
    rng = np.random.default_rng(1)
    for i in rng.choice(len(base), 10, replace=False):
        step = np.zeros_like(base)
        step[i] = 1e-3
        plus = np.sum(vexel.render(vexel.apply_params(doc, base + step)) * weights)
        minus = np.sum(vexel.render(vexel.apply_params(doc, base - step)) * weights)
        fd = (plus - minus) / 2e-3
        assert abs(fd - grad[i]) <= 1e-2 * max(1.0, abs(fd))


def test_directional_loss_on_rigged_embeddings():
    m = vexel.MockBackend(seed=3, dim=16, input_size=8)
    rng = np.random.default_rng(0)
    gen, src = rng.uniform(size=(8, 8, 3)), rng.uniform(size=(8, 8, 3))
    delta = np.array(m.embed_image(gen)) - np.array(m.embed_image(src))
    ref = np.array(m.embed_text("photo"))
    m.register_text("towards", list(ref + delta))
    m.register_text("away", list(ref - delta))
    loss, grad = vexel.directional_loss(m, "towards", "photo", gen, src)
    assert loss == pytest.approx(0.0, abs=1e-9)
    assert grad.shape == gen.shape
    assert vexel.directional_loss(m, "away", "photo", gen, src)[0] == pytest.approx(2.0)
    assert vexel.patch_side((0, 0, 500, 300)) == 400
    assert vexel.patch_side((0, 0, 512, 512)) == 410


def test_optimize_with_mock_backend_is_reproducible(tmp_path):
    config = toy_config(tmp_path, iterations=6, snapshot_every=3)
    backend = vexel.make_backend(config)
    image = vexel.read_png(config.input)
    doc = vexel.vectorize(image, config)
    seen = []
    a = vexel.optimize(doc, image, config, backend, lambda it, loss, snap: seen.append((it, snap is not None)))
    b = vexel.optimize(doc, image, config, backend)
    assert len(a["losses"]) == 6
    assert seen == [(1, False), (2, False), (3, True), (4, False), (5, False), (6, True)]
    assert [s[0] for s in a["snapshots"]] == [0, 3, 6]
    assert a["document"].to_svg() == b["document"].to_svg()
    assert a["history"][0]["terms"][0]["kind"] == "roi"


class NumpyBackend(vexel.Backend):
    """Linear embedder written in Python, mean-pooled so it is shift invariant."""

    def __init__(self):
        super().__init__()
        self.w = np.random.default_rng(5).normal(size=(3, 4))

    def embed_text(self, text):
        return list(np.random.default_rng(sum(map(ord, text))).normal(size=4))

    def embed_image(self, image):
        return list(image.reshape(-1, 3).mean(axis=0) @ self.w)

    def image_vjp(self, image, upstream):
        g = (self.w @ np.asarray(upstream)) / (image.shape[0] * image.shape[1])
        return np.broadcast_to(g, image.shape).copy()

    def input_size(self):
        return 8

    def dim(self):
        return 4


def test_python_backend_drives_the_optimizer(tmp_path):
    # With a shift-invariant embedder the patch terms are optimizable and the
    # toy schedule clears the 50% smoothed-descent bar.
    config = toy_config(tmp_path)
    image = vexel.read_png(config.input)
    doc = vexel.vectorize(image, config)
    report = vexel.optimize(doc, image, config, NumpyBackend())
    losses = report["losses"]
    assert len(losses) == 150
    assert losses[-5:].mean() <= 0.5 * losses[:5].mean()

    vexel.register_backend_factory("numpy-test", lambda cfg: NumpyBackend())
    cfg = json.loads(config.to_json())
    cfg["backend"] = {"kind": "numpy-test"}
    backend = vexel.make_backend(vexel.Config.from_json(json.dumps(cfg)))
    assert backend.dim() == 4


def test_python_backend_errors_surface_as_backend_error(tmp_path):
    class Broken(NumpyBackend):
        def embed_image(self, image):
            raise ValueError("no weights")

    config = toy_config(tmp_path, iterations=2)
    image = vexel.read_png(config.input)
    with pytest.raises(vexel.BackendError, match="no weights"):
        vexel.optimize(vexel.vectorize(image), image, config, Broken())


def test_edit_writes_document_and_frames(tmp_path):
    config = toy_config(tmp_path, iterations=4, snapshot_every=2)
    report = vexel.edit(config, output=tmp_path / "out.svg", frames=tmp_path / "frames")
    assert (tmp_path / "out.svg").exists()
    assert sorted(p.name for p in (tmp_path / "frames").iterdir()) == [
        "frame_0000.png",
        "frame_0002.png",
        "frame_0004.png",
    ]
    assert vexel.read_svg(report["output"]).to_svg() == report["document"].to_svg()


def test_config_errors():
    with pytest.raises(vexel.Error, match="unknown"):
        vexel.Config.from_json('{"optimizer": {"iters": 3}}')
    with pytest.raises(vexel.Error):
        vexel.read_png("/nonexistent.png")
    with pytest.raises(vexel.BackendError):
        vexel.make_backend(vexel.Config.from_json('{"backend": {"kind": "nope"}}'))


torch = pytest.importorskip("torch")


def export_models(tmp_path, size=8, dim=6):
    class Image(torch.nn.Module):
        def __init__(self):
            super().__init__()
            self.input_size = size
            self.conv = torch.nn.Conv2d(3, dim, 3)

        def forward(self, x):
            return torch.tanh(self.conv(x)).mean(dim=(2, 3))

    class Text(torch.nn.Module):
        def __init__(self):
            super().__init__()
            self.table = torch.nn.Parameter(torch.randn(256, dim))

        def forward(self, texts: list[str]):
            out = []
            for t in texts:
                acc = torch.zeros(self.table.shape[1])
                for ch in t:
                    acc = acc + self.table[ord(ch) % 256]
                out.append(acc)
            return torch.stack(out)

    torch.manual_seed(0)
    torch.jit.script(Image()).save(str(tmp_path / "image.pt"))
    torch.jit.script(Text()).save(str(tmp_path / "text.pt"))
    return tmp_path / "text.pt", tmp_path / "image.pt"


def test_torchscript_backend_contract(tmp_path):
    from vexel.backends import TorchScriptBackend, register_external

    text, image = export_models(tmp_path)
    b = TorchScriptBackend(text, image)
    assert b.input_size() == 8 and b.dim() == 6
    x = np.random.default_rng(0).uniform(size=(8, 8, 3))
    u = np.random.default_rng(1).normal(size=6)
    g = b.image_vjp(x, u)
    for idx in [(0, 0, 0), (3, 4, 1), (7, 2, 2)]:
        d = np.zeros_like(x)
        d[idx] = 1e-3
        fd = (np.dot(b.embed_image(x + d), u) - np.dot(b.embed_image(x - d), u)) / 2e-3
        assert fd == pytest.approx(g[idx], rel=2e-2, abs=1e-4)

    register_external()
    cfg = vexel.Config.from_json(json.dumps({"backend": {"kind": "external", "text_model": str(text),
                                                         "image_model": str(image)}}))
    assert vexel.make_backend(cfg).dim() == 6
    missing = vexel.Config.from_json('{"backend": {"kind": "external", "text_model": "a.pt", "image_model": "b.pt"}}')
    with pytest.raises(vexel.BackendError, match="not found"):
        vexel.make_backend(missing)


def test_module_cli_exit_codes(tmp_path):
    cfg = {"input": str(FIXTURES / "toy.png"), "output": str(tmp_path / "o.svg"),
           "guidance": {"rois": [{"rect": [0, 0, 64, 64], "prompt": "x"}]},
           "backend": {"kind": "external", "text_model": "missing.pt", "image_model": "missing.pt"}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    run = subprocess.run([sys.executable, "-m", "vexel", "edit", "--config", str(path)], capture_output=True, text=True)
    assert run.returncode == 3
    assert "missing.pt" in run.stderr
