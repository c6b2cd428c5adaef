"""External embedding models behind the backend contract.

TorchScriptBackend loads two TorchScript modules:

- text model: ``forward(texts: List[str]) -> Tensor[N, D]``
- image model: ``forward(images: Tensor[N, 3, S, S]) -> Tensor[N, D]`` with
  RGB values in [0, 1]. ``S`` is read from an ``input_size`` attribute on the
  module when present, otherwise from ``backend.input_size``.

image_vjp comes from torch autograd. Call register_external() to make
``backend.kind = "external"`` configs resolve to this adapter.
"""

import numpy as np

from ._core import Backend, BackendError, register_backend_factory


class TorchScriptBackend(Backend):
    def __init__(self, text_model, image_model, input_size=None):
        super().__init__()
        try:
            import torch
        except ImportError as e:
            raise BackendError("the external backend needs PyTorch (pip install torch)") from e
        self._torch = torch
        try:
            self._text = torch.jit.load(str(text_model), map_location="cpu").eval()
            self._image = torch.jit.load(str(image_model), map_location="cpu").eval()
        except Exception as e:  # torch raises a variety of loader errors
            raise BackendError(f"cannot load TorchScript model: {e}") from e
        size = getattr(self._image, "input_size", None) or input_size
        if not size:
            raise BackendError("image model has no input_size attribute and none was configured")
        self._size = int(size)
        self._text_cache = {}
        self._dim = len(self.embed_text("photo"))

    def embed_text(self, text):
        if text not in self._text_cache:
            with self._torch.no_grad():
                out = self._text([text])
            self._text_cache[text] = out[0].double().tolist()
        return self._text_cache[text]

    def _batch(self, image):
        x = self._torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
        return x.permute(2, 0, 1).unsqueeze(0)

    def embed_image(self, image):
        with self._torch.no_grad():
            return self._image(self._batch(image))[0].double().tolist()

    def image_vjp(self, image, upstream):
        x = self._batch(image).requires_grad_(True)
        out = self._image(x)[0]
        u = self._torch.as_tensor(np.asarray(upstream), dtype=out.dtype)
        (grad,) = self._torch.autograd.grad((out * u).sum(), x)
        return grad[0].permute(1, 2, 0).double().numpy()

    def input_size(self):
        return self._size

    def dim(self):
        return self._dim


def register_external():
    """Registers TorchScriptBackend for backend.kind == "external"."""
    register_backend_factory(
        "external",
        lambda cfg: TorchScriptBackend(cfg["text_model"], cfg["image_model"], cfg["input_size"]),
    )
