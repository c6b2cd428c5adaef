"""Layered vector editing of raster images driven by embedding-space losses."""

from pathlib import Path

from ._core import (
    Backend,
    BackendError,
    Config,
    Error,
    MockBackend,
    PathElement,
    Round,
    VectorDocument,
    apply_params,
    clip_score,
    directional_loss,
    flatten_params,
    make_backend,
    optimize,
    patch_side,
    read_png,
    read_svg,
    register_backend_factory,
    render,
    render_backward,
    set_threads,
    total_loss,
    vectorize,
    write_png,
    write_svg,
)

__all__ = [
    "Backend",
    "BackendError",
    "Config",
    "Error",
    "MockBackend",
    "PathElement",
    "Round",
    "VectorDocument",
    "apply_params",
    "clip_score",
    "directional_loss",
    "edit",
    "flatten_params",
    "make_backend",
    "optimize",
    "patch_side",
    "read_png",
    "read_svg",
    "register_backend_factory",
    "render",
    "render_backward",
    "set_threads",
    "total_loss",
    "vectorize",
    "write_png",
    "write_svg",
]


def edit(config, output=None, frames=None, svg=None, backend=None, progress=None):
    """Vectorize (or load `svg`), optimize against the configured prompts and
    write the result. Mirrors the `vexel edit` command, but any registered
    backend kind can be used, including the TorchScript adapter.

    Returns the optimize() report with the output path added.
    """
    if not isinstance(config, Config):
        config = Config.load(str(config))
    output = str(output or config.output)
    if not config.input or not output:
        raise Error("edit needs an input image and an output path")
    if backend is None:
        backend = make_backend(config)
    image = read_png(config.input)
    doc = read_svg(str(svg)) if svg else vectorize(image, config)

    frame_dir = Path(frames) if frames else None
    if frame_dir:
        frame_dir.mkdir(parents=True, exist_ok=True)
        write_png(str(frame_dir / "frame_0000.png"), render(doc))

    def on_step(iteration, loss, snapshot):
        if frame_dir is not None and snapshot is not None:
            write_png(str(frame_dir / f"frame_{iteration:04d}.png"), snapshot)
        if progress is not None:
            progress(iteration, loss, snapshot)

    report = optimize(doc, image, config, backend, on_step)
    write_svg(output, report["document"])
    report["output"] = output
    return report
