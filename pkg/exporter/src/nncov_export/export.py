"""Capture per-layer activations from a PyTorch model into a trace directory.

Activations are observed with forward hooks on selected modules, by
default every activation-function module (what the next layer actually
consumes). Feature-map outputs (4-D and higher) are reduced to one value
per channel (mean or max over the spatial dimensions) so every layer
lands as a flat N x m float32 matrix. The output directory follows the
nncov trace format exactly; that on-disk contract is the only coupling
to the analysis toolkit, which this package never imports.

Exports are deterministic: fixed weights plus a fixed input stream give
byte-identical directories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

__all__ = ["ExportSpec", "ExportError", "export", "resolve_model", "select_modules"]

ACTIVATION_TYPES = (
    nn.ReLU,
    nn.ReLU6,
    nn.LeakyReLU,
    nn.ELU,
    nn.GELU,
    nn.SiLU,
    nn.Hardswish,
    nn.Hardtanh,
    nn.Tanh,
    nn.Sigmoid,
)


class ExportError(RuntimeError):
    pass


@dataclass
class ExportSpec:
    model: str | nn.Module
    out: str | Path
    layers: str = "post-activation"  # or comma-separated module names
    n: int = 16
    batch: int = 64
    reduce: str = "mean"  # spatial reduction for feature maps: mean|max
    input_shape: tuple[int, ...] = (3, 32, 32)
    dataset: str = "random"  # "random" or path to an .npz with inputs[, labels]
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one input, got n={self.n}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.reduce not in ("mean", "max"):
            raise ValueError(f"reduce must be mean or max, got {self.reduce!r}")


def _demo_mlp(input_shape) -> nn.Module:
    width = int(np.prod(input_shape))
    return nn.Sequential(
        nn.Flatten(),
        nn.Linear(width, 16),
        nn.ReLU(),
        nn.Linear(16, 8),
        nn.ReLU(),
        nn.Linear(8, 4),
    )


def _demo_conv(input_shape) -> nn.Module:
    channels = input_shape[0]
    return nn.Sequential(
        nn.Conv2d(channels, 4, kernel_size=3, padding=1),
        nn.ReLU(),
        nn.Conv2d(4, 8, kernel_size=3, padding=1),
        nn.ReLU(),
        nn.AdaptiveAvgPool2d(1),
        nn.Flatten(),
        nn.Linear(8, 4),
    )


def resolve_model(spec: ExportSpec) -> tuple[nn.Module, str]:
    """Build the model named by the spec (weights seeded, never downloaded)."""
    if isinstance(spec.model, nn.Module):
        return spec.model, spec.model.__class__.__name__
    torch.manual_seed(spec.seed)
    if spec.model == "demo-mlp":
        return _demo_mlp(spec.input_shape), spec.model
    if spec.model == "demo-conv":
        return _demo_conv(spec.input_shape), spec.model
    try:
        from torchvision import models as tv_models
    except ImportError as exc:
        raise ExportError(
            f"model {spec.model!r} needs torchvision, which is not installed"
        ) from exc
    try:
        model = tv_models.get_model(spec.model, weights=None)
    except ValueError as exc:
        raise ExportError(f"unknown model {spec.model!r}: {exc}") from exc
    return model, spec.model


def select_modules(model: nn.Module, layers: str) -> list[tuple[str, nn.Module]]:
    """Pick the modules to hook: all activation modules, or the named ones."""
    named = dict(model.named_modules())
    if layers == "post-activation":
        selected = [
            (name, module)
            for name, module in model.named_modules()
            if isinstance(module, ACTIVATION_TYPES)
        ]
        if not selected:
            raise ExportError("model has no activation modules to hook")
        return selected
    selected = []
    for name in layers.split(","):
        name = name.strip()
        if name not in named:
            raise ExportError(f"unknown layer name {name!r}")
        selected.append((name, named[name]))
    return selected


def _make_inputs(spec: ExportSpec) -> tuple[torch.Tensor, np.ndarray | None]:
    if spec.dataset == "random":
        generator = torch.Generator().manual_seed(spec.seed)
        inputs = torch.randn((spec.n, *spec.input_shape), generator=generator)
        return inputs, None
    archive = np.load(spec.dataset)
    if "inputs" not in archive:
        raise ExportError(f"{spec.dataset} has no 'inputs' array")
    inputs = np.asarray(archive["inputs"], dtype=np.float32)[: spec.n]
    if inputs.shape[0] < spec.n:
        raise ExportError(f"dataset holds {inputs.shape[0]} inputs, need {spec.n}")
    labels = None
    if "labels" in archive:
        labels = np.asarray(archive["labels"], dtype=np.int64)[: spec.n]
    return torch.from_numpy(inputs), labels


def _reduce_batch(name: str, tensor: torch.Tensor, reduce: str) -> np.ndarray:
    array = tensor.detach().to(torch.float32).cpu().numpy()
    if array.ndim < 2:
        raise ExportError(f"layer {name!r} produced a {array.ndim}-D output")
    if array.ndim > 2:
        spatial = tuple(range(2, array.ndim))
        array = array.mean(axis=spatial) if reduce == "mean" else array.max(axis=spatial)
    return np.ascontiguousarray(array, dtype="<f4")


def export(spec: ExportSpec) -> Path:
    """Run the model over the input stream and write a trace directory."""
    model, model_name = resolve_model(spec)
    model.eval()
    hooked = select_modules(model, spec.layers)
    inputs, labels = _make_inputs(spec)

    captured: dict[str, list[np.ndarray]] = {name: [] for name, _ in hooked}
    handles = []
    for name, module in hooked:
        def _capture(module, args, output, name=name):
            captured[name].append(_reduce_batch(name, output, spec.reduce))
        handles.append(module.register_forward_hook(_capture))

    prediction_batches = []
    try:
        with torch.no_grad():
            for start in range(0, spec.n, spec.batch):
                batch = inputs[start : start + spec.batch]
                output = model(batch)
                if isinstance(output, torch.Tensor) and output.ndim == 2:
                    prediction_batches.append(
                        output.argmax(dim=1).cpu().numpy().astype("<i8")
                    )
    finally:
        for handle in handles:
            handle.remove()

    layers = []
    for name, _ in hooked:
        batches = captured[name]
        widths = {b.shape[1] for b in batches}
        if len(widths) != 1:
            raise ExportError(f"layer {name!r} width drifted between batches: {widths}")
        data = np.concatenate(batches, axis=0)
        if data.shape[0] != spec.n:
            raise ExportError(
                f"layer {name!r} produced {data.shape[0]} rows for {spec.n} inputs "
                "(module reused within one forward pass?)"
            )
        layers.append((name, data))

    predictions = np.concatenate(prediction_batches) if prediction_batches else None
    return _write_trace(
        Path(spec.out),
        model=f"{model_name}[reduce={spec.reduce}]",
        layers=layers,
        labels=labels,
        predictions=predictions,
    )


def _write_trace(root: Path, model: str, layers, labels, predictions) -> Path:
    """Write the nncov trace directory format (the shared on-disk contract)."""
    if root.exists() and any(root.iterdir()):
        raise ExportError(f"refusing to overwrite non-empty directory {root}")
    root.mkdir(parents=True, exist_ok=True)
    n = layers[0][1].shape[0] if layers else 0
    manifest = {
        "version": 1,
        "model": model,
        "num_inputs": n,
        "dtype": "f32",
        "endianness": "little",
        "layers": [{"name": name, "neurons": data.shape[1]} for name, data in layers],
        "has_labels": labels is not None,
        "has_predictions": predictions is not None,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    layer_dir = root / "layers"
    layer_dir.mkdir()
    for name, data in layers:
        if not np.isfinite(data).all():
            raise ExportError(f"layer {name!r} produced non-finite activations")
        (layer_dir / f"{name}.f32").write_bytes(data.tobytes())
    if labels is not None:
        (root / "labels.i64").write_bytes(
            np.ascontiguousarray(labels, dtype="<i8").tobytes()
        )
    if predictions is not None:
        (root / "predictions.i64").write_bytes(
            np.ascontiguousarray(predictions, dtype="<i8").tobytes()
        )
    return root
