"""Activation-trace data model, suite views, and trace directory I/O.

A trace holds one N x m_l activation matrix per layer for N test inputs.
Traces are immutable after construction; views are cheap index sequences
over a trace's rows, so subsets, permutations, and duplications never copy
activation data.

On-disk format (bit-exact):

* ``manifest.json`` -- ``{"version": 1, "model": str, "num_inputs": int,
  "dtype": "f32", "endianness": "little", "layers": [{"name": str,
  "neurons": int}, ...], "has_labels": bool, "has_predictions": bool}``
* ``layers/<name>.f32`` -- raw row-major N x m little-endian binary32,
  no header
* optional ``labels.i64`` / ``predictions.i64`` -- raw little-endian
  int64, length N

Loading validates and rejects; it never repairs. Activations are stored
as float32 (round-trip is byte-lossless for float32 payloads); criteria
compute in float64.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ProfileError, TraceFormatError

__all__ = [
    "ActivationTrace",
    "LayerTrace",
    "SuiteView",
    "TrainingProfile",
    "concat",
    "profile_training",
    "trace_load",
    "trace_save",
]

_MANIFEST_KEYS = {
    "version",
    "model",
    "num_inputs",
    "dtype",
    "endianness",
    "layers",
    "has_labels",
    "has_predictions",
}


def _check_layer_name(name: str) -> str:
    if not name or "/" in name or "\\" in name or "\x00" in name or name in (".", ".."):
        raise TraceFormatError(f"layer name {name!r} is not filesystem-safe")
    return name


@dataclass(frozen=True)
class LayerTrace:
    """One layer's N x m activation matrix."""

    name: str
    data: np.ndarray

    @property
    def neurons(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ActivationTrace:
    """Per-layer activation matrices for N inputs, plus optional labels/predictions."""

    layers: tuple[LayerTrace, ...]
    labels: np.ndarray | None = None
    predictions: np.ndarray | None = None
    model: str = ""

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise TraceFormatError(f"duplicate layer names in {names}")
        n = None
        for layer in self.layers:
            _check_layer_name(layer.name)
            if layer.data.ndim != 2:
                raise DimensionError(
                    f"layer {layer.name!r} must be 2-D, got shape {layer.data.shape}"
                )
            if layer.neurons < 1:
                raise DimensionError(f"layer {layer.name!r} has no neurons")
            if n is None:
                n = layer.data.shape[0]
            elif layer.data.shape[0] != n:
                raise DimensionError(
                    f"layer {layer.name!r} has {layer.data.shape[0]} rows, expected {n}"
                )
            if layer.data.size and not np.isfinite(layer.data).all():
                raise TraceFormatError(f"layer {layer.name!r} contains non-finite values")
        for attr in ("labels", "predictions"):
            vec = getattr(self, attr)
            if vec is not None and len(vec) != self.num_inputs:
                raise DimensionError(
                    f"{attr} has length {len(vec)}, expected {self.num_inputs}"
                )

    @property
    def num_inputs(self) -> int:
        return self.layers[0].data.shape[0] if self.layers else 0

    @property
    def layer_names(self) -> tuple[str, ...]:
        return tuple(layer.name for layer in self.layers)

    def layer(self, name: str) -> LayerTrace:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def full_view(self) -> "SuiteView":
        return SuiteView(np.arange(self.num_inputs, dtype=np.int64))


@dataclass(frozen=True)
class SuiteView:
    """Ordered row indices into a trace; duplicates are allowed.

    Encodes a test suite: subsets, permutations, and duplications of the
    traced inputs, without copying activations.
    """

    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.size)

    def check(self, trace: ActivationTrace) -> "SuiteView":
        if len(self) and (self.indices.min() < 0 or self.indices.max() >= trace.num_inputs):
            raise IndexError(
                f"view references rows outside a {trace.num_inputs}-input trace"
            )
        return self

    def subset(self, k: int, seed: int) -> "SuiteView":
        """Sample k entries without replacement, deterministic per seed."""
        if k > len(self):
            raise ValueError(f"cannot take {k} of {len(self)} entries")
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(self), size=k, replace=False)
        return SuiteView(self.indices[picks])

    def shuffle(self, seed: int) -> "SuiteView":
        rng = np.random.default_rng(seed)
        return SuiteView(rng.permutation(self.indices))


def concat(a: SuiteView, b: SuiteView) -> SuiteView:
    """Concatenate two views, a's entries first."""
    return SuiteView(np.concatenate([a.indices, b.indices]))


@dataclass(frozen=True)
class TrainingProfile:
    """Per-neuron [low, high] activation ranges from a reference trace."""

    low: dict[str, np.ndarray]
    high: dict[str, np.ndarray]

    def check(self, trace: ActivationTrace) -> "TrainingProfile":
        for layer in trace.layers:
            if layer.name not in self.low:
                raise ProfileError(f"profile does not cover layer {layer.name!r}")
            if self.low[layer.name].shape[0] != layer.neurons:
                raise ProfileError(
                    f"profile width {self.low[layer.name].shape[0]} does not match "
                    f"layer {layer.name!r} with {layer.neurons} neurons"
                )
        return self


def profile_training(trace: ActivationTrace) -> TrainingProfile:
    """Per-neuron min/max over all rows of a (nonempty) reference trace."""
    if trace.num_inputs < 1:
        raise ProfileError("cannot profile an empty trace")
    low = {}
    high = {}
    for layer in trace.layers:
        data = layer.data.astype(np.float64)
        low[layer.name] = data.min(axis=0)
        high[layer.name] = data.max(axis=0)
    return TrainingProfile(low=low, high=high)


def trace_save(trace: ActivationTrace, path: str | os.PathLike) -> None:
    """Write a trace directory; refuses to write into a non-empty directory."""
    root = Path(path)
    if root.exists():
        if not root.is_dir():
            raise TraceFormatError(f"{root} exists and is not a directory")
        if any(root.iterdir()):
            raise TraceFormatError(f"refusing to overwrite non-empty directory {root}")
    else:
        root.mkdir(parents=True)
    manifest = {
        "version": 1,
        "model": trace.model,
        "num_inputs": trace.num_inputs,
        "dtype": "f32",
        "endianness": "little",
        "layers": [
            {"name": layer.name, "neurons": layer.neurons} for layer in trace.layers
        ],
        "has_labels": trace.labels is not None,
        "has_predictions": trace.predictions is not None,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    layer_dir = root / "layers"
    layer_dir.mkdir()
    for layer in trace.layers:
        payload = np.ascontiguousarray(layer.data, dtype="<f4")
        (layer_dir / f"{layer.name}.f32").write_bytes(payload.tobytes())
    if trace.labels is not None:
        (root / "labels.i64").write_bytes(
            np.ascontiguousarray(trace.labels, dtype="<i8").tobytes()
        )
    if trace.predictions is not None:
        (root / "predictions.i64").write_bytes(
            np.ascontiguousarray(trace.predictions, dtype="<i8").tobytes()
        )


def _load_i64(path: Path, n: int, what: str) -> np.ndarray:
    if not path.is_file():
        raise TraceFormatError(f"manifest promises {what} but {path.name} is missing")
    raw = path.read_bytes()
    if len(raw) != n * 8:
        raise TraceFormatError(
            f"{path.name} holds {len(raw)} bytes, expected {n * 8} for {n} inputs"
        )
    return np.frombuffer(raw, dtype="<i8")


def trace_load(path: str | os.PathLike) -> ActivationTrace:
    """Read and validate a trace directory. Rejects malformed input, never repairs."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise TraceFormatError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"manifest is not valid JSON: {exc}") from exc
    missing = _MANIFEST_KEYS - set(manifest)
    if missing:
        raise TraceFormatError(f"manifest is missing keys {sorted(missing)}")
    if manifest["version"] != 1:
        raise TraceFormatError(f"unsupported trace version {manifest['version']!r}")
    if manifest["dtype"] != "f32":
        raise TraceFormatError(f"unsupported dtype {manifest['dtype']!r}")
    if manifest["endianness"] != "little":
        raise TraceFormatError(f"unsupported endianness {manifest['endianness']!r}")
    n = manifest["num_inputs"]
    if not isinstance(n, int) or n < 0:
        raise TraceFormatError(f"bad num_inputs {n!r}")

    layers = []
    for entry in manifest["layers"]:
        name = _check_layer_name(entry["name"])
        m = entry["neurons"]
        if not isinstance(m, int) or m < 1:
            raise TraceFormatError(f"layer {name!r} declares bad neuron count {m!r}")
        layer_path = root / "layers" / f"{name}.f32"
        if not layer_path.is_file():
            raise TraceFormatError(f"missing layer file {layer_path.name}")
        raw = layer_path.read_bytes()
        if len(raw) != n * m * 4:
            raise TraceFormatError(
                f"layer {name!r} holds {len(raw)} bytes, expected {n * m * 4} "
                f"({n} rows x {m} neurons)"
            )
        data = np.frombuffer(raw, dtype="<f4").reshape(n, m)
        layers.append(LayerTrace(name=name, data=data))

    labels = _load_i64(root / "labels.i64", n, "labels") if manifest["has_labels"] else None
    predictions = (
        _load_i64(root / "predictions.i64", n, "predictions")
        if manifest["has_predictions"]
        else None
    )
    trace = ActivationTrace(
        layers=tuple(layers),
        labels=labels,
        predictions=predictions,
        model=manifest["model"],
    )
    if trace.num_inputs != n and trace.layers:
        raise TraceFormatError("manifest num_inputs disagrees with layer files")
    return trace
