"""Deterministic feed-forward toy networks and synthetic datasets.

Everything the coverage suite needs to run offline: plain fully-connected
layers with seeded weights, and seeded synthetic inputs. No training, no
convolutions; the point is controllable covariance structure, not realism.
Forward math runs in float64, traces store float32, so repeated runs are
bit-stable.

JSON config schema (see `net_from_config` / `dataset_from_config`)::

    {
      "net": {
        "widths": [16, 12, 8],            # layer output widths, >= 2 layers
        "activations": "relu",            # or per-layer list; relu|tanh|identity
        "weight_seed": 7,
        "scales": [1.0, 1.0, 1.0],        # per-layer recorded-output scale, > 0
        "weight_init": "uniform"          # or "identity" (square layers only)
      },
      "dataset": {
        "num_inputs": 500,
        "dim": 8,
        "range": [-1.0, 1.0],
        "generator": "uniform",           # or "gaussian-blobs"
        "blobs": 2,                       # gaussian-blobs only
        "spread": 1.0,                    # gaussian-blobs only
        "seed": 11
      }
    }
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .trace import ActivationTrace, LayerTrace

__all__ = [
    "DatasetSpec",
    "NetSpec",
    "SyntheticDataset",
    "dataset_from_config",
    "forward_trace",
    "make_dataset",
    "net_from_config",
]

_ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
    "identity": lambda x: x,
}


@dataclass(frozen=True)
class NetSpec:
    """Layer widths, activations, seeded weights, per-layer output scales.

    Scales multiply only the *recorded* layer outputs; the forward pass
    feeds unscaled activations onward. That makes one layer's trace
    magnitude tunable without disturbing the rest of the network.
    """

    widths: tuple[int, ...]
    activations: tuple[str, ...]
    weight_seed: int = 0
    scales: tuple[float, ...] = ()
    weight_init: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("a net needs at least 2 layers")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"layer widths must be >= 1, got {self.widths}")
        acts = self.activations
        if isinstance(acts, str):
            acts = (acts,) * len(self.widths)
        acts = tuple(acts)
        if len(acts) != len(self.widths):
            raise ValueError("need one activation per layer")
        for act in acts:
            if act not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        object.__setattr__(self, "activations", acts)
        scales = tuple(float(s) for s in self.scales) or (1.0,) * len(self.widths)
        if len(scales) != len(self.widths):
            raise ValueError("need one scale per layer")
        if any(s <= 0 for s in scales):
            raise ValueError(f"scales must be > 0, got {scales}")
        object.__setattr__(self, "scales", scales)
        if self.weight_init not in ("uniform", "identity"):
            raise ValueError(f"unknown weight_init {self.weight_init!r}")

    def layer_names(self) -> tuple[str, ...]:
        return tuple(f"dense{i}" for i in range(len(self.widths)))


@dataclass(frozen=True)
class DatasetSpec:
    num_inputs: int
    dim: int
    low: float = -1.0
    high: float = 1.0
    generator: str = "uniform"  # or "gaussian-blobs"
    blobs: int = 2
    spread: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_inputs < 1 or self.dim < 1:
            raise ValueError("dataset needs num_inputs >= 1 and dim >= 1")
        if not self.low < self.high:
            raise ValueError(f"range [{self.low}, {self.high}] is empty")
        if self.generator not in ("uniform", "gaussian-blobs"):
            raise ValueError(f"unknown generator {self.generator!r}")


@dataclass(frozen=True)
class SyntheticDataset:
    """N x d input matrix with its declared value range."""

    inputs: np.ndarray
    low: float
    high: float

    @property
    def num_inputs(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def make_dataset(spec: DatasetSpec) -> SyntheticDataset:
    """Seeded synthetic inputs, clamped to the declared range."""
    rng = np.random.default_rng(spec.seed)
    if spec.generator == "uniform":
        inputs = rng.uniform(spec.low, spec.high, size=(spec.num_inputs, spec.dim))
    else:
        centers = _blob_centers(rng, spec)
        assignment = rng.integers(0, spec.blobs, size=spec.num_inputs)
        sigma = spec.spread / 10.0
        inputs = centers[assignment] + rng.normal(0.0, sigma, size=(spec.num_inputs, spec.dim))
    inputs = np.clip(inputs, spec.low, spec.high)
    return SyntheticDataset(inputs=inputs, low=spec.low, high=spec.high)


def _blob_centers(rng: np.random.Generator, spec: DatasetSpec) -> np.ndarray:
    # rejection-sample centers until pairwise distances comfortably exceed
    # the requested spread, so blob sample means end up >= spread apart
    margin = 1.5 * spec.spread
    for _ in range(1000):
        centers = rng.uniform(spec.low, spec.high, size=(spec.blobs, spec.dim))
        distances = np.linalg.norm(centers[:, None] - centers[None, :], axis=-1)
        distances[np.diag_indices(spec.blobs)] = np.inf
        if distances.min() >= margin:
            return centers
    raise ValueError(
        f"could not place {spec.blobs} blob centers with spread {spec.spread} "
        f"inside [{spec.low}, {spec.high}]^{spec.dim}"
    )


def forward_trace(
    net: NetSpec, dataset: SyntheticDataset, layer_filter: list[str] | None = None
) -> ActivationTrace:
    """Forward all inputs and record post-activation outputs per layer.

    Weights are drawn layer by layer from the weight seed, uniform in
    [-1/sqrt(fan_in), +1/sqrt(fan_in)]. Recorded outputs are rounded to
    float32 first and then scaled in float32, so a layer's recorded trace
    is exactly ``scale`` times its unscaled counterpart.
    """
    rng = np.random.default_rng(net.weight_seed)
    names = net.layer_names()
    keep = set(names if layer_filter is None else layer_filter)
    unknown = keep - set(names)
    if unknown:
        raise ValueError(f"layer filter names {sorted(unknown)} not in {names}")

    x = np.asarray(dataset.inputs, dtype=np.float64)
    layers = []
    fan_in = dataset.dim
    for name, width, act, scale in zip(names, net.widths, net.activations, net.scales):
        if net.weight_init == "identity":
            if fan_in != width:
                raise DimensionError(
                    f"identity weights need square layers, got {fan_in} -> {width}"
                )
            weights = np.eye(fan_in)
            rng.uniform(-1.0, 1.0, size=(fan_in, width))  # keep the seed stream aligned
        else:
            bound = 1.0 / np.sqrt(fan_in)
            weights = rng.uniform(-bound, bound, size=(fan_in, width))
        x = _ACTIVATIONS[act](x @ weights)
        if name in keep:
            recorded = x.astype(np.float32) * np.float32(scale)
            layers.append(LayerTrace(name=name, data=recorded))
        fan_in = width
    return ActivationTrace(layers=tuple(layers), model=f"toynet{net.widths}")


def net_from_config(config: dict) -> NetSpec:
    return NetSpec(
        widths=tuple(config["widths"]),
        activations=config.get("activations", "relu"),
        weight_seed=int(config.get("weight_seed", 0)),
        scales=tuple(config.get("scales", ())),
        weight_init=config.get("weight_init", "uniform"),
    )


def dataset_from_config(config: dict) -> DatasetSpec:
    low, high = config.get("range", (-1.0, 1.0))
    return DatasetSpec(
        num_inputs=int(config["num_inputs"]),
        dim=int(config["dim"]),
        low=float(low),
        high=float(high),
        generator=config.get("generator", "uniform"),
        blobs=int(config.get("blobs", 2)),
        spread=float(config.get("spread", 1.0)),
        seed=int(config.get("seed", 0)),
    )
