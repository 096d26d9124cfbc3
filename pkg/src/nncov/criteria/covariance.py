"""Covariance-based criteria.

The layer score of the L1 family is the mean absolute entry of the
layer's population covariance matrix, ``l1(Sigma_l) / m_l**2``, summed
over layers. That sum is unbounded and not monotone: extending a suite
can shrink the average spread. The incremental variant restores
non-decreasing values by committing a batch only when it raises the
score, at the price of order dependence; both behaviours are what the
axiom harness probes.

The determinant / trace / spectral-norm variants swap the L1 scoring
function for eigenvalue-based summaries that keep more of the covariance
structure (the L1 score cannot tell apart matrices with equal entrywise
sums but different spectra). Their cross-layer sum is reported for
comparability, with the same caveat as the L1 family: one layer can
dominate it, so read the per-layer map first.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import DimensionError
from ..linalg import batch_moments, default_ridge, spectral_summary
from ..trace import ActivationTrace, SuiteView
from .base import Criterion, CriterionDescriptor, CriterionResult

__all__ = ["NLCBatch", "NLCIncremental", "CovSummary", "layer_covariance"]


def layer_covariance(data: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Two-pass population covariance of the selected rows (zeros for n < 2)."""
    m = data.shape[1]
    if indices.size < 2:
        return np.zeros((m, m))
    rows = data[indices].astype(np.float64)
    mean = rows.mean(axis=0)
    centered = rows - mean
    return (centered.T @ centered) / rows.shape[0]


class NLCBatch(Criterion):
    """Mean absolute covariance per layer, summed over layers."""

    def __init__(self):
        self.descriptor = CriterionDescriptor(
            name="nlc",
            bounded=False,
            monotone_by_design=False,
            requires_profile=False,
        )

    def evaluate(self, trace: ActivationTrace, view: SuiteView) -> CriterionResult:
        view.check(trace)
        per_layer = {}
        for layer in trace.layers:
            sigma = layer_covariance(layer.data, view.indices)
            per_layer[layer.name] = float(np.abs(sigma).sum()) / layer.neurons**2
        return CriterionResult(value=float(sum(per_layer.values())), per_layer=per_layer)


class NLCIncremental(Criterion):
    """Only-increase variant: commit a batch of inputs iff it raises the score.

    Processes the view in order in batches of ``batch_size``; a batch is
    committed exactly when the score including it strictly exceeds the
    current score, otherwise its inputs are discarded. The committed
    value sequence is strictly increasing by construction; the final
    value depends on input order.

    ``warm_start`` optionally seeds the committed statistics (and the
    starting score) with all rows of a reference trace, for workflows
    that fold in prior knowledge from training data; default is a cold
    start. Note a cold start with ``batch_size=1`` never commits: every
    single-row candidate state has zero covariance, which cannot
    strictly exceed the starting score of zero.
    """

    def __init__(self, batch_size: int = 1, warm_start: ActivationTrace | None = None):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.batch_size = batch_size
        self.warm_start = warm_start
        self.descriptor = CriterionDescriptor(
            name="nlc-inc",
            bounded=False,
            monotone_by_design=True,
            requires_profile=False,
            hyperparameters={"batch_size": batch_size, "warm_start": warm_start is not None},
        )

    def _init_state(self, trace: ActivationTrace):
        if self.warm_start is None:
            return None
        if self.warm_start.layer_names != trace.layer_names:
            raise DimensionError("warm-start trace layers do not match evaluated trace")
        n0 = self.warm_start.num_inputs
        means, comoments = [], []
        for ref, layer in zip(self.warm_start.layers, trace.layers):
            if ref.neurons != layer.neurons:
                raise DimensionError(
                    f"warm-start layer {ref.name!r} width {ref.neurons} != {layer.neurons}"
                )
            _, mean, com = batch_moments(ref.data.astype(np.float64))
            means.append(mean)
            comoments.append(com)
        return n0, means, comoments

    def evaluate(self, trace: ActivationTrace, view: SuiteView) -> CriterionResult:
        view.check(trace)
        arrays = [layer.data.astype(np.float64) for layer in trace.layers]
        value, accepted, committed, per_layer = _kernels.incremental_scan(
            arrays, view.indices, self.batch_size, init=self._init_state(trace)
        )
        return CriterionResult(
            value=value,
            per_layer={
                layer.name: float(score) for layer, score in zip(trace.layers, per_layer)
            },
            accepted_inputs=int(accepted),
            committed_values=tuple(float(v) for v in committed),
        )


class CovSummary(Criterion):
    """Eigenvalue-based covariance scores: log-determinant, trace, spectral norm.

    Per layer: ``detcov`` reports the ridge-clamped log-determinant (the
    raw determinant under/overflows beyond a few dozen neurons),
    ``tracecov`` the total variance per neuron ``trace(Sigma)/m``, and
    ``speccov`` the largest eigenvalue. Layers whose covariance carries
    no signal (fewer than two rows, or constant outputs) are flagged
    degenerate; detcov still reports the ridge floor ``m*log(ridge)``
    for them.
    """

    KINDS = ("detcov", "tracecov", "speccov")

    def __init__(self, kind: str, ridge: float | None = None):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}, got {kind!r}")
        self.kind = kind
        self.ridge = ridge  # None: scale-aware default per layer
        self.descriptor = CriterionDescriptor(
            name=kind,
            bounded=False,
            monotone_by_design=False,
            requires_profile=False,
            hyperparameters={"ridge": "auto" if ridge is None else ridge},
        )

    def evaluate(self, trace: ActivationTrace, view: SuiteView) -> CriterionResult:
        view.check(trace)
        per_layer = {}
        degenerate = []
        for layer in trace.layers:
            sigma = layer_covariance(layer.data, view.indices)
            m = layer.neurons
            if view.indices.size < 2 or not np.abs(sigma).sum() > 0.0:
                degenerate.append(layer.name)
                if self.kind == "detcov":
                    ridge = self.ridge if self.ridge is not None else default_ridge(sigma)
                    with np.errstate(divide="ignore"):
                        per_layer[layer.name] = m * float(np.log(ridge))
                else:
                    per_layer[layer.name] = 0.0
                continue
            if self.kind == "tracecov":
                per_layer[layer.name] = float(np.trace(sigma)) / m
                continue
            summary = spectral_summary(sigma, self.ridge)
            if self.kind == "speccov":
                per_layer[layer.name] = summary.spectral_norm
            else:
                per_layer[layer.name] = summary.log_determinant
                ridge = self.ridge if self.ridge is not None else default_ridge(sigma)
                if summary.spectral_norm <= ridge:
                    degenerate.append(layer.name)
        return CriterionResult(
            value=float(sum(per_layer.values())),
            per_layer=per_layer,
            degenerate_layers=tuple(degenerate),
        )
