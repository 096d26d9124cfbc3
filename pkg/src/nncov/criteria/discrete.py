"""Discrete per-neuron baselines: NC, KMNC, NBC, SNAC, TKNC.

All five count covered targets out of a fixed target set, so they are
bounded in [0, 1], monotone under suite extension, order-independent,
and blind to duplicate inputs. KMNC, NBC, and SNAC need a training
profile (per-neuron [low, high] ranges observed on a reference trace).
"""

from __future__ import annotations

import numpy as np

from ..trace import ActivationTrace, SuiteView, TrainingProfile
from .base import Criterion, CriterionDescriptor, CriterionResult

__all__ = ["NC", "KMNC", "NBC", "SNAC", "TKNC"]


def _rows(layer_data: np.ndarray, view: SuiteView) -> np.ndarray:
    return layer_data[view.indices].astype(np.float64)


def _fraction_result(covered: dict[str, int], totals: dict[str, int]) -> CriterionResult:
    total_targets = sum(totals.values())
    per_layer = {
        name: (covered[name] / totals[name]) if totals[name] else 0.0 for name in totals
    }
    value = sum(covered.values()) / total_targets if total_targets else 0.0
    return CriterionResult(value=float(value), per_layer=per_layer)


class NC(Criterion):
    """Fraction of neurons that exceed an activation threshold on some input."""

    def __init__(self, threshold: float = 0.75):
        self.threshold = threshold
        self.descriptor = CriterionDescriptor(
            name="nc",
            bounded=True,
            monotone_by_design=True,
            requires_profile=False,
            hyperparameters={"threshold": threshold},
        )

    def evaluate(self, trace, view):
        view.check(trace)
        covered, totals = {}, {}
        for layer in trace.layers:
            rows = _rows(layer.data, view)
            hits = (rows > self.threshold).any(axis=0) if rows.size else np.zeros(
                layer.neurons, dtype=bool
            )
            covered[layer.name] = int(hits.sum())
            totals[layer.name] = layer.neurons
        return _fraction_result(covered, totals)


class KMNC(Criterion):
    """Fraction of the k per-neuron range sections hit by some input.

    Each neuron's profiled [low, high] splits into k equal sections;
    values outside the range hit no section; a value equal to high falls
    in the last section. Zero-width ranges keep a single reachable
    section at the shared value.
    """

    def __init__(self, profile: TrainingProfile, k: int = 100):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.profile = profile
        self.k = k
        self.descriptor = CriterionDescriptor(
            name="kmnc",
            bounded=True,
            monotone_by_design=True,
            requires_profile=True,
            hyperparameters={"k": k},
        )

    def evaluate(self, trace, view):
        view.check(trace)
        self.profile.check(trace)
        k = self.k
        covered, totals = {}, {}
        for layer in trace.layers:
            m = layer.neurons
            totals[layer.name] = m * k
            rows = _rows(layer.data, view)
            if rows.size == 0:
                covered[layer.name] = 0
                continue
            low = self.profile.low[layer.name]
            high = self.profile.high[layer.name]
            width = (high - low) / k
            inside = (rows >= low) & (rows <= high)
            with np.errstate(divide="ignore", invalid="ignore"):
                section = np.floor_divide(rows - low, width)
            section = np.where(width > 0, section, 0.0)
            section = np.clip(section, 0, k - 1).astype(np.int64)
            hit = np.zeros((m, k), dtype=bool)
            cols = np.broadcast_to(np.arange(m), rows.shape)
            hit[cols[inside], section[inside]] = True
            covered[layer.name] = int(hit.sum())
        return _fraction_result(covered, totals)


class NBC(Criterion):
    """Fraction of corner targets hit: below low or above high, two per neuron."""

    def __init__(self, profile: TrainingProfile):
        self.profile = profile
        self.descriptor = CriterionDescriptor(
            name="nbc",
            bounded=True,
            monotone_by_design=True,
            requires_profile=True,
        )

    def evaluate(self, trace, view):
        view.check(trace)
        self.profile.check(trace)
        covered, totals = {}, {}
        for layer in trace.layers:
            totals[layer.name] = 2 * layer.neurons
            rows = _rows(layer.data, view)
            if rows.size == 0:
                covered[layer.name] = 0
                continue
            below = (rows < self.profile.low[layer.name]).any(axis=0)
            above = (rows > self.profile.high[layer.name]).any(axis=0)
            covered[layer.name] = int(below.sum()) + int(above.sum())
        return _fraction_result(covered, totals)


class SNAC(Criterion):
    """Fraction of neurons pushed strictly above their profiled high."""

    def __init__(self, profile: TrainingProfile):
        self.profile = profile
        self.descriptor = CriterionDescriptor(
            name="snac",
            bounded=True,
            monotone_by_design=True,
            requires_profile=True,
        )

    def evaluate(self, trace, view):
        view.check(trace)
        self.profile.check(trace)
        covered, totals = {}, {}
        for layer in trace.layers:
            totals[layer.name] = layer.neurons
            rows = _rows(layer.data, view)
            if rows.size == 0:
                covered[layer.name] = 0
                continue
            above = (rows > self.profile.high[layer.name]).any(axis=0)
            covered[layer.name] = int(above.sum())
        return _fraction_result(covered, totals)


class TKNC(Criterion):
    """Fraction of neurons that rank in some input's layer top-k.

    Ties are broken toward the lower neuron index.
    """

    def __init__(self, k: int = 1):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self.descriptor = CriterionDescriptor(
            name="tknc",
            bounded=True,
            monotone_by_design=True,
            requires_profile=False,
            hyperparameters={"k": k},
        )

    def evaluate(self, trace, view):
        view.check(trace)
        if trace.layers and self.k > min(layer.neurons for layer in trace.layers):
            raise ValueError(
                f"k={self.k} exceeds the narrowest layer "
                f"({min(layer.neurons for layer in trace.layers)} neurons)"
            )
        covered, totals = {}, {}
        for layer in trace.layers:
            totals[layer.name] = layer.neurons
            rows = _rows(layer.data, view)
            if rows.size == 0:
                covered[layer.name] = 0
                continue
            # stable argsort of the negated rows: equal outputs keep index order
            top = np.argsort(-rows, axis=1, kind="stable")[:, : self.k]
            hit = np.zeros(layer.neurons, dtype=bool)
            hit[np.unique(top)] = True
            covered[layer.name] = int(hit.sum())
        return _fraction_result(covered, totals)
