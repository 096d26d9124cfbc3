"""Desk-scale study machinery.

Layer-contribution decomposition of summed coverage values, the
noise-perturbed suite construction (x1 / x10 schemes), activation
spectra compared by Jensen-Shannon divergence, K-means centroid
selection of representative inputs, and a simplified PCA+K-means
cluster-diversity measure (always labelled "simplified" in outputs,
since the original pipeline it stands in for is external).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .criteria import Criterion
from .trace import ActivationTrace, SuiteView
from .toynet import SyntheticDataset

__all__ = [
    "LayerReport",
    "Spectrum",
    "activation_spectrum",
    "centroid_select",
    "js_divergence",
    "kmeans",
    "layer_report",
    "layer_report_csv",
    "layer_report_svg",
    "make_noise_suites",
    "mean_spectrum",
    "per_input_spectra",
    "simplified_cluster_diversity",
]


# ---------------------------------------------------------------------------
# layer contribution reports


@dataclass(frozen=True)
class LayerReport:
    """Per-layer values and percentage shares of their sum, deepest layer first."""

    criterion: str
    layers: tuple[str, ...]
    values: tuple[float, ...]
    shares_pct: tuple[float, ...]
    degenerate: bool = False  # all-zero layers: shares carry no signal


def layer_report(trace: ActivationTrace, view: SuiteView, criterion: Criterion) -> LayerReport:
    result = criterion.evaluate(trace, view)
    names = list(reversed(trace.layer_names))  # deepest first
    values = [result.per_layer[name] for name in names]
    total = sum(values)
    if total > 0:
        shares = [100.0 * v / total for v in values]
        degenerate = False
    else:
        shares = [0.0] * len(values)
        degenerate = True
    return LayerReport(
        criterion=criterion.name,
        layers=tuple(names),
        values=tuple(float(v) for v in values),
        shares_pct=tuple(shares),
        degenerate=degenerate,
    )


def layer_report_csv(report: LayerReport, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["layer", "value", "share_pct"])
        for name, value, share in zip(report.layers, report.values, report.shares_pct):
            writer.writerow([name, value, share])


def layer_report_svg(report: LayerReport, path: str | os.PathLike) -> None:
    """Horizontal bar chart on a log x-axis, one bar per layer, share annotations."""
    bar_height, gap, left, width = 22, 8, 150, 640
    height = len(report.layers) * (bar_height + gap) + gap + 30
    positive = [v for v in report.values if v > 0]
    vmin = min(positive) if positive else 1.0
    vmax = max(positive) if positive else 1.0
    span = math.log10(vmax / vmin) if vmax > vmin else 1.0

    def bar_width(value: float) -> float:
        if value <= 0:
            return 1.0
        return 10.0 + (width - 10.0) * (math.log10(value / vmin) / span if span else 1.0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + width + 120}" '
        f'height="{height}" font-family="sans-serif" font-size="12">',
        f'<text x="{left}" y="16">{report.criterion} per layer '
        "(log scale, deepest first)</text>",
    ]
    y = 30
    for name, value, share in zip(report.layers, report.values, report.shares_pct):
        w = bar_width(value)
        parts.append(f'<text x="{left - 8}" y="{y + 15}" text-anchor="end">{name}</text>')
        parts.append(
            f'<rect x="{left}" y="{y}" width="{w:.2f}" height="{bar_height}" fill="#4878a8"/>'
        )
        parts.append(f'<text x="{left + w + 6:.2f}" y="{y + 15}">{share:.2f}%</text>')
        y += bar_height + gap
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# noise-perturbed suite construction


def make_noise_suites(
    dataset: SyntheticDataset,
    base_count: int = 100,
    noise_low: float = -0.1,
    noise_high: float = 0.1,
    seed: int = 0,
) -> tuple[SyntheticDataset, SyntheticDataset]:
    """Build the x1 / x10 perturbed suites from a small base sample.

    Samples ``base_count`` inputs, then emits ``|dataset|`` replicas (x1)
    and ``10 * |dataset|`` replicas (x10); every replica is its base input
    plus i.i.d. uniform noise per feature, clamped to the dataset's
    declared range. Both suites share the same base selection for a seed.
    """
    n = dataset.num_inputs
    if base_count > n:
        raise ValueError(f"base_count {base_count} exceeds dataset size {n}")
    if not noise_low < noise_high:
        raise ValueError(f"noise range [{noise_low}, {noise_high}] is empty")
    rng = np.random.default_rng(seed)
    base_idx = rng.choice(n, size=base_count, replace=False)
    bases = dataset.inputs[base_idx]

    def replicate(count: int) -> SyntheticDataset:
        picks = bases[np.arange(count) % base_count]
        noise = rng.uniform(noise_low, noise_high, size=picks.shape)
        inputs = np.clip(picks + noise, dataset.low, dataset.high)
        return SyntheticDataset(inputs=inputs, low=dataset.low, high=dataset.high)

    return replicate(n), replicate(10 * n)


# ---------------------------------------------------------------------------
# activation spectra and Jensen-Shannon divergence


@dataclass(frozen=True)
class Spectrum:
    """Normalized activation histogram over fixed bin edges."""

    bin_edges: np.ndarray  # length B+1, strictly ascending
    mass: np.ndarray  # length B, sums to 1

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        mass = np.asarray(self.mass, dtype=np.float64)
        if edges.ndim != 1 or mass.ndim != 1 or edges.size != mass.size + 1:
            raise ValueError("need B+1 edges for B mass entries")
        if not (np.diff(edges) > 0).all():
            raise ValueError("bin edges must be strictly ascending")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "mass", mass)


def _selected_values(trace, view, layer) -> np.ndarray:
    if layer is None:  # penultimate layer: the usual representation layer
        layer = trace.layer_names[-2] if len(trace.layers) >= 2 else trace.layer_names[0]
    data = trace.layer(layer).data
    return data[view.indices].astype(np.float64)


def _edges_from_reference(trace, reference, layer, bins) -> np.ndarray:
    values = _selected_values(trace, reference, layer)
    lo = float(values.min()) if values.size else 0.0
    hi = float(values.max()) if values.size else 1.0
    if hi <= lo:
        hi = lo + 1.0  # constant reference: one unit-wide window
    return np.linspace(lo, hi, bins + 1)


def _histogram(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # out-of-range values clamp into the edge bins so spectra stay comparable
    clipped = np.clip(values, edges[0], edges[-1])
    counts, _ = np.histogram(clipped, bins=edges)
    total = counts.sum()
    return counts / total if total else counts.astype(np.float64)


def activation_spectrum(
    trace: ActivationTrace,
    view: SuiteView,
    layer: str | None = None,
    bins: int = 100,
    reference: SuiteView | None = None,
    per_input_average: bool = False,
) -> Spectrum:
    """Histogram of a suite's selected-layer activations as a probability vector.

    Bin edges come from ``reference`` (default: the trace's full suite) so
    spectra of different suites are comparable. The default pools all
    activation values; ``per_input_average`` instead averages the
    per-input histograms.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if len(view) == 0:
        raise ValueError("cannot build a spectrum from an empty suite")
    edges = _edges_from_reference(trace, reference or trace.full_view(), layer, bins)
    values = _selected_values(trace, view, layer)
    if per_input_average:
        rows = np.stack([_histogram(row, edges) for row in values])
        mass = rows.mean(axis=0)
    else:
        mass = _histogram(values.ravel(), edges)
    return Spectrum(bin_edges=edges, mass=mass)


def per_input_spectra(
    trace: ActivationTrace,
    view: SuiteView,
    layer: str | None = None,
    bins: int = 32,
    reference: SuiteView | None = None,
) -> list[Spectrum]:
    """One activation histogram per input in the view, on shared edges."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if len(view) == 0:
        raise ValueError("cannot build spectra from an empty suite")
    edges = _edges_from_reference(trace, reference or trace.full_view(), layer, bins)
    values = _selected_values(trace, view, layer)
    return [Spectrum(bin_edges=edges, mass=_histogram(row, edges)) for row in values]


def js_divergence(p: Spectrum, q: Spectrum) -> float:
    """Jensen-Shannon divergence, natural log: 0 <= JS <= ln 2."""
    if p.bin_edges.shape != q.bin_edges.shape or not np.array_equal(
        p.bin_edges, q.bin_edges
    ):
        raise ValueError("spectra use different bin edges")

    def half_kl(a: np.ndarray, m: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / m[mask])))

    mid = (p.mass + q.mass) / 2.0
    return 0.5 * half_kl(p.mass, mid) + 0.5 * half_kl(q.mass, mid)


def mean_spectrum(spectra: list[Spectrum]) -> Spectrum:
    """Average of member spectra (the spectrum of a suite of those inputs)."""
    if not spectra:
        raise ValueError("cannot average zero spectra")
    edges = spectra[0].bin_edges
    mass = np.mean([s.mass for s in spectra], axis=0)
    return Spectrum(bin_edges=edges, mass=mass)


# ---------------------------------------------------------------------------
# K-means (Lloyd's with k-means++ seeding) and centroid selection


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(points.shape[0])]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:  # all remaining points coincide with a center
            centers[i] = points[rng.integers(points.shape[0])]
            continue
        centers[i] = points[rng.choice(points.shape[0], p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd's algorithm; stops on relative inertia change below tol.

    Returns (labels, centers, inertia). Deterministic per seed; empty
    clusters are reseeded to the point farthest from its center.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, k, rng)
    previous_inertia = np.inf
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        for j in range(k):
            members = points[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                centers[j] = points[d2[np.arange(n), labels].argmax()]
        if previous_inertia - inertia <= tol * max(previous_inertia, 1e-300):
            break
        previous_inertia = inertia
    return labels, centers, inertia


def centroid_select(spectra: list[Spectrum], k: int, seed: int = 0) -> list[int]:
    """Pick one representative input per cluster of activation spectra.

    Clusters the mass vectors with K-means and returns, per cluster, the
    index of the member nearest its centroid (clusters left empty by
    Lloyd's contribute no pick).
    """
    if k > len(spectra):
        raise ValueError(f"k={k} exceeds {len(spectra)} inputs")
    points = np.stack([s.mass for s in spectra])
    labels, centers, _ = kmeans(points, k, seed=seed)
    picks = []
    for j in range(k):
        members = np.flatnonzero(labels == j)
        if members.size == 0:
            continue
        d2 = np.sum((points[members] - centers[j]) ** 2, axis=1)
        picks.append(int(members[d2.argmin()]))
    return sorted(picks)


# ---------------------------------------------------------------------------
# simplified cluster-diversity measure (PCA + K-means + silhouette)


@dataclass(frozen=True)
class ClusterDiversityReport:
    label: str  # always "simplified"
    chosen_k: int
    silhouette: float
    cluster_sizes: tuple[int, ...]
    labels: np.ndarray


def _silhouette(points: np.ndarray, labels: np.ndarray) -> float:
    n = points.shape[0]
    distance = np.sqrt(
        np.maximum(np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=2), 0.0)
    )
    score = 0.0
    counted = 0
    for i in range(n):
        same = distance[i][labels == labels[i]]
        if same.size <= 1:
            continue
        a = same.sum() / (same.size - 1)
        b = np.inf
        for j in np.unique(labels):
            if j == labels[i]:
                continue
            other = distance[i][labels == j]
            if other.size:
                b = min(b, float(other.mean()))
        if not np.isfinite(b):
            continue
        score += (b - a) / max(a, b) if max(a, b) > 0 else 0.0
        counted += 1
    return score / counted if counted else 0.0


def simplified_cluster_diversity(
    features: np.ndarray,
    dims: int = 8,
    k_min: int = 2,
    k_max: int = 60,
    seed: int = 0,
) -> ClusterDiversityReport:
    """PCA-project features, K-means them, pick K by silhouette.

    A deliberately reduced stand-in for external latent-space clustering
    diversity pipelines; outputs are labelled "simplified" accordingly.
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if n < k_min + 1:
        raise ValueError(f"need at least {k_min + 1} inputs to cluster, got {n}")
    centered = features - features.mean(axis=0)
    # PCA via SVD; keep at most dims components
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    projected = centered @ vt[: min(dims, vt.shape[0])].T
    best = None
    for k in range(k_min, min(k_max, n - 1) + 1):
        labels, _, _ = kmeans(projected, k, seed=seed)
        score = _silhouette(projected, labels)
        if best is None or score > best[0]:
            best = (score, k, labels)
    score, k, labels = best
    sizes = tuple(int((labels == j).sum()) for j in range(k))
    return ClusterDiversityReport(
        label="simplified",
        chosen_k=k,
        silhouette=float(score),
        cluster_sizes=sizes,
        labels=labels,
    )
