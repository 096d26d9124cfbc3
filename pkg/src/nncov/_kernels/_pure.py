"""Numpy implementation of the only-increase scan.

Reference semantics for the compiled kernel; see `incremental_scan`.
"""

from __future__ import annotations

import numpy as np


def _layer_score(comoment: np.ndarray, n: int, m: int) -> float:
    # Same expression the scan uses for tentative totals, keeping the
    # final reported value consistent with the last committed total.
    if n < 2:
        return 0.0
    return float(np.abs(comoment).sum() / (n * m * m))


def incremental_scan(layers, order, batch_size, init=None):
    """Scan `order` in batches, committing a batch only when it raises the score.

    ``layers`` is a list of (N, m_l) float64 matrices sharing row indices;
    ``order`` an int64 index sequence; ``init`` an optional warm-start state
    ``(n0, means0, comoments0)``. The score of a state is the sum over
    layers of ``l1(comoment_l / n) / m_l**2`` (zero below two rows).

    Returns ``(value, accepted, committed, per_layer)``: the final score,
    the number of committed rows (warm-start rows excluded), the strictly
    increasing committed totals, and the final per-layer scores.
    """
    layers = [np.ascontiguousarray(a, dtype=np.float64) for a in layers]
    order = np.asarray(order, dtype=np.int64)
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    widths = [a.shape[1] for a in layers]
    if init is None:
        n = 0
        means = [np.zeros(m) for m in widths]
        comoments = [np.zeros((m, m)) for m in widths]
    else:
        n0, means0, comoments0 = init
        n = int(n0)
        means = [np.array(v, dtype=np.float64) for v in means0]
        comoments = [np.array(c, dtype=np.float64) for c in comoments0]

    current = 0.0
    for com, m in zip(comoments, widths):
        current += _layer_score(com, n, m)

    committed = []
    accepted = 0
    for start in range(0, order.size, batch_size):
        idx = order[start : start + batch_size]
        k = idx.size
        nt = n + k
        tentative = 0.0
        merged = []
        for data, mean, com, m in zip(layers, means, comoments, widths):
            rows = data[idx]
            mean_b = rows.mean(axis=0)
            centered = rows - mean_b
            com_b = centered.T @ centered
            delta = mean_b - mean
            mean_t = mean + delta * (k / nt)
            com_t = com + com_b + np.outer(delta, delta) * (n * k / nt)
            merged.append((mean_t, com_t))
            if nt >= 2:
                tentative += float(np.abs(com_t).sum() / (nt * m * m))
        if tentative > current:
            n = nt
            for i, (mean_t, com_t) in enumerate(merged):
                means[i] = mean_t
                comoments[i] = com_t
            current = tentative
            accepted += k
            committed.append(tentative)

    per_layer = np.array(
        [_layer_score(com, n, m) for com, m in zip(comoments, widths)]
    )
    value = float(per_layer.sum())
    return value, accepted, np.array(committed), per_layer
