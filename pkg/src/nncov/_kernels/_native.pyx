# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled only-increase scan.

Same contract as ``nncov._kernels._pure.incremental_scan``; the per-batch
moment merge runs in C so long scans with small batches avoid interpreter
overhead. Results may differ from the numpy fallback at float rounding
level (different summation order), never structurally.
"""

from libc.math cimport fabs

import numpy as np


cdef double _merge_batch(
    const double[:, ::1] data,
    const long long[::1] order,
    Py_ssize_t start,
    Py_ssize_t k,
    double n,
    double nt,
    const double[::1] mean,
    const double[:, ::1] com,
    double[::1] mean_b,
    double[::1] dev,
    double[::1] mean_t,
    double[:, ::1] com_t,
) noexcept nogil:
    """Merge the batch order[start:start+k] into (mean, com) -> (mean_t, com_t).

    Returns the entrywise absolute sum of com_t.
    """
    cdef Py_ssize_t m = data.shape[1]
    cdef Py_ssize_t r, i, j, row
    cdef double coef, di, v, abssum

    for j in range(m):
        mean_b[j] = 0.0
    for r in range(k):
        row = order[start + r]
        for j in range(m):
            mean_b[j] += data[row, j]
    for j in range(m):
        mean_b[j] /= k

    for i in range(m):
        for j in range(m):
            com_t[i, j] = 0.0
    for r in range(k):
        row = order[start + r]
        for j in range(m):
            dev[j] = data[row, j] - mean_b[j]
        for i in range(m):
            di = dev[i]
            for j in range(m):
                com_t[i, j] += di * dev[j]

    coef = n * k / nt
    for j in range(m):
        dev[j] = mean_b[j] - mean[j]
        mean_t[j] = mean[j] + dev[j] * (k / nt)
    abssum = 0.0
    for i in range(m):
        di = dev[i]
        for j in range(m):
            v = com[i, j] + com_t[i, j] + di * dev[j] * coef
            com_t[i, j] = v
            abssum += fabs(v)
    return abssum


cdef double _abs_sum(const double[:, ::1] com) noexcept nogil:
    cdef Py_ssize_t m = com.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    for i in range(m):
        for j in range(m):
            total += fabs(com[i, j])
    return total


def incremental_scan(layers, order, Py_ssize_t batch_size, init=None):
    """See ``nncov._kernels._pure.incremental_scan``."""
    cdef list datas = [np.ascontiguousarray(a, dtype=np.float64) for a in layers]
    order = np.ascontiguousarray(order, dtype=np.int64)
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    cdef Py_ssize_t total = order.shape[0]
    if total > 0:
        lo, hi = int(order.min()), int(order.max())
        for a in datas:
            if lo < 0 or hi >= a.shape[0]:
                raise IndexError(f"row index out of range for layer of {a.shape[0]} rows")

    cdef Py_ssize_t num_layers = len(datas)
    widths = [a.shape[1] for a in datas]
    cdef long long[::1] widths_v = np.array(widths if widths else [0], dtype=np.int64)
    cdef long long n
    if init is None:
        n = 0
        means = [np.zeros(m) for m in widths]
        comoments = [np.zeros((m, m)) for m in widths]
    else:
        n0, means0, comoments0 = init
        n = int(n0)
        means = [np.ascontiguousarray(v, dtype=np.float64).copy() for v in means0]
        comoments = [np.ascontiguousarray(c, dtype=np.float64).copy() for c in comoments0]

    # scratch buffers reused across batches
    means_t = [np.empty(m) for m in widths]
    comoments_t = [np.empty((m, m)) for m in widths]
    mean_b = np.empty(max(widths) if widths else 1)
    dev = np.empty(max(widths) if widths else 1)

    cdef const long long[::1] order_v = order
    cdef double[::1] mean_b_v = mean_b
    cdef double[::1] dev_v = dev

    cdef double current = 0.0
    cdef Py_ssize_t li
    for li in range(num_layers):
        if n >= 2:
            current += _abs_sum(comoments[li]) / (<double> n * widths_v[li] * widths_v[li])

    cdef list committed = []
    cdef long long accepted = 0
    cdef Py_ssize_t start, k
    cdef long long nt
    cdef double tentative, abssum

    for start in range(0, total, batch_size):
        k = batch_size if start + batch_size <= total else total - start
        nt = n + k
        tentative = 0.0
        for li in range(num_layers):
            abssum = _merge_batch(
                datas[li], order_v, start, k,
                <double> n, <double> nt,
                means[li], comoments[li],
                mean_b_v, dev_v,
                means_t[li], comoments_t[li],
            )
            if nt >= 2:
                tentative += abssum / (<double> nt * widths_v[li] * widths_v[li])
        if tentative > current:
            n = nt
            means, means_t = means_t, means
            comoments, comoments_t = comoments_t, comoments
            current = tentative
            accepted += k
            committed.append(tentative)

    per_layer = np.zeros(num_layers)
    for li in range(num_layers):
        if n >= 2:
            per_layer[li] = _abs_sum(comoments[li]) / (<double> n * widths_v[li] * widths_v[li])
    value = float(per_layer.sum())
    return value, int(accepted), np.asarray(committed, dtype=np.float64), per_layer
