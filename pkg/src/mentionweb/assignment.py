"""Exact rectangular linear assignment via shortest augmenting paths.

The solver keeps dual potentials (u, v) and grows the matching one row at a
time along a minimum reduced-cost path, so rectangular matrices are handled
directly instead of being padded square. Ties between equally cheap columns
break toward the lowest column index, which makes the returned matching
deterministic (but carries no meaning: any tied optimum is equally valid).
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def _validate(costs):
    arr = np.asarray(costs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"cost matrix must be 2-D and non-empty, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("cost matrix contains non-finite entries")
    return arr


def solve_min(costs):
    """Matching of size min(rows, cols) minimizing total cost.

    Returns a list of (row, col) pairs sorted by row; each row and column is
    used at most once.
    """
    a = _validate(costs)
    transposed = a.shape[0] > a.shape[1]
    if transposed:
        a = a.T
    n, m = a.shape

    # dual potentials and matching, 1-based with column 0 as sentinel
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    match_row = np.zeros(m + 1, dtype=np.intp)  # column -> matched row, 0 = free
    for i in range(1, n + 1):
        match_row[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        way = np.zeros(m + 1, dtype=np.intp)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            free = ~used[1:]
            cur = a[i0 - 1, :] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            free_cols = np.flatnonzero(free) + 1
            j1 = int(free_cols[np.argmin(minv[free_cols])])
            delta = minv[j1]
            u[match_row[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0 != 0:
            j_prev = int(way[j0])
            match_row[j0] = match_row[j_prev]
            j0 = j_prev

    pairs = [(int(match_row[j] - 1), j - 1) for j in range(1, m + 1) if match_row[j] != 0]
    if transposed:
        pairs = [(c, r) for r, c in pairs]
    pairs.sort()
    return pairs


def solve_max(scores):
    """Matching maximizing total score; solved as solve_min on negated entries."""
    return solve_min(-_validate(scores))


def matching_total(matrix, pairs):
    arr = np.asarray(matrix, dtype=np.float64)
    return float(sum(arr[r, c] for r, c in pairs))
