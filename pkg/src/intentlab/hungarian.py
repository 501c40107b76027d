"""Minimum-cost assignment on square matrices.

Classic shortest-augmenting-path formulation with dual potentials,
O(n^3), with the per-column scan vectorized through numpy. Also provides
the lexicographically-smallest optimal assignment, which is how centroid
alignment breaks exact-cost ties reproducibly.
"""

from __future__ import annotations

import numpy as np


def solve(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Min-cost perfect matching; returns (row_to_col, total cost)."""
    row_to_col, total, _, _ = solve_with_duals(cost)
    return row_to_col, total


def solve_with_duals(
    cost: np.ndarray,
) -> tuple[np.ndarray, float, np.ndarray, np.ndarray]:
    """Min-cost matching plus the optimal dual potentials (u, v).

    The duals satisfy cost[i, j] - u[i] - v[j] >= 0 with equality on
    every matched edge, so they certify optimality and let callers prune
    edges that cannot appear in any optimal matching.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    n = cost.shape[0]
    # 1-based columns; index 0 is the virtual start column.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # column -> row (1-based, 0 = free)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        way = np.zeros(n + 1, dtype=np.int64)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = ~used[1:]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[match[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[match[j] - 1] = j - 1
    total = float(cost[np.arange(n), row_to_col].sum())
    return row_to_col, total, u[1:], v[1:]


def lexicographic_min_assignment(cost: np.ndarray) -> np.ndarray:
    """Lexicographically smallest row_to_col among all min-cost matchings.

    Rows are fixed in ascending order; for each row the smallest column
    that still admits an optimal completion is chosen. Candidates are
    pruned by reduced cost (complementary slackness: optimal matchings
    use zero-reduced-cost edges only) and confirmed by re-solving the
    remaining subproblem.
    """
    cost = np.asarray(cost, dtype=np.float64)
    _, total, u, v = solve_with_duals(cost)
    n = cost.shape[0]
    eps = 1e-9 * (1.0 + abs(total))
    reduced = cost - u[:, None] - v[None, :]
    chosen = np.empty(n, dtype=np.int64)
    avail = list(range(n))
    prefix = 0.0
    for i in range(n):
        rest_rows = np.arange(i + 1, n)
        candidates = [j for j in avail if reduced[i, j] <= eps]
        picked = None
        if len(candidates) == 1:
            picked = candidates[0]
        else:
            for j in candidates:
                rest_cols = [c for c in avail if c != j]
                completion = 0.0
                if len(rest_rows):
                    completion = solve(cost[np.ix_(rest_rows, rest_cols)])[1]
                if prefix + cost[i, j] + completion <= total + eps:
                    picked = j
                    break
        if picked is None:
            # Numerical guard; the pruned set always contains a valid edge.
            picked = min(avail)
        chosen[i] = picked
        prefix += cost[i, picked]
        avail.remove(picked)
    return chosen
