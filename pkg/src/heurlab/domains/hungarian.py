"""Minimum-cost perfect assignment on a square cost matrix.

Classic O(n^3) Hungarian algorithm in its potentials-and-augmenting-paths
form. A hand-rolled version beats library dispatch overhead on the tiny
matrices (2x2 to 4x4) the Sokoban heuristic feeds it thousands of times per
solve.
"""

from __future__ import annotations

import math
from typing import Sequence

INF = float("inf")


def hungarian_min_cost(cost: Sequence[Sequence[float]]) -> tuple[list[int], float]:
    """Return (assignment, total) where assignment[i] is the column given to row i.

    Raises ValueError for ragged/non-square input or non-finite entries.
    """
    n = len(cost)
    rows = [list(map(float, row)) for row in cost]
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ValueError(f"cost matrix is not square: row {i} has {len(row)} entries, expected {n}")
        for x in row:
            if not math.isfinite(x):
                raise ValueError(f"cost matrix entry in row {i} is not finite: {x}")
    if n == 0:
        return [], 0.0

    # 1-based potentials over rows (u) and columns (v); p[j] is the row matched
    # to column j, with column 0 acting as the virtual unmatched slot.
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = rows[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    assignment = [0] * n
    for j in range(1, n + 1):
        if p[j]:
            assignment[p[j] - 1] = j - 1
    total = sum(rows[i][assignment[i]] for i in range(n))
    return assignment, total
