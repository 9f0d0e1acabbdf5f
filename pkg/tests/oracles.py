"""Independent reference computations used by the test suite.

Everything here is deliberately naive: exact big-integer arithmetic with a
single final log, and exhaustive enumeration of partition spaces.  None of
it shares code with the package's optimizers, so agreement between the two
is meaningful.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


def exact_log_factorial(n: int) -> float:
    return math.log(math.factorial(n)) if n > 1 else 0.0


def exact_log_binomial(n: int, k: int) -> float:
    c = math.comb(n, k)
    return math.log(c) if c > 1 else 0.0


def exact_stirling2_triangle(v_max: int) -> list[list[int]]:
    """Big-integer S(v, k) for v = 0..v_max (row v has entries k = 0..v)."""
    rows = [[1]]
    for v in range(1, v_max + 1):
        prev = rows[-1]
        row = [0] * (v + 1)
        for k in range(1, v + 1):
            left = prev[k - 1] if k - 1 <= v - 1 else 0
            right = prev[k] if k <= v - 1 else 0
            row[k] = left + k * right
        rows.append(row)
    return rows


def exact_log_partition_count(v: int, k: int) -> float:
    triangle = exact_stirling2_triangle(v)
    total = sum(triangle[v][i] for i in range(1, k + 1))
    return math.log(total) if total > 1 else 0.0


def interval_cost_exact(counts: list[list[int]]) -> float:
    """Exact interval-partition cost: log of one big-integer product.

    counts: per-part class counts.  The encoded choices are the part count
    (n options), the composition of n into parts, each part's class
    distribution, and the labels within each part.
    """
    part_totals = [sum(c) for c in counts]
    n = sum(part_totals)
    i = len(counts)
    j = len(counts[0])
    value = n * math.comb(n + i - 1, i - 1)
    for row, total in zip(counts, part_totals):
        value *= math.comb(total + j - 1, j - 1)
        mult = math.factorial(total)
        for c in row:
            mult //= math.factorial(c)
        value *= mult
    return math.log(value)


def grouping_cost_exact(v_total: int, counts: list[list[int]]) -> float:
    """Exact value-grouping cost for a partition into len(counts) groups."""
    k = len(counts)
    j = len(counts[0])
    triangle = exact_stirling2_triangle(v_total)
    b = sum(triangle[v_total][i] for i in range(1, k + 1))
    log_terms = math.log(v_total) + math.log(b) if v_total > 1 else 0.0
    value = 1
    for row in counts:
        total = sum(row)
        value *= math.comb(total + j - 1, j - 1)
        mult = math.factorial(total)
        for c in row:
            mult //= math.factorial(c)
        value *= mult
    return log_terms + math.log(value)


def brute_force_discretization(labels, n_classes: int):
    """Exhaustive minimum over all contiguous partitions of the label sequence.

    labels: class index per instance, already in value-sorted order with all
    values distinct (one elementary position each).  Returns (min cost,
    best counts).  Exponential; keep n small.
    """
    labels = list(labels)
    n = len(labels)
    best = None
    best_counts = None
    for n_cuts in range(0, n):
        for cuts in combinations(range(1, n), n_cuts):
            bounds = [0, *cuts, n]
            counts = []
            for s, e in zip(bounds[:-1], bounds[1:]):
                row = [0] * n_classes
                for y in labels[s:e]:
                    row[y] += 1
                counts.append(row)
            cost = interval_cost_exact(counts)
            if best is None or cost < best - 1e-14:
                best = cost
                best_counts = counts
    return best, best_counts


def set_partitions(n: int):
    """All set partitions of range(n) as restricted-growth assignment lists."""

    def rec(i, assign, k):
        if i == n:
            yield list(assign)
            return
        for g in range(k + 1):
            assign.append(g)
            yield from rec(i + 1, assign, k if g < k else k + 1)
            assign.pop()

    yield from rec(0, [], 0)


def brute_force_grouping(counts, n_classes: int):
    """Exhaustive minimum over all set partitions of the values.

    counts: per-value class-count rows (V x J).  Returns (min cost, best
    assignment).
    """
    v = len(counts)
    best = None
    best_assign = None
    for assign in set_partitions(v):
        k = max(assign) + 1
        grouped = [[0] * n_classes for _ in range(k)]
        for value_idx, g in enumerate(assign):
            for j in range(n_classes):
                grouped[g][j] += counts[value_idx][j]
        cost = grouping_cost_exact(v, grouped)
        if best is None or cost < best - 1e-14:
            best = cost
            best_assign = assign
    return best, best_assign


def _oracle_lf(n_max: int) -> np.ndarray:
    return np.array([exact_log_factorial(i) for i in range(n_max + 1)])


def brute_force_discretization_batch(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Vectorized exhaustive minimum for a batch of same-length datasets.

    labels: (m, n) class indices in value-sorted order.  Returns the (m,)
    minimum costs.  Enumerates all 2^(n-1) cut masks once for the batch.
    """
    m, n = labels.shape
    j = n_classes
    lf = _oracle_lf(n + j + 1)
    # prefix[:, p, c] = count of class c among the first p positions
    prefix = np.zeros((m, n + 1, j))
    onehot = np.eye(j)[labels]
    prefix[:, 1:, :] = np.cumsum(onehot, axis=1)

    def segment_term(s: int, e: int) -> np.ndarray:
        c = prefix[:, e, :] - prefix[:, s, :]
        tot = (e - s) * np.ones(m, dtype=int)
        comp = lf[tot + j - 1] - lf[j - 1] - lf[tot]
        return comp + lf[tot] - lf[c.astype(int)].sum(axis=1)

    seg_cache: dict[tuple[int, int], np.ndarray] = {}

    def seg(s: int, e: int) -> np.ndarray:
        key = (s, e)
        if key not in seg_cache:
            seg_cache[key] = segment_term(s, e)
        return seg_cache[key]

    best = np.full(m, np.inf)
    base = math.log(n)
    for mask in range(1 << (n - 1)):
        bounds = [0]
        for p in range(1, n):
            if mask & (1 << (p - 1)):
                bounds.append(p)
        bounds.append(n)
        i = len(bounds) - 1
        cost = base + exact_log_binomial(n + i - 1, i - 1)
        tot = np.zeros(m)
        for s, e in zip(bounds[:-1], bounds[1:]):
            tot += seg(s, e)
        np.minimum(best, cost + tot, out=best)
    return best


def brute_force_grouping_batch(counts: np.ndarray, n_classes: int) -> np.ndarray:
    """Vectorized exhaustive minimum for a batch of same-shape count tables.

    counts: (m, v, j) per-value class counts.  Returns (m,) minimum costs.
    """
    m, v, j = counts.shape
    assert j == n_classes
    n_max = int(counts.sum(axis=(1, 2)).max())
    lf = _oracle_lf(n_max + j + 1)
    # Class counts for every value subset, via lowest-set-bit recursion.
    subset_counts = np.zeros((m, 1 << v, j))
    for s in range(1, 1 << v):
        low = s & -s
        subset_counts[:, s, :] = (
            subset_counts[:, s ^ low, :] + counts[:, low.bit_length() - 1, :]
        )
    tot = subset_counts.sum(axis=2).astype(int)
    term = (
        lf[tot + j - 1]
        - lf[j - 1]
        - lf[subset_counts.astype(int)].sum(axis=2)
    )
    triangle = exact_stirling2_triangle(v)
    log_b = [0.0] + [
        math.log(sum(triangle[v][i] for i in range(1, k + 1))) for k in range(1, v + 1)
    ]
    base = math.log(v) if v > 1 else 0.0
    best = np.full(m, np.inf)
    for assign in set_partitions(v):
        k = max(assign) + 1
        masks = [0] * k
        for value_idx, g in enumerate(assign):
            masks[g] |= 1 << value_idx
        cost = base + log_b[k] + sum(term[:, msk] for msk in masks)
        np.minimum(best, cost, out=best)
    return best
