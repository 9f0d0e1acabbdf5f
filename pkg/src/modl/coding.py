"""Coding-length arithmetic shared by every model-selection criterion.

All lengths are natural logarithms of counts of combinatorial choices
("nats").  Conversion to bits happens only at reporting boundaries via
:func:`nats_to_bits`.

Accuracy: values backed by the cached log-factorial table are within
1e-10 (absolute) of the true value.  Beyond the table the functions fall
back to ``lgamma``, which is accurate to a few ulps of the result; for
arguments around 1e6 one ulp of ln(n!) is already ~2e-9, so a tighter
absolute guarantee is not representable in float64.

Everything here is a pure function of its arguments.  The only shared
state is a read-mostly cache (the log-factorial table and Stirling rows),
guarded by a lock on growth; lookups read an immutable snapshot, so the
functions are safe to call concurrently.
"""

from __future__ import annotations

import math
import threading
from typing import Sequence

import numpy as np

from .errors import InvalidArgument

LN2 = math.log(2.0)

# Exact-table bound: ln(n!) for n up to here is cached with compensated
# summation.  2**20 keeps the table under 8 MiB when fully grown.
_TABLE_HARD_CAP = 1 << 20
_INITIAL_TABLE = 1024

_lock = threading.Lock()


def _build_log_factorial(upto: int, start_table: np.ndarray | None) -> np.ndarray:
    """Extend the ln(n!) table to ``upto`` inclusive (Neumaier summation)."""
    table = np.empty(upto + 1, dtype=np.float64)
    if start_table is None:
        table[0] = 0.0
        begin = 1
        total = 0.0
        comp = 0.0
    else:
        n0 = len(start_table)
        table[:n0] = start_table
        begin = n0
        total = float(start_table[-1])
        comp = 0.0
    logs = np.log(np.arange(max(begin, 1), upto + 1, dtype=np.float64))
    for i, term in zip(range(begin, upto + 1), logs):
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        table[i] = total + comp
    return table


_lf_table = _build_log_factorial(_INITIAL_TABLE, None)


def _lf(n: int) -> float:
    table = _lf_table
    if n < len(table):
        return float(table[n])
    if n <= _TABLE_HARD_CAP:
        return float(_ensure_table(n)[n])
    return math.lgamma(n + 1.0)


def _ensure_table(n: int) -> np.ndarray:
    global _lf_table
    with _lock:
        if n >= len(_lf_table):
            grow_to = min(max(n, 2 * len(_lf_table)), _TABLE_HARD_CAP)
            _lf_table = _build_log_factorial(grow_to, _lf_table)
        return _lf_table


def log_factorial_table(n_max: int) -> np.ndarray:
    """Read-only view of the cached ln(n!) values for 0..n_max.

    Intended for vectorized consumers (optimizers) that index it with
    count arrays.  ``n_max`` must stay under the hard cap.
    """
    if n_max < 0:
        raise InvalidArgument("n_max must be nonnegative")
    if n_max > _TABLE_HARD_CAP:
        raise InvalidArgument(f"log-factorial table capped at {_TABLE_HARD_CAP}")
    table = _lf_table if n_max < len(_lf_table) else _ensure_table(n_max)
    view = table[: n_max + 1]
    view.flags.writeable = False
    return view


def nats_to_bits(nats: float) -> float:
    return nats / LN2


def log_factorial(n: int) -> float:
    """ln(n!)."""
    if n < 0:
        raise InvalidArgument(f"log_factorial: n must be >= 0, got {n}")
    return _lf(int(n))


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k).

    Symmetric in k and n-k by construction.  For a small side (<= 64)
    the value is a compensated sum of ratio logs, which stays accurate
    even when n is far beyond the cached table.
    """
    n = int(n)
    k = int(k)
    if k < 0 or n < 0:
        raise InvalidArgument(f"log_binomial: arguments must be >= 0, got ({n}, {k})")
    if k > n:
        raise InvalidArgument(f"log_binomial: k must be <= n, got ({n}, {k})")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if n <= 10_000:
        table = _lf_table if n < len(_lf_table) else _ensure_table(n)
        return float(table[n] - table[k] - table[n - k])
    if k <= 64:
        # Short side: ln prod (n-k+i)/i, accurate for any n; differencing
        # the table would lose absolute precision at large n.
        return math.fsum(
            math.log(n - k + i) - math.log(i) for i in range(1, k + 1)
        )
    if n <= _TABLE_HARD_CAP:
        table = _ensure_table(n) if n >= len(_lf_table) else _lf_table
        return float(table[n] - table[k] - table[n - k])
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


def log_multinomial(counts: Sequence[int]) -> float:
    """ln( (sum counts)! / prod(counts_j!) )."""
    counts = [int(c) for c in counts]
    if not counts:
        raise InvalidArgument("log_multinomial: counts must be nonempty")
    if any(c < 0 for c in counts):
        raise InvalidArgument("log_multinomial: counts must be nonnegative")
    total = sum(counts)
    return _lf(total) - math.fsum(_lf(c) for c in counts)


_stirling_lock = threading.Lock()
_stirling_rows: dict[int, np.ndarray] = {}


def _log_stirling2_row(v: int) -> np.ndarray:
    """Row v of ln S(v, k) for k = 1..v (log-space Stirling recurrence)."""
    cached = _stirling_rows.get(v)
    if cached is not None:
        return cached
    with _stirling_lock:
        cached = _stirling_rows.get(v)
        if cached is not None:
            return cached
        row = np.array([0.0])  # ln S(1, 1)
        klog = np.log(np.arange(1, v + 1, dtype=np.float64))
        for m in range(2, v + 1):
            nxt = np.empty(m)
            # S(m, k) = S(m-1, k-1) + k * S(m-1, k)
            nxt[0] = 0.0  # S(m, 1) = 1
            nxt[m - 1] = 0.0  # S(m, m) = 1
            if m > 2:
                nxt[1 : m - 1] = np.logaddexp(
                    row[: m - 2], klog[1 : m - 1] + row[1 : m - 1]
                )
            row = nxt
        # Keep the cache bounded: rows for huge v are cheap to recompute
        # relative to their footprint.
        if len(_stirling_rows) > 64:
            _stirling_rows.clear()
        _stirling_rows[v] = row
        return row


def log_partition_count(v: int, k: int) -> float:
    """ln B(v, k) with B(v, k) = sum_{i=1..k} S(v, i).

    B counts the partitions of v values into at most k nonempty groups.
    """
    v = int(v)
    k = int(k)
    if v < 1 or k < 1:
        raise InvalidArgument(f"log_partition_count: need v, k >= 1, got ({v}, {k})")
    if k > v:
        raise InvalidArgument(f"log_partition_count: k must be <= v, got ({v}, {k})")
    row = _log_stirling2_row(v)
    if k == 1:
        return 0.0
    m = float(np.max(row[:k]))
    return m + math.log(float(np.sum(np.exp(row[:k] - m))))


def log_partition_count_prefix(v: int) -> np.ndarray:
    """ln B(v, k) for all k = 1..v as one array (used by the optimizers)."""
    if v < 1:
        raise InvalidArgument("log_partition_count_prefix: need v >= 1")
    row = _log_stirling2_row(v)
    return np.logaddexp.accumulate(row)
