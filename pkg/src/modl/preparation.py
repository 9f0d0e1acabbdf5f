"""Optimal supervised univariate preparation.

Numerical variables are discretized into intervals, categorical variables
grouped into value sets, by minimizing a two-part coding length: a
hierarchical-uniform prior over the partition plus the multinomial cost of
the class labels within each part.

Interval partitions of n instances into I parts cost::

    ln n + ln C(n+I-1, I-1) + sum_i ln C(n_i+J-1, J-1) + sum_i ln(n_i! / prod_j n_ij!)

and value groupings of V observed values into K groups cost::

    ln V + ln B(V, K) + sum_k ln C(n_k+J-1, J-1) + sum_k ln(n_k! / prod_j n_kj!)

where B(V, K) counts partitions into at most K groups.  The first two
terms and the per-part combination terms are the prior; the multinomial
terms are the likelihood.

Small domains are optimized exactly (dynamic programming over cut points,
subset DP over value sets); larger ones fall back to greedy bottom-up
merging driven by a priority queue of cost deltas, followed by a
boundary/value exchange post-optimization, retrying merges until nothing
improves.  The search always passes through the one-part null model, so
the returned model never costs more than null.

Missing values form their own dedicated part whenever that beats folding
everything into the null model; in the null model the single part absorbs
them.  Everything here is pure and thread-safe; per-variable preparation
parallelizes across a process pool (see :func:`prepare_columns`).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import coding
from .dataset import CategoricalColumn, Column, NumericColumn
from .errors import InvalidArgument
from .parallel import run_ordered

INTERVALS = "Intervals"
GROUPS = "Groups"

#: Token standing for a missing categorical value; a real category can
#: never be the empty string (an empty CSV field parses as missing).
MISSING_TOKEN = ""

#: Above these domain sizes the optimizers switch from the exact lane to
#: greedy merging with exchange post-optimization.
EXACT_MAX_INTERVAL_BINS = 48
EXACT_MAX_GROUP_VALUES = 10

#: Numerical domains with more distinct values than this start from
#: equal-frequency elementary bins instead of one bin per value.
MAX_ELEMENTARY_BINS = 1024

#: Categorical domains beyond this many distinct values start from a
#: granularity-capped state: the least frequent tail shares one initial
#: group (values can still migrate out during exchange passes).
MAX_INITIAL_GROUPS = 512

_IMPROVE_EPS = 1e-10


def _fmt_bound(x: float) -> str:
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "+inf"
    return repr(float(x))


@dataclass
class Part:
    """One interval or value group with its per-class instance counts."""

    counts: np.ndarray
    lower: float = -math.inf
    upper: float = math.inf
    is_missing: bool = False
    values: tuple[str, ...] = ()
    is_catchall: bool = False

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def label(self, kind: str) -> str:
        if self.is_missing:
            return "Missing"
        if kind == INTERVALS:
            return f"]{_fmt_bound(self.lower)},{_fmt_bound(self.upper)}]"
        shown = ", ".join(v if v != MISSING_TOKEN else "Missing" for v in self.values)
        return "{" + shown + "}"


@dataclass
class PartitionModel:
    """A discretization or grouping with its coding-length decomposition."""

    variable: str
    kind: str
    parts: list[Part]
    class_labels: list[str]
    n: int
    v_distinct: int = 0  # observed distinct values (groupings only)
    prior_nats: float = 0.0
    likelihood_nats: float = 0.0

    @property
    def total_nats(self) -> float:
        return self.prior_nats + self.likelihood_nats

    @property
    def part_count(self) -> int:
        return len(self.parts)

    def counts_matrix(self) -> np.ndarray:
        return np.stack([p.counts for p in self.parts])

    # -- deployment-side part lookup ------------------------------------

    def interval_uppers(self) -> np.ndarray:
        uppers = [p.upper for p in self.parts if not p.is_missing]
        return np.asarray(uppers, dtype=np.float64)

    def missing_part_index(self) -> int | None:
        for i, p in enumerate(self.parts):
            if p.is_missing:
                return i
        return None

    def part_index_numeric(self, values: np.ndarray) -> np.ndarray:
        """Part index per value; NaN routes to the missing part if any,
        otherwise to the leftmost interval."""
        if self.kind != INTERVALS:
            raise InvalidArgument("not an interval model")
        missing_idx = self.missing_part_index()
        offset = 1 if missing_idx == 0 else 0
        uppers = self.interval_uppers()
        vals = np.asarray(values, dtype=np.float64)
        idx = np.searchsorted(uppers, vals, side="left")
        idx = np.minimum(idx, len(uppers) - 1) + offset
        nan = np.isnan(vals)
        if nan.any():
            idx[nan] = missing_idx if missing_idx is not None else offset
        return idx.astype(np.int64)

    def group_lookup(self) -> tuple[dict[str, int], int]:
        table: dict[str, int] = {}
        catchall = 0
        for i, p in enumerate(self.parts):
            if p.is_catchall:
                catchall = i
            for v in p.values:
                table[v] = i
        return table, catchall

    def part_index_categorical(self, values: list[str | None]) -> np.ndarray:
        """Part index per value; unseen values route to the catch-all group."""
        if self.kind != GROUPS:
            raise InvalidArgument("not a grouping model")
        table, catchall = self.group_lookup()
        out = np.empty(len(values), dtype=np.int64)
        for i, v in enumerate(values):
            token = MISSING_TOKEN if v is None else v
            out[i] = table.get(token, catchall)
        return out

    def part_index_cell(self, cell) -> int:
        if self.kind == INTERVALS:
            v = np.nan if cell is None else float(cell)
            return int(self.part_index_numeric(np.asarray([v]))[0])
        return int(self.part_index_categorical([cell])[0])

    def to_json_dict(self) -> dict:
        parts = []
        for p in self.parts:
            entry: dict = {
                "label": p.label(self.kind),
                "counts": [int(c) for c in p.counts],
            }
            if p.is_missing:
                entry["missing"] = True
            elif self.kind == INTERVALS:
                entry["lower"] = None if p.lower == -math.inf else p.lower
                entry["upper"] = None if p.upper == math.inf else p.upper
            else:
                entry["values"] = list(p.values)
                if p.is_catchall:
                    entry["catch_all"] = True
            parts.append(entry)
        out = {
            "variable": self.variable,
            "kind": self.kind,
            "classes": list(self.class_labels),
            "instances": self.n,
            "prior_nats": self.prior_nats,
            "likelihood_nats": self.likelihood_nats,
            "parts": parts,
        }
        if self.kind == GROUPS:
            out["distinct_values"] = self.v_distinct
        return out


def model_from_json_dict(doc: dict) -> PartitionModel:
    parts = []
    for entry in doc["parts"]:
        counts = np.asarray(entry["counts"], dtype=np.int64)
        if entry.get("missing"):
            parts.append(Part(counts, is_missing=True))
        elif doc["kind"] == INTERVALS:
            lower = entry.get("lower")
            upper = entry.get("upper")
            parts.append(
                Part(
                    counts,
                    lower=-math.inf if lower is None else float(lower),
                    upper=math.inf if upper is None else float(upper),
                )
            )
        else:
            parts.append(
                Part(
                    counts,
                    values=tuple(entry["values"]),
                    is_catchall=bool(entry.get("catch_all")),
                )
            )
    return PartitionModel(
        variable=doc["variable"],
        kind=doc["kind"],
        parts=parts,
        class_labels=list(doc["classes"]),
        n=int(doc["instances"]),
        v_distinct=int(doc.get("distinct_values", 0)),
        prior_nats=float(doc["prior_nats"]),
        likelihood_nats=float(doc["likelihood_nats"]),
    )


# -- cost computation ----------------------------------------------------


def _part_prior_term(total: int, j: int) -> float:
    return coding.log_binomial(total + j - 1, j - 1)


def _part_likelihood_term(counts: np.ndarray) -> float:
    return coding.log_multinomial([int(c) for c in counts])


def _interval_split_terms(counts: np.ndarray, n: int) -> tuple[float, float]:
    i = counts.shape[0]
    j = counts.shape[1]
    prior = math.log(n) + coding.log_binomial(n + i - 1, i - 1)
    like = 0.0
    for row in counts:
        prior += _part_prior_term(int(row.sum()), j)
        like += _part_likelihood_term(row)
    return prior, like


def _grouping_split_terms(counts: np.ndarray, v: int) -> tuple[float, float]:
    k = counts.shape[0]
    j = counts.shape[1]
    prior = (math.log(v) if v > 1 else 0.0) + coding.log_partition_count(v, k)
    like = 0.0
    for row in counts:
        prior += _part_prior_term(int(row.sum()), j)
        like += _part_likelihood_term(row)
    return prior, like


def _check_counts(model: PartitionModel) -> np.ndarray:
    if not model.parts:
        raise InvalidArgument("partition model has no parts")
    counts = model.counts_matrix()
    if counts.min() < 0:
        raise InvalidArgument("negative class count in partition model")
    if int(counts.sum()) != model.n:
        raise InvalidArgument(
            f"inconsistent counts: parts sum to {int(counts.sum())}, model says {model.n}"
        )
    return counts


def discretization_cost(model: PartitionModel) -> float:
    """Total coding length of an interval model; refreshes the stored split."""
    if model.kind != INTERVALS:
        raise InvalidArgument("discretization_cost needs an interval model")
    counts = _check_counts(model)
    prior, like = _interval_split_terms(counts, model.n)
    model.prior_nats = prior
    model.likelihood_nats = like
    return prior + like


def grouping_cost(model: PartitionModel) -> float:
    """Total coding length of a grouping model; refreshes the stored split."""
    if model.kind != GROUPS:
        raise InvalidArgument("grouping_cost needs a grouping model")
    counts = _check_counts(model)
    v = model.v_distinct or sum(len(p.values) for p in model.parts)
    prior, like = _grouping_split_terms(counts, v)
    model.prior_nats = prior
    model.likelihood_nats = like
    return prior + like


def null_interval_cost(class_totals: np.ndarray, n: int) -> float:
    prior, like = _interval_split_terms(class_totals.reshape(1, -1), n)
    return prior + like


def null_grouping_cost(class_totals: np.ndarray, v: int) -> float:
    prior, like = _grouping_split_terms(class_totals.reshape(1, -1), v)
    return prior + like


def level(best: PartitionModel, null_nats: float) -> float:
    """Normalized importance: 1 - cost(best)/cost(null), clipped to [0, 1]."""
    if null_nats <= 0:
        raise InvalidArgument("null cost must be positive")
    value = 1.0 - best.total_nats / null_nats
    return min(max(value, 0.0), 1.0)


# -- shared optimizer helpers ---------------------------------------------


class _CostTable:
    """Combined per-part cost lookups over a shared log-factorial table.

    part_term(counts) folds the composition prior and the multinomial
    likelihood of one part:  lf(t+J-1) - lf(J-1) - sum_j lf(c_j).
    """

    def __init__(self, n: int, j: int):
        self.j = j
        self.lf = coding.log_factorial_table(n + j + 1)
        self.base = float(self.lf[j - 1])

    def part_term(self, counts: np.ndarray) -> float:
        t = int(counts.sum())
        return float(self.lf[t + self.j - 1] - self.base - self.lf[counts].sum())

    def part_terms_rows(self, counts: np.ndarray) -> np.ndarray:
        t = counts.sum(axis=1)
        return self.lf[t + self.j - 1] - self.base - self.lf[counts].sum(axis=1)


def _partition_prior_interval(n: int, i_total: int) -> float:
    return math.log(n) + coding.log_binomial(n + i_total - 1, i_total - 1)


# -- discretization optimizer ----------------------------------------------


def _exact_discretization(bins: np.ndarray, n: int, extra: int, extra_term: float,
                          table: _CostTable) -> tuple[list[int], float]:
    """Exact DP over elementary bins.

    Returns (cut positions between bins, total cost).  ``extra`` counts
    dedicated parts outside the interval axis (the missing part), whose
    combined term is ``extra_term``.
    """
    d = bins.shape[0]
    prefix = np.zeros((d + 1, bins.shape[1]), dtype=np.int64)
    np.cumsum(bins, axis=0, out=prefix[1:])
    f = np.full((d + 1, d + 1), np.inf)
    for s in range(d):
        seg = prefix[s + 1 :] - prefix[s]
        f[s, s + 1 :] = table.part_terms_rows(seg)

    dp = np.full((d + 1, d + 1), np.inf)
    dp[1] = f[0]
    args = np.zeros((d + 1, d + 1), dtype=np.int64)
    for m in range(2, d + 1):
        cand = dp[m - 1][:, None] + f
        dp[m] = np.min(cand, axis=0)
        args[m] = np.argmin(cand, axis=0)

    totals = np.full(d + 1, np.inf)
    for m in range(1, d + 1):
        totals[m] = (
            _partition_prior_interval(n, m + extra) + extra_term + dp[m, d]
        )
    best_m = int(np.argmin(totals[1:]) + 1)
    cuts: list[int] = []
    pos = d
    for m in range(best_m, 1, -1):
        pos = int(args[m, pos])
        cuts.append(pos)
    cuts.reverse()
    return cuts, float(totals[best_m])


def _greedy_discretization(bins: np.ndarray, n: int, extra: int, extra_term: float,
                           table: _CostTable) -> tuple[list[int], float]:
    """Greedy best-merge to a single interval, keeping the best state seen,
    then boundary-exchange and merge retries until nothing improves."""
    d = bins.shape[0]
    prefix = np.zeros((d + 1, bins.shape[1]), dtype=np.int64)
    np.cumsum(bins, axis=0, out=prefix[1:])

    def seg_term(s: int, e: int) -> float:
        return table.part_term(prefix[e] - prefix[s])

    # Parts as ranges [start, end) over bins, in a doubly linked structure.
    starts = list(range(d))
    ends = list(range(1, d + 1))
    prev = list(range(-1, d - 1))
    nxt = list(range(1, d + 1))
    nxt[-1] = -1
    alive = [True] * d
    terms = [seg_term(s, e) for s, e in zip(starts, ends)]

    heap: list[tuple[float, int, int, int]] = []
    for a in range(d - 1):
        b = a + 1
        delta = seg_term(starts[a], ends[b]) - terms[a] - terms[b]
        heapq.heappush(heap, (delta, starts[a], a, b))

    sum_terms = float(sum(terms))
    i_parts = d
    cost = _partition_prior_interval(n, i_parts + extra) + extra_term + sum_terms
    best_cost = cost
    removed: list[int] = []  # cut positions removed, in merge order
    best_merges = 0

    while i_parts > 1:
        while True:
            delta, _, a, b = heapq.heappop(heap)
            if alive[a] and alive[b] and nxt[a] == b:
                break
        merged_term = terms[a] + terms[b] + delta
        new_id = len(starts)
        starts.append(starts[a])
        ends.append(ends[b])
        terms.append(merged_term)
        alive.append(True)
        alive[a] = alive[b] = False
        prev.append(prev[a])
        nxt.append(nxt[b])
        if prev[a] >= 0:
            nxt[prev[a]] = new_id
        if nxt[b] >= 0:
            prev[nxt[b]] = new_id
        removed.append(ends[a])
        sum_terms += delta
        i_parts -= 1
        cost = _partition_prior_interval(n, i_parts + extra) + extra_term + sum_terms
        if cost < best_cost - _IMPROVE_EPS:
            best_cost = cost
            best_merges = len(removed)
        p = prev[new_id]
        if p >= 0:
            heapq.heappush(
                heap,
                (seg_term(starts[p], ends[new_id]) - terms[p] - terms[new_id],
                 starts[p], p, new_id),
            )
        q = nxt[new_id]
        if q >= 0:
            heapq.heappush(
                heap,
                (seg_term(starts[new_id], ends[q]) - terms[new_id] - terms[q],
                 starts[new_id], new_id, q),
            )

    gone = set(removed[:best_merges])
    cuts = [c for c in range(1, d) if c not in gone]

    # Post-optimization: move boundaries bin by bin, then retry merges.
    def total_for(cuts_list: list[int]) -> float:
        bounds = [0, *cuts_list, d]
        s = sum(seg_term(a, b) for a, b in zip(bounds[:-1], bounds[1:]))
        return _partition_prior_interval(n, len(cuts_list) + 1 + extra) + extra_term + s

    best_total = total_for(cuts)
    for _ in range(200):
        changed = False
        # Boundary exchange: partition prior is unchanged, only the two
        # adjacent part terms move.
        i = 0
        while i < len(cuts):
            lo = cuts[i - 1] if i > 0 else 0
            hi = cuts[i + 1] if i + 1 < len(cuts) else d
            c = cuts[i]
            here = seg_term(lo, c) + seg_term(c, hi)
            best_c, best_val = c, here
            for cand in (c - 1, c + 1):
                if lo < cand < hi:
                    val = seg_term(lo, cand) + seg_term(cand, hi)
                    if val < best_val - _IMPROVE_EPS:
                        best_c, best_val = cand, val
            if best_c != c:
                cuts[i] = best_c
                best_total += best_val - here
                changed = True
                continue  # keep sliding the same boundary
            i += 1
        # Merge retry: dropping one cut changes the partition prior too.
        while len(cuts) >= 1:
            bounds = [0, *cuts, d]
            i_now = len(cuts) + 1
            dprior = (
                _partition_prior_interval(n, i_now - 1 + extra)
                - _partition_prior_interval(n, i_now + extra)
            )
            best_i, best_delta = -1, -_IMPROVE_EPS
            for ci in range(len(cuts)):
                lo, c, hi = bounds[ci], bounds[ci + 1], bounds[ci + 2]
                delta = dprior + seg_term(lo, hi) - seg_term(lo, c) - seg_term(c, hi)
                if delta < best_delta:
                    best_i, best_delta = ci, delta
            if best_i < 0:
                break
            del cuts[best_i]
            best_total += best_delta
            changed = True
        if not changed:
            break
    return cuts, best_total


def optimize_discretization(
    values,
    classes,
    class_labels: list[str] | None = None,
    variable: str = "",
) -> PartitionModel:
    """Cost-minimal interval model for one numerical variable.

    ``values`` may contain NaN/None for missing cells; ``classes`` are
    class indices.  Exact for small distinct-value counts, greedy with
    exchange post-optimization beyond; deterministic throughout.
    """
    vals = np.asarray(
        [np.nan if v is None else float(v) for v in values], dtype=np.float64
    )
    y = np.asarray(classes, dtype=np.int64)
    if vals.shape != y.shape or vals.size == 0:
        raise InvalidArgument("values and classes must align and be nonempty")
    if class_labels is None:
        class_labels = [str(i) for i in range(int(y.max()) + 1)]
    j = len(class_labels)
    n = int(vals.size)
    totals = np.bincount(y, minlength=j).astype(np.int64)

    missing_mask = np.isnan(vals)
    miss_counts = np.bincount(y[missing_mask], minlength=j).astype(np.int64)
    n_missing = int(missing_mask.sum())

    present = vals[~missing_mask]
    y_present = y[~missing_mask]
    order = np.argsort(present, kind="stable")
    sv = present[order]
    sy = y_present[order]
    if len(sv):
        new_bin = np.concatenate(([True], sv[1:] != sv[:-1]))
        bin_ids = np.cumsum(new_bin) - 1
        d = int(bin_ids[-1]) + 1
        bins = np.zeros((d, j), dtype=np.int64)
        np.add.at(bins, (bin_ids, sy), 1)
        distinct = sv[new_bin]
        edge_low = distinct.copy()
        edge_high = distinct.copy()
        if d > MAX_ELEMENTARY_BINS:
            # Granularity cap: equal-frequency coarse bins; cut candidates
            # stay between distinct observed values.
            cum = bins.sum(axis=1).cumsum()
            targets = cum[-1] * (np.arange(1, MAX_ELEMENTARY_BINS) / MAX_ELEMENTARY_BINS)
            splits = np.unique(np.searchsorted(cum, targets) + 1)
            splits = splits[splits < d]
            bounds = np.concatenate(([0], splits, [d]))
            coarse = np.add.reduceat(bins, bounds[:-1], axis=0)
            edge_low = distinct[bounds[:-1]]
            edge_high = distinct[bounds[1:] - 1]
            bins = coarse
            d = bins.shape[0]
    else:
        d = 0
        bins = np.zeros((0, j), dtype=np.int64)
        edge_low = edge_high = sv

    table = _CostTable(n, j)

    def build(cuts: list[int]) -> list[Part]:
        parts: list[Part] = []
        if n_missing:
            parts.append(Part(miss_counts.copy(), is_missing=True))
        bounds = [0, *cuts, d]
        prefix = np.zeros((d + 1, j), dtype=np.int64)
        np.cumsum(bins, axis=0, out=prefix[1:])
        for a, b in zip(bounds[:-1], bounds[1:]):
            lower = -math.inf if a == 0 else float((edge_high[a - 1] + edge_low[a]) / 2.0)
            upper = math.inf if b == d else float((edge_high[b - 1] + edge_low[b]) / 2.0)
            parts.append(Part(prefix[b] - prefix[a], lower=lower, upper=upper))
        return parts

    null_model = PartitionModel(
        variable, INTERVALS, [Part(totals.copy())], list(class_labels), n
    )
    null_total = discretization_cost(null_model)

    if d == 0:
        return null_model

    extra = 1 if n_missing else 0
    extra_term = table.part_term(miss_counts) if n_missing else 0.0
    if d <= EXACT_MAX_INTERVAL_BINS:
        cuts, total = _exact_discretization(bins, n, extra, extra_term, table)
    else:
        cuts, total = _greedy_discretization(bins, n, extra, extra_term, table)

    if total >= null_total - 1e-12:
        return null_model
    model = PartitionModel(
        variable, INTERVALS, build(cuts), list(class_labels), n
    )
    discretization_cost(model)
    return model


# -- grouping optimizer ----------------------------------------------------


def _exact_grouping(counts: np.ndarray, v: int, table: _CostTable) -> tuple[list[int], float]:
    """Subset DP over value sets: exact minimum over all set partitions.

    Returns (group assignment per value, total cost).
    """
    full = (1 << v) - 1
    subset_counts = np.zeros((full + 1, counts.shape[1]), dtype=np.int64)
    for s in range(1, full + 1):
        low = s & -s
        subset_counts[s] = subset_counts[s ^ low] + counts[low.bit_length() - 1]
    g = table.part_terms_rows(subset_counts[1:])
    g = np.concatenate(([np.inf], g))

    log_v = math.log(v) if v > 1 else 0.0
    log_b = coding.log_partition_count_prefix(v)

    inf = math.inf
    dp = [[inf] * (full + 1) for _ in range(v + 1)]
    choice = [[0] * (full + 1) for _ in range(v + 1)]
    dp[0][0] = 0.0
    for k in range(1, v + 1):
        dp_prev = dp[k - 1]
        dp_k = dp[k]
        ch_k = choice[k]
        for mask in range(1, full + 1):
            low = mask & -mask
            rest = mask ^ low
            # Enumerate subsets of `rest`; the group containing `low` is
            # low | sub, which makes each partition appear exactly once.
            sub = rest
            best = dp_prev[rest] + g[low]
            best_t = low
            while sub:
                t = low | sub
                val = dp_prev[mask ^ t] + g[t]
                if val < best - 1e-15:
                    best = val
                    best_t = t
                sub = (sub - 1) & rest
            dp_k[mask] = best
            ch_k[mask] = best_t
    totals = [inf] * (v + 1)
    for k in range(1, v + 1):
        totals[k] = log_v + float(log_b[k - 1]) + dp[k][full]
    best_k = min(range(1, v + 1), key=lambda k: (totals[k], k))
    assign = [0] * v
    mask = full
    for k in range(best_k, 0, -1):
        t = choice[k][mask]
        for b in range(v):
            if t & (1 << b):
                assign[b] = k - 1
        mask ^= t
    return assign, totals[best_k]


def _greedy_grouping(counts: np.ndarray, v: int, table: _CostTable) -> tuple[list[int], float]:
    """Greedy pair merging down to one group (tracking the best state),
    then value-exchange passes and merge retries."""
    v_obs, j = counts.shape
    log_v = math.log(v) if v > 1 else 0.0
    log_b = coding.log_partition_count_prefix(v)

    # Granularity cap: least frequent values share one starting group.
    order = sorted(range(v_obs), key=lambda i: (int(counts[i].sum()), i))
    groups: list[list[int]] = []
    if v_obs > MAX_INITIAL_GROUPS:
        n_tail = v_obs - (MAX_INITIAL_GROUPS - 1)
        tail = sorted(order[:n_tail])
        rest = sorted(order[n_tail:])
        groups.append(tail)
        groups.extend([i] for i in rest)
    else:
        groups = [[i] for i in range(v_obs)]

    gcounts = [counts[g].sum(axis=0) for g in groups]
    terms = [table.part_term(c) for c in gcounts]
    alive = [True] * len(groups)
    sum_terms = float(sum(terms))
    k_groups = len(groups)

    def partition_prior(k: int) -> float:
        return log_v + float(log_b[k - 1])

    heap: list[tuple[float, int, int]] = []
    for a in range(len(groups)):
        for b in range(a + 1, len(groups)):
            delta = table.part_term(gcounts[a] + gcounts[b]) - terms[a] - terms[b]
            heapq.heappush(heap, (delta, a, b))

    cost = partition_prior(k_groups) + sum_terms
    best_cost = cost
    merges: list[tuple[int, int]] = []
    best_merges = 0
    while k_groups > 1:
        while True:
            delta, a, b = heapq.heappop(heap)
            if alive[a] and alive[b]:
                break
        new_id = len(groups)
        groups.append(sorted(groups[a] + groups[b]))
        gcounts.append(gcounts[a] + gcounts[b])
        terms.append(terms[a] + terms[b] + delta)
        alive.append(True)
        alive[a] = alive[b] = False
        merges.append((a, b))
        sum_terms += delta
        k_groups -= 1
        cost = partition_prior(k_groups) + sum_terms
        if cost < best_cost - _IMPROVE_EPS:
            best_cost = cost
            best_merges = len(merges)
        for other in range(new_id):
            if alive[other]:
                d = (
                    table.part_term(gcounts[new_id] + gcounts[other])
                    - terms[new_id]
                    - terms[other]
                )
                lo, hi = min(other, new_id), max(other, new_id)
                heapq.heappush(heap, (d, lo, hi))

    # Reconstruct the best state by replaying the merge prefix.
    if v_obs > MAX_INITIAL_GROUPS:
        n_tail = v_obs - (MAX_INITIAL_GROUPS - 1)
        tail = sorted(order[:n_tail])
        rest = sorted(order[n_tail:])
        state: list[list[int] | None] = [tail] + [[i] for i in rest]
    else:
        state = [[i] for i in range(v_obs)]
    for a, b in merges[:best_merges]:
        state.append(sorted(state[a] + state[b]))
        state[a] = None
        state[b] = None
    final_groups = [g for g in state if g is not None]

    assign = [0] * v_obs
    for gi, g in enumerate(final_groups):
        for i in g:
            assign[i] = gi

    # Value-exchange passes plus merge retries.
    k_now = len(final_groups)
    gcounts2 = [counts[[i for i in range(v_obs) if assign[i] == g]].sum(axis=0)
                for g in range(k_now)]
    terms2 = [table.part_term(c) for c in gcounts2]
    total = partition_prior(k_now) + float(sum(terms2))

    def compact() -> None:
        nonlocal assign, gcounts2, terms2, k_now
        occupied = sorted(set(assign))
        remap = {g: i for i, g in enumerate(occupied)}
        assign = [remap[g] for g in assign]
        gcounts2 = [gcounts2[g] for g in occupied]
        terms2 = [terms2[g] for g in occupied]
        k_now = len(occupied)

    for _ in range(1000):
        changed = False
        for value_idx in range(v_obs):
            src = assign[value_idx]
            row = counts[value_idx]
            emptying = int(gcounts2[src].sum()) == int(row.sum())
            if emptying and k_now == 1:
                continue
            term_src_without = (
                0.0 if emptying else table.part_term(gcounts2[src] - row)
            )
            dprior = (
                partition_prior(k_now - 1) - partition_prior(k_now) if emptying else 0.0
            )
            best_dst, best_delta = -1, -_IMPROVE_EPS
            for dst in range(k_now):
                if dst == src:
                    continue
                delta = (
                    dprior
                    + term_src_without
                    + table.part_term(gcounts2[dst] + row)
                    - terms2[src]
                    - terms2[dst]
                )
                if delta < best_delta:
                    best_dst, best_delta = dst, delta
            if best_dst >= 0:
                gcounts2[src] = gcounts2[src] - row
                gcounts2[best_dst] = gcounts2[best_dst] + row
                terms2[src] = term_src_without
                terms2[best_dst] = table.part_term(gcounts2[best_dst])
                assign[value_idx] = best_dst
                total += best_delta
                changed = True
                if emptying:
                    compact()
        # Merge retry: joining two groups also shrinks the partition prior.
        while k_now > 1:
            dprior = partition_prior(k_now - 1) - partition_prior(k_now)
            best_pair, best_delta = None, -_IMPROVE_EPS
            for a in range(k_now):
                for b in range(a + 1, k_now):
                    delta = (
                        dprior
                        + table.part_term(gcounts2[a] + gcounts2[b])
                        - terms2[a]
                        - terms2[b]
                    )
                    if delta < best_delta:
                        best_pair, best_delta = (a, b), delta
            if best_pair is None:
                break
            a, b = best_pair
            gcounts2[a] = gcounts2[a] + gcounts2[b]
            terms2[a] = table.part_term(gcounts2[a])
            del gcounts2[b], terms2[b]
            assign = [a if g == b else (g - 1 if g > b else g) for g in assign]
            k_now -= 1
            total += best_delta
            changed = True
        if not changed:
            break
    return assign, total


def optimize_grouping(
    values,
    classes,
    class_labels: list[str] | None = None,
    variable: str = "",
) -> PartitionModel:
    """Cost-minimal value grouping for one categorical variable.

    Missing cells count as one dedicated value token.  Exact for small
    distinct-value counts (subset DP), greedy with value-exchange
    post-optimization beyond; deterministic throughout.
    """
    tokens = [MISSING_TOKEN if v is None else str(v) for v in values]
    y = np.asarray(classes, dtype=np.int64)
    if len(tokens) != len(y) or len(tokens) == 0:
        raise InvalidArgument("values and classes must align and be nonempty")
    if class_labels is None:
        class_labels = [str(i) for i in range(int(y.max()) + 1)]
    j = len(class_labels)
    n = len(tokens)

    distinct = sorted(set(tokens))
    index = {t: i for i, t in enumerate(distinct)}
    v = len(distinct)
    counts = np.zeros((v, j), dtype=np.int64)
    np.add.at(counts, ([index[t] for t in tokens], y), 1)

    table = _CostTable(n, j)
    if v <= EXACT_MAX_GROUP_VALUES:
        assign, total = _exact_grouping(counts, v, table)
    else:
        assign, total = _greedy_grouping(counts, v, table)

    k = max(assign) + 1
    members: list[list[int]] = [[] for _ in range(k)]
    for value_idx, g in enumerate(assign):
        members[g].append(value_idx)
    # Deterministic order: by lexicographically smallest member value.
    members.sort(key=lambda m: distinct[min(m)])

    value_totals = counts.sum(axis=1)
    rare = min(range(v), key=lambda i: (int(value_totals[i]), distinct[i]))
    parts = []
    for m in members:
        rows = counts[m].sum(axis=0)
        parts.append(
            Part(
                rows,
                values=tuple(sorted(distinct[i] for i in m)),
                is_catchall=rare in m,
            )
        )
    model = PartitionModel(
        variable, GROUPS, parts, list(class_labels), n, v_distinct=v
    )
    grouping_cost(model)
    return model


# -- per-variable preparation over a flat table -----------------------------


@dataclass
class PreparedVariable:
    name: str
    model: PartitionModel
    level: float
    null_nats: float


def prepare_column(name: str, column: Column, y: np.ndarray,
                   class_labels: list[str]) -> PreparedVariable:
    """Prepare one typed column against integer class codes."""
    if isinstance(column, NumericColumn):
        model = optimize_discretization(column.values, y, class_labels, variable=name)
        totals = np.bincount(y, minlength=len(class_labels)).astype(np.int64)
        null = null_interval_cost(totals, len(y))
    else:
        cells = [
            None if column.codes[i] < 0 else column.categories[column.codes[i]]
            for i in range(len(column))
        ]
        model = optimize_grouping(cells, y, class_labels, variable=name)
        totals = np.bincount(y, minlength=len(class_labels)).astype(np.int64)
        null = null_grouping_cost(totals, model.v_distinct)
    return PreparedVariable(name, model, level(model, null), null)


def _prepare_task(args) -> PreparedVariable:
    name, column, y, class_labels = args
    return prepare_column(name, column, y, class_labels)


def prepare_columns(
    named_columns: list[tuple[str, Column]],
    y: np.ndarray,
    class_labels: list[str],
    workers: int = 1,
) -> list[PreparedVariable]:
    """Prepare many columns, optionally in parallel.

    Results come back in input order regardless of completion order, so
    the outcome is independent of the worker count.
    """
    tasks = [(name, col, y, class_labels) for name, col in named_columns]
    return run_ordered(_prepare_task, tasks, workers)
