"""Factor-graph cycle statistics, their limiting moments, and the detection test.

A cycle with index (k, l) visits k distinct graph vertices; each of its k steps
is either a graph edge (an A factor) or a wedge through one of the p covariate
coordinates (a B_{i,j} B_{i',j} factor), with l wedge steps through l distinct
coordinates.  Cycles are identified up to cyclic shift and reversal.  The
statistic is

    Y_{n,k,l} = n^{-l} * sum over cycles of (product of A and B factors),

whose limit is Poisson for l = 0 and Gaussian for l >= 1.  The admissible
index set is {(k, 0): k >= 3} union {(k, l): k >= l >= 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import norm

from .errors import BudgetExceededError, ConfigurationError, DomainError
from .model import Instance, ModelParams

DEFAULT_BUDGET = 5_000_000

# n above which the dense-Gram fast paths for (3,2) and (3,3) are refused
_DENSE_GRAM_LIMIT = 4000


@dataclass(frozen=True)
class CycleIndex:
    """Index (k, l): cycle length k, number of covariate wedges l."""

    k: int
    l: int

    def __post_init__(self):
        if self.k < 1 or self.l < 0:
            raise ValueError(f"invalid cycle index ({self.k}, {self.l})")
        if self.l == 0 and self.k < 3:
            raise ValueError(
                f"(k, l) = ({self.k}, 0) not admissible: wedge-free cycles need k >= 3"
            )
        if self.l > self.k:
            raise ValueError(
                f"(k, l) = ({self.k}, {self.l}) not admissible: need l <= k"
            )


def index_set(max_k: int) -> list[CycleIndex]:
    """All admissible indices with k <= max_k, sorted by (k, l)."""
    out = []
    for k in range(1, max_k + 1):
        if k >= 3:
            out.append(CycleIndex(k, 0))
        for l in range(1, k + 1):
            out.append(CycleIndex(k, l))
    return out


def count_cycles(n: int, p: int, index: CycleIndex) -> int:
    """Exact number of distinct (k, l)-cycles on n vertices and p coordinates.

    C(k, l) * n^(k falling) * p^(l falling) / (2k), in exact integer
    arithmetic.  The (1, 1) wedge is its own reversal, so its classes are in
    bijection with (vertex, coordinate) pairs: n * p.
    """
    k, l = index.k, index.l
    if n < k or p < l:
        raise DomainError(f"need n >= k and p >= l, got n={n}, p={p}, k={k}, l={l}")
    if k == 1:
        return n * p
    num = math.comb(k, l) * math.perm(n, k) * math.perm(p, l)
    assert num % (2 * k) == 0
    return num // (2 * k)


@dataclass(frozen=True)
class CycleMoments:
    """Limiting moments of Y_{n,k,l} under the null and the alternative."""

    null_mean: float
    null_variance: float
    alt_mean: float
    alt_variance: float
    family: str  # "Poisson" or "Gaussian"
    centering: float


def theoretical_moments(params: ModelParams, index: CycleIndex) -> CycleMoments:
    """Limiting moments: Poisson for l = 0, Gaussian for l >= 1.

    l = 0:   Y -> Poi(d^k / (2k)) under the null and
             Poi((d^k + (lam*sqrt(d))^k) / (2k)) under the alternative; the
             1/(2k) matches the shift/reflection counting convention used by
             the statistic (each realized cycle contributes once).
    l >= 1:  Y - centering -> N(mean, sigma^2) with
             sigma^2 = C(k,l) d^(k-l) / (2k gamma^l), null mean 0 and
             alternative mean C(k,l) (lam*sqrt(d))^(k-l) mu^l / (2k gamma^l).
    The centering is p when (k, l) = (1, 1), else 0.
    """
    k, l = index.k, index.l
    d, lam, mu, gamma = params.d, params.lam, params.mu, params.gamma
    if l == 0:
        null_mean = d**k / (2 * k)
        alt_mean = (d**k + (lam * math.sqrt(d)) ** k) / (2 * k)
        return CycleMoments(null_mean, null_mean, alt_mean, alt_mean, "Poisson", 0.0)
    var = math.comb(k, l) * d ** (k - l) / (2 * k * gamma**l)
    alt_mean = (
        math.comb(k, l)
        * (lam * math.sqrt(d)) ** (k - l)
        * mu**l
        / (2 * k * gamma**l)
    )
    centering = float(params.p) if (k, l) == (1, 1) else 0.0
    return CycleMoments(0.0, var, alt_mean, var, "Gaussian", centering)


@dataclass(frozen=True)
class CycleStatReport:
    """Raw, centered, and null-normalized value of one cycle statistic."""

    index: CycleIndex
    raw: float
    centered: float
    normalized: float


def _make_report(index, raw, moments) -> CycleStatReport:
    centered = raw - moments.centering
    normalized = centered / math.sqrt(moments.null_variance)
    return CycleStatReport(index, raw, centered, normalized)


# ---------------------------------------------------------------------------
# Wedge-free cycles: counted on the realized sparse graph
# ---------------------------------------------------------------------------

def realized_cycle_count(instance: Instance, k: int) -> int:
    """Number of k-cycles in the realized graph (exact)."""
    if k == 3:
        A = instance.adjacency()
        return int(round((A @ A).multiply(A).sum() / 6))
    nbrs = instance.neighbor_sets()
    n = instance.n
    count = 0
    # DFS over paths start, v1, ..., v_{k-1} with all vertices > start;
    # each cycle is found once per direction, hence the final /2.
    for start in range(n):
        stack = [(start, 1, frozenset((start,)))]
        while stack:
            v, depth, seen = stack.pop()
            if depth == k:
                if start in nbrs[v]:
                    count += 1
                continue
            for w in nbrs[v]:
                if w > start and w not in seen:
                    stack.append((w, depth + 1, seen | {w}))
    assert count % 2 == 0
    return count // 2


# ---------------------------------------------------------------------------
# Closed-form fast paths for small (k, l) with l >= 1
# ---------------------------------------------------------------------------

def _edge_gram_values(instance: Instance) -> np.ndarray:
    """(B B^T)_{ij} for each realized edge {i, j}."""
    if len(instance.edges) == 0:
        return np.zeros(0)
    Bi = instance.B[instance.edges[:, 0]]
    Bj = instance.B[instance.edges[:, 1]]
    return np.einsum("ij,ij->i", Bi, Bj)


def _raw_1_1(instance):
    return float(np.sum(instance.B**2)) / instance.n


def _raw_2_1(instance):
    return float(_edge_gram_values(instance).sum()) / instance.n


def _raw_2_2(instance):
    B = instance.B
    C = B * B
    gram_sq = float(np.sum((B.T @ B) ** 2)) - float(np.sum(C.sum(axis=1) ** 2))
    col = C.sum(axis=0)
    h_offdiag = float(np.sum(col**2)) - float(np.sum(C * C))
    return (gram_sq - h_offdiag) / (4 * instance.n**2)


def _raw_3_1(instance):
    A2 = (instance.adjacency() @ instance.adjacency()).tocoo()
    rows, cols, vals = A2.row, A2.col, A2.data
    off = rows != cols
    rows, cols, vals = rows[off], cols[off], vals[off]
    g = np.einsum("ij,ij->i", instance.B[rows], instance.B[cols])
    return float(np.dot(vals, g)) / (2 * instance.n)


def _zero_diag_gram(instance):
    G = instance.B @ instance.B.T
    np.fill_diagonal(G, 0.0)
    return G


def _raw_3_2(instance):
    if instance.n > _DENSE_GRAM_LIMIT:
        raise BudgetExceededError(instance.n**2, _DENSE_GRAM_LIMIT**2)
    A = instance.adjacency()
    B = instance.B
    G0 = _zero_diag_gram(instance)
    t1 = float(A.multiply(G0 @ G0).sum())
    AB = A @ B
    s = np.sum(B * B, axis=0)
    quad = np.sum(B * AB, axis=0)  # b_j^T A b_j per coordinate j
    cubic = np.sum(B**3 * AB, axis=0)  # (b_j^3)^T A b_j per coordinate j
    t2 = float(np.dot(s, quad) - 2 * np.sum(cubic))
    return (t1 - t2) / (2 * instance.n**2)


def _raw_3_3(instance):
    if instance.n > _DENSE_GRAM_LIMIT:
        raise BudgetExceededError(instance.n**2, _DENSE_GRAM_LIMIT**2)
    B = instance.B
    G0 = _zero_diag_gram(instance)
    t_cyc = float(np.trace(G0 @ G0 @ G0))
    C = B * B
    B3 = B**3
    s = C.sum(axis=0)
    M = (B * s) @ B.T - B3 @ B.T - B @ B3.T
    t_pair = float(np.sum(G0 * M))
    p1 = s
    p2 = np.sum(C * C, axis=0)
    p3 = np.sum(C**3, axis=0)
    t_all = float(np.sum(p1**3 - 3 * p1 * p2 + 2 * p3))
    return (t_cyc - 3 * t_pair + 2 * t_all) / (6 * instance.n**3)


_FAST_PATHS = {
    (1, 1): _raw_1_1,
    (2, 1): _raw_2_1,
    (2, 2): _raw_2_2,
    (3, 1): _raw_3_1,
    (3, 2): _raw_3_2,
    (3, 3): _raw_3_3,
}


# ---------------------------------------------------------------------------
# Generic exact enumeration (budgeted)
# ---------------------------------------------------------------------------

def _canonical_tuples(n, k):
    """Ordered tuples of k distinct vertices whose first entry is smallest.

    Each shift class of each direction appears exactly once, so every cycle
    class of vertices appears exactly twice (once per direction) for k >= 2.
    """
    if k == 1:
        for v in range(n):
            yield (v,)
        return
    def rec(prefix, used):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for v in range(prefix[0] + 1, n):
            if v not in used:
                prefix.append(v)
                used.add(v)
                yield from rec(prefix, used)
                used.discard(v)
                prefix.pop()

    for start in range(n):
        yield from rec([start], {start})


def _distinct_wedge_sum(ws, used, t):
    """Sum over assignments of distinct coordinates j_t of prod_t ws[t][j_t]."""
    w = ws[t]
    if t == len(ws) - 1:
        total = w.sum()
        for j in used:
            total -= w[j]
        return total
    acc = 0.0
    for j in range(len(w)):
        if w[j] == 0.0 or j in used:
            continue
        used.append(j)
        acc += w[j] * _distinct_wedge_sum(ws, used, t + 1)
        used.pop()
    return acc


def generic_cycle_sum(instance: Instance, index: CycleIndex) -> tuple[float, int]:
    """Exact cycle-product sum (before the n^-l normalization) and the number
    of cycle classes visited, by canonical enumeration over the complete graph.

    The visited count always equals count_cycles(n, p, index).
    """
    k, l = index.k, index.l
    n, p = instance.n, instance.p
    A = instance.adjacency().toarray()
    B = instance.B
    per_mask_j = math.perm(p, l)
    total = 0.0
    visited = 0
    masks = list(combinations(range(k), l))
    for tup in _canonical_tuples(n, k):
        steps = [(tup[t], tup[(t + 1) % k]) for t in range(k)]
        for mask in masks:
            visited += per_mask_j
            aprod = 1.0
            mask_set = set(mask)
            for t, (a, b) in enumerate(steps):
                if t not in mask_set:
                    aprod *= A[a, b]
                    if aprod == 0.0:
                        break
            if aprod == 0.0:
                continue
            if l == 0:
                total += aprod
                continue
            ws = [B[steps[t][0]] * B[steps[t][1]] for t in mask]
            total += aprod * _distinct_wedge_sum(ws, [], 0)
    if k == 1:
        return total, visited
    assert visited % 2 == 0
    return total / 2, visited // 2


# ---------------------------------------------------------------------------
# Public statistic and tests
# ---------------------------------------------------------------------------

def cycle_statistic(
    instance: Instance, index: CycleIndex, budget: int = DEFAULT_BUDGET
) -> CycleStatReport:
    """Compute Y_{n,k,l} exactly.

    l = 0 is counted on the realized sparse graph and is never budgeted.
    For l >= 1, small indices use closed-form fast paths; other indices use
    the generic enumeration, refused when count_cycles exceeds the budget.
    """
    k, l = index.k, index.l
    n, p = instance.n, instance.p
    if n < k or p < l:
        raise DomainError(f"instance too small for index ({k}, {l})")
    moments = theoretical_moments(instance.params, index)
    if l == 0:
        raw = float(realized_cycle_count(instance, k))
        return _make_report(index, raw, moments)
    fast = _FAST_PATHS.get((k, l))
    if fast is not None:
        try:
            return _make_report(index, fast(instance), moments)
        except BudgetExceededError:
            pass  # fall through to the generic path, subject to the budget
    count = count_cycles(n, p, index)
    if count > budget:
        raise BudgetExceededError(count, budget)
    total, _ = generic_cycle_sum(instance, index)
    return _make_report(index, total / n**l, moments)


@dataclass(frozen=True)
class DetectionResult:
    statistic: float
    l_used: int
    noncentrality: float
    threshold: float
    reject: bool


def detection_noncentrality(alt_params: ModelParams, k: int, l: int) -> float:
    """Limiting mean of the normalized statistic under the alternative."""
    lam2 = alt_params.lam**2
    mg = alt_params.mu**2 / alt_params.gamma
    return math.sqrt(math.comb(k, l) * lam2 ** (k - l) * mg**l / (2 * k))


def detection_test(
    instance: Instance,
    alt_params: ModelParams,
    k: int,
    level: float = 0.05,
    budget: int = DEFAULT_BUDGET,
) -> DetectionResult:
    """One-sided Gaussian test based on the normalized cycle statistic.

    The wedge fraction l/k is matched to (mu^2/gamma) / (lambda^2 +
    mu^2/gamma) and the statistic is compared to the standard normal
    (1 - level)-quantile.
    """
    if alt_params.mu == 0:
        raise ConfigurationError(
            "covariate channel carries no signal (mu = 0); "
            "use poisson_count_test on the wedge-free cycle counts instead"
        )
    signal = alt_params.signal
    if signal <= 1:
        raise DomainError(
            f"detection targets the singular regime: need "
            f"lambda^2 + mu^2/gamma > 1, got {signal}"
        )
    ratio = (alt_params.mu**2 / alt_params.gamma) / signal
    l_used = min(max(int(round(k * ratio)), 1), k)
    index = CycleIndex(k, l_used)
    # normalize against the null moments at the alternative's (d, gamma)
    moments = theoretical_moments(alt_params, index)
    rep = cycle_statistic(instance, index, budget=budget)
    statistic = (rep.raw - moments.centering) / math.sqrt(moments.null_variance)
    threshold = float(norm.ppf(1 - level))
    return DetectionResult(
        statistic=statistic,
        l_used=l_used,
        noncentrality=detection_noncentrality(alt_params, k, l_used),
        threshold=threshold,
        reject=bool(statistic > threshold),
    )


@dataclass(frozen=True)
class PoissonTestResult:
    statistic: float
    midpoint: float
    reject: bool


def poisson_count_test(
    instance: Instance, alt_params: ModelParams, k: int
) -> PoissonTestResult:
    """Graph-only test: compare the k-cycle count to the midpoint of its null
    and alternative Poisson means.  Used when mu = 0."""
    index = CycleIndex(k, 0)
    moments = theoretical_moments(alt_params, index)
    raw = float(realized_cycle_count(instance, k))
    midpoint = (moments.null_mean + moments.alt_mean) / 2
    return PoissonTestResult(raw, midpoint, bool(raw > midpoint))
