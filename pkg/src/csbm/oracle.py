"""Brute-force ground truth at tiny scale.

Three independent references used to validate the fast implementations:
naive cycle statistics by full ordered-tuple enumeration, the exact
likelihood ratio with the latent spike integrated out analytically and the
community vector summed exhaustively, and the Bayes-optimal pairwise
posterior from the same exhaustive sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np
from scipy.special import logsumexp

from .cycles import CycleIndex
from .errors import DomainError, OracleLimitError
from .model import Instance, ModelParams


@dataclass(frozen=True)
class OracleLimits:
    max_n: int = 14  # exhaustive sign enumeration: 2^max_n terms
    max_cycle_n: int = 10
    max_cycle_p: int = 8
    max_cycle_k: int = 4


DEFAULT_LIMITS = OracleLimits()


# ---------------------------------------------------------------------------
# Naive cycle statistic
# ---------------------------------------------------------------------------

def _set_partitions(items):
    """All partitions of a list into nonempty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def naive_cycle_statistic(
    instance: Instance, index: CycleIndex, limits: OracleLimits = DEFAULT_LIMITS
) -> float:
    """Y_{n,k,l} by enumerating every ordered tuple of k distinct vertices and
    every wedge placement, then dividing out the 2k shift/reflection
    symmetries (1 for k = 1).  Distinct-coordinate wedge sums are expanded by
    inclusion-exclusion over set partitions of the wedge positions.
    """
    k, l = index.k, index.l
    n, p = instance.n, instance.p
    if n > limits.max_cycle_n or p > limits.max_cycle_p or k > limits.max_cycle_k:
        raise OracleLimitError(
            f"naive cycle statistic limited to n <= {limits.max_cycle_n}, "
            f"p <= {limits.max_cycle_p}, k <= {limits.max_cycle_k}"
        )
    A = instance.adjacency().toarray()
    B = instance.B
    tups = np.array(list(permutations(range(n), k)), dtype=np.int64)
    parts = list(_set_partitions(list(range(l)))) if l else None
    total = 0.0
    for mask in combinations(range(k), l):
        mask_set = set(mask)
        aprod = np.ones(len(tups))
        for t in range(k):
            if t not in mask_set:
                aprod *= A[tups[:, t], tups[:, (t + 1) % k]]
        live = aprod != 0.0
        if not np.any(live):
            continue
        if l == 0:
            total += aprod[live].sum()
            continue
        wedges = [
            B[tups[live, t]] * B[tups[live, (t + 1) % k]] for t in mask
        ]  # each (N_live, p)
        dsum = np.zeros(live.sum())
        for part in parts:
            coef = 1.0
            prod = np.ones(live.sum())
            for block in part:
                coef *= (-1.0) ** (len(block) - 1) * math.factorial(len(block) - 1)
                blk = wedges[block[0]].copy()
                for t in block[1:]:
                    blk *= wedges[t]
                prod *= blk.sum(axis=1)
            dsum += coef * prod
        total += float(np.dot(aprod[live], dsum))
    sym = 1 if k == 1 else 2 * k
    return total / sym / n**l


# ---------------------------------------------------------------------------
# Exact likelihood ratio and posterior
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _sign_matrix(n: int) -> np.ndarray:
    """All 2^n sign vectors as rows of a (2^n, n) matrix."""
    bits = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    return (2.0 * bits - 1.0).astype(np.float64)


def column_ratio_closed_form(mu: float, n: int, s: np.ndarray) -> np.ndarray:
    """Per-coordinate density ratio with the spike integrated out.

    For a coordinate with inner product s = sigma^T B_col, the ratio of the
    alternative to the null density is
    (1 + mu)^(-1/2) * exp(mu * s^2 / (2 n (1 + mu))).
    """
    s = np.asarray(s, dtype=float)
    return np.exp(mu * s**2 / (2 * n * (1 + mu))) / math.sqrt(1 + mu)


def column_ratio_quadrature(
    mu: float, n: int, s: np.ndarray, order: int = 80
) -> np.ndarray:
    """Same ratio by Gauss-Hermite quadrature over the scalar spike component
    (reference for validating the closed form)."""
    x, w = np.polynomial.hermite.hermgauss(order)
    u = math.sqrt(2.0) * x
    s = np.asarray(s, dtype=float)[:, None]
    integrand = np.exp(math.sqrt(mu / n) * u[None, :] * s - mu * u[None, :] ** 2 / 2)
    return integrand @ w / math.sqrt(math.pi)


def _log_components(instance: Instance, alt_params: ModelParams):
    """Per-sign-vector log A-part and log B-part of the likelihood ratio."""
    n = instance.n
    a, b, mu = alt_params.a, alt_params.b, alt_params.mu
    d = alt_params.d
    if mu <= -1:
        raise DomainError(f"mu = {mu} <= -1: covariate likelihood undefined")
    if min(a, b) <= 0 or max(a, b) >= n:
        raise DomainError(
            "edge probabilities on the boundary: exact likelihood requires "
            f"0 < b <= a < n, got a={a}, b={b}, n={n}"
        )
    Adense = instance.adjacency().toarray()
    logw_same = np.where(Adense == 1, math.log(a / d), math.log((n - a) / (n - d)))
    logw_diff = np.where(Adense == 1, math.log(b / d), math.log((n - b) / (n - d)))
    np.fill_diagonal(logw_same, 0.0)
    np.fill_diagonal(logw_diff, 0.0)
    const = float(np.sum(np.triu(logw_same + logw_diff, 1))) / 2
    delta = logw_same - logw_diff  # symmetric, zero diagonal
    S = _sign_matrix(n)
    log_A = const + 0.25 * np.einsum("si,ij,sj->s", S, delta, S)
    proj = S @ instance.B  # (2^n, p): sigma^T B per coordinate
    log_B = -instance.p / 2 * math.log(1 + mu) + (
        mu / (2 * n * (1 + mu))
    ) * np.sum(proj**2, axis=1)
    return log_A, log_B


def exact_log_likelihood_ratio(
    instance: Instance, alt_params: ModelParams, limits: OracleLimits = DEFAULT_LIMITS
) -> float:
    """log L where L = 2^-n sum_sigma (A-part) * (B-part), in log space."""
    if instance.n > limits.max_n:
        raise OracleLimitError(f"exact likelihood limited to n <= {limits.max_n}")
    log_A, log_B = _log_components(instance, alt_params)
    return float(logsumexp(log_A + log_B) - instance.n * math.log(2))


def exact_likelihood_ratio(
    instance: Instance, alt_params: ModelParams, limits: OracleLimits = DEFAULT_LIMITS
) -> float:
    return math.exp(exact_log_likelihood_ratio(instance, alt_params, limits))


def bayes_pairwise_posterior(
    instance: Instance, alt_params: ModelParams, limits: OracleLimits = DEFAULT_LIMITS
) -> np.ndarray:
    """M_ij = E[sigma_i sigma_j | A, B] under the alternative, by the same
    exhaustive sign sum; unit diagonal by construction."""
    if instance.n > limits.max_n:
        raise OracleLimitError(f"exact posterior limited to n <= {limits.max_n}")
    log_A, log_B = _log_components(instance, alt_params)
    logw = log_A + log_B
    w = np.exp(logw - logsumexp(logw))
    S = _sign_matrix(instance.n)
    return (S * w[:, None]).T @ S
