"""Limiting log-likelihood-ratio series in the contiguity regime and the
second-moment bound.

Under the null, with x = lambda * sqrt(d), the limiting log-LR is

    sum_{k >= 3} [ log(1 - x^k) * N_k - x^k / k ]
    + sum_{1 <= l <= k} (m_{k,l} * G_{k,l} - m_{k,l}^2 / 2) / s2_{k,l}

with N_k ~ Poi(d^k / k) and G_{k,l} ~ N(0, s2_{k,l}); the Gaussian mean
parameters m_{k,l} vanish under the null, so those terms contribute zero
(the general form is kept so a tilted variant can reuse the code).

The series is implemented exactly as stated, including the log(1 - x^k)
factor; since x can reach 1 inside the contiguity region lambda^2 +
mu^2/gamma < 1 when d is large, the series can leave the log's domain there,
and evaluation then raises a domain error naming the offending k rather than
substituting a different coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cycles import CycleIndex, cycle_statistic, theoretical_moments
from .errors import DomainError
from .model import Instance, ModelParams

DEFAULT_K = 6


@dataclass(frozen=True)
class TruncationConfig:
    K: int = DEFAULT_K

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("truncation K must be >= 1")


@dataclass(frozen=True)
class ExpansionTerm:
    index: CycleIndex
    contribution: float
    kind: str  # "Poisson" or "Gaussian"


def second_moment_bound(params: ModelParams) -> float:
    """exp(-1/2 log(1 - (lambda^2 + mu^2/gamma)) - lambda^2/2 - lambda^4/4),
    the limiting cap on the null second moment of the likelihood ratio."""
    s = params.signal
    if s >= 1:
        raise DomainError(
            f"bound applies only in the contiguity regime: "
            f"lambda^2 + mu^2/gamma = {s} >= 1"
        )
    lam2 = params.lam**2
    return math.exp(-0.5 * math.log(1 - s) - lam2 / 2 - lam2**2 / 4)


def check_domain(params: ModelParams, trunc: TruncationConfig) -> None:
    """Require (lambda sqrt(d))^k < 1 for every k <= K."""
    x = params.lam * math.sqrt(params.d)
    for k in range(1, trunc.K + 1):
        if x**k >= 1:
            raise DomainError(
                f"(lambda*sqrt(d))^k = {x**k} >= 1 at k = {k}: "
                "log-LR series leaves the log domain"
            )


def _check_contiguity(params: ModelParams) -> None:
    if params.signal >= 1:
        raise DomainError(
            f"limiting log-LR defined only for lambda^2 + mu^2/gamma < 1, "
            f"got {params.signal}"
        )


def _gaussian_mean_null(params: ModelParams, k: int, l: int) -> float:
    """Null mean parameter of the (k, l) Gaussian block (identically zero;
    kept as a function so a tilted variant can override it)."""
    return 0.0


def expansion_terms(
    params: ModelParams, trunc: TruncationConfig, values: dict
) -> list[ExpansionTerm]:
    """Term-by-term contributions given realized statistic values keyed by
    (k, l): counts for l = 0 and centered Gaussian values for l >= 1."""
    x = params.lam * math.sqrt(params.d)
    terms = []
    for k in range(3, trunc.K + 1):
        v = values[(k, 0)]
        terms.append(
            ExpansionTerm(
                CycleIndex(k, 0), math.log(1 - x**k) * v - x**k / k, "Poisson"
            )
        )
    for k in range(1, trunc.K + 1):
        for l in range(1, k + 1):
            m = _gaussian_mean_null(params, k, l)
            if m == 0.0:
                contribution = 0.0
            else:
                s2 = theoretical_moments(params, CycleIndex(k, l)).null_variance
                contribution = (m * values[(k, l)] - m**2 / 2) / s2
            terms.append(ExpansionTerm(CycleIndex(k, l), contribution, "Gaussian"))
    return terms


def limiting_logLR_samples_H0(
    params: ModelParams, trunc: TruncationConfig, seed: int, reps: int = 1
) -> np.ndarray:
    """Draw `reps` samples of the truncated limiting log-LR under the null."""
    _check_contiguity(params)
    check_domain(params, trunc)
    rng = np.random.default_rng(seed)
    x = params.lam * math.sqrt(params.d)
    d = params.d
    out = np.zeros(reps)
    for k in range(3, trunc.K + 1):
        # Poisson parameter for once-counted k-cycles (shift/reflection
        # classes), matching the plug-in statistic's counting convention
        counts = rng.poisson(d**k / (2 * k), size=reps)
        out += math.log(1 - x**k) * counts - x**k / k
    # Gaussian blocks: drawn for seed-stream stability, but their null mean
    # parameters vanish, so they contribute zero
    for k in range(1, trunc.K + 1):
        for l in range(1, k + 1):
            s2 = theoretical_moments(params, CycleIndex(k, l)).null_variance
            draws = rng.normal(0.0, math.sqrt(s2), size=reps)
            m = _gaussian_mean_null(params, k, l)
            out += (m * draws - m**2 / 2) / s2
    return out


def limiting_logLR_sample_H0(
    params: ModelParams, trunc: TruncationConfig, seed: int
) -> float:
    return float(limiting_logLR_samples_H0(params, trunc, seed, reps=1)[0])


def empirical_logLR_from_instance(
    instance: Instance, params: ModelParams, trunc: TruncationConfig
) -> float:
    """Evaluate the truncated functional with measured cycle statistics in
    place of the limiting draws.

    Only the wedge-free counts are measured: every Gaussian block has a zero
    mean parameter under the null, so its contribution is identically zero
    for any measured value.
    """
    _check_contiguity(params)
    check_domain(params, trunc)
    values = {
        (k, 0): cycle_statistic(instance, CycleIndex(k, 0)).raw
        for k in range(3, trunc.K + 1)
    }
    for k in range(1, trunc.K + 1):
        for l in range(1, k + 1):
            values[(k, l)] = 0.0  # unused: zero coefficient under the null
    terms = expansion_terms(params, trunc, values)
    return float(sum(t.contribution for t in terms))
