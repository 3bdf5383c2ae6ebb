"""Label recovery from a pair-estimate matrix.

Pipeline: find the minimum-Frobenius-norm matrix Sigma with unit diagonal,
Sigma PSD, and <P, Sigma> / (||P||_F * n) >= delta', by Dykstra's cyclic
projections; then draw a centered Gaussian vector with covariance Sigma and
take coordinate-wise signs.  On infeasibility, delta' is halved down to a
floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleAtFloorError
from .model import Instance
from .saw import PairEstimateMatrix, WalkConfig, default_walk_config, pair_estimator

DELTA_PRIME_INIT = 0.2
DELTA_PRIME_FLOOR = 1e-3
ROUNDING_DRAWS = 16
FIT_TOL = 1e-6
FIT_MAX_ITERS = 5000
_RESIDUAL_TOL = 1e-8


@dataclass
class CorrelationMatrix:
    Sigma: np.ndarray
    feasible: bool
    iterations: int
    delta_prime: float

    def alignment_ratio(self, P: np.ndarray) -> float:
        return float(np.sum(P * self.Sigma)) / (np.linalg.norm(P) * len(self.Sigma))


@dataclass
class RecoveryReport:
    sigma_hat: np.ndarray
    overlap_raw: float | None
    overlap_centered: float | None
    delta_prime_used: float
    iterations: int
    feasible: bool


def _project_psd(X: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((X + X.T) / 2)
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.T


def _project_diag(X: np.ndarray) -> np.ndarray:
    Y = X.copy()
    np.fill_diagonal(Y, 1.0)
    return Y


def fit_correlation_matrix(
    P,
    delta_prime: float,
    tol: float = FIT_TOL,
    max_iters: int = FIT_MAX_ITERS,
) -> CorrelationMatrix:
    """Approximate minimum-norm point of {diag = 1} ∩ {alignment >= delta'} ∩ PSD.

    Dykstra's algorithm started from the zero matrix (so the limit is the
    projection of 0, i.e. the minimum-Frobenius-norm feasible point).  The
    unit-diagonal set is affine and needs no correction term; the half-space
    and PSD cone carry Dykstra corrections.
    """
    mat = P.P if isinstance(P, PairEstimateMatrix) else np.asarray(P, dtype=float)
    n = len(mat)
    norm_p = float(np.linalg.norm(mat))
    if norm_p == 0.0:
        raise DomainError("pair-estimate matrix is zero: fit undefined")
    if not (0 < delta_prime <= 1):
        raise DomainError(f"delta_prime must be in (0, 1], got {delta_prime}")
    # half-space <H, Sigma> >= c with ||H||_F = 1
    H = mat / norm_p
    c = delta_prime * n
    X = np.zeros((n, n))
    corr_half = np.zeros((n, n))
    corr_psd = np.zeros((n, n))
    iters = 0
    for iters in range(1, max_iters + 1):
        prev = X
        X = _project_diag(X)
        Y = X + corr_half
        gap = c - float(np.sum(H * Y))
        proj = Y + gap * H if gap > 0 else Y
        corr_half = Y - proj
        X = proj
        Y = X + corr_psd
        proj = _project_psd(Y)
        corr_psd = Y - proj
        X = proj
        if np.linalg.norm(X - prev) < tol:
            break
    # polish diag/PSD so the output satisfies both residual bounds tightly
    for _ in range(200):
        X = _project_psd(_project_diag(X))
        if np.max(np.abs(np.diag(X) - 1.0)) < 1e-9:
            break
    X = _project_diag(X)
    feasible = float(np.sum(H * X)) >= c - _RESIDUAL_TOL * n
    return CorrelationMatrix(X, feasible, iters, delta_prime)


def gaussian_sign_rounding(Sigma, seed: int) -> np.ndarray:
    """Signs of a centered Gaussian vector with covariance Sigma (negative
    eigenvalues clipped to zero); sign(0) = +1."""
    mat = Sigma.Sigma if isinstance(Sigma, CorrelationMatrix) else np.asarray(Sigma)
    w, V = np.linalg.eigh((mat + mat.T) / 2)
    w = np.clip(w, 0.0, None)
    rng = np.random.default_rng(seed)
    z = (V * np.sqrt(w)) @ rng.standard_normal(len(mat))
    return np.where(z >= 0, 1, -1).astype(np.int8)


def overlap(sigma, sigma_hat) -> dict:
    """raw = |<sigma, sigma_hat>| / n; centered subtracts the product of the
    empirical means."""
    sigma = np.asarray(sigma, dtype=float)
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    if sigma.shape != sigma_hat.shape:
        raise DomainError(
            f"length mismatch: {sigma.shape} vs {sigma_hat.shape}"
        )
    n = len(sigma)
    raw = abs(float(sigma @ sigma_hat)) / n
    centered = float(np.mean(sigma * sigma_hat)) - float(
        np.mean(sigma) * np.mean(sigma_hat)
    )
    return {"raw": raw, "centered": centered}


def weak_recovery_pipeline(
    instance: Instance,
    walk_config: WalkConfig | None = None,
    delta_prime_init: float = DELTA_PRIME_INIT,
    seed: int = 0,
) -> RecoveryReport:
    """saw -> correlation fit (halving delta' on infeasibility) -> rounding.

    Rounding takes the best of ROUNDING_DRAWS sign vectors, scored by the
    alignment <sigma_hat, P sigma_hat>; the draw seeds are derived from
    `seed`, so the result is deterministic.
    """
    if walk_config is None:
        walk_config = default_walk_config(instance.params, instance.n)
    P = pair_estimator(instance, walk_config)
    delta_prime = delta_prime_init
    total_iters = 0
    while True:
        fit = fit_correlation_matrix(P, delta_prime)
        total_iters += fit.iterations
        if fit.feasible:
            break
        if delta_prime <= DELTA_PRIME_FLOOR:
            raise InfeasibleAtFloorError(
                f"correlation fit infeasible at delta' floor {DELTA_PRIME_FLOOR}"
            )
        delta_prime = max(delta_prime / 2, DELTA_PRIME_FLOOR)
    sigma_hat, best_score = None, -np.inf
    for j in range(ROUNDING_DRAWS):
        candidate = gaussian_sign_rounding(fit, (seed << 8) + j)
        score = float(candidate @ P.P @ candidate)
        if score > best_score:
            sigma_hat, best_score = candidate, score
    if instance.has_truth:
        ov = overlap(instance.sigma, sigma_hat)
        raw, centered = ov["raw"], ov["centered"]
    else:
        raw = centered = None
    return RecoveryReport(
        sigma_hat=sigma_hat,
        overlap_raw=raw,
        overlap_centered=centered,
        delta_prime_used=delta_prime,
        iterations=total_iters,
        feasible=fit.feasible,
    )
