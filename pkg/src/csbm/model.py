"""Contextual SBM model parameters, instance sampling, and persistence.

The generative model: a community vector sigma uniform on {-1,+1}^n, a latent
spike u ~ N(0, I_p), edges drawn independently with probability a/n within a
community and b/n across (a = d + lambda*sqrt(d), b = d - lambda*sqrt(d)), and
covariates B_i = sqrt(mu/n) * sigma_i * u + Z_i with Z iid standard normal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InstanceFormatError

# Named RNG sub-streams so that e.g. sigma can be held fixed while noise is
# resampled.  Each stream is an independent child of SeedSequence(seed).
STREAM_SIGMA = 0
STREAM_U = 1
STREAM_EDGES = 2
STREAM_NOISE = 3

_PAIR_CHUNK = 1 << 21  # max pairs sampled per RNG draw, keeps memory bounded


class SubcriticalDegreeWarning(UserWarning):
    """d <= 1: below the giant-component threshold assumed by the theory."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple (lambda, mu, d, gamma, n, p) with derived a, b."""

    lam: float
    mu: float
    d: float
    gamma: float
    n: int
    p: int

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError(f"average degree d must be positive, got {self.d}")
        if self.n <= 0 or self.p <= 0:
            raise ValueError("n and p must be positive integers")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.b < 0:
            raise ValueError(
                f"b = d - lambda*sqrt(d) = {self.b} < 0: edge probability negative"
            )
        if self.a > self.n:
            raise ValueError(
                f"a = d + lambda*sqrt(d) = {self.a} > n = {self.n}: "
                "edge probability above one"
            )
        if abs(self.n / self.p - self.gamma) > 0.5 / self.p + 1e-12:
            raise ValueError(
                f"(n, p) = ({self.n}, {self.p}) inconsistent with gamma = "
                f"{self.gamma}: need |n/p - gamma| <= 0.5/p"
            )
        if self.d <= 1:
            warnings.warn(
                f"d = {self.d} <= 1 is below the giant-component threshold",
                SubcriticalDegreeWarning,
                stacklevel=2,
            )

    @property
    def a(self) -> float:
        return self.d + self.lam * math.sqrt(self.d)

    @property
    def b(self) -> float:
        return self.d - self.lam * math.sqrt(self.d)

    @property
    def signal(self) -> float:
        """lambda^2 + mu^2/gamma, the quantity compared to the threshold 1."""
        return self.lam**2 + self.mu**2 / self.gamma

    @classmethod
    def from_gamma(cls, lam, mu, d, gamma, n) -> "ModelParams":
        """Derive p = round(n / gamma)."""
        p = int(round(n / gamma))
        return cls(lam=lam, mu=mu, d=d, gamma=gamma, n=n, p=max(p, 1))

    @classmethod
    def from_np(cls, lam, mu, d, n, p) -> "ModelParams":
        """Explicit (n, p); gamma is recorded as n/p."""
        return cls(lam=lam, mu=mu, d=d, gamma=n / p, n=n, p=p)


def derive_edge_probs(params: ModelParams) -> tuple[float, float]:
    """(within-community, across-community) edge probabilities (a/n, b/n)."""
    return params.a / params.n, params.b / params.n


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


@dataclass(eq=False)
class Instance:
    """One sampled dataset: adjacency (edge list), covariates, optional truth."""

    params: ModelParams
    edges: np.ndarray  # (m, 2) int64, each row i < j
    B: np.ndarray  # (n, p) float64
    sigma: np.ndarray | None = None  # length n, entries +-1
    u: np.ndarray | None = None  # length p
    seed: int = 0
    _adj: sp.csr_matrix | None = field(default=None, repr=False, compare=False)
    _nbrs: list | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def has_truth(self) -> bool:
        return self.sigma is not None

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 CSR adjacency with zero diagonal (cached)."""
        if self._adj is None:
            n = self.n
            i, j = self.edges[:, 0], self.edges[:, 1]
            data = np.ones(2 * len(i), dtype=np.float64)
            rows = np.concatenate([i, j])
            cols = np.concatenate([j, i])
            self._adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._adj

    def neighbor_sets(self) -> list:
        """Neighbor set per vertex (cached), for path enumeration."""
        if self._nbrs is None:
            nbrs = [set() for _ in range(self.n)]
            for i, j in self.edges:
                nbrs[i].add(int(j))
                nbrs[j].add(int(i))
            self._nbrs = nbrs
        return self._nbrs

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        same_truth = (self.sigma is None) == (other.sigma is None) and (
            self.sigma is None
            or (
                np.array_equal(self.sigma, other.sigma)
                and np.array_equal(self.u, other.u)
            )
        )
        return (
            self.params == other.params
            and self.seed == other.seed
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.B, other.B)
            and same_truth
        )


def _sample_edges(params: ModelParams, sigma: np.ndarray, rng) -> np.ndarray:
    """Bernoulli edges over all unordered pairs, row-major order.

    O(n^2) draws in fixed-size chunks; deterministic in (params, sigma, rng
    state) independent of chunking because chunk boundaries are fixed.
    """
    n = params.n
    within, across = derive_edge_probs(params)
    out_i, out_j = [], []
    buf_i, buf_j = [], []
    buffered = 0
    row = 0
    while row < n:
        # accumulate whole rows until the chunk is full
        start = row
        while row < n and buffered < _PAIR_CHUNK:
            buffered += n - row - 1
            row += 1
        js = [np.arange(i + 1, n) for i in range(start, row)]
        if not js:
            break
        jj = np.concatenate(js)
        ii = np.concatenate(
            [np.full(n - i - 1, i, dtype=np.int64) for i in range(start, row)]
        )
        prob = np.where(sigma[ii] == sigma[jj], within, across)
        keep = rng.random(len(jj)) < prob
        out_i.append(ii[keep])
        out_j.append(jj[keep])
        buffered = 0
    i = np.concatenate(out_i) if out_i else np.empty(0, dtype=np.int64)
    j = np.concatenate(out_j) if out_j else np.empty(0, dtype=np.int64)
    return np.column_stack([i, j.astype(np.int64)])


def sample_instance(params: ModelParams, seed: int) -> Instance:
    """Sample (A, B, sigma, u) deterministically from (params, seed)."""
    n, p = params.n, params.p
    sigma = (_rng(seed, STREAM_SIGMA).integers(0, 2, size=n) * 2 - 1).astype(np.int8)
    u = _rng(seed, STREAM_U).standard_normal(p)
    edges = _sample_edges(params, sigma, _rng(seed, STREAM_EDGES))
    Z = _rng(seed, STREAM_NOISE).standard_normal((n, p))
    B = math.sqrt(params.mu / n) * sigma[:, None] * u[None, :] + Z
    return Instance(params=params, edges=edges, B=B, sigma=sigma, u=u, seed=seed)


# ---------------------------------------------------------------------------
# Persistence (text format, see README)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".17g")


def save_instance(instance: Instance, path) -> None:
    p = instance.params
    truth = 1 if instance.has_truth else 0
    with open(path, "w") as fh:
        fh.write(
            f"CSBM v1 n={p.n} p={p.p} lambda={_fmt(p.lam)} mu={_fmt(p.mu)} "
            f"d={_fmt(p.d)} gamma={_fmt(p.gamma)} seed={instance.seed} "
            f"truth={truth}\n"
        )
        fh.write(f"EDGES {len(instance.edges)}\n")
        for i, j in instance.edges:
            fh.write(f"{i} {j}\n")
        fh.write("B\n")
        for row in instance.B:
            fh.write(" ".join(_fmt(x) for x in row) + "\n")
        if truth:
            fh.write("SIGMA " + " ".join(str(int(s)) for s in instance.sigma) + "\n")
            fh.write("U " + " ".join(_fmt(x) for x in instance.u) + "\n")


def _parse_header(line: str) -> dict:
    parts = line.split()
    if len(parts) < 2 or parts[0] != "CSBM" or parts[1] != "v1":
        raise InstanceFormatError("missing 'CSBM v1' header", line=1)
    fields = {}
    for tok in parts[2:]:
        if "=" not in tok:
            raise InstanceFormatError(f"bad header token {tok!r}", line=1)
        key, val = tok.split("=", 1)
        fields[key] = val
    for key in ("n", "p", "lambda", "mu", "d", "gamma", "seed", "truth"):
        if key not in fields:
            raise InstanceFormatError(f"header missing field {key!r}", line=1)
    return fields


def load_instance(path) -> Instance:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InstanceFormatError("empty file", line=1)
    hdr = _parse_header(lines[0])
    try:
        n, p = int(hdr["n"]), int(hdr["p"])
        params = ModelParams(
            lam=float(hdr["lambda"]),
            mu=float(hdr["mu"]),
            d=float(hdr["d"]),
            gamma=float(hdr["gamma"]),
            n=n,
            p=p,
        )
        seed = int(hdr["seed"])
        truth = int(hdr["truth"])
    except ValueError as exc:
        raise InstanceFormatError(f"bad header value: {exc}", line=1) from exc

    ln = 1
    if ln >= len(lines) or not lines[ln].startswith("EDGES "):
        raise InstanceFormatError("missing EDGES section", line=ln + 1)
    try:
        m = int(lines[ln].split()[1])
    except (IndexError, ValueError) as exc:
        raise InstanceFormatError("bad EDGES count", line=ln + 1) from exc
    ln += 1
    if ln + m > len(lines):
        raise InstanceFormatError(
            f"EDGES section truncated: expected {m} edge lines", line=len(lines)
        )
    edges = np.empty((m, 2), dtype=np.int64)
    for t in range(m):
        try:
            i, j = lines[ln + t].split()
            edges[t] = (int(i), int(j))
        except ValueError as exc:
            raise InstanceFormatError("bad edge line", line=ln + t + 1) from exc
        if not (0 <= edges[t, 0] < edges[t, 1] < n):
            raise InstanceFormatError(
                f"edge ({edges[t,0]}, {edges[t,1]}) out of range", line=ln + t + 1
            )
    ln += m
    if ln >= len(lines) or lines[ln].strip() != "B":
        raise InstanceFormatError("missing B section", line=ln + 1)
    ln += 1
    if ln + n > len(lines):
        raise InstanceFormatError(
            f"B section truncated: expected {n} rows", line=len(lines)
        )
    B = np.empty((n, p))
    for r in range(n):
        vals = lines[ln + r].split()
        if len(vals) != p:
            raise InstanceFormatError(
                f"B row has {len(vals)} entries, header says p={p}", line=ln + r + 1
            )
        B[r] = [float(v) for v in vals]
    ln += n
    sigma = u = None
    if truth:
        if ln >= len(lines) or not lines[ln].startswith("SIGMA"):
            raise InstanceFormatError("missing SIGMA section", line=ln + 1)
        vals = lines[ln].split()[1:]
        if len(vals) != n:
            raise InstanceFormatError(
                f"SIGMA has {len(vals)} entries, expected n={n}", line=ln + 1
            )
        sigma = np.array([int(v) for v in vals], dtype=np.int8)
        if not np.all(np.abs(sigma) == 1):
            raise InstanceFormatError("SIGMA entries must be +-1", line=ln + 1)
        ln += 1
        if ln >= len(lines) or not lines[ln].startswith("U"):
            raise InstanceFormatError("missing U section", line=ln + 1)
        vals = lines[ln].split()[1:]
        if len(vals) != p:
            raise InstanceFormatError(
                f"U has {len(vals)} entries, expected p={p}", line=ln + 1
            )
        u = np.array([float(v) for v in vals])
    return Instance(params=params, edges=edges, B=B, sigma=sigma, u=u, seed=seed)
