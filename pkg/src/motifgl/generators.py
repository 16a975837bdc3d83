"""Synthetic graph models and GMRF signal sampling.

Randomness comes from :class:`numpy.random.SeedSequence`. A stream for
``(base_seed, *key)`` is ``SeedSequence(base_seed, spawn_key=key)``, so streams
for different keys are independent and do not depend on how many other
streams were drawn.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .spectral import eig_sym

KINDS = ("lattice", "small_world", "sbm")

# purposes used in stream keys
TRUTH, REFERENCE, SIGNALS = 0, 1, 2


class InvalidParams(ValueError):
    pass


class NotPSD(ValueError):
    pass


def rng_for(base_seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by ``(base_seed, *key)``."""
    ss = np.random.SeedSequence(int(base_seed) % 2**64, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def seed_for(base_seed: int, *key: int) -> int:
    """64-bit integer seed for the stream ``(base_seed, *key)``."""
    ss = np.random.SeedSequence(int(base_seed) % 2**64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class GraphModel:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown graph model {self.kind!r}")
        p = self.params
        need = {
            "lattice": ("n", "neighbors"),
            "small_world": ("n", "neighbors", "p_rw"),
            "sbm": ("n", "communities", "p", "q"),
        }[self.kind]
        missing = [k for k in need if k not in p]
        if missing:
            raise InvalidParams(f"{self.kind} needs parameters {missing}")
        if int(p["n"]) < 1:
            raise InvalidParams("n must be positive")
        if self.kind in ("lattice", "small_world"):
            k = int(p["neighbors"])
            if k % 2 or k < 0 or k >= int(p["n"]):
                raise InvalidParams(f"neighbors must be even and below n, got {k}")
        for name in ("p_rw", "p", "q"):
            if name in p and not 0.0 <= float(p[name]) <= 1.0:
                raise InvalidParams(f"{name} must be a probability, got {p[name]}")
        if self.kind == "sbm" and not 1 <= int(p["communities"]) <= int(p["n"]):
            raise InvalidParams("communities must be between 1 and n")

    def with_params(self, **kw) -> "GraphModel":
        return GraphModel(self.kind, {**self.params, **kw}, self.seed)

    def with_seed(self, seed: int) -> "GraphModel":
        return GraphModel(self.kind, dict(self.params), seed)


def _ring_lattice(n: int, k: int) -> np.ndarray:
    A = np.zeros((n, n))
    idx = np.arange(n)
    for d in range(1, k // 2 + 1):
        A[idx, (idx + d) % n] = 1.0
        A[(idx + d) % n, idx] = 1.0
    return A


def community_sizes(n: int, K: int) -> list:
    """Contiguous near-equal blocks; the first ``n % K`` blocks get one extra node."""
    base, extra = divmod(n, K)
    return [base + (1 if c < extra else 0) for c in range(K)]


def community_labels(n: int, K: int) -> np.ndarray:
    return np.repeat(np.arange(K), community_sizes(n, K))


def generate(model: GraphModel) -> Graph:
    """Sample a graph with unit edge weights; deterministic for a fixed seed."""
    p = model.params
    n = int(p["n"])
    rng = np.random.default_rng(np.random.SeedSequence(int(model.seed) % 2**64))

    if model.kind == "lattice":
        return Graph(_ring_lattice(n, int(p["neighbors"])))

    if model.kind == "small_world":
        # Watts-Strogatz: each lattice edge (i, i+d) is rewired with prob p_rw
        k = int(p["neighbors"])
        A = _ring_lattice(n, k)
        p_rw = float(p["p_rw"])
        for d in range(1, k // 2 + 1):
            for i in range(n):
                j = (i + d) % n
                if rng.random() >= p_rw:
                    continue
                free = np.flatnonzero(A[i] == 0)
                free = free[free != i]
                if free.size == 0:
                    continue
                new = int(rng.choice(free))
                A[i, j] = A[j, i] = 0.0
                A[i, new] = A[new, i] = 1.0
        return Graph(A)

    K = int(p["communities"])
    labels = community_labels(n, K)
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, float(p["p"]), float(p["q"]))
    U = rng.random((n, n))
    A = np.triu((U < prob).astype(float), k=1)
    return Graph(A + A.T)


@dataclass(frozen=True)
class SignalBatch:
    X: np.ndarray  # n x M
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def sample_gmrf(L: np.ndarray, m: int, seed: int, q: int = 1) -> SignalBatch:
    """Draw ``m`` zero-mean signals with covariance ``pinv(L)``.

    The ``q`` smallest eigenpairs (the null space of a Laplacian with ``q``
    connected components) are excluded.
    """
    spec = eig_sym(L)
    if spec.eigenvalues[0] < -1e-8:
        raise NotPSD(f"smallest eigenvalue {spec.eigenvalues[0]:.3g} < 0")
    lam, V = spec.eigenvalues[q:], spec.eigenvectors[:, q:]
    if np.any(lam <= 0):
        raise NotPSD(f"expected {q} zero eigenvalues, found more")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64))
    Z = rng.standard_normal((lam.size, m))
    X = V @ (Z / np.sqrt(lam)[:, None])
    return SignalBatch(X, seed)


def empirical_covariance(batch) -> np.ndarray:
    """``(1/M) X X^T``."""
    X = batch.X if isinstance(batch, SignalBatch) else np.asarray(batch, dtype=float)
    if X.shape[1] < 1:
        raise ValueError("need at least one sample")
    C = X @ X.T / X.shape[1]
    return (C + C.T) / 2
