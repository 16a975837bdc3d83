"""Graphs, combinatorial Laplacians and the vectorized Laplacian operator pair.

Edge weights of a Laplacian with ``n`` nodes are stored as a nonnegative vector
``s`` of length ``n(n-1)/2``. Pairs are ordered row-major over the strict upper
triangle, i.e. ``(0,1), (0,2), ..., (0,n-1), (1,2), ...``, which is exactly the
order of ``np.triu_indices(n, k=1)``. Every serialization in the package uses
this ordering.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Raised when a graph or an operator input is malformed."""


class ParseError(GraphError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph without self-loops."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise GraphError(f"adjacency must be square and non-empty, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise GraphError("adjacency has non-finite entries")
        if not np.array_equal(A, A.T):
            raise GraphError("adjacency is not symmetric")
        if np.any(np.diag(A) != 0):
            raise GraphError("self-loops are not supported")
        if np.any(A < 0):
            raise GraphError("edge weights must be nonnegative")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, n: int, edges, weights=None) -> "Graph":
        A = np.zeros((n, n))
        edges = list(edges)
        if weights is None:
            weights = [1.0] * len(edges)
        for (i, j), w in zip(edges, weights):
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            A[i, j] = A[j, i] = w
        return cls(A)

    @classmethod
    def from_laplacian(cls, L: np.ndarray) -> "Graph":
        A = -np.array(L, dtype=float)
        np.fill_diagonal(A, 0.0)
        A = np.maximum((A + A.T) / 2, 0.0)
        return cls(A)

    def edges(self):
        """Upper-triangle edges as ``(i, j, w)`` triples."""
        iu, ju = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(i), int(j), float(self.adjacency[i, j])) for i, j in zip(iu, ju)]

    def degrees(self) -> np.ndarray:
        """Unweighted degree of every node."""
        return np.count_nonzero(self.adjacency, axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def n_components(self) -> int:
        from scipy.sparse.csgraph import connected_components

        return int(connected_components(self.adjacency != 0, directed=False)[0])


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``diag(A 1) - A``."""
    A = g.adjacency
    return np.diag(A.sum(axis=1)) - A


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def nodes_from_pairs(k: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * k)) / 2))
    if n_pairs(n) != k:
        raise GraphError(f"{k} is not a triangular number n(n-1)/2")
    return n


@lru_cache(maxsize=None)
def _pair_index(n: int):
    iu, ju = np.triu_indices(n, k=1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def materialize(s: np.ndarray, n: int | None = None) -> np.ndarray:
    """Map a weight vector to its Laplacian (the linear operator S).

    Symmetry and zero row sums hold by construction.
    """
    s = np.asarray(s, dtype=float)
    if n is None:
        n = nodes_from_pairs(s.size)
    elif s.size != n_pairs(n):
        raise GraphError(f"expected {n_pairs(n)} weights for n={n}, got {s.size}")
    iu, ju = _pair_index(n)
    S = np.zeros((n, n))
    S[iu, ju] = -s
    S[ju, iu] = -s
    np.fill_diagonal(S, -S.sum(axis=1))
    return S


def adjoint(Y: np.ndarray) -> np.ndarray:
    """Adjoint S* of :func:`materialize`: entry ``(i,j)`` is ``Y_ii + Y_jj - Y_ij - Y_ji``."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise GraphError(f"adjoint expects a square matrix, got shape {Y.shape}")
    n = Y.shape[0]
    iu, ju = _pair_index(n)
    d = np.diag(Y)
    return d[iu] + d[ju] - Y[iu, ju] - Y[ju, iu]


def gram_apply(s: np.ndarray, n: int) -> np.ndarray:
    """``S*(S(s))`` without forming the matrix: ``d_i + d_j + 2 s_ij`` with ``d`` the weighted degrees."""
    iu, ju = _pair_index(n)
    d = np.bincount(iu, s, minlength=n) + np.bincount(ju, s, minlength=n)
    return d[iu] + d[ju] + 2.0 * s


def weights_of(L: np.ndarray) -> np.ndarray:
    """Edge weights ``-L_ij`` of a Laplacian-like matrix, negatives clipped to zero."""
    L = np.asarray(L, dtype=float)
    iu, ju = _pair_index(L.shape[0])
    return np.maximum(-(L[iu, ju] + L[ju, iu]) / 2, 0.0)


def gram_matrix(n: int) -> np.ndarray:
    """Dense matrix of S*∘S, size ``n(n-1)/2`` squared. Only meant for small ``n``."""
    k = n_pairs(n)
    G = np.empty((k, k))
    for col, e in enumerate(np.eye(k)):
        G[:, col] = adjoint(materialize(e, n))
    return G


_norm_cache: dict[int, float] = {}
_norm_lock = threading.Lock()


def operator_norm_sq(n: int, rtol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Squared operator norm ``sup_{|x|=1} |S x|_F^2`` by power iteration on S*∘S.

    Results are cached per ``n``; the cache is guarded by a lock.
    """
    if n < 2:
        raise GraphError("operator norm needs n >= 2")
    cached = _norm_cache.get(n)
    if cached is not None:
        return cached

    # deterministic start with components along every pair
    x = 1.0 + np.arange(n_pairs(n), dtype=float) / n_pairs(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = adjoint(materialize(x, n))
        new = float(x @ y)
        x = y / np.linalg.norm(y)
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new

    with _norm_lock:
        _norm_cache.setdefault(n, est)
        return _norm_cache[n]


# --------------------------------------------------------------------------
# edge-list files

def read_edge_list(path) -> Graph:
    """Read ``i j w`` lines (0-based) preceded by a ``# nodes N`` header."""
    path = Path(path)
    n = None
    edges = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    try:
                        n = int(parts[1])
                    except ValueError:
                        raise ParseError(path, lineno, f"bad node count {parts[1]!r}") from None
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(path, lineno, f"expected 'i j w', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"bad node index in {line!r}") from None
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(path, lineno, f"bad weight {parts[2]!r}") from None
            if not np.isfinite(w) or w < 0:
                raise ParseError(path, lineno, f"weight must be finite and nonnegative, got {w}")
            if i == j:
                raise ParseError(path, lineno, "self-loops are not supported")
            edges.append((lineno, i, j, w))
    if n is None:
        raise ParseError(path, 1, "missing '# nodes N' header")
    A = np.zeros((n, n))
    for lineno, i, j, w in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(path, lineno, f"node index out of range for n={n}")
        A[i, j] = A[j, i] = w
    return Graph(A)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nodes {g.n}\n")
        for i, j, w in g.edges():
            fh.write(f"{i} {j} {w:.17g}\n")
