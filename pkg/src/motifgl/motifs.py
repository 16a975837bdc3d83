"""Rooted r-ball extraction and rooted-motif density census.

Isomorphism classes of rooted balls are identified by a canonical key obtained
from color refinement (initial colors: hop distance to the root and degree
inside the ball) followed by an exhaustive individualization search over the
remaining non-singleton cells. The key is the upper triangle of the ball's
adjacency matrix in canonical order, so equal keys imply rooted isomorphism
and vice versa. Edge weights are ignored: an edge exists iff its weight is
nonzero.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import Graph, GraphError

DEFAULT_BALL_CAP = 64


class BallTooLarge(GraphError):
    """A rooted ball exceeds the configured node cap; the census is intractable."""


class RadiusMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RootedBall:
    radius: int
    root: int
    nodes: tuple  # node ids in the parent graph, root first
    adjacency: np.ndarray = field(repr=False)  # boolean, local indexing
    canonical_key: bytes = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def subgraph(self) -> Graph:
        return Graph(self.adjacency.astype(float))


def _bfs_ball(adj: np.ndarray, root: int, r: int, cap: int):
    dist = {root: 0}
    order = [root]
    queue = deque([root])
    while queue:
        u = queue.popleft()
        if dist[u] == r:
            continue
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v not in dist:
                dist[v] = dist[u] + 1
                order.append(v)
                if len(order) > cap:
                    raise BallTooLarge(
                        f"ball of radius {r} at node {root} exceeds {cap} nodes"
                    )
                queue.append(v)
    return order, [dist[v] for v in order]


def _rank(signatures) -> np.ndarray:
    uniq = sorted(set(signatures))
    lookup = {s: i for i, s in enumerate(uniq)}
    return np.array([lookup[s] for s in signatures], dtype=np.int64)


def _refine(nbrs, colors: np.ndarray) -> np.ndarray:
    n_classes = len(set(colors.tolist()))
    while True:
        sigs = [
            (int(colors[v]), tuple(sorted(colors[nbrs[v]].tolist())))
            for v in range(len(nbrs))
        ]
        new = _rank(sigs)
        k = int(new.max()) + 1
        if k == n_classes:
            return new
        colors, n_classes = new, k


def _certificate(adj: np.ndarray, colors: np.ndarray) -> bytes:
    order = np.argsort(colors, kind="stable")
    P = adj[np.ix_(order, order)]
    iu = np.triu_indices(len(order), k=1)
    return np.packbits(P[iu]).tobytes()


def _are_twins(adj: np.ndarray, u: int, v: int) -> bool:
    a, b = adj[u].copy(), adj[v].copy()
    a[v] = b[u] = False
    return bool(np.array_equal(a, b))


def _search(adj, nbrs, colors) -> bytes:
    colors = _refine(nbrs, colors)
    counts = np.bincount(colors)
    if counts.max() == 1:
        return _certificate(adj, colors)
    target = int(np.flatnonzero(counts > 1)[0])
    cell = np.flatnonzero(colors == target)
    best = None
    tried: list[int] = []
    for v in cell:
        v = int(v)
        # swapping twins is an automorphism that fixes everything already individualized
        if any(_are_twins(adj, u, v) for u in tried):
            continue
        tried.append(v)
        split = 2 * colors + 1
        split[v] -= 1
        cert = _search(adj, nbrs, _rank(split.tolist()))
        if best is None or cert < best:
            best = cert
    return best


def canonical_key(adjacency: np.ndarray, root: int = 0, dist=None) -> bytes:
    """Canonical key of a rooted graph given by a (boolean) adjacency matrix."""
    adj = np.asarray(adjacency) != 0
    n = adj.shape[0]
    if dist is None:
        order, hops = _bfs_ball(adj, root, n, n + 1)
        dist = np.full(n, n + 1)
        dist[order] = hops
    nbrs = [np.flatnonzero(adj[v]) for v in range(n)]
    deg = adj.sum(axis=1)
    colors = _rank(list(zip(np.asarray(dist).tolist(), deg.tolist())))
    cert = _search(adj, nbrs, colors)
    return n.to_bytes(4, "big") + cert


def rooted_ball(g: Graph, root: int, r: int, cap: int = DEFAULT_BALL_CAP) -> RootedBall:
    """Induced subgraph of the ``r``-hop neighborhood of ``root``, root first."""
    if not 0 <= root < g.n:
        raise GraphError(f"root {root} out of range for n={g.n}")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    adj = g.adjacency != 0
    order, dist = _bfs_ball(adj, root, r, cap)
    sub = adj[np.ix_(order, order)]
    sub.setflags(write=False)
    key = canonical_key(sub, 0, dist)
    return RootedBall(r, root, tuple(order), sub, key)


@dataclass(frozen=True)
class MotifCensus:
    radius: int
    n: int
    max_degree: int
    counts: dict  # canonical_key -> number of nodes whose ball is in that class

    @property
    def densities(self) -> dict:
        """Exact densities as :class:`fractions.Fraction`."""
        return {k: Fraction(c, self.n) for k, c in self.counts.items()}

    def density(self, key: bytes) -> Fraction:
        return Fraction(self.counts.get(key, 0), self.n)

    def to_rows(self):
        """``(hex key, density)`` rows sorted by decreasing density, then key."""
        items = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(k.hex(), c / self.n) for k, c in items]


def motif_census(g: Graph, r: int, cap: int = DEFAULT_BALL_CAP) -> MotifCensus:
    """Fraction of nodes whose rooted ``r``-ball falls in each isomorphism class.

    Raises
    ------
    BallTooLarge
        If any ball has more than ``cap`` nodes.
    """
    counts = Counter(rooted_ball(g, i, r, cap).canonical_key for i in range(g.n))
    max_deg = int(g.degrees().max()) if g.n else 0
    return MotifCensus(r, g.n, max_deg, dict(counts))


def census_distance(a: MotifCensus, b: MotifCensus) -> float:
    """Smallest eps with ``|tau_a - tau_b| <= eps`` for every ball class."""
    if a.radius != b.radius:
        raise RadiusMismatch(f"radius {a.radius} != {b.radius}")
    keys = set(a.counts) | set(b.counts)
    if not keys:
        return 0.0
    return float(max(abs(a.density(k) - b.density(k)) for k in keys))


def write_census_csv(census: MotifCensus, path) -> None:
    """Write ``canonical_key,density`` rows to a path or an open text stream."""
    if hasattr(path, "write"):
        _census_rows(census, path)
        return
    with open(path, "w") as fh:
        _census_rows(census, fh)


def _census_rows(census, fh):
    fh.write("canonical_key,density\n")
    for key, dens in census.to_rows():
        fh.write(f"{key},{dens:.17g}\n")
