import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rooted_isomorphic, triangle, wedge
from motifgl.generators import GraphModel, generate
from motifgl.graph import Graph, GraphError
from motifgl.motifs import (
    BallTooLarge,
    RadiusMismatch,
    canonical_key,
    census_distance,
    motif_census,
    rooted_ball,
    write_census_csv,
)


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star(n):
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def test_radius_zero_is_single_point():
    keys = {rooted_ball(cycle(5), i, 0).canonical_key for i in range(5)}
    keys |= {rooted_ball(star(6), i, 0).canonical_key for i in range(6)}
    assert len(keys) == 1
    assert rooted_ball(star(6), 2, 0).size == 1


def test_star_center_ball_is_whole_star():
    b = rooted_ball(star(7), 0, 1)
    assert sorted(b.nodes) == list(range(7))
    assert b.nodes[0] == 0


def test_ball_nodes_within_radius():
    g = path(9)
    b = rooted_ball(g, 4, 2)
    assert sorted(b.nodes) == [2, 3, 4, 5, 6]


def test_root_out_of_range():
    with pytest.raises(GraphError):
        rooted_ball(path(3), 3, 1)


def test_fig1_marked_balls(fig1):
    blue = rooted_ball(wedge(), 0, 1).canonical_key
    red = rooted_ball(triangle(), 0, 1).canonical_key
    census = motif_census(fig1, 1)
    assert census.density(blue) == Fraction(5, 8)
    assert census.density(red) == Fraction(1, 4)
    assert rooted_ball(fig1, 4, 1).canonical_key == blue
    assert rooted_ball(fig1, 0, 1).canonical_key == red


def test_census_sums_to_one(fig1):
    for g in (fig1, star(9), path(7), cycle(11)):
        for r in (0, 1, 2):
            c = motif_census(g, r)
            assert sum(c.densities.values()) == 1
            assert abs(sum(float(v) for v in c.densities.values()) - 1) <= 1e-12


def test_cycle_single_class():
    c = motif_census(cycle(10), 1)
    assert list(c.densities.values()) == [1]


def test_lattice_families_close():
    a = motif_census(generate(GraphModel("lattice", {"n": 40, "neighbors": 4})), 1)
    b = motif_census(generate(GraphModel("lattice", {"n": 25, "neighbors": 4})), 1)
    assert census_distance(a, b) == 0.0


def test_census_distance_examples(fig1):
    assert census_distance(motif_census(fig1, 1), motif_census(fig1, 1)) == 0.0
    assert census_distance(motif_census(cycle(4), 1), motif_census(cycle(100), 1)) == 0.0
    # P3: two leaves (single-edge balls) and a wedge; C3: three triangle corners
    d = census_distance(motif_census(path(3), 1), motif_census(cycle(3), 1))
    assert d == pytest.approx(1.0)
    with pytest.raises(RadiusMismatch):
        census_distance(motif_census(path(3), 1), motif_census(path(3), 2))


def test_ball_cap():
    with pytest.raises(BallTooLarge):
        motif_census(star(20), 1, cap=10)


def test_star_balls_are_fast():
    # many interchangeable leaves must not trigger factorial search
    b = rooted_ball(star(40), 0, 1)
    assert b.size == 40


def test_weights_ignored():
    g1 = Graph.from_edges(3, [(0, 1), (1, 2)], [1.0, 1.0])
    g2 = Graph.from_edges(3, [(0, 1), (1, 2)], [0.1, 7.0])
    assert motif_census(g1, 1).counts == motif_census(g2, 1).counts


def _random_graph(rng, n, p):
    A = np.triu(rng.random((n, n)) < p, 1)
    return (A | A.T).astype(float)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), p=st.floats(0.2, 0.9))
def test_key_soundness_against_brute_force(seed, n, p):
    rng = np.random.default_rng(seed)
    A = _random_graph(rng, n, p)
    B = _random_graph(rng, n, p)
    # a relabeled copy of A with the root kept in place
    perm = np.concatenate([[0], 1 + rng.permutation(n - 1)])
    A2 = A[np.ix_(perm, perm)]
    ka, kb, ka2 = canonical_key(A), canonical_key(B), canonical_key(A2)
    assert ka == ka2
    assert (ka == kb) == rooted_isomorphic(A, B)


def test_key_soundness_exhaustive_small():
    # every graph on 4 nodes, rooted at 0
    pairs = list(itertools.combinations(range(4), 2))
    mats = []
    for mask in range(2 ** len(pairs)):
        A = np.zeros((4, 4))
        for bit, (i, j) in enumerate(pairs):
            if mask >> bit & 1:
                A[i, j] = A[j, i] = 1
        mats.append(A)
    keys = [canonical_key(A) for A in mats]
    for (A, ka), (B, kb) in itertools.combinations(zip(mats, keys), 2):
        assert (ka == kb) == rooted_isomorphic(A, B)


def test_census_csv(tmp_path, fig1):
    p = tmp_path / "census.csv"
    write_census_csv(motif_census(fig1, 1), p)
    lines = p.read_text().splitlines()
    assert lines[0] == "canonical_key,density"
    assert float(lines[1].split(",")[1]) == 0.625
