from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from treesnake.errors import UsageError
from treesnake.offspring import geometric_half, sample_offspring
from treesnake.planetree import (
    ENUMERATION_MAX_EDGES,
    PlaneTree,
    enumerate_plane_trees,
    marked_graph_key,
    reroot_one_step,
    rerooted_with_first_child,
    sample_uniform_plane_tree,
)
from treesnake.rng import derive_stream

CATALAN = {1: 1, 2: 2, 3: 5, 4: 14, 5: 42, 6: 132}


def test_enumeration_counts():
    for n, cat in CATALAN.items():
        trees = enumerate_plane_trees(n)
        assert len(trees) == cat
        assert len({t.to_dyck() for t in trees}) == cat
        for t in trees:
            t.validate()
            assert t.n_edges == n


def test_enumeration_guard():
    with pytest.raises(UsageError):
        enumerate_plane_trees(ENUMERATION_MAX_EDGES + 1)
    with pytest.raises(UsageError):
        enumerate_plane_trees(0)


def test_sample_n1_unique_tree():
    rng = derive_stream(5, [0])
    t = sample_uniform_plane_tree(1, rng)
    assert t.to_dyck() == "()"
    assert t.distinguished_edge == (1, 0)
    with pytest.raises(UsageError):
        sample_uniform_plane_tree(0, rng)


def test_dyck_round_trip_random_trees():
    rng = derive_stream(5, [1])
    for n in range(1, ENUMERATION_MAX_EDGES + 1):
        for _ in range(20):
            t = sample_uniform_plane_tree(n, rng)
            t.validate()
            assert PlaneTree.from_dyck(t.to_dyck()) == t


def test_serialize_round_trip_and_golden():
    rng = derive_stream(5, [2])
    t = sample_uniform_plane_tree(6, rng)
    s = t.serialize()
    assert PlaneTree.deserialize(s).serialize() == s
    assert sample_uniform_plane_tree(1, rng).serialize() == "()\te1+"


def test_rotation_map_exactly_uniform():
    """Every arrangement of n up/n+1 down steps rotates to a valid code word,
    and each word is hit exactly 2n+1 times: the sampler's uniformity reduces
    to the shuffle being uniform."""
    from itertools import permutations
    from collections import Counter

    from treesnake.planetree import _dyck_words

    for n in (1, 2, 3):
        seen = Counter()
        for arr in set(permutations([1] * n + [-1] * (n + 1))):
            steps = np.array(arr)
            prefix = np.cumsum(steps)
            start = int(np.argmin(prefix)) + 1
            rot = np.concatenate([steps[start:], steps[:start]])[:-1]
            seen["".join("(" if s == 1 else ")" for s in rot)] += 1
        assert set(seen) == set(_dyck_words(n))
        assert set(seen.values()) == {2 * n + 1}


def test_sampler_uniform_chi_square_small():
    # fuller grid runs in the acceptance suite
    rng = derive_stream(5, [33])
    for n in (3, 4):
        codes = [t.to_dyck() for t in enumerate_plane_trees(n)]
        idx = {c: i for i, c in enumerate(codes)}
        counts = np.zeros(len(codes))
        samples = 20_000
        for _ in range(samples):
            counts[idx[sample_uniform_plane_tree(n, rng).to_dyck()]] += 1
        p = stats.chisquare(counts).pvalue
        assert p > 0.01, f"n={n}: p={p}"


def test_all_14_shapes_observed_n4():
    rng = derive_stream(5, [4])
    seen = {sample_uniform_plane_tree(4, rng).to_dyck() for _ in range(5000)}
    assert len(seen) == 14


def test_degree_and_ball():
    t = PlaneTree.from_dyck("()")
    assert t.degree(0) == 1 and t.degree(1) == 1
    cherry = PlaneTree.from_dyck("()()")
    assert cherry.degree(0) == 2
    star = PlaneTree.from_dyck("()" * 7)
    assert star.degree(0) == 7
    path = PlaneTree.from_dyck("(((())))")
    center = 2
    assert path.ball_vertices(center, 0) == {2}
    assert len(path.ball_vertices(center, 1)) == 3
    assert len(path.ball_vertices(center, 10)) == path.n_vertices
    with pytest.raises(UsageError):
        path.degree(99)


def test_reroot_n1_flips_edge():
    t = PlaneTree.from_dyck("()")
    out = reroot_one_step(t, derive_stream(5, [5]))
    assert out.to_dyck() == "()"
    assert out.distinguished_edge == (1, 0)


def _uniform_pushforward_distance(n):
    """Exact TV distance between uniform and its image under the one-step
    re-rooting move, over plane trees with n edges."""
    trees = enumerate_plane_trees(n)
    cat = len(trees)
    push = {}
    for t in trees:
        nbrs = t.neighbors(t.root)
        p = Fraction(1, cat * len(nbrs))
        for v in nbrs:
            out = rerooted_with_first_child(t, v, t.root)
            key = out.to_dyck()
            push[key] = push.get(key, Fraction(0)) + p
    uniform = Fraction(1, cat)
    tv = sum(abs(push.get(t.to_dyck(), Fraction(0)) - uniform) for t in trees)
    tv += sum(p for k, p in push.items() if k not in {t.to_dyck() for t in trees})
    return tv / 2


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_reroot_exact_pushforward_uniform(n):
    assert _uniform_pushforward_distance(n) == 0


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_reversal_symmetry_exact(n):
    """The joint law of (shape, root, sampled neighbor) as a doubly-marked
    graph is invariant under swapping the marks."""
    trees = enumerate_plane_trees(n)
    cat = len(trees)
    law_a, law_b = {}, {}
    for t in trees:
        nbrs = t.neighbors(t.root)
        p = Fraction(1, cat * len(nbrs))
        for v in nbrs:
            ka = marked_graph_key(t, t.root, v)
            kb = marked_graph_key(t, v, t.root)
            law_a[ka] = law_a.get(ka, Fraction(0)) + p
            law_b[kb] = law_b.get(kb, Fraction(0)) + p
    keys = set(law_a) | set(law_b)
    tv = sum(abs(law_a.get(k, Fraction(0)) - law_b.get(k, Fraction(0))) for k in keys)
    assert tv == 0


def test_reroot_preserves_cyclic_structure():
    # re-rooting twice along the same edge returns the original tree
    rng = derive_stream(5, [6])
    for _ in range(50):
        t = sample_uniform_plane_tree(6, rng)
        fc = t.first_child(t.root)
        out = rerooted_with_first_child(t, fc, t.root)
        back = rerooted_with_first_child(out, out.first_child(out.root), out.root)
        assert back.to_dyck() == t.to_dyck()


def test_gw_conditioned_rejection_matches_uniform():
    """Cross-check oracle: a critical geometric branching tree conditioned on
    its edge count is uniform over plane trees with that many edges."""
    from treesnake.kesten import sample_gw_truncated

    rng = derive_stream(5, [7])
    law = geometric_half()
    n = 3
    codes = [t.to_dyck() for t in enumerate_plane_trees(n)]
    idx = {c: i for i, c in enumerate(codes)}
    counts = np.zeros(len(codes))
    target = 4000
    got = 0
    while got < target:
        t = sample_gw_truncated(law, 3 * n, rng)
        if t.n_edges == n:
            counts[idx[t.to_dyck()]] += 1
            got += 1
    assert stats.chisquare(counts).pvalue > 0.01
