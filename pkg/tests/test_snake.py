import numpy as np
import pytest
from oracles import srw_return_probability

from treesnake.errors import UsageError
from treesnake.kesten import sample_kesten_ball
from treesnake.offspring import geometric_half
from treesnake.planetree import PlaneTree
from treesnake.rng import derive_stream
from treesnake.snake import (
    assign_and_embed,
    boundary_hit_zero,
    max_displacement,
    pack_positions,
    prefix_excluded_scope,
    range_size,
    return_count,
    rewalk_position,
    two_snake_intersection,
)

GEO = geometric_half()


def _path_tree(r):
    return PlaneTree.from_dyck("(" * r + ")" * r)


def test_embedding_invariants():
    rng = derive_stream(9, [0])
    t = sample_kesten_ball(GEO, 6, rng)
    e = assign_and_embed(t, 3, rng)
    assert np.all(e.positions[t.root] == 0)
    # adjacent vertices differ by one signed unit step
    for v in range(1, t.tree.n_vertices):
        diff = e.positions[v] - e.positions[t.tree.parent[v]]
        assert np.abs(diff).sum() == 1
    # re-walking the root path reproduces stored positions
    check = rng.gen.integers(0, t.tree.n_vertices, size=min(100, t.tree.n_vertices))
    for v in check:
        assert np.array_equal(rewalk_position(e, int(v)), e.positions[int(v)])


def test_single_edge_dimension_one():
    rng = derive_stream(9, [1])
    t = _path_tree(1)
    n = 20_000
    plus = 0
    for _ in range(n):
        e = assign_and_embed(t, 1, rng)
        v = int(e.positions[1, 0])
        assert v in (-1, 1)
        plus += v == 1
    se = np.sqrt(0.25 / n)
    assert abs(plus / n - 0.5) < 4 * se
    assert return_count(assign_and_embed(t, 1, rng)) == 1


def test_path_second_moment():
    # end displacement of a path of r edges is an r-step walk: E|S|^2 = r
    rng = derive_stream(9, [2])
    r, d, n = 16, 3, 30_000
    t = _path_tree(r)
    end = t.n_vertices - 1
    sq = np.empty(n)
    for i in range(n):
        e = assign_and_embed(t, d, rng)
        sq[i] = float((e.positions[end] ** 2).sum())
    se = sq.std() / np.sqrt(n)
    assert abs(sq.mean() - r) < 4 * se


def test_return_count_two_edge_path():
    # returns iff the second step cancels the first: E = 1 + 1/(2d)
    rng = derive_stream(9, [3])
    t = _path_tree(2)
    for d in (1, 2):
        n = 20_000
        total = sum(return_count(assign_and_embed(t, d, rng)) for _ in range(n))
        expect = 1 + 1 / (2 * d)
        se = np.sqrt(0.25 / n)  # counts are 1 or 2
        assert abs(total / n - expect) < 4 * se


def test_range_size_bounds_and_trivial():
    rng = derive_stream(9, [4])
    t = sample_kesten_ball(GEO, 5, rng)
    e = assign_and_embed(t, 2, rng)
    assert range_size(e, [t.root]) == 1
    assert range_size(e) <= t.tree.n_vertices
    with pytest.raises(UsageError):
        range_size(e, [])


def test_range_one_dimension_equals_span():
    rng = derive_stream(9, [5])
    t = _path_tree(12)
    for _ in range(50):
        e = assign_and_embed(t, 1, rng)
        x = e.positions[:, 0]
        assert range_size(e) == int(x.max() - x.min() + 1)


def test_max_displacement():
    rng = derive_stream(9, [6])
    t = sample_kesten_ball(GEO, 4, rng)
    e = assign_and_embed(t, 2, rng)
    assert max_displacement(e, [t.root]) == 0
    assert max_displacement(e) <= 4  # at most r unit steps


def test_boundary_hit_parity_and_r1():
    rng = derive_stream(9, [7])
    for _ in range(300):
        t = sample_kesten_ball(GEO, 1, rng)
        e = assign_and_embed(t, 1, rng)
        assert boundary_hit_zero(t, e) is False  # one step cannot return
    for _ in range(100):
        t = sample_kesten_ball(GEO, 3, rng)
        e = assign_and_embed(t, 1, rng)
        assert boundary_hit_zero(t, e) is False  # odd radius: parity


def test_parity_law_on_returns():
    rng = derive_stream(9, [8])
    for _ in range(200):
        t = sample_kesten_ball(GEO, 6, rng)
        e = assign_and_embed(t, 1, rng)
        return_count(e)  # raises InvariantViolation on any odd-depth return


def test_prefix_excluded_scope():
    rng = derive_stream(9, [9])
    t = sample_kesten_ball(GEO, 10, rng)
    scope = prefix_excluded_scope(t, 0.5)
    i0 = 5
    assert set(scope) == set(np.flatnonzero(t.spine_index >= i0))
    # complement is exactly the early region
    comp = set(range(t.tree.n_vertices)) - set(scope)
    assert comp == set(np.flatnonzero(t.spine_index < i0))
    # eta = 1 keeps only the spine tail (grafts at the last vertex are empty)
    tail = prefix_excluded_scope(t, 1.0)
    assert set(tail) == {10}
    with pytest.raises(UsageError):
        prefix_excluded_scope(t, 0.0)


def test_prefix_excluded_mean_size():
    # E|excluded region| = eta*r spine vertices + 2 sum_{i<eta r}(r-i)
    rng = derive_stream(9, [10])
    r, eta, n = 12, 0.5, 8000
    i0 = int(np.floor(eta * r))
    expect = i0 + 2 * sum(r - i for i in range(i0))
    vals = np.empty(n)
    for i in range(n):
        t = sample_kesten_ball(GEO, r, rng)
        vals[i] = t.tree.n_vertices - len(prefix_excluded_scope(t, eta))
    se = vals.std() / np.sqrt(n)
    assert abs(vals.mean() - expect) < 4 * se


def test_pack_positions_overflow_guard():
    with pytest.raises(UsageError):
        pack_positions(np.array([[40000]], dtype=np.int64))
    keys = pack_positions(np.array([[1, 2, 3, 4, 5], [1, 2, 3, 4, 5], [0, 0, 0, 0, 1]]))
    assert keys[0] == keys[1] and keys[0] != keys[2]


def test_two_snake_r0_and_monotone():
    rng = derive_stream(9, [11])
    assert two_snake_intersection(GEO, 0, 2, rng) is True


def test_two_snake_matches_exact_oracle():
    from oracles import two_snake_only_origin_probability_d1_r2

    exact = float(two_snake_only_origin_probability_d1_r2())
    rng = derive_stream(9, [12])
    n = 20_000
    hits = sum(two_snake_intersection(GEO, 2, 1, rng) for _ in range(n))
    p_hat = hits / n
    se = np.sqrt(exact * (1 - exact) / n)
    assert abs(p_hat - exact) < 4 * se, (p_hat, exact)


def test_per_vertex_return_probability_small():
    # vertices at distance k map to the origin with the k-step walk
    # return probability, whatever the tree looks like
    rng = derive_stream(9, [13])
    d, k, n = 2, 4, 4000
    p_exact = float(srw_return_probability(d, k))
    means = []
    for _ in range(n):
        t = sample_kesten_ball(GEO, k, rng)
        e = assign_and_embed(t, d, rng)
        at_k = np.flatnonzero(e.depths == k)
        zeros = np.all(e.positions[at_k] == 0, axis=1)
        means.append(zeros.mean())
    means = np.asarray(means)
    se = means.std() / np.sqrt(n)
    assert abs(means.mean() - p_exact) < 4 * se
