"""Kernel correctness: an exact pure-Python replica of the compiled
generation loop must reproduce every per-trial output bit for bit, and the
kernel statistics must match the python samplers in law."""

import numpy as np
import pytest
from oracles import srw_return_probability

from treesnake.errors import BudgetExceededError
from treesnake.kernels import (
    ball_return_stats,
    boundary_hit_flags,
    sample_ball_positions,
)
from treesnake.kesten import sample_volume_stats
from treesnake.offspring import geometric_half, poisson_one
from treesnake.rng import derive_stream
from statutil import two_sample_chi2_pvalue

GEO = geometric_half()
MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def fmix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return (z ^ (z >> 31)) & MASK


class PyStream:
    def __init__(self, exp_key, trial):
        self.key = fmix64(exp_key ^ fmix64(((trial + 1) * GOLDEN) & MASK))
        self.c = 0

    def u64(self):
        self.c += 1
        return fmix64((self.key + self.c * GOLDEN) & MASK)

    def randbelow(self, n):
        lim = ((1 << 64) - n) % n
        while True:
            u = self.u64()
            if u >= lim:
                return u % n

    def geom(self):
        k = 0
        while True:
            u = self.u64()
            if u == MASK:
                k += 64
                continue
            while u & 1:
                k += 1
                u >>= 1
            return k


def py_ball_returns(exp_key, trial, r, d):
    """Replica of the compiled generation loop for the geometric law."""
    st = PyStream(exp_key, trial)

    def step(pos):
        idx = st.randbelow(2 * d)
        out = list(pos)
        out[idx >> 1] += 1 - 2 * (idx & 1)
        return out

    zero = [0] * d
    spos = list(zero)
    cur = []
    total, zeros_cum, last_zero = 1, 1, 0
    for k in range(1, r + 1):
        c = st.geom() + st.geom()
        new_spos = step(spos)
        nxt = [step(spos) for _ in range(c)]
        for p in cur:
            for _ in range(st.geom()):
                nxt.append(step(p))
        cur, spos = nxt, new_spos
        total += 1 + len(cur)
        z = int(spos == zero) + sum(p == zero for p in cur)
        if z > 0:
            zeros_cum += z
            last_zero = k
    return {
        "ball": total,
        "boundary": 1 + len(cur),
        "zeros": zeros_cum,
        "last_zero": last_zero,
        "hit": int(spos == zero) + sum(p == zero for p in cur) > 0,
    }


def test_kernel_matches_python_replica_exactly():
    r, d, n = 8, 2, 60
    key = derive_stream(17, [0]).kernel_key()
    out = ball_return_stats(GEO, r, d, n, key, radii=[r])
    for t in range(n):
        ref = py_ball_returns(key, t, r, d)
        assert out["ball"][t] == ref["ball"], t
        assert out["boundary"][t] == ref["boundary"], t
        assert out["zeros_at_radius"][t, 0] == ref["zeros"], t
        assert out["last_zero_at_radius"][t, 0] == ref["last_zero"], t
        assert bool(out["hit_at_radius"][t, 0]) == ref["hit"], t


def test_kernel_ball_sizes_match_chain_sampler_in_law():
    r, n = 6, 40_000
    key = derive_stream(17, [1]).kernel_key()
    out = ball_return_stats(GEO, r, 1, n, key)
    chain, chain_bdry = sample_volume_stats(GEO, r, n, derive_stream(17, [2]))
    cap = 150
    a = np.bincount(np.minimum(out["ball"], cap), minlength=cap + 1)
    b = np.bincount(np.minimum(chain, cap), minlength=cap + 1)
    assert two_sample_chi2_pvalue(a, b) > 0.01
    a = np.bincount(np.minimum(out["boundary"], 60), minlength=61)
    b = np.bincount(np.minimum(chain_bdry, 60), minlength=61)
    assert two_sample_chi2_pvalue(a, b) > 0.01


def test_kernel_no_parity_violations():
    key = derive_stream(17, [3]).kernel_key()
    out = ball_return_stats(GEO, 9, 1, 5000, key)
    assert int(out["violations"].sum()) == 0


def test_kernel_per_vertex_return_probability():
    # distance-k vertices are at the origin with the exact k-step probability
    r, d, n = 8, 1, 60_000
    key = derive_stream(17, [4]).kernel_key()
    out = ball_return_stats(GEO, r, d, n, key, dist_marks=[2, 4])
    for ki, k in enumerate([2, 4]):
        p_exact = float(srw_return_probability(d, k))
        ratios = out["zeros_at_mark"][:, ki] / out["verts_at_mark"][:, ki]
        se = ratios.std() / np.sqrt(n)
        assert abs(ratios.mean() - p_exact) < 4 * se, k


def test_boundary_hit_kernel_agrees_with_full_kernel():
    # pruning must not change the hit probability
    r, d, n = 6, 1, 120_000
    key = derive_stream(17, [5]).kernel_key()
    full = ball_return_stats(GEO, r, d, n, key, radii=[r])
    p_full = full["hit_at_radius"][:, 0].mean()
    hits, viol = boundary_hit_flags(GEO, r, d, n, derive_stream(17, [6]).kernel_key())
    p_pruned = hits.mean()
    se = np.sqrt(p_full * (1 - p_full) / n)
    assert abs(p_full - p_pruned) < 5 * se
    assert int(viol.sum()) == 0


def test_boundary_hit_odd_radius_always_false():
    hits, _ = boundary_hit_flags(GEO, 5, 1, 20_000, derive_stream(17, [7]).kernel_key())
    assert hits.sum() == 0


def test_positions_kernel_structure():
    key = derive_stream(17, [8]).kernel_key()
    for trial in range(40):
        pos, origin, depth = sample_ball_positions(GEO, 7, 3, key, trial)
        assert np.all(pos[0] == 0)
        assert depth.max() <= 7
        assert origin.min() >= 0 and origin.max() <= 7
        # spine vertices appear once per depth with origin == depth
        for k in range(8):
            assert np.count_nonzero((origin == k) & (depth == k)) == 1
        # graft vertices never precede their spine index
        assert np.all(origin <= depth)


def test_positions_kernel_ball_law():
    key = derive_stream(17, [9]).kernel_key()
    n, r = 30_000, 5
    sizes = np.empty(n, dtype=np.int64)
    for t in range(n):
        pos, _, _ = sample_ball_positions(GEO, r, 1, key, t)
        sizes[t] = len(pos)
    chain, _ = sample_volume_stats(GEO, r, n, derive_stream(17, [10]))
    cap = 120
    a = np.bincount(np.minimum(sizes, cap), minlength=cap + 1)
    b = np.bincount(np.minimum(chain, cap), minlength=cap + 1)
    assert two_sample_chi2_pvalue(a, b) > 0.01


def test_positions_kernel_poisson_law_spine():
    # general-law path: ball sizes agree with the chain route for poisson
    law = poisson_one()
    key = derive_stream(17, [11]).kernel_key()
    n, r = 20_000, 5
    out = ball_return_stats(law, r, 1, n, key)
    chain, _ = sample_volume_stats(law, r, n, derive_stream(17, [12]))
    cap = 80
    a = np.bincount(np.minimum(out["ball"], cap), minlength=cap + 1)
    b = np.bincount(np.minimum(chain, cap), minlength=cap + 1)
    assert two_sample_chi2_pvalue(a, b) > 0.01


def test_kernel_budget_error():
    key = derive_stream(17, [13]).kernel_key()
    with pytest.raises(BudgetExceededError):
        ball_return_stats(GEO, 32, 1, 500, key, budget=8)
