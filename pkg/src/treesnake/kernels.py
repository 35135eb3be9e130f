"""Compiled Monte Carlo kernels for snake statistics at scale.

The ball of the conditioned tree is generated as a branching random walk by
graph distance from the root: at distance k live the spine vertex k and one
particle per graft vertex.  The spine particle spawns its spine child plus
its non-spine children; every other particle spawns critical offspring; each
child takes an independent uniform signed-basis step.  This realizes exactly
the law of (ball, snake restricted to the ball) while storing only one
generation of positions.

Randomness is a splitmix64-style counter generator keyed per trial, so every
trial is a pure function of (experiment key, trial index) and results are
identical for any number of threads: each trial writes only its own output
slot.  The geometric offspring draw counts fair-coin successes in the bits
of one 64-bit word (exact); other laws go through inverse-CDF tables whose
tails are capped below 1e-15 by the table builder.

Draw order per generation step (fixed; mirrored by the pure-Python replica
in the test suite): spine offspring count, spine-child step, spine's
non-spine children steps, then per surviving particle in order its offspring
count followed by one step per child.

For d <= 5 and r <= 2040 the hot kernels pack a position into one int64
(12 bits per axis, biased by 2048), which turns a child step into a single
add and the origin test into one compare; the unpacked variants cover d = 6.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange, set_num_threads  # noqa: F401  (re-exported)

from .errors import BudgetExceededError
from .offspring import OffspringLaw

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)
_DEBRUIJN = np.uint64(0x03F79D71B4CA8B09)

# _CTZ_TABLE[(ls1b * debruijn) >> 58] = bit index of the isolated lowest bit
_CTZ_TABLE = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _CTZ_TABLE[((1 << _i) * 0x03F79D71B4CA8B09 & (2**64 - 1)) >> 58] = _i

_PACK_BITS = 12
_PACK_BIAS = 1 << (_PACK_BITS - 1)  # 2048
_PACK_MASK = (1 << _PACK_BITS) - 1
PACKED_MAX_DIM = 5
PACKED_MAX_RADIUS = _PACK_BIAS - 8


@njit(cache=True, inline="always")
def _fmix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _trial_key(exp_key, trial):
    return _fmix64(np.uint64(exp_key) ^ _fmix64((np.uint64(trial) + np.uint64(1)) * _GOLDEN))


@njit(cache=True, inline="always")
def _next_u64(key, st):
    st[0] += np.uint64(1)
    return _fmix64(key + st[0] * _GOLDEN)


@njit(cache=True, inline="always")
def _next_f64(key, st):
    # 53-bit mantissa uniform in [0, 1)
    return (_next_u64(key, st) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _randbelow(key, st, n64, lim):
    # exact bounded uniform; rejection mass < n / 2^64
    while True:
        u = _next_u64(key, st)
        if u >= lim:
            return np.int64(u % n64)


@njit(cache=True, inline="always")
def _geometric_half(key, st):
    # successes before the first failure on fair coin bits: the run of
    # trailing one-bits, located with a de Bruijn multiply
    k = np.int64(0)
    while True:
        u = _next_u64(key, st)
        x = ~u
        if x == np.uint64(0):
            k += 64
            continue
        ls1 = x & (np.uint64(0) - x)
        return k + _CTZ_TABLE[np.int64((ls1 * _DEBRUIJN) >> np.uint64(58))]


@njit(cache=True, inline="always")
def _table_draw(key, st, cdf, vals):
    u = _next_f64(key, st)
    lo, hi = 0, len(cdf)
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo >= len(vals):  # beyond the capped tail; < 1e-15 per draw
        lo = len(vals) - 1
    return vals[lo]


@njit(cache=True, inline="always")
def _offspring(key, st, geo_fast, cdf, vals):
    if geo_fast:
        return _geometric_half(key, st)
    return _table_draw(key, st, cdf, vals)


@njit(cache=True, inline="always")
def _spine_extra_children(key, st, geo_fast, sb_cdf, sb_vals):
    # non-spine children of a spine vertex: size-biased count minus the
    # spine child; for the geometric law, the sum of the two sides
    if geo_fast:
        return _geometric_half(key, st) + _geometric_half(key, st)
    return _table_draw(key, st, sb_cdf, sb_vals) - 1


@njit(cache=True, inline="always")
def _packed_l1(v, d):
    l1 = np.int64(0)
    for a in range(d):
        f = ((v >> np.int64(_PACK_BITS * a)) & np.int64(_PACK_MASK)) - np.int64(_PACK_BIAS)
        l1 += f if f >= 0 else -f
    return l1


@njit(cache=True)
def _pack_deltas(d):
    deltas = np.empty(2 * d, dtype=np.int64)
    for axis in range(d):
        mag = np.int64(1) << np.int64(_PACK_BITS * axis)
        deltas[2 * axis] = mag
        deltas[2 * axis + 1] = -mag
    origin = np.int64(0)
    for axis in range(d):
        origin += np.int64(_PACK_BIAS) << np.int64(_PACK_BITS * axis)
    return deltas, origin


@njit(cache=True, inline="always")
def _grown_i64(arr, n, cap2):
    # element-loop copy: slice assignment trips parfors size assertions
    g = np.empty(cap2, dtype=np.int64)
    for q in range(n):
        g[q] = arr[q]
    return g


@njit(cache=True, parallel=True)
def _ball_returns_packed(
    exp_key, trial0, n, r, d, geo_fast, cdf, vals, sb_cdf, sb_vals,
    rc_at_gen, k_at_gen, budget,
    out_ball, out_boundary, out_zeros_rc, out_hit_rc, out_lastzero_rc,
    out_verts_k, out_zeros_k, out_violations, out_err,
):
    deltas, origin = _pack_deltas(d)
    n_dir = np.uint64(2 * d)
    lim = (np.uint64(0) - n_dir) % n_dir
    for t in prange(n):
        key = _trial_key(exp_key, trial0 + t)
        st = np.zeros(1, dtype=np.uint64)
        spos = origin
        cap = 1024
        cur = np.empty(cap, dtype=np.int64)
        nxt = np.empty(cap, dtype=np.int64)
        ncur = 0
        total = np.int64(1)
        zeros_cum = np.int64(1)  # the root maps to the origin
        last_zero = np.int64(0)
        violations = np.int64(0)
        err = np.int64(0)
        if rc_at_gen[0] >= 0:
            out_zeros_rc[t, rc_at_gen[0]] = zeros_cum
            out_hit_rc[t, rc_at_gen[0]] = 1  # the root is its own radius-0 boundary
            out_lastzero_rc[t, rc_at_gen[0]] = 0
        if k_at_gen[0] >= 0:
            out_verts_k[t, k_at_gen[0]] = 1
            out_zeros_k[t, k_at_gen[0]] = 1
        for k in range(1, r + 1):
            c = _spine_extra_children(key, st, geo_fast, sb_cdf, sb_vals)
            nnxt = 0
            z = np.int64(0)
            new_spos = spos + deltas[_randbelow(key, st, n_dir, lim)]
            if new_spos == origin:
                z += 1
            for _ in range(c):
                if nnxt >= cap:
                    cap2 = cap * 2
                    nxt = _grown_i64(nxt, nnxt, cap2)
                    cur = _grown_i64(cur, ncur, cap2)
                    cap = cap2
                v = spos + deltas[_randbelow(key, st, n_dir, lim)]
                if v == origin:
                    z += 1
                nxt[nnxt] = v
                nnxt += 1
            for p in range(ncur):
                kc = _offspring(key, st, geo_fast, cdf, vals)
                pv = cur[p]
                for _ in range(kc):
                    if nnxt >= cap:
                        cap2 = cap * 2
                        nxt = _grown_i64(nxt, nnxt, cap2)
                        cur = _grown_i64(cur, ncur, cap2)
                        cap = cap2
                    v = pv + deltas[_randbelow(key, st, n_dir, lim)]
                    if v == origin:
                        z += 1
                    nxt[nnxt] = v
                    nnxt += 1
            swap = cur
            cur = nxt
            nxt = swap
            ncur = nnxt
            spos = new_spos
            total += 1 + nnxt
            if total > budget:
                err = 1
                break
            if z > 0:
                last_zero = k
                if k % 2 == 1:
                    violations += 1
                zeros_cum += z
            rci = rc_at_gen[k]
            if rci >= 0:
                out_zeros_rc[t, rci] = zeros_cum
                out_hit_rc[t, rci] = 1 if z > 0 else 0
                out_lastzero_rc[t, rci] = last_zero
            ki = k_at_gen[k]
            if ki >= 0:
                out_verts_k[t, ki] = 1 + ncur
                out_zeros_k[t, ki] = z
        out_ball[t] = total
        out_boundary[t] = 1 + ncur
        out_violations[t] = violations
        out_err[t] = err


@njit(cache=True, parallel=True)
def _boundary_hit_packed(
    exp_key, trial0, n, r, d, geo_fast, cdf, vals, sb_cdf, sb_vals, budget,
    out_hit, out_violations, out_err,
):
    deltas, origin = _pack_deltas(d)
    n_dir = np.uint64(2 * d)
    lim = (np.uint64(0) - n_dir) % n_dir
    for t in prange(n):
        key = _trial_key(exp_key, trial0 + t)
        st = np.zeros(1, dtype=np.uint64)
        spos = origin
        spine_alive = True
        cap = 1024
        cur = np.empty(cap, dtype=np.int64)
        nxt = np.empty(cap, dtype=np.int64)
        ncur = 0
        total = np.int64(1)
        err = np.int64(0)
        for k in range(1, r + 1):
            check = 2 * k > r  # a particle can only stray too far past halfway
            allow = np.int64(r - k)
            nnxt = 0
            if spine_alive:
                c = _spine_extra_children(key, st, geo_fast, sb_cdf, sb_vals)
                new_spos = spos + deltas[_randbelow(key, st, n_dir, lim)]
                for _ in range(c):
                    if nnxt >= cap:
                        cap2 = cap * 2
                        nxt = _grown_i64(nxt, nnxt, cap2)
                        cur = _grown_i64(cur, ncur, cap2)
                        cap = cap2
                    v = spos + deltas[_randbelow(key, st, n_dir, lim)]
                    if check and _packed_l1(v, d) > allow:
                        continue  # prune: cannot return to the origin in time
                    nxt[nnxt] = v
                    nnxt += 1
                spos = new_spos
                total += 1
                if check and _packed_l1(spos, d) > allow:
                    spine_alive = False
            for p in range(ncur):
                kc = _offspring(key, st, geo_fast, cdf, vals)
                pv = cur[p]
                for _ in range(kc):
                    if nnxt >= cap:
                        cap2 = cap * 2
                        nxt = _grown_i64(nxt, nnxt, cap2)
                        cur = _grown_i64(cur, ncur, cap2)
                        cap = cap2
                    v = pv + deltas[_randbelow(key, st, n_dir, lim)]
                    if check and _packed_l1(v, d) > allow:
                        continue
                    nxt[nnxt] = v
                    nnxt += 1
            swap = cur
            cur = nxt
            nxt = swap
            ncur = nnxt
            total += nnxt
            if total > budget:
                err = 1
                break
            if ncur == 0 and not spine_alive:
                break
        hit = np.int64(0)
        if err == 0:
            # pruning at k = r keeps exactly the distance-r vertices at the origin
            if ncur > 0:
                hit = 1
            if spine_alive and spos == origin:
                hit = 1
        out_hit[t] = hit
        out_violations[t] = 1 if (hit == 1 and r % 2 == 1) else 0
        out_err[t] = err


@njit(cache=True, parallel=True)
def _ball_returns_generic(
    exp_key, trial0, n, r, d, geo_fast, cdf, vals, sb_cdf, sb_vals,
    rc_at_gen, k_at_gen, budget,
    out_ball, out_boundary, out_zeros_rc, out_hit_rc, out_lastzero_rc,
    out_verts_k, out_zeros_k, out_violations, out_err,
):
    n_dir = np.uint64(2 * d)
    lim = (np.uint64(0) - n_dir) % n_dir
    for t in prange(n):
        key = _trial_key(exp_key, trial0 + t)
        st = np.zeros(1, dtype=np.uint64)
        spos = np.zeros(d, dtype=np.int64)
        tmp = np.empty(d, dtype=np.int64)
        cap = 1024
        cur = np.empty(cap * d, dtype=np.int64)
        nxt = np.empty(cap * d, dtype=np.int64)
        ncur = 0
        total = np.int64(1)
        zeros_cum = np.int64(1)
        last_zero = np.int64(0)
        violations = np.int64(0)
        err = np.int64(0)
        if rc_at_gen[0] >= 0:
            out_zeros_rc[t, rc_at_gen[0]] = zeros_cum
            out_hit_rc[t, rc_at_gen[0]] = 1
            out_lastzero_rc[t, rc_at_gen[0]] = 0
        if k_at_gen[0] >= 0:
            out_verts_k[t, k_at_gen[0]] = 1
            out_zeros_k[t, k_at_gen[0]] = 1
        for k in range(1, r + 1):
            c = _spine_extra_children(key, st, geo_fast, sb_cdf, sb_vals)
            nnxt = 0
            z = np.int64(0)
            idx = _randbelow(key, st, n_dir, lim)
            at0 = True
            for a in range(d):
                tmp[a] = spos[a]
            tmp[idx >> 1] += 1 - 2 * (idx & np.int64(1))
            for a in range(d):
                if tmp[a] != 0:
                    at0 = False
                    break
            if at0:
                z += 1
            for _ in range(c):
                if nnxt >= cap:
                    cap2 = cap * 2
                    nxt = _grown_i64(nxt, nnxt * d, cap2 * d)
                    cur = _grown_i64(cur, ncur * d, cap2 * d)
                    cap = cap2
                idx = _randbelow(key, st, n_dir, lim)
                base = nnxt * d
                at0 = True
                for a in range(d):
                    nxt[base + a] = spos[a]
                nxt[base + (idx >> 1)] += 1 - 2 * (idx & np.int64(1))
                for a in range(d):
                    if nxt[base + a] != 0:
                        at0 = False
                        break
                if at0:
                    z += 1
                nnxt += 1
            for p in range(ncur):
                kc = _offspring(key, st, geo_fast, cdf, vals)
                pbase = p * d
                for _ in range(kc):
                    if nnxt >= cap:
                        cap2 = cap * 2
                        nxt = _grown_i64(nxt, nnxt * d, cap2 * d)
                        cur = _grown_i64(cur, ncur * d, cap2 * d)
                        cap = cap2
                    idx = _randbelow(key, st, n_dir, lim)
                    base = nnxt * d
                    at0 = True
                    for a in range(d):
                        nxt[base + a] = cur[pbase + a]
                    nxt[base + (idx >> 1)] += 1 - 2 * (idx & np.int64(1))
                    for a in range(d):
                        if nxt[base + a] != 0:
                            at0 = False
                            break
                    if at0:
                        z += 1
                    nnxt += 1
            swap = cur
            cur = nxt
            nxt = swap
            ncur = nnxt
            for a in range(d):
                spos[a] = tmp[a]
            total += 1 + nnxt
            if total > budget:
                err = 1
                break
            if z > 0:
                last_zero = k
                if k % 2 == 1:
                    violations += 1
                zeros_cum += z
            rci = rc_at_gen[k]
            if rci >= 0:
                out_zeros_rc[t, rci] = zeros_cum
                out_hit_rc[t, rci] = 1 if z > 0 else 0
                out_lastzero_rc[t, rci] = last_zero
            ki = k_at_gen[k]
            if ki >= 0:
                out_verts_k[t, ki] = 1 + ncur
                out_zeros_k[t, ki] = z
        out_ball[t] = total
        out_boundary[t] = 1 + ncur
        out_violations[t] = violations
        out_err[t] = err


@njit(cache=True)
def _positions_kernel(key, r, d, geo_fast, cdf, vals, sb_cdf, sb_vals, budget):
    """One trial; returns (count, positions, spine_origin, depth) arrays."""
    n_dir = np.uint64(2 * d)
    lim = (np.uint64(0) - n_dir) % n_dir
    st = np.zeros(1, dtype=np.uint64)
    cap_out = 4 * (r + 2) * (r + 2) + 64
    out_pos = np.empty((cap_out, d), dtype=np.int16)
    out_origin = np.empty(cap_out, dtype=np.int32)
    out_depth = np.empty(cap_out, dtype=np.int16)
    nv = 0
    for a in range(d):
        out_pos[nv, a] = 0
    out_origin[nv] = 0
    out_depth[nv] = 0
    nv += 1

    spos = np.zeros(d, dtype=np.int64)
    tmp = np.empty(d, dtype=np.int64)
    cap = 1024
    cur = np.empty(cap * d, dtype=np.int64)
    org = np.empty(cap, dtype=np.int32)
    nxt = np.empty(cap * d, dtype=np.int64)
    norg = np.empty(cap, dtype=np.int32)
    ncur = 0
    for k in range(1, r + 1):
        c = _spine_extra_children(key, st, geo_fast, sb_cdf, sb_vals)
        idx = _randbelow(key, st, n_dir, lim)
        for a in range(d):
            tmp[a] = spos[a]
        tmp[idx >> 1] += 1 - 2 * (idx & np.int64(1))
        nnxt = 0
        for _ in range(c):
            if nnxt >= cap:
                cap2 = cap * 2
                g1 = np.empty(cap2 * d, dtype=np.int64)
                g1[: nnxt * d] = nxt[: nnxt * d]
                nxt = g1
                g2 = np.empty(cap2, dtype=np.int32)
                g2[:nnxt] = norg[:nnxt]
                norg = g2
                g3 = np.empty(cap2 * d, dtype=np.int64)
                g3[: ncur * d] = cur[: ncur * d]
                cur = g3
                g4 = np.empty(cap2, dtype=np.int32)
                g4[:ncur] = org[:ncur]
                org = g4
                cap = cap2
            idx = _randbelow(key, st, n_dir, lim)
            base = nnxt * d
            for a in range(d):
                nxt[base + a] = spos[a]
            nxt[base + (idx >> 1)] += 1 - 2 * (idx & np.int64(1))
            norg[nnxt] = k - 1
            nnxt += 1
        for p in range(ncur):
            kc = _offspring(key, st, geo_fast, cdf, vals)
            pbase = p * d
            for _ in range(kc):
                if nnxt >= cap:
                    cap2 = cap * 2
                    g1 = np.empty(cap2 * d, dtype=np.int64)
                    g1[: nnxt * d] = nxt[: nnxt * d]
                    nxt = g1
                    g2 = np.empty(cap2, dtype=np.int32)
                    g2[:nnxt] = norg[:nnxt]
                    norg = g2
                    g3 = np.empty(cap2 * d, dtype=np.int64)
                    g3[: ncur * d] = cur[: ncur * d]
                    cur = g3
                    g4 = np.empty(cap2, dtype=np.int32)
                    g4[:ncur] = org[:ncur]
                    org = g4
                    cap = cap2
                idx = _randbelow(key, st, n_dir, lim)
                base = nnxt * d
                for a in range(d):
                    nxt[base + a] = cur[pbase + a]
                nxt[base + (idx >> 1)] += 1 - 2 * (idx & np.int64(1))
                norg[nnxt] = org[p]
                nnxt += 1
        for a in range(d):
            spos[a] = tmp[a]
        swap = cur
        cur = nxt
        nxt = swap
        swapo = org
        org = norg
        norg = swapo
        ncur = nnxt
        if nv + 1 + ncur > budget:
            return -1, out_pos[:0], out_origin[:0], out_depth[:0]
        while nv + 1 + ncur > cap_out:
            cap_out2 = cap_out * 2
            o1 = np.empty((cap_out2, d), dtype=np.int16)
            o1[:nv] = out_pos[:nv]
            out_pos = o1
            o2 = np.empty(cap_out2, dtype=np.int32)
            o2[:nv] = out_origin[:nv]
            out_origin = o2
            o3 = np.empty(cap_out2, dtype=np.int16)
            o3[:nv] = out_depth[:nv]
            out_depth = o3
            cap_out = cap_out2
        for a in range(d):
            out_pos[nv, a] = spos[a]
        out_origin[nv] = k
        out_depth[nv] = k
        nv += 1
        for p in range(ncur):
            pbase = p * d
            for a in range(d):
                out_pos[nv, a] = cur[pbase + a]
            out_origin[nv] = org[p]
            out_depth[nv] = k
            nv += 1
    return nv, out_pos[:nv].copy(), out_origin[:nv].copy(), out_depth[:nv].copy()


# -- python-facing wrappers ----------------------------------------------------

_EMPTY_CDF = np.zeros(1, dtype=np.float64)
_EMPTY_VALS = np.zeros(1, dtype=np.int64)


def _law_tables(law: OffspringLaw):
    """(geo_fast, offspring cdf/vals, size-biased cdf/vals) for the kernels."""
    law.require_critical()
    if law.kind == "geometric":
        return True, _EMPTY_CDF, _EMPTY_VALS, _EMPTY_CDF, _EMPTY_VALS
    tail = 1e-15
    ks, cum, acc, k = [], [], 0.0, 0
    while acc < 1.0 - tail and k < 4096:
        p = float(law.pmf(k))
        if p > 0:
            acc += p
            ks.append(k)
            cum.append(acc)
        if law.kind == "finite" and k >= max(kk for kk, _ in law.table):
            break
        k += 1
    cdf = np.asarray(cum, dtype=np.float64)
    vals = np.asarray(ks, dtype=np.int64)
    sb_vals, sb_cdf = law.size_biased_table()
    return False, cdf, vals, np.asarray(sb_cdf, dtype=np.float64), sb_vals


def _gen_index_map(r, marks):
    out = np.full(r + 1, -1, dtype=np.int64)
    for i, m in enumerate(marks):
        if not (0 <= m <= r):
            raise ValueError(f"mark {m} outside 0..{r}")
        out[m] = i
    return out


def _packable(r, d):
    return d <= PACKED_MAX_DIM and r <= PACKED_MAX_RADIUS


def ball_return_stats(
    law: OffspringLaw,
    r: int,
    d: int,
    trials: int,
    exp_key: int,
    trial0: int = 0,
    radii=None,
    dist_marks=None,
    budget: int = 10**8,
    force_generic: bool = False,
):
    """Per-trial snake statistics over the radius-r ball.

    Returns a dict of arrays: ball and boundary sizes, cumulative origin
    visits / boundary-hit flag / last visit depth at each checkpoint radius,
    vertex and origin-visit counts at each marked distance, and the parity
    violation counter (always zero).
    """
    radii = [r] if radii is None else sorted(radii)
    dist_marks = [] if dist_marks is None else list(dist_marks)
    geo, cdf, vals, sb_cdf, sb_vals = _law_tables(law)
    n = int(trials)
    out = {
        "ball": np.zeros(n, dtype=np.int64),
        "boundary": np.zeros(n, dtype=np.int64),
        "zeros_at_radius": np.zeros((n, len(radii)), dtype=np.int64),
        "hit_at_radius": np.zeros((n, len(radii)), dtype=np.int8),
        "last_zero_at_radius": np.zeros((n, len(radii)), dtype=np.int32),
        "verts_at_mark": np.zeros((n, max(1, len(dist_marks))), dtype=np.int64),
        "zeros_at_mark": np.zeros((n, max(1, len(dist_marks))), dtype=np.int64),
        "violations": np.zeros(n, dtype=np.int64),
        "err": np.zeros(n, dtype=np.int64),
    }
    kernel = _ball_returns_packed if (_packable(r, d) and not force_generic) else _ball_returns_generic
    kernel(
        np.uint64(exp_key),
        np.int64(trial0),
        n,
        int(r),
        int(d),
        geo,
        cdf,
        vals,
        sb_cdf,
        sb_vals,
        _gen_index_map(r, radii),
        _gen_index_map(r, dist_marks),
        np.int64(budget),
        out["ball"],
        out["boundary"],
        out["zeros_at_radius"],
        out["hit_at_radius"],
        out["last_zero_at_radius"],
        out["verts_at_mark"],
        out["zeros_at_mark"],
        out["violations"],
        out["err"],
    )
    if out["err"].any():
        bad = int(np.flatnonzero(out["err"])[0])
        raise BudgetExceededError(
            f"vertex budget {budget} exceeded", trial_index=trial0 + bad
        )
    out["radii"] = radii
    out["dist_marks"] = dist_marks
    return out


def boundary_hit_flags(
    law: OffspringLaw,
    r: int,
    d: int,
    trials: int,
    exp_key: int,
    trial0: int = 0,
    budget: int = 10**8,
):
    """Per-trial flag: does some distance-r vertex map to the origin?

    Prunes subtrees that can no longer return in time, which leaves the hit
    event's law untouched.  Packed-coordinate fast path only (d <= 5)."""
    if not _packable(r, d):
        raise ValueError(f"boundary-hit kernel supports d <= {PACKED_MAX_DIM}, r <= {PACKED_MAX_RADIUS}")
    geo, cdf, vals, sb_cdf, sb_vals = _law_tables(law)
    n = int(trials)
    hit = np.zeros(n, dtype=np.int8)
    violations = np.zeros(n, dtype=np.int64)
    err = np.zeros(n, dtype=np.int64)
    _boundary_hit_packed(
        np.uint64(exp_key),
        np.int64(trial0),
        n,
        int(r),
        int(d),
        geo,
        cdf,
        vals,
        sb_cdf,
        sb_vals,
        np.int64(budget),
        hit,
        violations,
        err,
    )
    if err.any():
        bad = int(np.flatnonzero(err)[0])
        raise BudgetExceededError(
            f"vertex budget {budget} exceeded", trial_index=trial0 + bad
        )
    return hit, violations


def sample_ball_positions(
    law: OffspringLaw,
    r: int,
    d: int,
    exp_key: int,
    trial: int,
    budget: int = 10**8,
):
    """One ball + snake, streamed: (positions int16 (V,d), spine origin, depth)."""
    geo, cdf, vals, sb_cdf, sb_vals = _law_tables(law)
    nv, pos, origin, depth = _positions_kernel(
        np.uint64(_trial_key(np.uint64(exp_key), np.int64(trial))),
        int(r),
        int(d),
        geo,
        cdf,
        vals,
        sb_cdf,
        sb_vals,
        np.int64(budget),
    )
    if nv < 0:
        raise BudgetExceededError(f"vertex budget {budget} exceeded", trial_index=trial)
    return pos, origin, depth
