"""Monte Carlo engine and the named experiment suites.

Determinism contract: every experiment is a pure function of (seed,
configuration).  Trials are addressed by absolute trial index -- python-level
trials through per-trial stream paths, kernel trials through per-trial keys
-- and chunk merges happen in fixed chunk order, so the worker count never
changes a single output bit.  Integer statistics accumulate exactly; real
aggregation uses math.fsum (correctly rounded, order-independent within a
chunk) and Fractions where the values are rational.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import time
from fractions import Fraction

import numpy as np

from .errors import UsageError
from .kernels import (
    ball_return_stats,
    boundary_hit_flags,
    sample_ball_positions,
    set_num_threads,
)
from .kesten import (
    sample_kesten_ball,
    sample_volume_stats,
    root_degree_weight,
    DEFAULT_VERTEX_BUDGET,
)
from .offspring import OffspringLaw, geometric_half, law_by_name
from .planetree import enumerate_plane_trees, marked_graph_key
from .rng import derive_stream
from .snake import pack_positions
from .transport import BUILTIN_TRANSPORTS, evaluate_sides, transport_by_name

Z99 = 2.576  # pinned 99% gate multiplier
CHUNK_TRIALS = 4096  # part of the stream layout; never varies with workers

# stream path tags, one per experiment family
TAG_RUN = 1
TAG_VOLUME = 2
TAG_TIGHTNESS = 3
TAG_RETURNS = 4
TAG_DECAY = 5
TAG_RANGE = 6
TAG_INTERSECT = 7
TAG_MTP = 8
TAG_DEGBIAS = 9
TAG_SAMPLE = 10


def _chunks(trials: int):
    return [(s, min(CHUNK_TRIALS, trials - s)) for s in range(0, trials, CHUNK_TRIALS)]


def _pmap_ordered(fn, args_list, workers: int):
    """Map over chunk arguments; results merged in submission order."""
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    ctx = mp.get_context("fork")
    with ctx.Pool(min(workers, len(args_list))) as pool:
        return pool.map(fn, args_list)


def _kernel_threads(workers: int):
    from numba import config

    set_num_threads(max(1, min(int(workers), config.NUMBA_NUM_THREADS)))


def mean_var_ci(total, total_sq, n):
    """(mean, sample variance, 99% CI half-width) from exact sums."""
    mean = total / n
    var = max(0.0, (total_sq - total * total / n) / (n - 1)) if n > 1 else 0.0
    return float(mean), float(var), float(Z99 * math.sqrt(var / n)) if n > 1 else 0.0


def _name_tag(name: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.blake2b(name.encode(), digest_size=6).digest(), "little")


# -- generic trial runner ------------------------------------------------------

STATISTIC_REGISTRY = {
    "const_one": lambda rng: 1.0,
    "coin_flip": lambda rng: float(rng.coin()),
}


def _run_trials_chunk(args):
    name, seed, start, count = args
    fn = STATISTIC_REGISTRY[name]
    values = []
    for i in range(start, start + count):
        values.append(float(fn(derive_stream(seed, [TAG_RUN, _name_tag(name), i]))))
    return (
        math.fsum(values),
        math.fsum(v * v for v in values),
        values,
    )


def run_trials(statistic, trials, seed, workers=1, record_path=None):
    """Mean/variance/CI of a named per-trial statistic over i.i.d. trials."""
    from .reporting import EstimateReport

    if callable(statistic):
        name = getattr(statistic, "__name__", "anonymous")
        STATISTIC_REGISTRY[name] = statistic
        statistic = name
    if statistic not in STATISTIC_REGISTRY:
        raise UsageError(f"unknown statistic {statistic!r}")
    t0 = time.perf_counter()
    args = [(statistic, seed, s, c) for s, c in _chunks(trials)]
    parts = _pmap_ordered(_run_trials_chunk, args, workers)
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    if record_path is not None:
        import json

        with open(record_path, "w") as f:
            idx = 0
            for p in parts:
                for v in p[2]:
                    f.write(json.dumps({
                        "trial_index": idx,
                        "seed_path": [TAG_RUN, _name_tag(statistic), idx],
                        "value": v,
                    }) + "\n")
                    idx += 1
    mean, var, ci = mean_var_ci(total, total_sq, trials)
    return EstimateReport(
        statistic=statistic,
        params={},
        trials=trials,
        estimates={"mean": mean},
        variances={"mean": var},
        ci_halfwidths={"mean": ci},
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )


# -- exact reversibility -------------------------------------------------------

REVERSIBILITY_MAX_EDGES = 5


def reversibility_exact(n: int) -> Fraction:
    """Exact total-variation distance between the laws of the doubly-marked
    tree (T, root, uniform neighbor) and its mark-swapped version, over all
    plane trees with n edges, in rational arithmetic.  Zero iff re-rooting
    along one random-walk step preserves the uniform law."""
    if n > REVERSIBILITY_MAX_EDGES:
        raise UsageError(f"exact enumeration capped at n <= {REVERSIBILITY_MAX_EDGES}")
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
    tv = Fraction(0)
    for k in set(law_a) | set(law_b):
        tv += abs(law_a.get(k, Fraction(0)) - law_b.get(k, Fraction(0)))
    return tv / 2


# -- volume statistics (layer-chain backend) -----------------------------------


def _volume_chunk(args):
    law_name, r, seed, start, count, budget = args
    law = law_by_name(law_name)
    rng = derive_stream(seed, [TAG_VOLUME, r, start // CHUNK_TRIALS])
    ball, boundary = sample_volume_stats(law, r, count, rng, max_vertices=budget)
    b = [int(x) for x in ball]
    bd = [int(x) for x in boundary]
    return (
        sum(b),
        sum(x * x for x in b),
        sum(x**4 for x in b),
        sum(bd),
        sum(x * x for x in bd),
    )


def volume_scaling(r_grid, trials, seed, law=None, workers=1, budget=DEFAULT_VERTEX_BUDGET):
    """Per radius: mean ball size over (r+1)^2 and mean squared size over r^4."""
    law = law or geometric_half()
    rows = []
    for r in sorted(r_grid):
        t0 = time.perf_counter()
        args = [(law.name, r, seed, s, c, budget) for s, c in _chunks(trials)]
        parts = _pmap_ordered(_volume_chunk, args, workers)
        s1 = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        s4 = sum(p[2] for p in parts)
        mean, var, ci = mean_var_ci(s1, s2, trials)
        m2, var2, ci2 = mean_var_ci(s2, s4, trials)
        denom1 = (r + 1) ** 2
        row = {
            "statistic": "volume",
            "law": law.name,
            "r": r,
            "trials": trials,
            "mean_ball": mean,
            "ratio_mean": mean / denom1,
            "ci_ratio_mean": ci / denom1,
            "mean_ball_sq": m2,
            "ratio_second": (m2 / r**4) if r > 0 else float("nan"),
            "ci_ratio_second": (ci2 / r**4) if r > 0 else 0.0,
            "seed": seed,
            "wall_time_s": time.perf_counter() - t0,
        }
        rows.append(row)
    return rows


def boundary_profile(r_grid, trials, seed, law=None, workers=1, budget=DEFAULT_VERTEX_BUDGET):
    """Per radius: mean count of vertices at distance exactly r, against 2r+1."""
    law = law or geometric_half()
    rows = []
    for r in sorted(r_grid):
        t0 = time.perf_counter()
        args = [(law.name, r, seed, s, c, budget) for s, c in _chunks(trials)]
        parts = _pmap_ordered(_volume_chunk, args, workers)
        s1 = sum(p[3] for p in parts)
        s2 = sum(p[4] for p in parts)
        mean, var, ci = mean_var_ci(s1, s2, trials)
        rows.append({
            "statistic": "boundary",
            "law": law.name,
            "r": r,
            "trials": trials,
            "mean_boundary": mean,
            "ratio_mean": mean / (2 * r + 1),
            "ci_ratio_mean": ci / (2 * r + 1),
            "seed": seed,
            "wall_time_s": time.perf_counter() - t0,
        })
    return rows


def _tightness_chunk(args):
    law_name, r, lams, seed, start, count, budget = args
    law = law_by_name(law_name)
    rng = derive_stream(seed, [TAG_TIGHTNESS, r, start // CHUNK_TRIALS])
    ball, _ = sample_volume_stats(law, r, count, rng, max_vertices=budget)
    counts = []
    for lam in lams:
        lo, hi = r * r / lam, lam * r * r
        counts.append(int(np.count_nonzero((ball >= lo) & (ball <= hi))))
    return counts


def tightness_curve(lambdas, r_grid, trials, seed, law=None, workers=1,
                    budget=DEFAULT_VERTEX_BUDGET):
    """Per (lambda, r): empirical P(r^2/lambda <= ball size <= lambda r^2)."""
    law = law or geometric_half()
    lams = sorted(float(x) for x in lambdas)
    if any(l < 1 for l in lams):
        raise UsageError("lambda must be >= 1")
    rows = []
    for r in sorted(r_grid):
        t0 = time.perf_counter()
        args = [(law.name, r, lams, seed, s, c, budget) for s, c in _chunks(trials)]
        parts = _pmap_ordered(_tightness_chunk, args, workers)
        for li, lam in enumerate(lams):
            hits = sum(p[li] for p in parts)
            p_hat, var, ci = mean_var_ci(hits, hits, trials)  # indicator: x^2 = x
            rows.append({
                "statistic": "tightness",
                "law": law.name,
                "lam": lam,
                "r": r,
                "trials": trials,
                "p_in_window": p_hat,
                "ci_p": ci,
                "seed": seed,
                "wall_time_s": time.perf_counter() - t0,
            })
    return rows


# -- snake statistics (kernel backends) ------------------------------------------


def recurrence_profile(d_grid, r_grid, trials, seed, law=None, g_grid=(0, 4, 16, 64),
                       workers=1, budget=DEFAULT_VERTEX_BUDGET):
    """Per (d, r): mean origin-visit count over the ball, boundary-hit
    probability, and the probability of a visit beyond each generation g.

    All radii in the grid are read off a single maximal-radius ball per
    trial (the restriction of the truncated ball is exact in law), which
    additionally pairs the estimates across radii.
    """
    law = law or geometric_half()
    _kernel_threads(workers)
    radii = sorted(set(int(r) for r in r_grid))
    rmax = radii[-1]
    rows = []
    violations = 0
    for d in sorted(set(int(x) for x in d_grid)):
        t0 = time.perf_counter()
        key = derive_stream(seed, [TAG_RETURNS, d, rmax]).kernel_key()
        stats = ball_return_stats(law, rmax, d, trials, key, radii=radii, budget=budget)
        violations += int(stats["violations"].sum())
        dt = time.perf_counter() - t0
        for ri, r in enumerate(radii):
            zr = stats["zeros_at_radius"][:, ri].astype(np.float64)
            hit = stats["hit_at_radius"][:, ri].astype(np.float64)
            lz = stats["last_zero_at_radius"][:, ri]
            mean, var, ci = mean_var_ci(float(zr.sum()), float((zr * zr).sum()), trials)
            ph, _, cih = mean_var_ci(float(hit.sum()), float(hit.sum()), trials)
            row = {
                "statistic": "returns",
                "law": law.name,
                "d": d,
                "r": r,
                "trials": trials,
                "mean_returns": mean,
                "ci_returns": ci,
                "p_boundary_hit": ph,
                "ci_p_boundary_hit": cih,
            }
            for g in g_grid:
                if g < r:
                    n_beyond = int(np.count_nonzero(lz > g))
                    row[f"p_beyond_{g}"] = n_beyond / trials
            row["violations"] = int(stats["violations"].sum())
            row["seed"] = seed
            row["wall_time_s"] = dt
            rows.append(row)
    return rows, violations


def transience_decay(r_grid, trials, seed, d=5, law=None, workers=1,
                     budget=DEFAULT_VERTEX_BUDGET):
    """P(some distance-r vertex maps to the origin) per radius, plus the
    fitted log-log slope and the matching prefactor estimate."""
    law = law or geometric_half()
    _kernel_threads(workers)
    rows = []
    for r in sorted(r_grid):
        t0 = time.perf_counter()
        key = derive_stream(seed, [TAG_DECAY, d, r]).kernel_key()
        hit, viol = boundary_hit_flags(law, r, d, trials, key, budget=budget)
        hits = int(hit.sum())
        p_hat, _, ci = mean_var_ci(hits, hits, trials)
        rows.append({
            "statistic": "decay",
            "law": law.name,
            "d": d,
            "r": r,
            "trials": trials,
            "hits": hits,
            "p_hit": p_hat,
            "ci_p_hit": ci,
            "violations": int(viol.sum()),
            "seed": seed,
            "wall_time_s": time.perf_counter() - t0,
        })
    pts = [(math.log(row["r"]), math.log(row["p_hit"])) for row in rows if row["p_hit"] > 0]
    if len(pts) >= 2:
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        slope, intercept = np.polyfit(xs, ys, 1)
        kappa_hat = math.exp(intercept) / 3.0
    else:
        slope, kappa_hat = float("nan"), float("nan")
    for row in rows:
        row["fit_slope"] = float(slope)
        row["fit_kappa"] = float(kappa_hat)
    return rows


def range_linearity(d, r_grid, c_grid, trials, seed, eta=0.5, law=None,
                    workers=1, budget=DEFAULT_VERTEX_BUDGET):
    """Per (r, c): P(#image of the ball > c r^2), for the full ball and for
    the ball with the early-spine region excluded (grafts before eta*r)."""
    law = law or geometric_half()
    cs = sorted(float(c) for c in c_grid)
    rows = []
    for r in sorted(r_grid):
        t0 = time.perf_counter()
        key = derive_stream(seed, [TAG_RANGE, d, r]).kernel_key()
        i0 = math.floor(eta * r)
        full_counts = np.zeros(len(cs), dtype=np.int64)
        excl_counts = np.zeros(len(cs), dtype=np.int64)
        for t in range(trials):
            pos, origin, _depth = sample_ball_positions(law, r, d, key, t, budget=budget)
            keys = pack_positions(pos.astype(np.int64))
            rng_full = len(np.unique(keys))
            rng_excl = len(np.unique(keys[origin >= i0]))
            for ci_, c in enumerate(cs):
                thresh = c * r * r
                if rng_full > thresh:
                    full_counts[ci_] += 1
                if rng_excl > thresh:
                    excl_counts[ci_] += 1
        dt = time.perf_counter() - t0
        for ci_, c in enumerate(cs):
            pf, _, cif = mean_var_ci(int(full_counts[ci_]), int(full_counts[ci_]), trials)
            pe, _, cie = mean_var_ci(int(excl_counts[ci_]), int(excl_counts[ci_]), trials)
            rows.append({
                "statistic": "range",
                "law": law.name,
                "d": d,
                "r": r,
                "c": c,
                "eta": eta,
                "trials": trials,
                "p_range_full": pf,
                "ci_p_full": cif,
                "p_range_excluded": pe,
                "ci_p_excluded": cie,
                "seed": seed,
                "wall_time_s": dt,
            })
    return rows


def intersection_profile(r_grid, trials, seed, d=4, law=None, workers=1,
                         budget=DEFAULT_VERTEX_BUDGET):
    """Per r: P(two independent snake images over radius-r balls share only
    the origin).  All radii are evaluated on the same trial pair (restriction
    coupling), so the estimates are monotone in r trial by trial."""
    law = law or geometric_half()
    radii = sorted(set(int(r) for r in r_grid))
    rmax = radii[-1]
    key = derive_stream(seed, [TAG_INTERSECT, d, rmax]).kernel_key()
    counts = np.zeros(len(radii), dtype=np.int64)
    t0 = time.perf_counter()
    for t in range(trials):
        p1, _, dep1 = sample_ball_positions(law, rmax, d, key, 2 * t, budget=budget)
        p2, _, dep2 = sample_ball_positions(law, rmax, d, key, 2 * t + 1, budget=budget)
        k1 = pack_positions(p1.astype(np.int64))
        k2 = pack_positions(p2.astype(np.int64))
        for ri, r in enumerate(radii):
            u1 = np.unique(k1[dep1 <= r])
            u2 = np.unique(k2[dep2 <= r])
            common = np.intersect1d(u1, u2, assume_unique=True)
            if common.size == 1:
                counts[ri] += 1
    dt = time.perf_counter() - t0
    rows = []
    for ri, r in enumerate(radii):
        p_hat, _, ci = mean_var_ci(int(counts[ri]), int(counts[ri]), trials)
        rows.append({
            "statistic": "intersection",
            "law": law.name,
            "d": d,
            "r": r,
            "trials": trials,
            "p_only_origin": p_hat,
            "ci_p": ci,
            "seed": seed,
            "wall_time_s": dt,
        })
    return rows


# -- mass transport check --------------------------------------------------------


def _mtp_chunk(args):
    law_name, tname, r_sample, seed, start, count, budget = args
    law = law_by_name(law_name)
    spec = transport_by_name(tname)
    zero = Fraction(0)
    s_w = s_wl = s_wr = s_w2 = s_d = s_d2 = s_dw = zero
    for i in range(start, start + count):
        rng = derive_stream(seed, [TAG_MTP, _name_tag(tname), i])
        ball = sample_kesten_ball(law, r_sample, rng, max_vertices=budget)
        w = root_degree_weight(ball)
        lhs, rhs = evaluate_sides(ball, spec)
        dd = w * (lhs - rhs)
        s_w += w
        s_wl += w * lhs
        s_wr += w * rhs
        s_w2 += w * w
        s_d += dd
        s_d2 += dd * dd
        s_dw += dd * w
    return s_w, s_wl, s_wr, s_w2, s_d, s_d2, s_dw


def mtp_check(transport, trials, seed, law=None, r_sample=None, workers=1,
              budget=DEFAULT_VERTEX_BUDGET):
    """Both sides of the mass transport identity under the degree-biased
    measure, via self-normalized 1/deg(root) importance weights, with the
    standardized difference |LHS - RHS| / sigma."""
    law = law or geometric_half()
    spec = transport if not isinstance(transport, str) else transport_by_name(transport)
    needed = max(2 * spec.k, 1)  # weight needs the root degree visible
    if r_sample is None:
        r_sample = needed
    if r_sample < 2 * spec.k:
        raise UsageError(
            f"sample radius {r_sample} < 2k = {2 * spec.k}: truncation would bias the sides"
        )
    r_sample = max(r_sample, 1)
    t0 = time.perf_counter()
    args = [(law.name, spec.name, r_sample, seed, s, c, budget) for s, c in _chunks(trials)]
    parts = _pmap_ordered(_mtp_chunk, args, workers)
    s_w = sum(p[0] for p in parts)
    s_wl = sum(p[1] for p in parts)
    s_wr = sum(p[2] for p in parts)
    s_w2 = sum(p[3] for p in parts)
    s_d = sum(p[4] for p in parts)
    s_d2 = sum(p[5] for p in parts)
    s_dw = sum(p[6] for p in parts)
    n = trials
    w_bar = s_w / n
    delta = s_d / s_w  # == (LHS - RHS) estimate, self-normalized
    # delta-method variance of the ratio mean(D)/mean(W)
    var_d = float(s_d2 / n - (s_d / n) ** 2)
    var_w = float(s_w2 / n - w_bar**2)
    cov_dw = float(s_dw / n - (s_d / n) * w_bar)
    fd = float(delta)
    var_ratio = max(0.0, (var_d - 2 * fd * cov_dw + fd * fd * var_w)) / (n * float(w_bar) ** 2)
    sigma = math.sqrt(var_ratio)
    standardized = abs(fd) / sigma if sigma > 0 else (0.0 if fd == 0 else float("inf"))
    return {
        "statistic": "mtp",
        "law": law.name,
        "transport": spec.name,
        "k": spec.k,
        "r_sample": r_sample,
        "symmetric": spec.symmetric,
        "trials": n,
        "lhs": float(s_wl / s_w),
        "rhs": float(s_wr / s_w),
        "diff": fd,
        "sigma_diff": sigma,
        "standardized": standardized,
        "seed": seed,
        "wall_time_s": time.perf_counter() - t0,
    }


def mtp_check_all(trials, seed, law=None, workers=1, budget=DEFAULT_VERTEX_BUDGET):
    return [
        mtp_check(name, trials, seed, law=law, workers=workers, budget=budget)
        for name in sorted(BUILTIN_TRANSPORTS)
    ]


# -- degree-biased estimation, two routes ----------------------------------------


def degree_biased_root_degree(trials, seed, mode="importance", law=None,
                              budget=DEFAULT_VERTEX_BUDGET):
    """E[deg(root)] under the degree-biased measure, by importance weighting
    (zero waste) or by rejection (accept a trial with probability 1/deg).
    The two must agree within their confidence intervals."""
    law = law or geometric_half()
    if mode not in ("importance", "rejection"):
        raise UsageError(f"unknown mode {mode!r}")
    s_w = Fraction(0)
    s_w2 = Fraction(0)
    accepted = []
    for i in range(trials):
        rng = derive_stream(seed, [TAG_DEGBIAS, _name_tag(mode), i])
        ball = sample_kesten_ball(law, 1, rng, max_vertices=budget)
        deg = ball.tree.degree(ball.root)
        if mode == "importance":
            w = Fraction(1, deg)
            s_w += w
            s_w2 += w * w
        else:
            if rng.randbelow(deg) == 0:  # accept with probability exactly 1/deg
                accepted.append(deg)
    if mode == "importance":
        # numerator weights w*deg are identically 1, so est = 1 / mean(w);
        # delta method: var(est) ~= var(w) / (n * mean(w)^4)
        n = trials
        w_bar = float(s_w) / n
        var_w = max(0.0, float(s_w2) / n - w_bar**2)
        est = 1.0 / w_bar
        ci = Z99 * math.sqrt(var_w / n) / w_bar**2
        return {"mode": mode, "estimate": est, "ci": ci, "trials": trials, "seed": seed}
    if not accepted:
        raise UsageError("rejection route accepted no trials; raise the trial count")
    arr = np.asarray(accepted, dtype=np.float64)
    mean, var, ci = mean_var_ci(float(arr.sum()), float((arr * arr).sum()), len(arr))
    return {
        "mode": mode,
        "estimate": mean,
        "ci": ci,
        "accepted": len(arr),
        "trials": trials,
        "seed": seed,
    }
