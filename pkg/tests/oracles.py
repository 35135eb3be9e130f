"""Independent exact oracles used by the test suite only.

Everything here is computed in rational arithmetic by enumeration,
convolution, or generating-function recursion -- never by the code paths
under test.
"""

from fractions import Fraction
from functools import lru_cache
from math import comb


@lru_cache(maxsize=None)
def _closed_walk_counts(d: int, k: int):
    """Number of k-step closed walks in Z^d, by axis-allocation convolution."""
    if d == 1:
        return comb(k, k // 2) if k % 2 == 0 else 0
    total = 0
    for j in range(k + 1):
        a = comb(j, j // 2) if j % 2 == 0 else 0
        if a:
            total += comb(k, j) * a * _closed_walk_counts(d - 1, k - j)
    return total


def srw_return_probability(d: int, k: int) -> Fraction:
    """Exact probability that a simple random walk on Z^d is back at the
    origin after exactly k steps."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return Fraction(1)
    return Fraction(_closed_walk_counts(d, k), (2 * d) ** k)


# -- exact two-snake intersection probability at d=1, r=2 ----------------------

_PHI_CACHE = {}


def _phi(s: Fraction) -> Fraction:
    # offspring pgf of the mean-one geometric law: sum 2^-(k+1) s^k = 1/(2-s)
    return Fraction(1, 1) / (2 - s)


def _avoid_probability(w: frozenset) -> Fraction:
    """P(snake image over the radius-2 ball avoids every site in w), d=1.

    q(x, h): a non-spine vertex at position x with h generations below it
    heads a subtree avoiding w.  g(x, h): the graft at a spine vertex at
    position x with remaining height h avoids w (the spine vertex itself is
    accounted separately).  Exact rationals throughout.
    """

    @lru_cache(maxsize=None)
    def q(x, h):
        if x in w:
            return Fraction(0)
        if h == 0:
            return Fraction(1)
        s = (q(x - 1, h - 1) + q(x + 1, h - 1)) / 2
        return _phi(s)

    def g(x, h):
        if h == 0:
            return Fraction(1)
        s = (q(x - 1, h - 1) + q(x + 1, h - 1)) / 2
        return _phi(s)

    total = Fraction(0)
    if 0 in w:
        return total
    for x1 in (-1, 1):
        if x1 in w:
            continue
        for x2 in (x1 - 1, x1 + 1):
            if x2 in w:
                continue
            total += Fraction(1, 4) * g(0, 2) ** 2 * g(x1, 1) ** 2 * g(x2, 0) ** 2
    return total


def two_snake_only_origin_probability_d1_r2() -> Fraction:
    """P(two independent radius-2 snake images in Z^1 share only the origin).

    The image lies in {-2..2}; with U = image minus the origin, the set law
    of U follows from the avoid probabilities by inclusion-exclusion, and
    independence gives P = sum_A P(U = A) * P(U' avoids A).
    """
    sites = (-2, -1, 1, 2)
    n = len(sites)
    avoid = {}
    for mask in range(1 << n):
        w = frozenset(sites[i] for i in range(n) if mask >> i & 1)
        avoid[mask] = _avoid_probability(w)

    def subset_masks(mask):
        sub = mask
        while True:
            yield sub
            if sub == 0:
                break
            sub = (sub - 1) & mask

    full = (1 << n) - 1
    p_equal = {}
    for mask in range(1 << n):
        # P(U subset of A) = P(U avoids complement(A))
        total = Fraction(0)
        for sub in subset_masks(mask):
            sign = -1 if (bin(mask ^ sub).count("1") % 2) else 1
            total += sign * avoid[full ^ sub]
        p_equal[mask] = total
    answer = Fraction(0)
    for mask in range(1 << n):
        answer += p_equal[mask] * avoid[mask]
    return answer
