"""Offspring distributions for the branching constructions.

All laws used by the samplers have mean exactly one (criticality); the
constructors check this in rational arithmetic where a closed form exists.
The geometric law with success probability 1/2 is pinned to the convention
``P(k) = 2**-(k+1)`` on k >= 0 -- the unique mean-one geometric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import UsageError
from .rng import RngStream

_SIZE_BIASED_TAIL = Fraction(1, 10**15)
_SIZE_BIASED_KMAX = 4096


@dataclass(frozen=True)
class OffspringLaw:
    """A probability mass function on non-negative integers.

    ``kind`` selects the sampling strategy: "geometric" and "poisson" have
    dedicated exact samplers, "finite" uses the stored table.
    """

    name: str
    kind: str
    mean: Fraction
    variance: float
    table: tuple = ()  # ((k, Fraction(p_k)), ...) for finite support
    _sb_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def pmf(self, k: int):
        """Exact Fraction for the closed forms, float for the Poisson law."""
        if k < 0:
            return Fraction(0)
        if self.kind == "geometric":
            return Fraction(1, 2 ** (k + 1))
        if self.kind == "poisson":
            return math.exp(-1.0 - math.lgamma(k + 1))
        for kk, p in self.table:
            if kk == k:
                return p
        return Fraction(0)

    @property
    def is_critical(self) -> bool:
        return self.mean == 1

    def require_critical(self):
        if not self.is_critical:
            raise UsageError(f"law {self.name!r} has mean {self.mean}, need mean 1")

    # -- size-biased support -------------------------------------------------

    def size_biased_table(self):
        """Inverse-CDF table for the law reweighted by its value.

        For a mean-one law the reweighted masses k*p_k already sum to one.
        Precomputed until the remaining tail mass is below 1e-15; a law whose
        tail cannot be capped raises.
        """
        cached = self._sb_cache.get("table")
        if cached is not None:
            return cached
        if self.mean != 1:
            raise UsageError("size-biasing requires a mean-one law")
        exact = self.kind != "poisson"
        ks, cum = [], []
        acc = Fraction(0) if exact else 0.0
        k = 1
        while k < _SIZE_BIASED_KMAX:
            p = k * self.pmf(k)
            if p > 0:
                acc += p
                ks.append(k)
                cum.append(float(acc))
            if 1 - acc < _SIZE_BIASED_TAIL:
                break
            if self.kind == "finite" and k > max(kk for kk, _ in self.table):
                break
            k += 1
        if 1 - acc >= _SIZE_BIASED_TAIL:
            raise UsageError(
                f"size-biased tail of {self.name!r} not below 1e-15 by k={k}"
            )
        table = (np.asarray(ks, dtype=np.int64), np.asarray(cum, dtype=np.float64))
        self._sb_cache["table"] = table
        return table


def geometric_half() -> OffspringLaw:
    """Geometric offspring, P(k) = 2**-(k+1): mean 1, variance 2."""
    return OffspringLaw(name="geometric", kind="geometric", mean=Fraction(1), variance=2.0)


def poisson_one() -> OffspringLaw:
    """Poisson offspring with rate 1: mean 1, variance 1."""
    return OffspringLaw(name="poisson", kind="poisson", mean=Fraction(1), variance=1.0)


def finite_support(probs: dict) -> OffspringLaw:
    """Finite-support law from ``{k: probability}`` (Fractions or strings).

    Probabilities must sum to one exactly.
    """
    table = tuple(sorted((int(k), Fraction(p)) for k, p in probs.items()))
    if any(k < 0 or p < 0 for k, p in table):
        raise UsageError("finite-support law needs k >= 0 and p >= 0")
    total = sum(p for _, p in table)
    if total != 1:
        raise UsageError(f"finite-support probabilities sum to {total}, not 1")
    mean = sum(k * p for k, p in table)
    var = float(sum(k * k * p for k, p in table) - mean * mean)
    name = "finite:" + ",".join(f"{k}={p}" for k, p in table)
    return OffspringLaw(name=name, kind="finite", mean=mean, variance=var, table=table)


def law_by_name(name: str) -> OffspringLaw:
    """Parse a law spec: "geometric", "poisson", or "finite:0=1/2,2=1/2"."""
    if name == "geometric":
        return geometric_half()
    if name == "poisson":
        return poisson_one()
    if name.startswith("finite:"):
        probs = {}
        for item in name[len("finite:"):].split(","):
            k, _, p = item.partition("=")
            probs[int(k)] = Fraction(p)
        return finite_support(probs)
    raise UsageError(f"unknown offspring law {name!r}")


def _finite_cdf(law: OffspringLaw):
    ks = np.asarray([k for k, _ in law.table], dtype=np.int64)
    cum = np.cumsum([float(p) for _, p in law.table])
    return ks, cum


def sample_offspring(law: OffspringLaw, rng: RngStream, size=None):
    """Draw offspring counts from ``law`` (scalar or numpy array)."""
    gen = rng.gen
    if law.kind == "geometric":
        out = gen.geometric(0.5, size=size) - 1
    elif law.kind == "poisson":
        out = gen.poisson(1.0, size=size)
    elif law.kind == "finite":
        ks, cum = _finite_cdf(law)
        idx = np.searchsorted(cum, gen.random(size=size), side="right")
        out = ks[np.minimum(idx, len(ks) - 1)]
    else:
        raise UsageError(f"unsupported law kind {law.kind!r}")
    if size is None:
        return int(out)
    return out


def sample_size_biased(law: OffspringLaw, rng: RngStream, size=None):
    """Draw from the size-biased law k*p_k (requires mean one).

    Inverse CDF on the precomputed table; a uniform falling beyond the
    capped tail (< 1e-15 mass) is an explicit error rather than a clamp.
    """
    ks, cum = law.size_biased_table()
    u = rng.gen.random(size=size)
    idx = np.searchsorted(cum, u, side="right")
    if np.any(idx >= len(ks)):
        raise RuntimeError("size-biased draw fell into the capped tail")
    out = ks[idx]
    if size is None:
        return int(out)
    return out
