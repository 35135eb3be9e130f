"""Bounded-range mass-transport functions and their two-sided evaluation.

A transport function F(G, x, y) sends mass from x to y, vanishes beyond
graph distance k, and depends only on the ball of radius k around x.  Under
the root-degree-biased measure the expected mass sent from the root equals
the expected mass received by it; the estimator in
:func:`treesnake.estimators.mtp_check` tests exactly that.

Every built-in here reduces to a function of (deg(x), d(x, y)), so both
sums over a sampled ball of radius 2k only ever touch degrees that the
truncation leaves intact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .kesten import KestenBall


@dataclass(frozen=True)
class TransportFunctionSpec:
    """A named F together with its declared locality range k."""

    name: str
    k: int
    symmetric: bool  # F(G,x,y) == F(G,y,x) identically -> sides agree per trial

    def value(self, deg_x: int, dist: int) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class _SimpleTransport(TransportFunctionSpec):
    mode: str = "indicator"

    def value(self, deg_x, dist):
        if dist > self.k:
            return 0
        if self.mode == "identity":
            return 1 if dist == 0 else 0
        if self.mode == "indicator":
            return 1
        if self.mode == "edge_degree":
            return deg_x if dist == 1 else 0
        if self.mode == "ball_degree":
            return deg_x
        if self.mode == "leaf_ball":
            return 1 if deg_x == 1 else 0
        raise UsageError(f"unknown transport mode {self.mode!r}")


BUILTIN_TRANSPORTS = {
    "identity": _SimpleTransport("identity", k=0, symmetric=True, mode="identity"),
    "ball1": _SimpleTransport("ball1", k=1, symmetric=True, mode="indicator"),
    "ball2": _SimpleTransport("ball2", k=2, symmetric=True, mode="indicator"),
    "edge_degree": _SimpleTransport("edge_degree", k=1, symmetric=False, mode="edge_degree"),
    "ball_degree2": _SimpleTransport("ball_degree2", k=2, symmetric=False, mode="ball_degree"),
    "leaf_ball2": _SimpleTransport("leaf_ball2", k=2, symmetric=False, mode="leaf_ball"),
}


def transport_by_name(name: str) -> TransportFunctionSpec:
    try:
        return BUILTIN_TRANSPORTS[name]
    except KeyError:
        raise UsageError(
            f"unknown transport function {name!r}; built-ins: {sorted(BUILTIN_TRANSPORTS)}"
        ) from None


def evaluate_sides(ball: KestenBall, spec: TransportFunctionSpec):
    """(sum_x F(G, root, x), sum_x F(G, x, root)) over the sampled ball.

    Requires the sample radius to be at least 2k so that every degree and
    distance either side touches is exact despite the truncation.
    """
    if ball.radius < 2 * spec.k:
        raise UsageError(
            f"transport {spec.name!r} has range k={spec.k}; needs sample radius >= {2 * spec.k}"
        )
    dist = ball.distances()
    within = np.flatnonzero(dist <= spec.k)
    tree = ball.tree
    deg_root = tree.degree(ball.root)
    lhs = 0
    rhs = 0
    for v in within:
        dv = int(dist[v])
        lhs += spec.value(deg_root, dv)
        rhs += spec.value(tree.degree(int(v)), dv)
    return lhs, rhs
