"""Radius-truncated samplers for the critical tree conditioned to survive.

The infinite object is a semi-infinite spine with two independent critical
trees grafted at every spine vertex (left and right of the spine); the root
is the first spine vertex.  Only the ball of radius r around the root is
ever sampled: the graft at spine vertex i is generated to height r-i and
nothing else, which is exact in law and keeps memory at O(r^2) expected.

Two constructions are provided and must agree in law:

* "left-right": independent mean-one geometric grafts on each side (the
  geometric case only);
* "size-biased": the spine vertex draws a size-biased offspring count, the
  spine child is placed uniformly among the children, and every other child
  starts an ordinary critical tree (any critical law).

Generation order is fixed -- spine first, then grafts in spine order; per
spine vertex the generation-1 counts of both sides, then the left graft
breadth-first, then the right graft breadth-first -- so a sample is a
deterministic function of its stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, UsageError
from .offspring import OffspringLaw, sample_offspring, sample_size_biased
from .planetree import PlaneTree
from .rng import RngStream

DEFAULT_VERTEX_BUDGET = 10**8

SIDE_SPINE = 0
SIDE_LEFT = 1
SIDE_RIGHT = 2


@dataclass
class KestenBall:
    """The ball of radius r around the root, with its layer bookkeeping.

    ``left_layers[i, j]`` counts vertices at generation j of the graft on
    the left of spine vertex i (valid for j <= r - i); generation 0 is the
    spine vertex itself, so ``left_layers[i, 0] == right_layers[i, 0] == 1``
    and each row is a branching-process generation-size sequence.
    """

    tree: PlaneTree
    radius: int
    spine: np.ndarray
    left_layers: np.ndarray
    right_layers: np.ndarray
    spine_index: np.ndarray
    side: np.ndarray
    generation: np.ndarray

    @property
    def root(self) -> int:
        return self.tree.root

    def distances(self) -> np.ndarray:
        """Distance to the root: i for spine vertex i, i + j for graft vertices."""
        return self.spine_index + self.generation

    def decomposition_identity_holds(self) -> bool:
        """#ball == (r+1) + sum over grafts of generations >= 1."""
        r = self.radius
        graft = 0
        for i in range(r + 1):
            graft += int(self.left_layers[i, 1 : r - i + 1].sum())
            graft += int(self.right_layers[i, 1 : r - i + 1].sum())
        return self.tree.n_vertices == (r + 1) + graft


def ball_size(t: KestenBall) -> int:
    return t.tree.n_vertices


def boundary_size(t: KestenBall) -> int:
    """Vertices at distance exactly r: the last spine vertex plus the final
    generation of every graft that reaches that depth."""
    r = t.radius
    total = 1
    for i in range(r):
        total += int(t.left_layers[i, r - i]) + int(t.right_layers[i, r - i])
    return total


def boundary_size_direct(t: KestenBall) -> int:
    """Same count from per-vertex distances (cross-check route)."""
    return int(np.count_nonzero(t.distances() == t.radius))


def root_degree_weight(t: KestenBall) -> Fraction:
    """Importance weight 1/deg(root) realizing root-degree-biased expectations.

    E_biased[f] = E[f / deg(root)] / E[1 / deg(root)].  Needs r >= 1 so the
    root degree is fully visible in the truncated ball.
    """
    if t.radius < 1:
        raise UsageError("root degree is not visible at radius 0")
    return Fraction(1, t.tree.degree(t.root))


# -- materialized samplers ----------------------------------------------------


class _Arena:
    def __init__(self, budget):
        self.parent = []
        self.children = []
        self.budget = budget

    def new_node(self, parent):
        if len(self.parent) >= self.budget:
            raise BudgetExceededError(
                f"vertex budget {self.budget} exceeded while sampling"
            )
        v = len(self.parent)
        self.parent.append(parent)
        self.children.append([])
        return v


def sample_gw_truncated(
    law: OffspringLaw,
    height_cap: int,
    rng: RngStream,
    max_vertices: int = DEFAULT_VERTEX_BUDGET,
) -> PlaneTree:
    """Critical branching tree with generations 0..height_cap only.

    Vertices at the cap get no children; the budget is a hard error, never a
    silent truncation.
    """
    law.require_critical()
    if height_cap < 0:
        raise UsageError("height cap must be non-negative")
    arena = _Arena(max_vertices)
    root = arena.new_node(-1)
    frontier = [root]
    for _ in range(height_cap):
        nxt = []
        for v in frontier:
            k = sample_offspring(law, rng)
            for _ in range(k):
                c = arena.new_node(v)
                arena.children[v].append(c)
                nxt.append(c)
        if not nxt:
            break
        frontier = nxt
    return PlaneTree(arena.parent, arena.children, root, None)


def _grow_graft(arena, roots, height, law, rng):
    """BFS generations 2..height below the given generation-1 roots.

    Returns the per-generation counts [gen1, gen2, ...]."""
    counts = [len(roots)]
    frontier = roots
    for _ in range(height - 1):
        nxt = []
        for v in frontier:
            k = sample_offspring(law, rng)
            for _ in range(k):
                c = arena.new_node(v)
                arena.children[v].append(c)
                nxt.append(c)
        counts.append(len(nxt))
        if not nxt:
            break
        frontier = nxt
    return counts


def sample_kesten_ball(
    law: OffspringLaw,
    r: int,
    rng: RngStream,
    construction: str = "auto",
    max_vertices: int = DEFAULT_VERTEX_BUDGET,
) -> KestenBall:
    """Exact sample of the radius-r ball around the root of the conditioned tree."""
    law.require_critical()
    if r < 0:
        raise UsageError("radius must be non-negative")
    if construction == "auto":
        construction = "left-right" if law.kind == "geometric" else "size-biased"
    if construction == "left-right" and law.kind != "geometric":
        raise UsageError("the left-right construction is exact for the geometric law only")
    if construction not in ("left-right", "size-biased"):
        raise UsageError(f"unknown construction {construction!r}")

    arena = _Arena(max_vertices)
    for i in range(r + 1):
        arena.new_node(i - 1)  # spine vertex i; parent is spine i-1

    left_layers = np.zeros((r + 1, r + 1), dtype=np.int64)
    right_layers = np.zeros((r + 1, r + 1), dtype=np.int64)
    meta = []  # (spine_index, side, generation) appended per created graft node

    for i in range(r + 1):
        height = r - i
        left_layers[i, 0] = 1
        right_layers[i, 0] = 1
        left_roots, right_roots = [], []
        if height >= 1:
            if construction == "left-right":
                n_left = sample_offspring(law, rng)
                n_right = sample_offspring(law, rng)
            else:
                k = sample_size_biased(law, rng)
                n_left = rng.randbelow(k)  # spine child position among k children
                n_right = k - 1 - n_left
            for _ in range(n_left):
                left_roots.append(arena.new_node(i))
            for _ in range(n_right):
                right_roots.append(arena.new_node(i))
            counts = _grow_graft(arena, left_roots, height, law, rng)
            for j, c in enumerate(counts, start=1):
                left_layers[i, j] = c
            counts = _grow_graft(arena, right_roots, height, law, rng)
            for j, c in enumerate(counts, start=1):
                right_layers[i, j] = c
        # planar order at the spine vertex: left graft, spine child, right graft
        spine_child = [i + 1] if i < r else []
        arena.children[i] = left_roots + spine_child + right_roots

    V = len(arena.parent)
    spine_index = np.zeros(V, dtype=np.int32)
    side = np.zeros(V, dtype=np.int8)
    generation = np.zeros(V, dtype=np.int32)
    spine_index[: r + 1] = np.arange(r + 1)
    # graft metadata from parents: children inherit origin, generation + 1
    for v in range(r + 1, V):
        p = arena.parent[v]
        if p <= r:
            spine_index[v] = p
            generation[v] = 1
            # side from planar position relative to the spine child
            kids = arena.children[p]
            pos = kids.index(v)
            spine_pos = kids.index(p + 1) if p < r else len(kids)
            side[v] = SIDE_LEFT if pos < spine_pos else SIDE_RIGHT
        else:
            spine_index[v] = spine_index[p]
            side[v] = side[p]
            generation[v] = generation[p] + 1

    tree = PlaneTree(arena.parent, arena.children, 0, None)
    return KestenBall(
        tree=tree,
        radius=r,
        spine=np.arange(r + 1, dtype=np.int64),
        left_layers=left_layers,
        right_layers=right_layers,
        spine_index=spine_index,
        side=side,
        generation=generation,
    )


# -- augmented tree (general critical laws) -----------------------------------


@dataclass
class AugmentedTree:
    """A finite critical tree and a conditioned tree joined root-to-root.

    ``root_is_conditioned`` records the fair-coin choice of which component
    root is the root of the joined tree.  Both components are truncated so
    the ball of radius ``radius`` around the chosen root is exact.
    """

    tree: PlaneTree
    radius: int
    root_is_conditioned: bool


def sample_augmented(
    law: OffspringLaw,
    r: int,
    rng: RngStream,
    max_vertices: int = DEFAULT_VERTEX_BUDGET,
) -> AugmentedTree:
    law.require_critical()
    if r < 0:
        raise UsageError("radius must be non-negative")
    root_is_conditioned = bool(rng.coin())
    if r == 0:
        tree = PlaneTree([-1], [[]], 0, None)
        return AugmentedTree(tree=tree, radius=0, root_is_conditioned=root_is_conditioned)

    if root_is_conditioned:
        other = sample_gw_truncated(law, r - 1, rng, max_vertices)
        own = sample_kesten_ball(law, r, rng, max_vertices=max_vertices)
        own_tree = own.tree
    else:
        other_ball = sample_kesten_ball(law, r - 1, rng, max_vertices=max_vertices)
        other = other_ball.tree
        own_tree = sample_gw_truncated(law, r, rng, max_vertices)

    # merge arenas: chosen component keeps its ids, other offset; the joined
    # root becomes the first child of the chosen root
    off = own_tree.n_vertices
    parent = list(own_tree.parent) + [
        (p + off if p >= 0 else -1) for p in other.parent
    ]
    children = [list(c) for c in own_tree.children] + [
        [w + off for w in c] for c in other.children
    ]
    parent[other.root + off] = own_tree.root
    children[own_tree.root] = [other.root + off] + children[own_tree.root]
    tree = PlaneTree(parent, children, own_tree.root, None)
    return AugmentedTree(tree=tree, radius=r, root_is_conditioned=root_is_conditioned)


# -- vectorized volume statistics (no tree materialization) -------------------


def _generation_sums(gen: np.random.Generator, law: OffspringLaw, z: np.ndarray):
    """Sum of z[i] independent offspring draws, per element, exactly in law.

    Geometric sums are negative binomial, Poisson sums are Poisson, finite
    supports go through a conditional-binomial chain.
    """
    out = np.zeros_like(z)
    nz = np.flatnonzero(z)
    if nz.size == 0:
        return out
    zz = z[nz]
    if law.kind == "geometric":
        out[nz] = gen.negative_binomial(zz, 0.5)
    elif law.kind == "poisson":
        out[nz] = gen.poisson(zz.astype(np.float64))
    elif law.kind == "finite":
        remaining = zz.copy()
        total = np.zeros_like(zz)
        mass_left = Fraction(1)
        for k, p in law.table:
            if p == mass_left:
                c = remaining.copy()
            else:
                c = gen.binomial(remaining, float(p / mass_left))
            total += k * c
            remaining -= c
            mass_left -= p
        out[nz] = total
    else:
        raise UsageError(f"unsupported law kind {law.kind!r}")
    return out


def sample_volume_stats(
    law: OffspringLaw,
    r: int,
    n: int,
    rng: RngStream,
    max_vertices: int = DEFAULT_VERTEX_BUDGET,
):
    """(ball_size, boundary_size) for n independent radius-r balls.

    Runs the graft generation-size chains directly -- the layer counts are
    branching-process generation sizes -- which matches the materialized
    sampler in law at a fraction of the cost.
    """
    law.require_critical()
    if r < 0:
        raise UsageError("radius must be non-negative")
    gen = rng.gen
    ball = np.full(n, r + 1, dtype=np.int64)
    boundary = np.ones(n, dtype=np.int64)
    if r == 0:
        return ball, boundary

    # column pair 2i, 2i+1 = (left, right) grafts at spine vertex i, i <= r-1
    if law.kind == "geometric":
        cur = gen.geometric(0.5, size=(n, 2 * r)).astype(np.int64) - 1
    else:
        ks, cum = law.size_biased_table()
        u = gen.random(size=(n, r))
        idx = np.searchsorted(cum, u, side="right")
        if np.any(idx >= len(ks)):
            raise RuntimeError("size-biased draw fell into the capped tail")
        k = ks[idx]
        left = gen.integers(0, k)
        cur = np.empty((n, 2 * r), dtype=np.int64)
        cur[:, 0::2] = left
        cur[:, 1::2] = k - 1 - left
    ball += cur.sum(axis=1)
    boundary += cur[:, 2 * (r - 1) :].sum(axis=1)  # grafts at i = r-1 end at gen 1

    for j in range(2, r + 1):
        m = 2 * (r - j + 1)
        sub = cur[:, :m]
        stepped = _generation_sums(gen, law, sub.ravel()).reshape(sub.shape)
        cur[:, :m] = stepped
        ball += stepped.sum(axis=1)
        boundary += stepped[:, m - 2 :].sum(axis=1)
        if ball.max() > max_vertices:
            raise BudgetExceededError(
                f"vertex budget {max_vertices} exceeded",
                trial_index=int(ball.argmax()),
            )
    return ball, boundary


def sample_layer_matrices(law: OffspringLaw, r: int, n: int, rng: RngStream):
    """Full per-trial layer matrices (n, r+1, r+1) for moment tests; small r only."""
    law.require_critical()
    if r > 32:
        raise UsageError("layer matrices are for small radii (r <= 32)")
    gen = rng.gen
    L = np.zeros((n, r + 1, r + 1), dtype=np.int64)
    R = np.zeros((n, r + 1, r + 1), dtype=np.int64)
    L[:, :, 0] = 1
    R[:, :, 0] = 1
    for i in range(r):
        h = r - i
        if law.kind == "geometric":
            zl = gen.geometric(0.5, size=n).astype(np.int64) - 1
            zr = gen.geometric(0.5, size=n).astype(np.int64) - 1
        else:
            ks, cum = law.size_biased_table()
            idx = np.searchsorted(cum, gen.random(size=n), side="right")
            k = ks[idx]
            zl = gen.integers(0, k)
            zr = k - 1 - zl
        L[:, i, 1] = zl
        R[:, i, 1] = zr
        for j in range(2, h + 1):
            zl = _generation_sums(gen, law, zl)
            zr = _generation_sums(gen, law, zr)
            L[:, i, j] = zl
            R[:, i, j] = zr
    return L, R


def sample_generation_sizes(law: OffspringLaw, h: int, n: int, rng: RngStream):
    """Generation-h sizes of n independent critical trees started from one vertex."""
    law.require_critical()
    z = np.ones(n, dtype=np.int64)
    gen = rng.gen
    for _ in range(h):
        z = _generation_sums(gen, law, z)
    return z
