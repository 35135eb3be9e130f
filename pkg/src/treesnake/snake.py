"""Tree-indexed simple random walk ("snake") embeddings and observables.

Each edge carries an independent uniform draw from the 2d signed standard
basis vectors of Z^d; a vertex's position is the sum of the draws along its
root path, so the root sits at the origin and adjacent vertices differ by
exactly one signed unit step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, UsageError
from .kesten import KestenBall
from .planetree import PlaneTree
from .rng import RngStream

PACK_COORD_LIMIT = 32767  # coordinates are packed 16 bits per axis


def _as_tree(t):
    return t.tree if isinstance(t, KestenBall) else t


@dataclass
class SnakeEmbedding:
    """Per-vertex lattice positions of one snake over one tree."""

    dim: int
    tree: PlaneTree
    positions: np.ndarray  # (V, d) int64
    increments: np.ndarray  # (V, d) int64; row v = step on the edge (parent(v), v)
    depths: np.ndarray

    def position(self, v: int):
        return self.positions[v]


def assign_and_embed(t, d: int, rng: RngStream) -> SnakeEmbedding:
    """Draw the edge increments and fold them into positions in one pass.

    Increments are drawn per edge in increasing child-node order; builders in
    this package allocate parents before children, so a single ascending scan
    carries the running sums.
    """
    if d < 1:
        raise UsageError("dimension must be >= 1")
    tree = _as_tree(t)
    V = tree.n_vertices
    incs = np.zeros((V, d), dtype=np.int64)
    if V > 1:
        gen = rng.gen
        axes = gen.integers(0, d, size=V - 1)
        signs = 1 - 2 * gen.integers(0, 2, size=V - 1)
        incs[np.arange(1, V), axes] = signs
    parents = np.asarray(tree.parent, dtype=np.int64)
    if V > 1 and not np.all(parents[1:] < np.arange(1, V)):
        raise InvariantViolation("builder did not allocate parents before children")
    positions = incs.copy()
    for v in range(1, V):
        positions[v] += positions[parents[v]]
    depths = tree.depths() if not isinstance(t, KestenBall) else np.asarray(t.distances(), dtype=np.int64)
    return SnakeEmbedding(dim=d, tree=tree, positions=positions, increments=incs, depths=depths)


def _scope_array(e: SnakeEmbedding, scope):
    if scope is None:
        return np.arange(e.tree.n_vertices)
    arr = np.asarray(sorted(scope) if isinstance(scope, set) else scope, dtype=np.int64)
    if arr.size == 0:
        raise UsageError("scope must be nonempty")
    return arr


def return_count(e: SnakeEmbedding, scope=None) -> int:
    """#{u in scope : S(u) = origin}; checks the parity law on every hit."""
    idx = _scope_array(e, scope)
    at_zero = idx[np.all(e.positions[idx] == 0, axis=1)]
    if np.any(e.depths[at_zero] % 2 != 0):
        raise InvariantViolation("snake returned to the origin at odd depth")
    return int(at_zero.size)


def range_size(e: SnakeEmbedding, scope=None) -> int:
    """Number of distinct lattice points in the image of the scope."""
    idx = _scope_array(e, scope)
    return len(np.unique(pack_positions(e.positions[idx])))


def max_displacement(e: SnakeEmbedding, scope=None) -> int:
    """Largest sup-norm over the scope."""
    idx = _scope_array(e, scope)
    return int(np.abs(e.positions[idx]).max())


def boundary_hit_zero(t: KestenBall, e: SnakeEmbedding) -> bool:
    """True iff some vertex at distance exactly r maps to the origin."""
    idx = np.flatnonzero(e.depths == t.radius)
    return return_count(e, idx) > 0 if idx.size else False


def prefix_excluded_scope(t: KestenBall, eta: float) -> np.ndarray:
    """Ball minus the early-spine region: keeps the spine from index
    floor(eta*r) on and every graft attached there or later."""
    if not (0 < eta <= 1):
        raise UsageError("eta must lie in (0, 1]")
    if t.radius < 1:
        raise UsageError("needs radius >= 1")
    i0 = math.floor(eta * t.radius)
    return np.flatnonzero(t.spine_index >= i0)


def pack_positions(positions: np.ndarray) -> np.ndarray:
    """Pack d int coordinates into one key per row, 16 bits per axis.

    For d <= 4 the key is a single uint64; beyond that, rows of the returned
    array are compared structurally.  Overflows the guard loudly.
    """
    if np.abs(positions).max(initial=0) > PACK_COORD_LIMIT:
        raise UsageError("coordinate exceeds the 16-bit packing guard")
    shifted = (positions + 32768).astype(np.uint64)
    d = positions.shape[1]
    if d <= 4:
        key = np.zeros(len(positions), dtype=np.uint64)
        for a in range(d):
            key = (key << np.uint64(16)) | shifted[:, a]
        return key
    lo = np.zeros(len(positions), dtype=np.uint64)
    hi = np.zeros(len(positions), dtype=np.uint64)
    for a in range(d):
        hi = (hi << np.uint64(16)) | (lo >> np.uint64(48))
        lo = (lo << np.uint64(16)) | shifted[:, a]
    out = np.empty((len(positions), 2), dtype=np.uint64)
    out[:, 0] = hi
    out[:, 1] = lo
    return out.view([("hi", np.uint64), ("lo", np.uint64)]).reshape(-1)


def origin_key(d: int):
    return pack_positions(np.zeros((1, d), dtype=np.int64))[0]


def two_snake_intersection(law, r: int, d: int, rng: RngStream) -> bool:
    """True iff two independent snakes' images over radius-r balls meet only
    at the origin (which both always contain)."""
    from .kesten import sample_kesten_ball  # local import to avoid cycle at import time

    t1 = sample_kesten_ball(law, r, rng)
    e1 = assign_and_embed(t1, d, rng)
    t2 = sample_kesten_ball(law, r, rng)
    e2 = assign_and_embed(t2, d, rng)
    k1 = np.unique(pack_positions(e1.positions))
    k2 = np.unique(pack_positions(e2.positions))
    common = np.intersect1d(k1, k2, assume_unique=True)
    return common.size == 1  # the origin alone


def rewalk_position(e: SnakeEmbedding, v: int):
    """Re-sum increments along the root path (independent check route)."""
    pos = np.zeros(e.dim, dtype=np.int64)
    tree = e.tree
    while v != tree.root:
        pos += e.increments[v]
        v = tree.parent[v]
    return pos
