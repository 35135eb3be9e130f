"""Finite rooted ordered (plane) trees.

Arena storage: nodes are integers 0..V-1, the root is 0 after construction
through the public builders, and `parent`/`children` are flat per-node
structures.  A tree may carry one distinguished oriented edge; the canonical
convention points from the first child of the root towards the root.

The canonical code of a plane tree is its Dyck word: '(' descends into a new
child, ')' returns to the parent.  Uniform sampling goes through a shuffled
balanced sequence and the cycle lemma, which is exact and O(n).
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import UsageError
from .rng import RngStream

ENUMERATION_MAX_EDGES = 12


class PlaneTree:
    __slots__ = ("parent", "children", "root", "distinguished_edge")

    def __init__(self, parent, children, root=0, distinguished_edge=None):
        self.parent = parent
        self.children = children
        self.root = root
        self.distinguished_edge = distinguished_edge

    # -- basics --------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def n_edges(self) -> int:
        return len(self.parent) - 1

    def degree(self, v: int) -> int:
        """Number of incident edges."""
        self._check_node(v)
        return len(self.children[v]) + (0 if v == self.root else 1)

    def neighbors(self, v: int) -> list:
        """Parent first (if any), then children in planar order."""
        self._check_node(v)
        out = [] if v == self.root else [self.parent[v]]
        out.extend(self.children[v])
        return out

    def first_child(self, v: int) -> int:
        return self.children[v][0]

    def depths(self) -> np.ndarray:
        """Graph distance from the root, per node."""
        d = np.zeros(self.n_vertices, dtype=np.int64)
        for v in self._preorder():
            if v != self.root:
                d[v] = d[self.parent[v]] + 1
        return d

    def ball_vertices(self, v: int, r: int) -> set:
        """All vertices at graph distance <= r from v."""
        self._check_node(v)
        if r < 0:
            raise UsageError("radius must be non-negative")
        seen = {v}
        frontier = [v]
        for _ in range(r):
            nxt = []
            for u in frontier:
                for w in self.neighbors(u):
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            if not nxt:
                break
            frontier = nxt
        return seen

    def _check_node(self, v):
        if not (0 <= v < self.n_vertices):
            raise UsageError(f"invalid node id {v}")

    def _preorder(self):
        order = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return order

    def validate(self):
        """Structural invariants; raises on violation (used in tests)."""
        V = self.n_vertices
        assert self.parent[self.root] == -1
        seen = self._preorder()
        assert len(seen) == V and len(set(seen)) == V, "not connected/acyclic"
        for v in range(V):
            for c in self.children[v]:
                assert self.parent[c] == v, "children/parent mismatch"
        if self.distinguished_edge is not None:
            a, b = self.distinguished_edge
            assert a in self.neighbors(b), "distinguished edge not adjacent"

    # -- canonical code --------------------------------------------------------

    def to_dyck(self) -> str:
        out = []
        stack = [(self.root, iter(self.children[self.root]))]
        while stack:
            _, it = stack[-1]
            c = next(it, None)
            if c is None:
                stack.pop()
                if stack:
                    out.append(")")
            else:
                out.append("(")
                stack.append((c, iter(self.children[c])))
        return "".join(out)

    @staticmethod
    def from_dyck(word: str, distinguished_edge="convention") -> "PlaneTree":
        """Parse a balanced parenthesis word; node ids follow preorder."""
        parent = [-1]
        children = [[]]
        cur = 0
        for ch in word:
            if ch == "(":
                node = len(parent)
                parent.append(cur)
                children.append([])
                children[cur].append(node)
                cur = node
            elif ch == ")":
                if cur == 0:
                    raise UsageError("unbalanced code word")
                cur = parent[cur]
            else:
                raise UsageError(f"bad code character {ch!r}")
        if cur != 0:
            raise UsageError("unbalanced code word")
        t = PlaneTree(parent, children, 0, None)
        if distinguished_edge == "convention" and t.n_edges >= 1:
            t.distinguished_edge = (t.first_child(0), 0)
        return t

    def __eq__(self, other):
        return (
            isinstance(other, PlaneTree)
            and self.to_dyck() == other.to_dyck()
            and self._edge_token() == other._edge_token()
        )

    def __hash__(self):
        return hash((self.to_dyck(), self._edge_token()))

    def _edge_token(self):
        if self.distinguished_edge is None:
            return None
        pre = {v: i for i, v in enumerate(self._preorder())}
        a, b = self.distinguished_edge
        child = a if self.parent[a] == b else b
        return (pre[child], "+" if child == a else "-")

    # -- serialization ---------------------------------------------------------

    def serialize(self) -> str:
        """"<dyck>\\te<child-preorder-index><+|->"  (+ = child->parent)."""
        tok = self._edge_token()
        if tok is None:
            return self.to_dyck() + "\t-"
        return f"{self.to_dyck()}\te{tok[0]}{tok[1]}"

    @staticmethod
    def deserialize(text: str) -> "PlaneTree":
        word, _, edge = text.strip().partition("\t")
        t = PlaneTree.from_dyck(word, distinguished_edge=None)
        if edge and edge != "-":
            idx, sign = int(edge[1:-1]), edge[-1]
            order = t._preorder()
            child = order[idx]
            par = t.parent[child]
            t.distinguished_edge = (child, par) if sign == "+" else (par, child)
        return t


def sample_uniform_plane_tree(n: int, rng: RngStream) -> PlaneTree:
    """Uniform plane tree with n >= 1 edges.

    Shuffle n up-steps and n+1 down-steps; the cycle lemma provides the
    unique rotation that is a valid code word (after dropping the final
    down-step), and each code word is hit by exactly 2n+1 arrangements.
    """
    if n < 1:
        raise UsageError("need n >= 1 edges (the root must have a first child)")
    steps = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n + 1, dtype=np.int64)])
    steps = rng.gen.permutation(steps)
    prefix = np.cumsum(steps)
    start = int(np.argmin(prefix)) + 1  # first minimum; rotation starts after it
    rot = np.concatenate([steps[start:], steps[:start]])[:-1]
    word = "".join("(" if s == 1 else ")" for s in rot)
    return PlaneTree.from_dyck(word)


def _dyck_words(n: int):
    # lexicographic ('(' < ')'), deterministic order
    def rec(prefix, opens, closes):
        if opens == n and closes == n:
            yield "".join(prefix)
            return
        if opens < n:
            prefix.append("(")
            yield from rec(prefix, opens + 1, closes)
            prefix.pop()
        if closes < opens:
            prefix.append(")")
            yield from rec(prefix, opens, closes + 1)
            prefix.pop()

    yield from rec([], 0, 0)


def enumerate_plane_trees(n: int) -> list:
    """All Catalan(n) plane trees with n edges, deterministic order."""
    if n < 1:
        raise UsageError("need n >= 1")
    if n > ENUMERATION_MAX_EDGES:
        raise UsageError(f"enumeration capped at n <= {ENUMERATION_MAX_EDGES}")
    return [PlaneTree.from_dyck(w) for w in _dyck_words(n)]


def rerooted_with_first_child(t: PlaneTree, new_root: int, first_child: int) -> PlaneTree:
    """Re-read the same plane structure rooted at ``new_root``.

    The cyclic order of edges around every vertex is preserved; the linear
    children order of a vertex starts just after its (new) parent in that
    cyclic order, and ``first_child`` (a neighbor of ``new_root``) is pinned
    as the first child of the new root.
    """
    if first_child not in t.neighbors(new_root):
        raise UsageError("first_child must be adjacent to new_root")

    def cycle(v):
        return t.neighbors(v)  # parent first, then children: the cyclic order

    V = t.n_vertices
    parent = [-1] * V
    children = [[] for _ in range(V)]
    old2new = {new_root: 0}
    parent_of = {new_root: None}
    # DFS in the new planar order, relabelling to preorder ids
    order = [new_root]
    stack = [new_root]
    kids = {}
    cyc = cycle(new_root)
    i = cyc.index(first_child)
    kids[new_root] = cyc[i:] + cyc[:i]
    while stack:
        v = stack.pop()
        for w in reversed(kids.get(v, ())):
            parent_of[w] = v
            cyc = cycle(w)
            j = cyc.index(v)
            kids[w] = cyc[j + 1:] + cyc[:j]
            order.append(w)
            stack.append(w)
    for idx, v in enumerate(order):
        old2new[v] = idx
    for v in order:
        nv = old2new[v]
        p = parent_of[v]
        parent[nv] = -1 if p is None else old2new[p]
        children[nv] = [old2new[w] for w in kids[v]]
    out = PlaneTree(parent, children, 0, None)
    out.distinguished_edge = (out.first_child(0), 0)
    return out


def reroot_one_step(t: PlaneTree, rng: RngStream) -> PlaneTree:
    """One step of the root's random walk, re-read in canonical convention.

    A uniform neighbor X1 of the root becomes the new root and the old root
    its first child; the oriented edge moves to (old root, X1), which after
    re-reading is again the canonical first-child -> root edge.
    """
    if t.distinguished_edge is None:
        raise UsageError("tree has no distinguished edge")
    nbrs = t.neighbors(t.root)
    x1 = nbrs[rng.randbelow(len(nbrs))]
    return rerooted_with_first_child(t, x1, t.root)


# -- isomorphism keys for exact distribution tests ---------------------------


def _ahu(t: PlaneTree, v: int, banned: int) -> str:
    """Canonical code of the unordered subtree at v, walking away from ``banned``."""
    subcodes = sorted(_ahu(t, w, v) for w in t.neighbors(v) if w != banned)
    return "(" + "".join(subcodes) + ")"


def marked_graph_key(t: PlaneTree, a: int, b: int) -> tuple:
    """Isomorphism-complete key of (tree, a, b) with a, b adjacent marks.

    Splitting the marked edge gives two rooted unordered trees; the pair of
    their canonical codes classifies the doubly-marked graph up to
    isomorphism preserving the ordered mark pair.
    """
    if b not in t.neighbors(a):
        raise UsageError("marks must be adjacent")
    return (_ahu(t, a, b), _ahu(t, b, a))
