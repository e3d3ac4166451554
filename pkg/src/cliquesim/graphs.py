"""Graph representation, deterministic generators, serialization, and the
brute-force oracles that serve as ground truth for every detection algorithm.

Vertices are 1-based (``1..n``) throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx
import numpy as np

__all__ = [
    "Graph",
    "SubgraphPattern",
    "TriangleCensus",
    "GraphError",
    "ParameterError",
    "EdgeListError",
    "generate",
    "census",
    "oracle_contains",
    "degeneracy",
    "arboricity_exact",
    "parse_edge_list",
    "serialize_edge_list",
    "TRIANGLE",
    "K4",
    "P4",
    "C4",
    "PATTERNS",
]


class GraphError(ValueError):
    """Invalid graph construction (asymmetry, self-loop, id out of range)."""


class ParameterError(ValueError):
    """Generator parameters violate a family constraint."""


class EdgeListError(ValueError):
    """Malformed edge-list text; carries the offending line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class Graph:
    """Undirected simple graph on vertices ``1..n`` with adjacency sets.

    Immutable after construction; safe to share across readers.
    """

    __slots__ = ("n", "_adj", "_matrix")

    def __init__(self, n, edges):
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        adj = [set() for _ in range(n + 1)]
        for (u, v) in edges:
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphError(f"edge ({u},{v}) references vertex outside 1..{n}")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            adj[u].add(v)
            adj[v].add(u)
        self.n = n
        self._adj = adj
        self._matrix = None

    def neighbors(self, v):
        """Neighbor set of vertex v (do not mutate)."""
        return self._adj[v]

    def degree(self, v):
        return len(self._adj[v])

    @property
    def max_degree(self):
        return max((len(s) for s in self._adj[1:]), default=0)

    @property
    def num_edges(self):
        return sum(len(s) for s in self._adj[1:]) // 2

    def edges(self):
        """All edges as sorted (u, v) pairs with u < v."""
        out = []
        for u in range(1, self.n + 1):
            for v in self._adj[u]:
                if u < v:
                    out.append((u, v))
        return out

    def has_edge(self, u, v):
        return v in self._adj[u]

    def adjacency_matrix(self):
        """Dense boolean adjacency matrix (0-based), cached."""
        if self._matrix is None:
            m = np.zeros((self.n, self.n), dtype=bool)
            for u in range(1, self.n + 1):
                for v in self._adj[u]:
                    m[u - 1, v - 1] = True
            self._matrix = m
        return self._matrix

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n + 1))
        g.add_edges_from(self.edges())
        return g

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self._adj == other._adj
        )

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"


@dataclass(frozen=True)
class SubgraphPattern:
    """A constant-sized pattern graph on vertices ``1..d``."""

    name: str
    d: int
    edges: frozenset  # frozenset of (u, v) pairs with u < v

    def __post_init__(self):
        if self.d < 1:
            raise GraphError("pattern must have at least one vertex")
        for (u, v) in self.edges:
            if not (1 <= u < v <= self.d):
                raise GraphError(f"pattern edge ({u},{v}) out of range")

    @property
    def diameter(self):
        """Hop diameter of the pattern (requires a connected pattern)."""
        g = nx.Graph()
        g.add_nodes_from(range(1, self.d + 1))
        g.add_edges_from(self.edges)
        return nx.diameter(g)

    def is_connected(self):
        g = nx.Graph()
        g.add_nodes_from(range(1, self.d + 1))
        g.add_edges_from(self.edges)
        return nx.is_connected(g)


def _pat(name, d, edges):
    return SubgraphPattern(name, d, frozenset(tuple(sorted(e)) for e in edges))


TRIANGLE = _pat("triangle", 3, [(1, 2), (2, 3), (1, 3)])
K4 = _pat("k4", 4, [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])
P4 = _pat("p4", 4, [(1, 2), (2, 3), (3, 4)])
C4 = _pat("c4", 4, [(1, 2), (2, 3), (3, 4), (1, 4)])

PATTERNS = {p.name: p for p in (TRIANGLE, K4, P4, C4)}


@dataclass
class TriangleCensus:
    """Exact triangle statistics for a graph.

    ``t4``/``t5``/``t6`` count unordered pairs of distinct triangles whose
    union has 4/5/6 distinct vertices; ``delta_max`` is the maximum, over
    edges, of the number of triangles containing that edge.
    """

    t: int
    triangles: list  # list of sorted 3-tuples
    t4: int
    t5: int
    t6: int
    delta_max: int
    delta_per_edge: dict = field(repr=False, default_factory=dict)


# Above this many triangle pairs, census switches from direct pair
# enumeration to the equivalent per-edge / per-vertex counting identities.
_PAIR_ENUM_LIMIT = 200_000


def census(g, pair_enumeration=None):
    """Enumerate all triangles of g and classify triangle pairs exactly.

    With ``pair_enumeration=True`` the t4/t5/t6 split is computed by direct
    enumeration of all C(t,2) pairs; with ``False`` via the counting
    identities t4 = sum_e C(delta_e,2) and
    t5 = sum_v C(t_v,2) - 2*t4.  Default picks by pair count.
    """
    tris = []
    delta = {}
    t_v = [0] * (g.n + 1)
    for (u, v) in g.edges():
        common = g.neighbors(u) & g.neighbors(v)
        delta[(u, v)] = len(common)
        for w in common:
            if w > v:
                tris.append((u, v, w))
    t = len(tris)
    for (a, b, c) in tris:
        t_v[a] += 1
        t_v[b] += 1
        t_v[c] += 1

    if pair_enumeration is None:
        pair_enumeration = t * (t - 1) // 2 <= _PAIR_ENUM_LIMIT
    if pair_enumeration:
        t4 = t5 = t6 = 0
        tri_sets = [set(x) for x in tris]
        for i, j in combinations(range(t), 2):
            shared = len(tri_sets[i] & tri_sets[j])
            if shared == 2:
                t4 += 1
            elif shared == 1:
                t5 += 1
            else:
                t6 += 1
    else:
        t4 = sum(d * (d - 1) // 2 for d in delta.values())
        t5 = sum(c * (c - 1) // 2 for c in t_v) - 2 * t4
        t6 = t * (t - 1) // 2 - t4 - t5

    delta_max = max(delta.values(), default=0)
    return TriangleCensus(
        t=t, triangles=tris, t4=t4, t5=t5, t6=t6,
        delta_max=delta_max, delta_per_edge=delta,
    )


def oracle_contains(g, pattern):
    """Ground-truth subgraph containment: True iff some injective vertex map
    embeds all pattern edges into g (non-induced)."""
    if pattern.d > g.n:
        return False
    if not pattern.edges:
        return True
    matcher = nx.algorithms.isomorphism.GraphMatcher(
        g.to_networkx(),
        _pattern_nx(pattern),
    )
    return matcher.subgraph_is_monomorphic()


def _pattern_nx(pattern):
    g = nx.Graph()
    g.add_nodes_from(range(1, pattern.d + 1))
    g.add_edges_from(pattern.edges)
    return g


def degeneracy(g):
    """Smallest k such that min-degree peeling never removes a vertex of
    degree > k.  Satisfies A <= degeneracy <= 2A-1 for arboricity A."""
    if g.n == 0:
        return 0
    deg = {v: g.degree(v) for v in range(1, g.n + 1)}
    buckets = [set() for _ in range(g.n)]
    for v, d in deg.items():
        buckets[d].add(v)
    removed = set()
    best = 0
    cur = 0
    for _ in range(g.n):
        while not buckets[cur]:
            cur += 1
        v = min(buckets[cur])
        buckets[cur].discard(v)
        best = max(best, cur)
        removed.add(v)
        for u in g.neighbors(v):
            if u not in removed:
                d = deg[u]
                buckets[d].discard(u)
                deg[u] = d - 1
                buckets[d - 1].add(u)
                cur = min(cur, d - 1)
    return best


def arboricity_exact(g, max_n=14):
    """Exact arboricity via exhaustive subgraph-density search
    (Nash-Williams): max over vertex subsets S of ceil(E(S)/(|S|-1)).

    Exponential; refuses graphs larger than max_n vertices.
    """
    if g.n > max_n:
        raise ValueError(f"exact arboricity limited to n <= {max_n}")
    if g.num_edges == 0:
        return 0
    verts = list(range(1, g.n + 1))
    best = 1
    for r in range(2, g.n + 1):
        for sub in combinations(verts, r):
            ss = set(sub)
            e = sum(1 for u in sub for v in g.neighbors(u) if v in ss) // 2
            need = -(-e // (r - 1))  # ceil
            if need > best:
                best = need
    return best


# ---------------------------------------------------------------------------
# Generators

def _shared_edge(n, t):
    """Edge {1,2} plus triangles {1,2,k} for k = 3..t+2."""
    if t < 0 or t > n - 2:
        raise ParameterError(f"shared-edge family needs 0 <= t <= n-2, got t={t}, n={n}")
    edges = [(1, 2)]
    for k in range(3, t + 3):
        edges.append((1, k))
        edges.append((2, k))
    return Graph(n, edges)


def _disjoint_triangles(n, t):
    """t vertex-disjoint triangles on the first 3t vertices."""
    if t < 0 or 3 * t > n:
        raise ParameterError(f"disjoint-triangles family needs 3t <= n, got t={t}, n={n}")
    edges = []
    for i in range(t):
        a, b, c = 3 * i + 1, 3 * i + 2, 3 * i + 3
        edges += [(a, b), (b, c), (a, c)]
    return Graph(n, edges)


def _gnp(n, p, seed):
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"gnp needs 0 <= p <= 1, got {p}")
    rng = np.random.default_rng(np.random.SeedSequence([0x676E70, int(seed)]))
    edges = []
    # vectorized upper-triangle coin flips
    for u in range(1, n):
        draws = rng.random(n - u) < p
        for off in np.nonzero(draws)[0]:
            edges.append((u, u + 1 + int(off)))
    return Graph(n, edges)


def _tree(n, seed):
    """Uniform-ish random tree: random parent among earlier vertices."""
    if n < 1:
        raise ParameterError("tree needs n >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([0x74726565, int(seed)]))
    edges = [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]
    return Graph(n, edges)


def _star(n):
    if n < 1:
        raise ParameterError("star needs n >= 1")
    return Graph(n, [(1, v) for v in range(2, n + 1)])


def _forest_union(n, k, seed, plant_triangle=False):
    """Union of k random trees on 1..n; arboricity <= k (plus 1 if a
    triangle is planted)."""
    if k < 1:
        raise ParameterError("forest-union needs k >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([0x666F72, int(seed)]))
    edges = set()
    for _ in range(k):
        perm = rng.permutation(n) + 1
        for i in range(1, n):
            u = int(perm[i])
            v = int(perm[int(rng.integers(0, i))])
            edges.add((min(u, v), max(u, v)))
    if plant_triangle:
        a, b, c = (int(x) + 1 for x in rng.choice(n, size=3, replace=False))
        for e in ((a, b), (b, c), (a, c)):
            edges.add((min(e), max(e)))
    return Graph(n, sorted(edges))


def _hub_pendant(n):
    """One hub of degree ~sqrt(n) plus a pendant triangle hanging off it.

    The hub (vertex 1) stays high-degree while the triangle vertices are
    low-degree, forcing triangle detection through a delegate.
    """
    if n < 5:
        raise ParameterError("hub-pendant needs n >= 5")
    h = min(n - 1, math.isqrt(n) + 3)
    edges = [(1, v) for v in range(2, min(2 + h, n + 1))]
    # pendant triangle on {1, 2, 3}: 1-2 and 1-3 already exist
    edges.append((2, 3))
    return Graph(n, edges)


_FAMILIES = {
    "shared-edge": lambda params, seed: _shared_edge(params["n"], params["t"]),
    "disjoint-triangles": lambda params, seed: _disjoint_triangles(params["n"], params["t"]),
    "gnp": lambda params, seed: _gnp(params["n"], params["p"], seed),
    "tree": lambda params, seed: _tree(params["n"], seed),
    "star": lambda params, seed: _star(params["n"]),
    "forest-union": lambda params, seed: _forest_union(
        params["n"], params.get("k", 2), seed, params.get("plant_triangle", False)
    ),
    "hub-pendant": lambda params, seed: _hub_pendant(params["n"]),
}


def generate(family, params, seed=0):
    """Deterministic graph for (family, params, seed).

    Families: shared-edge, disjoint-triangles, gnp, tree, star,
    forest-union, hub-pendant.  The structured families ignore the seed.
    """
    if family not in _FAMILIES:
        raise ParameterError(
            f"unknown family {family!r}; choose from {sorted(_FAMILIES)}"
        )
    return _FAMILIES[family](params, seed)


# ---------------------------------------------------------------------------
# Edge-list text format: header "n <count>", then one "u v" line per edge.

def parse_edge_list(text):
    lines = text.splitlines()
    if not lines:
        raise EdgeListError("empty input, expected header 'n <count>'", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n":
        raise EdgeListError(f"expected header 'n <count>', got {lines[0]!r}", 1)
    try:
        n = int(head[1])
    except ValueError:
        raise EdgeListError(f"bad vertex count {head[1]!r}", 1) from None
    if n < 0:
        raise EdgeListError("vertex count must be nonnegative", 1)
    edges = []
    seen = set()
    for idx, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"expected 'u v', got {raw!r}", idx)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"non-integer vertex id in {raw!r}", idx) from None
        if u == v:
            raise EdgeListError(f"self-loop at vertex {u}", idx)
        if not (1 <= u <= n and 1 <= v <= n):
            raise EdgeListError(f"vertex id outside 1..{n} in {raw!r}", idx)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise EdgeListError(f"duplicate edge {key}", idx)
        seen.add(key)
        edges.append(key)
    return Graph(n, edges)


def serialize_edge_list(g):
    out = [f"n {g.n}"]
    out += [f"{u} {v}" for (u, v) in sorted(g.edges())]
    return "\n".join(out) + "\n"
