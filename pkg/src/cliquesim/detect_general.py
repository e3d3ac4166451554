"""Partition-based deterministic subgraph detection.

The vertex set is split into equal subsets; each node is responsible for one
ordered tuple of subsets, collects all edges between (and inside) its
subsets through an oblivious schedule, and tests its collected edge set
locally.  Every d-subset of vertices is covered by some tuple, so the local
tests jointly cover the whole graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graphs import TRIANGLE
from .routing import MessageBatch, broadcast_round, oblivious_schedule
from .runtime import CliqueRuntime, word_bits

__all__ = [
    "PartitionScheme",
    "PartitionDetectResult",
    "build_partition",
    "tri_partition",
    "d_clique0",
]


@dataclass
class PartitionScheme:
    """Partition of 1..n_effective into |S| equal contiguous subsets plus the
    bijection between node slots and ordered subset tuples."""

    n: int
    d: int
    s: int  # number of subsets
    subset_size: int
    n_effective: int
    subsets: list = field(repr=False, default_factory=list)
    assignment: list = field(repr=False, default_factory=list)

    def subset_index(self, v):
        return (v - 1) // self.subset_size

    def subset_members(self, a):
        lo = a * self.subset_size + 1
        return range(lo, lo + self.subset_size)


def build_partition(n, d):
    """Smallest d-th power >= n, split into contiguous subsets of size
    n_eff^((d-1)/d); node slot r (0-based) is assigned the base-|S| digits
    of r as its ordered subset tuple."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    s = 1
    while s ** d < n:
        s += 1
    n_eff = s ** d
    subset_size = s ** (d - 1)
    subsets = [list(range(a * subset_size + 1, (a + 1) * subset_size + 1))
               for a in range(s)]
    assignment = []
    for r in range(n_eff):
        digits = []
        rem = r
        for h in range(d):
            digits.append(rem // s ** (d - 1 - h) % s)
            rem %= s ** (d - 1 - h)
        assignment.append(tuple(digits))
    return PartitionScheme(
        n=n, d=d, s=s, subset_size=subset_size, n_effective=n_eff,
        subsets=subsets, assignment=assignment,
    )


@dataclass
class PartitionDetectResult:
    found: bool
    ledger: object
    n: int
    n_effective: int
    packed: bool
    witness: tuple = None


def _neighbor_lists_by_subset(g, scheme):
    """For each real vertex, its neighbors split by target subset."""
    s = scheme.s
    table = {}
    for v in range(1, g.n + 1):
        rows = [[] for _ in range(s)]
        for u in sorted(g.neighbors(v)):
            rows[scheme.subset_index(u)].append(u)
        table[v] = rows
    return table


def _build_edge_batch(g, scheme, packed, wb):
    """Messages delivering, to each slot node, the neighbor sublists for
    every ordered position pair of its tuple.  Sender of the pair (a, b)
    data is each vertex l in S_a, shipping its neighbors inside S_b."""
    by_subset = _neighbor_lists_by_subset(g, scheme)
    msgs = []
    pairs = [(j, k) for j in range(scheme.d) for k in range(scheme.d) if j < k]
    for r, tup in enumerate(scheme.assignment):
        node = r + 1
        for (j, k) in pairs:
            a, b = tup[j], tup[k]
            for l in scheme.subset_members(a):
                if l > g.n:
                    continue
                nbrs = by_subset[l][b]
                if not nbrs:
                    continue
                if packed:
                    base = b * scheme.subset_size + 1
                    mask = 0
                    for m in nbrs:
                        mask |= 1 << (m - base)
                    chunks = -(-scheme.subset_size // wb)
                    for c in range(chunks):
                        part = mask >> (c * wb) & ((1 << wb) - 1)
                        if part or chunks == 1:
                            msgs.append((l, node, ("b", l, b, c, part)))
                else:
                    msgs.extend((l, node, (l, m)) for m in nbrs)
    return msgs


def _decode_edges(received, scheme, packed, wb):
    edges = set()
    for (_, payload) in received:
        if packed:
            _, l, b, c, part = payload
            base = b * scheme.subset_size + 1 + c * wb
            while part:
                bit = (part & -part).bit_length() - 1
                edges.add((l, base + bit))
                part &= part - 1
        else:
            l, m = payload
            edges.add((l, m))
    return edges


def _local_triangle(edges, scheme, tup):
    """Triangle scan over a slot's collected edge set."""
    adj = {}
    for (u, v) in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    for (u, v) in edges:
        common = adj[u] & adj[v]
        common.discard(u)
        common.discard(v)
        if common:
            w = min(common)
            return tuple(sorted((u, v, w)))
    return None


def _local_pattern(edges, scheme, tup, pattern):
    """Position-respecting backtracking embed: pattern vertex h+1 must map
    into subset tup[h]; all pattern edges must appear in the collected set."""
    adj = {}
    for (u, v) in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    d = pattern.d
    pat_adj = [set() for _ in range(d + 1)]
    for (x, y) in pattern.edges:
        pat_adj[x].add(y)
        pat_adj[y].add(x)
    order = sorted(range(1, d + 1), key=lambda x: -len(pat_adj[x]))
    placement = {}

    def extend(idx):
        if idx == d:
            return True
        pv = order[idx]
        members = scheme.subset_members(tup[pv - 1])
        for cand in members:
            if cand in placement.values():
                continue
            ok = True
            for q in pat_adj[pv]:
                if q in placement and cand not in adj.get(placement[q], ()):
                    ok = False
                    break
            if ok:
                placement[pv] = cand
                if extend(idx + 1):
                    return True
                del placement[pv]
        return False

    if extend(0):
        return tuple(placement[x] for x in range(1, d + 1))
    return None


def _partition_detect(g, pattern, packed):
    scheme = build_partition(max(g.n, 1), pattern.d)
    n_eff = scheme.n_effective
    wb = word_bits(n_eff)
    runtime = CliqueRuntime(n_eff)
    msgs = _build_edge_batch(g, scheme, packed, wb)
    batch = MessageBatch.from_pairs(n_eff, msgs, globally_known=True)
    delivered, ledger = oblivious_schedule(batch, runtime=runtime)
    witness = None
    finders = []
    for r, tup in enumerate(scheme.assignment):
        node = r + 1
        edges = _decode_edges(delivered.get(node, []), scheme, packed, wb)
        if not edges:
            continue
        if pattern is TRIANGLE:
            hit = _local_triangle(edges, scheme, tup)
        else:
            hit = _local_pattern(edges, scheme, tup, pattern)
        if hit is not None:
            finders.append(node)
            if witness is None:
                witness = hit
    broadcast_round(n_eff, finders, ledger)
    return PartitionDetectResult(
        found=bool(finders), ledger=ledger, n=g.n, n_effective=n_eff,
        packed=packed, witness=witness,
    )


def tri_partition(g, packed=False):
    """Deterministic triangle detection in O(n^(1/3)) rounds: 2*ceil(load/n)
    delivery rounds plus one final broadcast round.  With packed=True the
    neighbor sublists travel as 0-1 bit arrays, one word per word_bits
    subset members."""
    return _partition_detect(g, TRIANGLE, packed)


def d_clique0(g, pattern, packed=False):
    """Deterministic detection of an arbitrary fixed pattern on d vertices;
    the node owning subset tuple (S_1,...,S_d) collects all edges between
    every pair of its subsets and tests all position-respecting vertex
    selections."""
    if pattern.d < 2:
        raise ValueError("pattern needs at least 2 vertices")
    return _partition_detect(g, pattern, packed)
