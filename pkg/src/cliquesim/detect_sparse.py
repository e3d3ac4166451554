"""Degree- and density-sensitive deterministic triangle detection.

Three layers:

- tri_neighbors / detect_diameter_d: every node ships neighbor lists (or
  iterated hop neighborhoods) to its neighbors through chunked round-robin
  passes and tests locally.
- quick_decomposition / assign_delegates: iterative elimination of
  low-degree vertices plus a replicated, degree-determined assignment of
  delegate nodes to high-degree vertices.
- tri_arbor: the full iterated algorithm in four variants (sequential,
  parallelized, base-change threshold, uniform threshold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graphs import degeneracy
from .routing import (
    MessageBatch,
    broadcast_round,
    chunked_round_robin,
    oblivious_schedule,
)
from .runtime import CliqueRuntime, RoundLedger

__all__ = [
    "DelegateAssignment",
    "DecompositionTrace",
    "SparseDetectResult",
    "TriArborResult",
    "DelegateExhaustion",
    "tri_neighbors",
    "detect_diameter_d",
    "quick_decomposition",
    "assign_delegates",
    "tri_arbor",
]


class DelegateExhaustion(RuntimeError):
    """More delegates demanded than nodes exist; the threshold is too low
    for this graph."""


@dataclass
class DelegateAssignment:
    """Delegates for one iteration's high-degree nodes.

    ``delegates`` maps each high-degree principal to an ordered list of
    (delegate, start, size) entries; entry (d, s, z) makes node d
    responsible for positions s..s+z-1 of the principal's sorted active
    neighbor list.  ``reverse`` maps a delegate to its (principal, start,
    size); at most one principal per delegate per iteration.
    """

    iteration: int
    threshold: float
    delegates: dict = field(default_factory=dict)
    reverse: dict = field(default_factory=dict)
    next_pool: int = 0

    @property
    def count(self):
        return sum(len(v) for v in self.delegates.values())

    def delegate_for(self, principal, neighbor_pos):
        """The delegate covering position ``neighbor_pos`` of the
        principal's sorted neighbor list."""
        for (d, start, size) in self.delegates[principal]:
            if start <= neighbor_pos < start + size:
                return d
        raise KeyError((principal, neighbor_pos))


@dataclass
class DecompositionTrace:
    """Per-iteration snapshots of the elimination process."""

    n: int
    rule: str
    iterations: list = field(default_factory=list)
    # each entry: {"active": set, "degrees": dict, "threshold": float,
    #              "avg_degree": float}

    @property
    def rounds(self):
        return len(self.iterations)


@dataclass
class SparseDetectResult:
    found: bool
    ledger: object
    witness: tuple = None
    debug: dict = field(default_factory=dict)


@dataclass
class TriArborResult:
    found: bool
    ledger: object
    variant: str
    iterations: int
    witness: tuple = None
    branch_counts: dict = field(default_factory=dict)
    trace: DecompositionTrace = None
    debug: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Neighborhood shipping detectors

def tri_neighbors(g, runtime=None):
    """Each node sends its neighbor list to all its neighbors (uniform
    content, chunked round-robin); node j reports a triangle when a received
    list shares a vertex with its own list.  Rounds: 3 passes-count + 1
    broadcast, bounded by 3*ceil(max_degree^2/n) + 1 on admissible inputs."""
    n = g.n
    nbrs = {v: sorted(g.neighbors(v)) for v in range(1, n + 1)}
    contents = {v: nbrs[v] for v in range(1, n + 1) if nbrs[v]}
    dests = {v: nbrs[v] for v in contents}
    batch = MessageBatch.uniform(n, contents, dests)
    delivered, ledger, passes = chunked_round_robin(
        batch, strategy="columns", runtime=runtime
    )
    witness = None
    finders = []
    for j in range(1, n + 1):
        own = g.neighbors(j)
        for i, words in delivered.get(j, {}).items():
            common = (set(words) & own) - {i, j}
            if common:
                finders.append(j)
                if witness is None:
                    witness = tuple(sorted((i, j, min(common))))
                break
    broadcast_round(n, finders, ledger)
    return SparseDetectResult(
        found=bool(finders), ledger=ledger, witness=witness,
        debug={"passes": passes},
    )


def _embeds(adj, pattern):
    """Backtracking edge-subset embedding of a pattern into a local
    adjacency map (kept independent of the library oracle)."""
    d = pattern.d
    pat_adj = [set() for _ in range(d + 1)]
    for (x, y) in pattern.edges:
        pat_adj[x].add(y)
        pat_adj[y].add(x)
    order = sorted(range(1, d + 1), key=lambda x: -len(pat_adj[x]))
    verts = list(adj)
    placement = {}

    def extend(idx):
        if idx == d:
            return True
        pv = order[idx]
        for cand in verts:
            if cand in placement.values():
                continue
            ok = True
            for q in pat_adj[pv]:
                if q in placement and cand not in adj[placement[q]]:
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


def detect_diameter_d(g, pattern, runtime=None):
    """Detect a connected pattern of hop diameter D by D repetitions of
    neighbor-list exchange: after repetition r every node knows all edges
    incident to its r-hop ball, so a copy through the node is fully
    visible locally."""
    if not pattern.is_connected():
        raise ValueError("diameter-based detection needs a connected pattern")
    n = g.n
    depth = pattern.diameter
    known = {
        v: {(min(v, u), max(v, u)) for u in g.neighbors(v)}
        for v in range(1, n + 1)
    }
    ledger = RoundLedger(n=n)
    passes = []
    for _ in range(depth):
        contents = {v: sorted(known[v]) for v in range(1, n + 1) if known[v]}
        dests = {v: sorted(g.neighbors(v)) for v in contents}
        batch = MessageBatch.uniform(n, contents, dests)
        delivered, sub, p = chunked_round_robin(
            batch, strategy="columns", runtime=runtime
        )
        ledger.merge(sub)
        passes.append(p)
        for v in range(1, n + 1):
            for words in delivered.get(v, {}).values():
                known[v].update(words)
    witness = None
    finders = []
    for v in range(1, n + 1):
        adj = {}
        for (a, b) in known[v]:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        hit = _embeds(adj, pattern) if adj else None
        if hit is not None:
            finders.append(v)
            if witness is None:
                witness = hit
    broadcast_round(n, finders, ledger)
    return SparseDetectResult(
        found=bool(finders), ledger=ledger, witness=witness,
        debug={"passes": passes, "depth": depth},
    )


# ---------------------------------------------------------------------------
# Decomposition and delegates

def _threshold(rule, n, degrees, active, A):
    if rule == "fixed":
        return 4 * A
    if rule == "base":
        return max(4 * A, math.isqrt(n - 1) + 1 if n > 1 else 1)
    if rule == "uniform":
        avg = sum(degrees[v] for v in active) / len(active)
        return max(2 * avg, math.isqrt(n - 1) + 1 if n > 1 else 1)
    raise ValueError(f"unknown threshold rule {rule!r}")


def quick_decomposition(g, rule="uniform", A=None):
    """Iteratively announce active degrees (one round per iteration) and
    eliminate every node whose active degree is at most the threshold.
    Rules: fixed (4A), base (max(4A, ceil(sqrt n))), uniform
    (max(2*average, ceil(sqrt n)))."""
    if rule in ("fixed", "base") and A is None:
        A = degeneracy(g)
    active = set(range(1, g.n + 1))
    trace = DecompositionTrace(n=g.n, rule=rule)
    while active:
        degrees = {v: len(g.neighbors(v) & active) for v in active}
        thr = _threshold(rule, g.n, degrees, active, A)
        avg = sum(degrees.values()) / len(active)
        trace.iterations.append({
            "active": set(active),
            "degrees": degrees,
            "threshold": thr,
            "avg_degree": avg,
        })
        drop = {v for v in active if degrees[v] <= thr}
        if not drop:
            raise DelegateExhaustion(
                f"threshold {thr} eliminates nothing; density bound violated"
            )
        active -= drop
    return trace


def assign_delegates(degrees, threshold, n, iteration=1, pool_start=0):
    """Replicated delegate assignment, a function of the degree vector only:
    high-degree nodes sorted by (degree desc, id asc) take ceil(deg/threshold)
    consecutive slots each from the node pool 1..n, starting at
    ``pool_start`` (cyclic, so repeated calls spread the delegate role)."""
    thr_int = int(threshold)
    high = sorted(
        (v for v, d in degrees.items() if d > threshold),
        key=lambda v: (-degrees[v], v),
    )
    total = sum(-(-degrees[v] // max(thr_int, 1)) for v in high)
    if total > n:
        raise DelegateExhaustion(
            f"{total} delegates demanded but only {n} nodes exist"
        )
    asg = DelegateAssignment(iteration=iteration, threshold=threshold)
    slot = pool_start
    for v in high:
        entries = []
        deg = degrees[v]
        start = 0
        while start < deg:
            size = min(thr_int, deg - start)
            delegate = slot % n + 1
            slot += 1
            entries.append((delegate, start, size))
            asg.reverse[delegate] = (v, start, size)
            start += size
        asg.delegates[v] = entries
    asg.next_pool = slot % n
    return asg


# ---------------------------------------------------------------------------
# TriArbor

def _iteration_data(g, snapshot, n, iteration, pool):
    """Static per-iteration structures derived from the announced degrees:
    active neighbor lists, the high/low split, and the delegate map."""
    active = snapshot["active"]
    degrees = snapshot["degrees"]
    thr = snapshot["threshold"]
    nbr = {v: sorted(g.neighbors(v) & active) for v in active}
    asg = assign_delegates(degrees, thr, n, iteration=iteration, pool_start=pool)
    high = set(asg.delegates)
    low = active - high
    # delegate of principal i responsible for neighbor j
    delegate_of = {}
    for i in high:
        lst = nbr[i]
        for (d, start, size) in asg.delegates[i]:
            for pos in range(start, start + size):
                delegate_of[(i, lst[pos])] = d
    return {
        "iteration": iteration,
        "active": active,
        "degrees": degrees,
        "threshold": thr,
        "nbr": nbr,
        "assignment": asg,
        "high": high,
        "low": low,
        "delegate_of": delegate_of,
    }


def _phase_b_messages(data):
    """High-degree nodes ship each delegate its neighbor sublist and notify
    every neighbor of the delegate serving it.  All payload contents are
    single ids, so the scheduler may pack two per envelope."""
    k = data["iteration"]
    msgs = []
    for i in data["high"]:
        lst = data["nbr"][i]
        for (d, start, size) in data["assignment"].delegates[i]:
            msgs.extend(
                (i, d, ("s", k, i, lst[pos]))
                for pos in range(start, start + size)
            )
        for j in lst:
            msgs.append((i, j, ("n", k, i, data["delegate_of"][(i, j)])))
    return msgs


def _phase_c_messages(data):
    """Each delegate forwards its sublist to the co-delegates of the same
    principal, so every delegate reconstructs the principal's full list."""
    k = data["iteration"]
    msgs = []
    for i, entries in data["assignment"].delegates.items():
        if len(entries) < 2:
            continue
        lst = data["nbr"][i]
        for (d, start, size) in entries:
            for (d2, _, _) in entries:
                if d2 == d:
                    continue
                msgs.extend(
                    (d, d2, ("x", k, i, lst[pos]))
                    for pos in range(start, start + size)
                )
    return msgs


def _phase_d_batch(datas, n):
    """Low-degree nodes send their active neighbor list to each low neighbor
    directly and to the responsible delegate of each high neighbor.  Across
    iterations every node is low exactly once, so the merged batch is still
    uniform-content."""
    contents = {}
    dests = {}
    for data in datas:
        for i in data["low"]:
            lst = data["nbr"][i]
            if not lst:
                continue
            targets = []
            for j in lst:
                if j in data["high"]:
                    targets.append(data["delegate_of"][(j, i)])
                else:
                    targets.append(j)
            contents[i] = lst
            dests[i] = sorted(set(targets))
    return MessageBatch.uniform(n, contents, dests)


def _check_triangles(datas, delivered, g):
    """Local triangle tests from the phase-D deliveries.  Receiver j tests
    each received list against its own active list (low-low branch) and,
    when serving as a delegate, against the principal's reconstructed list
    (delegate branch)."""
    branch = {"low-low": 0, "delegate": 0}
    witness = None
    finders = set()
    low_iter = {}
    for data in datas:
        for i in data["low"]:
            low_iter[i] = data
    for j, per_src in delivered.items():
        for i, words in per_src.items():
            data = low_iter[i]
            wset = set(words)
            # low-low branch: j is a low active neighbor of i in i's iteration
            if j in data["low"] and i in data["nbr"][j]:
                common = wset & set(data["nbr"][j]) - {i, j}
                if common:
                    branch["low-low"] += 1
                    finders.add(j)
                    if witness is None:
                        witness = tuple(sorted((i, j, min(common))))
            # delegate branch: j serves a high principal whose range holds i
            asg = data["assignment"]
            if j in asg.reverse:
                principal, start, size = asg.reverse[j]
                rng = data["nbr"][principal][start:start + size]
                if i in rng:
                    common = wset & set(data["nbr"][principal]) - {i, principal}
                    if common:
                        branch["delegate"] += 1
                        finders.add(j)
                        if witness is None:
                            witness = tuple(sorted((i, principal, min(common))))
    return finders, witness, branch


def tri_arbor(g, variant="uniform", A=None, runtime=None):
    """Iterated low-degree elimination triangle detection.

    Variants: "seq" runs each iteration's phases separately with threshold
    4A; "par" computes the whole decomposition first and merges all
    iterations' traffic; "base" is the merged variant with threshold
    max(4A, ceil(sqrt n)); "uniform" is the merged variant with threshold
    max(2*average-degree, ceil(sqrt n)) and needs no density estimate at
    all (the default).
    """
    rules = {"seq": "fixed", "par": "fixed", "base": "base", "uniform": "uniform"}
    if variant not in rules:
        raise ValueError(f"unknown variant {variant!r}")
    rule = rules[variant]
    if rule in ("fixed", "base") and A is None:
        A = degeneracy(g)
    n = g.n
    if runtime is None:
        runtime = CliqueRuntime(n)
    trace = quick_decomposition(g, rule, A)
    datas = []
    pool = 0
    for k, snap in enumerate(trace.iterations, start=1):
        data = _iteration_data(g, snap, n, k, pool)
        pool = data["assignment"].next_pool
        datas.append(data)
    ledger = RoundLedger(n=n)
    debug = {"phase_rounds": [], "delegate_total": sum(
        d["assignment"].count for d in datas)}
    if variant == "seq":
        found = False
        witness = None
        branch = {"low-low": 0, "delegate": 0}
        used_iters = 0
        for data in datas:
            used_iters += 1
            phases = {}
            broadcast_round(n, sorted(data["active"]), ledger)  # degree announcement
            phases["announce"] = 1
            r0 = ledger.rounds
            msgs_b = _phase_b_messages(data)
            if msgs_b:
                _, sub = oblivious_schedule(
                    MessageBatch.from_pairs(n, msgs_b, globally_known=True),
                    words_per_envelope=2, runtime=runtime,
                )
                ledger.merge(sub)
            phases["high_distribution"] = ledger.rounds - r0
            r0 = ledger.rounds
            msgs_c = _phase_c_messages(data)
            if msgs_c:
                _, sub = oblivious_schedule(
                    MessageBatch.from_pairs(n, msgs_c, globally_known=True),
                    runtime=runtime,
                )
                ledger.merge(sub)
            phases["delegate_exchange"] = ledger.rounds - r0
            r0 = ledger.rounds
            batch_d = _phase_d_batch([data], n)
            delivered, sub, passes = chunked_round_robin(
                batch_d, strategy="columns", runtime=runtime
            )
            ledger.merge(sub)
            phases["low_distribution"] = ledger.rounds - r0
            phases["low_passes"] = passes
            finders, wit, br = _check_triangles([data], delivered, g)
            broadcast_round(n, sorted(finders), ledger)
            phases["broadcast"] = 1
            debug["phase_rounds"].append(phases)
            for key in branch:
                branch[key] += br[key]
            if finders:
                found = True
                witness = wit
                break
        return TriArborResult(
            found=found, ledger=ledger, variant=variant,
            iterations=used_iters, witness=witness, branch_counts=branch,
            trace=trace, debug=debug,
        )
    # merged variants: announcement phase first, then joint traffic
    for data in datas:
        broadcast_round(n, sorted(data["active"]), ledger)
    msgs_b = [m for data in datas for m in _phase_b_messages(data)]
    r0 = ledger.rounds
    if msgs_b:
        _, sub = oblivious_schedule(
            MessageBatch.from_pairs(n, msgs_b, globally_known=True),
            words_per_envelope=2, runtime=runtime,
        )
        ledger.merge(sub)
    debug["merged_high_rounds"] = ledger.rounds - r0
    msgs_c = [m for data in datas for m in _phase_c_messages(data)]
    r0 = ledger.rounds
    if msgs_c:
        _, sub = oblivious_schedule(
            MessageBatch.from_pairs(n, msgs_c, globally_known=True),
            runtime=runtime,
        )
        ledger.merge(sub)
    debug["merged_exchange_rounds"] = ledger.rounds - r0
    batch_d = _phase_d_batch(datas, n)
    r0 = ledger.rounds
    delivered, sub, passes = chunked_round_robin(
        batch_d, strategy="columns", runtime=runtime
    )
    ledger.merge(sub)
    debug["merged_low_rounds"] = ledger.rounds - r0
    debug["low_passes"] = passes
    finders, witness, branch = _check_triangles(datas, delivered, g)
    broadcast_round(n, sorted(finders), ledger)
    return TriArborResult(
        found=bool(finders), ledger=ledger, variant=variant,
        iterations=len(datas), witness=witness, branch_counts=branch,
        trace=trace, debug=debug,
    )
