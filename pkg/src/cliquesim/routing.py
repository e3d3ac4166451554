"""Message-delivery subroutines all detection algorithms are built on.

Three schemes with different knowledge requirements:

- deterministic_message_passing: 2 rounds, needs the batch globally known
  and at most n messages in/out per node (relies on a good labeling built
  from a perfect-matching decomposition of the padded batch).
- round_robin_messaging: 3 rounds, needs uniform per-source content and at
  most n content words per source / n incoming words per destination, but
  destinations need not be globally known.
- randomized_delivery: no global knowledge at all; a randomized balanced
  relay whose round count is measured, not proven.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .runtime import (
    DUMMY,
    CliqueRuntime,
    NodeProgram,
    RoundLedger,
    word_bits,
)

__all__ = [
    "MessageBatch",
    "GoodLabeling",
    "BatchError",
    "RegularityError",
    "good_labeling",
    "pad_to_regular",
    "deterministic_message_passing",
    "oblivious_schedule",
    "round_robin_messaging",
    "chunked_round_robin",
    "randomized_delivery",
    "learn_full_graph",
    "broadcast_round",
]


class BatchError(ValueError):
    """Batch violates a scheme's admissibility conditions."""


class RegularityError(ValueError):
    """Batch handed to the labeler is not regular (padding missing)."""


@dataclass
class MessageBatch:
    """A set of point-to-point messages, organized per source.

    ``sends`` maps source id to a list of (destination, payload) pairs.
    ``globally_known`` asserts every node can compute the full batch shape in
    advance; ``uniform_content`` asserts each source sends one identical
    content list to all its destinations (then ``contents``/``dests`` are
    the authoritative representation).
    """

    n: int
    sends: dict = field(default_factory=dict)
    globally_known: bool = False
    uniform_content: bool = False
    contents: dict = None
    dests: dict = None

    @classmethod
    def from_pairs(cls, n, messages, globally_known=False):
        sends = {}
        for (src, dst, payload) in messages:
            if not (1 <= src <= n and 1 <= dst <= n):
                raise BatchError(f"message {src}->{dst} outside 1..{n}")
            sends.setdefault(src, []).append((dst, payload))
        return cls(n=n, sends=sends, globally_known=globally_known)

    @classmethod
    def uniform(cls, n, contents, dests, globally_known=False):
        """contents: src -> list of payload words; dests: src -> destinations."""
        sends = {}
        for src, words in contents.items():
            ds = dests.get(src, [])
            if words and ds:
                sends[src] = [(d, w) for d in ds for w in words]
        return cls(
            n=n, sends=sends, globally_known=globally_known,
            uniform_content=True, contents=contents, dests=dests,
        )

    def all_messages(self):
        return [
            (src, dst, payload)
            for src, lst in self.sends.items()
            for (dst, payload) in lst
        ]

    def out_counts(self):
        return {src: len(lst) for src, lst in self.sends.items()}

    def in_counts(self):
        counts = {}
        for lst in self.sends.values():
            for (dst, _) in lst:
                counts[dst] = counts.get(dst, 0) + 1
        return counts

    @property
    def total(self):
        return sum(len(lst) for lst in self.sends.values())


@dataclass
class GoodLabeling:
    """Labels (dst, k) for every envelope of a regular batch.

    Good condition: no source holds two messages with equal k; labels for a
    fixed destination are distinct across its messages.
    """

    n: int
    degree: int
    labeled: list  # (src, dst, payload, k), k in 1..degree


def pad_to_regular(n, messages, degree):
    """Pad with dummy envelopes so every node sends and receives exactly
    ``degree`` messages.  Self-addressed dummies are preferred; leftover
    deficits are matched up arbitrarily."""
    out = {v: 0 for v in range(1, n + 1)}
    inn = {v: 0 for v in range(1, n + 1)}
    for (src, dst, _) in messages:
        out[src] += 1
        inn[dst] += 1
    over = [v for v in range(1, n + 1) if out[v] > degree or inn[v] > degree]
    if over:
        raise RegularityError(
            f"nodes {over} exceed the target degree {degree}"
        )
    padded = list(messages)
    rest_out = []
    rest_in = []
    for v in range(1, n + 1):
        self_pad = min(degree - out[v], degree - inn[v])
        padded.extend((v, v, DUMMY) for _ in range(self_pad))
        rest_out.extend([v] * (degree - out[v] - self_pad))
        rest_in.extend([v] * (degree - inn[v] - self_pad))
    padded.extend((s, d, DUMMY) for s, d in zip(rest_out, rest_in))
    return padded


def good_labeling(n, messages, degree=None):
    """Decompose a regular batch into ``degree`` perfect matchings; matching
    k assigns label k.  Deterministic: identical input gives identical
    output at every node computing it locally.

    ``messages`` must already be padded to regularity (every node exactly
    ``degree`` out and in); raises RegularityError otherwise.
    """
    if degree is None:
        degree = len(messages) // n if n else 0
    out = {v: 0 for v in range(1, n + 1)}
    inn = {v: 0 for v in range(1, n + 1)}
    mult = np.zeros((n, n), dtype=np.int32)
    queues = {}
    for idx, (src, dst, _) in enumerate(messages):
        out[src] += 1
        inn[dst] += 1
        mult[src - 1, dst - 1] += 1
        queues.setdefault((src, dst), []).append(idx)
    if any(out[v] != degree or inn[v] != degree for v in range(1, n + 1)):
        raise RegularityError(
            f"batch is not {degree}-regular; pad it with dummies first"
        )
    labels = [0] * len(messages)
    for k in range(1, degree + 1):
        support = csr_matrix(mult > 0)
        match = maximum_bipartite_matching(support, perm_type="column")
        if (match < 0).any():
            raise RegularityError(
                "no perfect matching found; batch regularity is broken"
            )
        for row in range(n):
            col = int(match[row])
            src, dst = row + 1, col + 1
            mult[row, col] -= 1
            idx = queues[(src, dst)].pop(0)
            labels[idx] = k
    labeled = [
        (src, dst, payload, labels[i])
        for i, (src, dst, payload) in enumerate(messages)
    ]
    return GoodLabeling(n=n, degree=degree, labeled=labeled)


# ---------------------------------------------------------------------------
# Two-round delivery of one labeled stripe

class _TwoRoundProgram(NodeProgram):
    def __init__(self, node, stage1):
        super().__init__(node)
        self.stage1 = stage1  # list of (relay, entries)
        self.forward = []
        self.got = []

    def absorb(self, round_no, inbox):
        if round_no == 2:
            per_dst = {}
            for (_, _, entries, _) in inbox:
                for (dst, src, payload) in entries:
                    per_dst.setdefault(dst, []).append((dst, src, payload))
            self.forward = [
                (self.node, dst, tuple(entries)) for dst, entries in per_dst.items()
            ]
        elif round_no == 3:
            for (_, _, entries, _) in inbox:
                for (_, src, payload) in entries:
                    if payload is not DUMMY:
                        self.got.append((src, payload))

    def emit(self, round_no):
        if round_no == 1:
            return [(self.node, relay, entries) for (relay, entries) in self.stage1]
        if round_no == 2:
            out, self.forward = self.forward, []
            return out
        self.halted = True
        self.output = self.got
        return []


def _run_stripe(n, stripe, words_per_envelope, runtime):
    """Deliver one stripe of labeled messages (labels 1..words_per_envelope*n)
    in exactly 2 rounds: stage 1 to the relay encoded by the label, stage 2
    to the destination."""
    stage1_by_node = {v: {} for v in range(1, n + 1)}
    for (src, dst, payload, k) in stripe:
        relay = (k - 1) % n + 1
        stage1_by_node[src].setdefault(relay, []).append((dst, src, payload))
    for src, groups in stage1_by_node.items():
        for relay, entries in groups.items():
            if len(entries) > words_per_envelope:
                raise RegularityError(
                    f"labeling places {len(entries)} words on link "
                    f"{src}->{relay} in one round"
                )
    programs = [
        _TwoRoundProgram(
            v,
            [(relay, tuple(entries)) for relay, entries in stage1_by_node[v].items()],
        )
        for v in range(1, n + 1)
    ]
    outputs, ledger = runtime.run(programs, max_rounds=4)
    delivered = {v: outputs[v] or [] for v in range(1, n + 1)}
    return delivered, ledger


def _merge_delivered(acc, new):
    for dst, items in new.items():
        if items:
            acc.setdefault(dst, []).extend(items)
    return acc


def deterministic_message_passing(batch, runtime=None):
    """Deliver a globally-known batch with per-node in/out at most n in
    exactly 2 rounds.  Returns (delivered, ledger) where delivered maps each
    destination to its received (source, payload) list."""
    n = batch.n
    if not batch.globally_known:
        raise BatchError("2-round scheme requires a globally-known batch")
    msgs = batch.all_messages()
    if not msgs:
        return {}, RoundLedger(n=n)
    bad = [v for v, c in batch.out_counts().items() if c > n]
    bad += [v for v, c in batch.in_counts().items() if c > n]
    if bad:
        raise BatchError(f"nodes {sorted(set(bad))} exceed n messages in/out")
    if runtime is None:
        runtime = CliqueRuntime(n)
    padded = pad_to_regular(n, msgs, n)
    labeling = good_labeling(n, padded, n)
    return _run_stripe(n, labeling.labeled, 1, runtime)


def oblivious_schedule(batch, T=None, words_per_envelope=1, runtime=None):
    """Deliver a globally-known batch with per-node in/out at most T by
    splitting a good labeling into stripes of n labels and running the
    2-round scheme per stripe; at most 2*ceil(T/n) rounds.

    words_per_envelope > 1 packs that many logical words into each envelope
    (callers use it when word contents are single ids so two fit one word);
    stripes then span words_per_envelope*n labels.
    """
    n = batch.n
    if not batch.globally_known:
        raise BatchError("oblivious scheduling requires a globally-known batch")
    msgs = batch.all_messages()
    if not msgs:
        return {}, RoundLedger(n=n)
    load = max(
        max(batch.out_counts().values(), default=0),
        max(batch.in_counts().values(), default=0),
    )
    if T is None:
        T = load
    elif load > T:
        raise BatchError(f"per-node load {load} exceeds the stated bound {T}")
    if runtime is None:
        runtime = CliqueRuntime(n)
    padded = pad_to_regular(n, msgs, load)
    labeling = good_labeling(n, padded, load)
    span = words_per_envelope * n
    delivered = {}
    ledger = RoundLedger(n=n)
    for lo in range(1, load + 1, span):
        stripe = [m for m in labeling.labeled if lo <= m[3] < lo + span]
        if all(m[2] is DUMMY for m in stripe):
            continue
        shifted = [(s, d, p, k - lo + 1) for (s, d, p, k) in stripe]
        got, sub = _run_stripe(n, shifted, words_per_envelope, runtime)
        _merge_delivered(delivered, got)
        ledger.merge(sub)
    return delivered, ledger


# ---------------------------------------------------------------------------
# Round-Robin-Messaging: 3 rounds, uniform content, local destinations

class _RoundRobinProgram(NodeProgram):
    def __init__(self, node, n, content, dests):
        super().__init__(node)
        self.n = n
        self.content = content
        self.dests = set(dests)
        self.held = {}       # source -> the one word cyclically placed here
        self.counts = {}     # source -> k(source), learned from notifies
        self.requests = []   # (requester, source)
        self.delivered = {}  # source -> list of words

    def absorb(self, round_no, inbox):
        if round_no == 2:
            for (src, _, (word, notify), _) in inbox:
                if word is not None:
                    self.held[src] = word
                if notify is not None:
                    self.counts[src] = notify
        elif round_no == 3:
            self.requests = [(env[0], env[2]) for env in inbox]
        elif round_no == 4:
            for (_, _, (src, word), _) in inbox:
                self.delivered.setdefault(src, []).append(word)

    def emit(self, round_no):
        me, n = self.node, self.n
        if round_no == 1:
            k = len(self.content)
            out = []
            for j in range(1, n + 1):
                word = self.content[(j - 1) % k] if k else None
                notify = k if j in self.dests else None
                if word is None and notify is None:
                    continue
                out.append((me, j, (word, notify)))
            return out
        if round_no == 2:
            out = []
            server = 1
            for src in sorted(self.counts):
                for _ in range(self.counts[src]):
                    if server > n:
                        raise BatchError(
                            f"destination {me} needs more than {n} requests; "
                            "incoming load exceeds n"
                        )
                    out.append((me, server, src))
                    server += 1
            return out
        if round_no == 3:
            return [(me, requester, (src, self.held[src]))
                    for (requester, src) in self.requests]
        self.halted = True
        self.output = self.delivered
        return []


def round_robin_messaging(batch, runtime=None):
    """Deliver a uniform-content batch in exactly 3 rounds.

    Round 1 distributes each source's content cyclically over all nodes and
    notifies each destination of the content length; round 2 has each
    destination request one word per holder; round 3 answers the requests.
    Destinations need not be globally known.  Returns (delivered, ledger)
    with delivered[dst][src] = the full content list of src.
    """
    n = batch.n
    if not batch.uniform_content or batch.contents is None:
        raise BatchError("round-robin messaging requires a uniform-content batch")
    contents = batch.contents
    dests = batch.dests or {}
    if all(not contents.get(s) or not dests.get(s) for s in contents):
        return {}, RoundLedger(n=n)
    for src, words in contents.items():
        if len(words) > n:
            raise BatchError(f"source {src} holds {len(words)} > n content words")
    inload = {}
    for src, ds in dests.items():
        k = len(contents.get(src, ()))
        if k == 0:
            continue
        for d in set(ds):
            inload[d] = inload.get(d, 0) + k
    heavy = [d for d, c in inload.items() if c > n]
    if heavy:
        raise BatchError(f"destinations {heavy} would receive more than n words")
    if runtime is None:
        runtime = CliqueRuntime(n)
    programs = [
        _RoundRobinProgram(v, n, list(contents.get(v, ())), dests.get(v, ()))
        for v in range(1, n + 1)
    ]
    outputs, ledger = runtime.run(programs, max_rounds=5)
    delivered = {v: outputs[v] or {} for v in range(1, n + 1)}
    return delivered, ledger


def _plan_column_chunks(n, contents, dests):
    """Greedy grouping of content positions (columns) into passes such that
    no destination receives more than n words per pass."""
    kmax = max((len(w) for w in contents.values()), default=0)
    col_load = []
    for c in range(kmax):
        load = {}
        for src, words in contents.items():
            if len(words) > c:
                for d in set(dests.get(src, ())):
                    load[d] = load.get(d, 0) + 1
        col_load.append(load)
    passes = []
    cur = []
    cur_load = {}
    for c in range(kmax):
        trial = dict(cur_load)
        for d, v in col_load[c].items():
            trial[d] = trial.get(d, 0) + v
        if cur and (len(cur) + 1 > n or max(trial.values(), default=0) > n):
            passes.append(cur)
            cur = [c]
            cur_load = dict(col_load[c])
        else:
            cur.append(c)
            cur_load = trial
    if cur:
        passes.append(cur)
    return passes


def _plan_rank_chunks(n, contents):
    """Stripe all content words by global rank into passes of n words."""
    order = []
    for src in sorted(contents):
        for idx in range(len(contents[src])):
            order.append((src, idx))
    passes = []
    for lo in range(0, len(order), n):
        chunk = order[lo:lo + n]
        per_src = {}
        for (src, idx) in chunk:
            per_src.setdefault(src, []).append(idx)
        passes.append(per_src)
    return passes


def chunked_round_robin(batch, strategy="columns", runtime=None):
    """Deliver a uniform-content batch of arbitrary size by repeated
    3-round passes over content stripes.  Returns (delivered, ledger,
    passes).  Strategies: "columns" groups content positions greedily by
    destination load; "rank" stripes all words by global rank (n per pass,
    only valid when every source addresses all nodes or loads are checked
    by the caller)."""
    n = batch.n
    if not batch.uniform_content or batch.contents is None:
        raise BatchError("chunked delivery requires a uniform-content batch")
    contents = {s: list(w) for s, w in batch.contents.items() if w}
    dests = {s: list(d) for s, d in (batch.dests or {}).items()}
    delivered = {}
    ledger = RoundLedger(n=n)
    if strategy == "columns":
        plans = _plan_column_chunks(n, contents, dests)
        sub_contents = [
            {s: [w[c] for c in cols if c < len(w)] for s, w in contents.items()}
            for cols in plans
        ]
    elif strategy == "rank":
        plans = _plan_rank_chunks(n, contents)
        sub_contents = [
            {s: [contents[s][i] for i in idxs] for s, idxs in per_src.items()}
            for per_src in plans
        ]
    else:
        raise ValueError(f"unknown chunking strategy {strategy!r}")
    passes = 0
    for sub in sub_contents:
        sub = {s: w for s, w in sub.items() if w}
        if not sub:
            continue
        sub_batch = MessageBatch.uniform(
            n, sub, {s: dests.get(s, ()) for s in sub}
        )
        got, sub_ledger = round_robin_messaging(sub_batch, runtime=runtime)
        for dst, per_src in got.items():
            for src, words in per_src.items():
                delivered.setdefault(dst, {}).setdefault(src, []).extend(words)
        ledger.merge(sub_ledger)
        passes += 1
    return delivered, ledger, passes


# ---------------------------------------------------------------------------
# Randomized balanced relay

class _RelayController:
    __slots__ = ("remaining",)

    def __init__(self, remaining):
        self.remaining = remaining


class _RelayProgram(NodeProgram):
    def __init__(self, node, n, own, controller, rng):
        super().__init__(node)
        self.n = n
        self.own = own  # list of (dst, src, payload) to inject
        self.controller = controller
        self.rng = rng
        self.pending = []
        self.received = []

    def absorb(self, round_no, inbox):
        for (_, _, (dst, src, payload), _) in inbox:
            if dst == self.node:
                self.received.append((src, payload))
                self.controller.remaining -= 1
            else:
                self.pending.append((dst, src, payload))

    def emit(self, round_no):
        me, n = self.node, self.n
        if round_no == 1:
            if not self.own:
                return []
            order = self.rng.permutation(len(self.own))
            relays = self.rng.permutation(n) + 1
            out = []
            for slot, qi in enumerate(order):
                dst, src, payload = self.own[int(qi)]
                relay = int(relays[slot])
                if relay == dst or relay == me:
                    out.append((me, dst, (dst, src, payload)))
                else:
                    out.append((me, relay, (dst, src, payload)))
            # direct duplicates on the same link are impossible: relays are
            # a permutation, and redirected entries go to distinct dsts only
            # if unique; fall back to queueing on collision
            return self._dedupe(out)
        if self.controller.remaining == 0 and not self.pending:
            self.halted = True
            self.output = self.received
            return []
        out = []
        used = set()
        surplus = []
        first_for = {}
        for item in self.pending:
            dst = item[0]
            if dst not in first_for:
                first_for[dst] = item
            else:
                surplus.append(item)
        for dst, (d, src, payload) in first_for.items():
            out.append((me, dst, (d, src, payload)))
            used.add(dst)
        leftovers = []
        if surplus:
            candidates = [
                int(v) for v in self.rng.permutation(n) + 1
                if v != me and v not in used
            ]
            for item in surplus:
                if candidates:
                    relay = candidates.pop()
                    used.add(relay)
                    out.append((me, relay, item))
                else:
                    leftovers.append(item)
        self.pending = leftovers
        return out

    def _dedupe(self, out):
        seen = set()
        clean = []
        for env in out:
            key = env[1]
            if key == self.node or key not in seen:
                if key != self.node:
                    seen.add(key)
                clean.append(env)
            else:
                self.pending.append(env[2])
        return clean


def randomized_delivery(batch, seed=0, runtime=None, max_rounds=200):
    """Deliver an admissible batch (per-node in/out at most n) with no
    global knowledge: round 1 scatters each source's messages over
    uniformly random relays (one per link), later rounds forward one pending
    message per destination and re-scatter per-link surplus to fresh relays.
    Round count is recorded honestly; it is an empirical small constant, not
    a proven bound."""
    n = batch.n
    msgs = batch.all_messages()
    if not msgs:
        return {}, RoundLedger(n=n)
    bad = [v for v, c in batch.out_counts().items() if c > n]
    bad += [v for v, c in batch.in_counts().items() if c > n]
    if bad:
        raise BatchError(f"nodes {sorted(set(bad))} exceed n messages in/out")
    if runtime is None:
        runtime = CliqueRuntime(n, seed=seed)
    controller = _RelayController(len(msgs))
    per_src = {}
    for (src, dst, payload) in msgs:
        per_src.setdefault(src, []).append((dst, src, payload))
    programs = [
        _RelayProgram(v, n, per_src.get(v, []), controller, runtime.node_rng(v))
        for v in range(1, n + 1)
    ]
    outputs, ledger = runtime.run(programs, max_rounds=max_rounds)
    delivered = {v: outputs[v] or [] for v in range(1, n + 1)}
    return delivered, ledger


# ---------------------------------------------------------------------------
# Composite helpers

def learn_full_graph(g, runtime=None):
    """Every node ends holding the full edge set: each vertex streams its
    neighbor list to all nodes via rank-striped round-robin passes of n
    words each.  Rounds: 3 * ceil(2|E|/n)."""
    n = g.n
    contents = {
        v: sorted(g.neighbors(v)) for v in range(1, n + 1) if g.degree(v)
    }
    dests = {v: list(range(1, n + 1)) for v in contents}
    batch = MessageBatch.uniform(n, contents, dests)
    delivered, ledger, passes = chunked_round_robin(
        batch, strategy="rank", runtime=runtime
    )
    edge_sets = {}
    for v in range(1, n + 1):
        edges = set()
        for src, words in delivered.get(v, {}).items():
            for w in words:
                edges.add((min(src, w), max(src, w)))
        edge_sets[v] = edges
    return edge_sets, ledger


def broadcast_round(n, senders, ledger=None):
    """Charge one synchronized broadcast round in which each node in
    ``senders`` sends one flag word to every node.  The traffic pattern is
    trivially within capacity (one word per ordered pair), so it is charged
    arithmetically rather than materialized."""
    if ledger is None:
        ledger = RoundLedger(n=n)
    wb = word_bits(n)
    ledger.rounds += 1
    ledger.per_round_link_use.append({})
    for s in senders:
        ledger.words_sent += n
        ledger.bits_sent += n * wb
        ledger.per_node_sent[s] = ledger.per_node_sent.get(s, 0) + n - 1
    if senders:
        for v in range(1, n + 1):
            ledger.per_node_received[v] = (
                ledger.per_node_received.get(v, 0)
                + len(senders)
                - (1 if v in senders else 0)
            )
    return ledger
