"""Synchronous complete-network execution engine.

Runs n node programs under a global round barrier, enforces the
one-word-per-ordered-pair-per-round capacity, and records every metric the
round-complexity assertions need (rounds, words, bits, per-link usage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "word_bits",
    "DUMMY",
    "Envelope",
    "RoundLedger",
    "NodeProgram",
    "CliqueRuntime",
    "CapacityViolation",
    "NonTermination",
    "PayloadTooLarge",
    "broadcast_word",
]


def word_bits(n):
    """Bits per word for an n-node network: two vertex/label ids plus four
    control bits."""
    return 2 * math.ceil(math.log2(max(n, 2))) + 4


class _Dummy:
    """Sentinel payload for padding envelopes; delivered but never reported."""

    __slots__ = ()

    def __repr__(self):
        return "DUMMY"


DUMMY = _Dummy()


@dataclass(frozen=True)
class Envelope:
    """One routed message; the unit of per-round per-link capacity.

    Internally the engine also accepts plain (src, dst, payload) tuples,
    which hot paths use to avoid object overhead.
    """

    src: int
    dst: int
    payload: object
    bits: int = None  # packed mode: actual bit cost; None = one full word


class CapacityViolation(RuntimeError):
    def __init__(self, round_no, src, dst, count):
        super().__init__(
            f"round {round_no}: link {src}->{dst} carries {count} units, "
            "exceeding capacity"
        )
        self.round_no = round_no
        self.src = src
        self.dst = dst
        self.count = count


class NonTermination(RuntimeError):
    pass


class PayloadTooLarge(ValueError):
    pass


@dataclass
class RoundLedger:
    """Cumulative communication accounting for one execution.

    Dummy padding envelopes count toward link capacity but not toward the
    word/bit totals or per-node counts.  Self-addressed envelopes count
    toward word/bit totals but use no link.
    """

    n: int
    rounds: int = 0
    words_sent: int = 0
    bits_sent: int = 0
    dummy_words: int = 0
    per_node_sent: dict = field(default_factory=dict)
    per_node_received: dict = field(default_factory=dict)
    per_round_link_use: list = field(default_factory=list)

    @property
    def max_link_use(self):
        best = 0
        for links in self.per_round_link_use:
            if links:
                best = max(best, max(links.values()))
        return best

    def charge(self, round_links, envelopes):
        """Account one round's delivered envelopes (capacity already checked)."""
        wb = word_bits(self.n)
        for (src, dst, payload, bits) in envelopes:
            if payload is DUMMY:
                self.dummy_words += 1
                continue
            self.words_sent += 1
            self.bits_sent += bits if bits is not None else wb
            if src != dst:
                self.per_node_sent[src] = self.per_node_sent.get(src, 0) + 1
                self.per_node_received[dst] = self.per_node_received.get(dst, 0) + 1
        self.per_round_link_use.append(round_links)

    def charge_rounds(self, count):
        """Account rounds with no link-level record (trivially capacity-safe
        phases such as merged all-to-all degree announcements)."""
        self.rounds += count
        for _ in range(count):
            self.per_round_link_use.append({})

    def merge(self, other):
        """Fold another ledger (a composed subroutine) into this one."""
        self.rounds += other.rounds
        self.words_sent += other.words_sent
        self.bits_sent += other.bits_sent
        self.dummy_words += other.dummy_words
        for k, v in other.per_node_sent.items():
            self.per_node_sent[k] = self.per_node_sent.get(k, 0) + v
        for k, v in other.per_node_received.items():
            self.per_node_received[k] = self.per_node_received.get(k, 0) + v
        self.per_round_link_use.extend(other.per_round_link_use)
        return self


class NodeProgram:
    """Per-node behavior contract under the round barrier.

    A round has two phases: every program first absorbs its inbox, then every
    program emits its outbox.  The split guarantees that any state shared for
    bookkeeping (never for algorithm logic) is consistent when emit decisions
    are made.  A program halts by setting self.halted inside emit; a final
    absorb-only round in which every remaining program halts without sending
    is not charged as a barrier crossing.
    """

    def __init__(self, node):
        self.node = node
        self.halted = False
        self.output = None

    def absorb(self, round_no, inbox):
        """Consume envelopes delivered at the end of the previous round."""

    def emit(self, round_no):
        """Return this round's outbox: a list of Envelope or
        (src, dst, payload) tuples."""
        return []


def _normalize(env):
    if isinstance(env, Envelope):
        return (env.src, env.dst, env.payload, env.bits)
    src, dst, payload = env
    return (src, dst, payload, None)


class CliqueRuntime:
    """Executes node programs in lock-step rounds on a complete network."""

    def __init__(self, n, packed=False, seed=0, track_links=True):
        self.n = n
        self.packed = packed
        self.seed = seed
        self.track_links = track_links
        self.word_bits = word_bits(n)

    def node_rng(self, node, stream=0):
        """Deterministic per-node RNG stream, replayable from the run seed."""
        return np.random.default_rng(
            np.random.SeedSequence([int(self.seed), int(node), int(stream)])
        )

    def run(self, programs, max_rounds=10_000):
        if len(programs) != self.n:
            raise ValueError(f"expected {self.n} programs, got {len(programs)}")
        n = self.n
        ledger = RoundLedger(n=n)
        inboxes = [[] for _ in range(n + 1)]
        for round_no in range(1, max_rounds + 1):
            active = [p for p in programs if not p.halted]
            if not active:
                break
            for p in active:
                inbox = inboxes[p.node]
                if inbox:
                    inboxes[p.node] = []
                p.absorb(round_no, inbox)
            outgoing = []
            for p in active:
                out = p.emit(round_no)
                if out:
                    outgoing.extend(_normalize(e) for e in out)
            if not outgoing and all(p.halted for p in active):
                # Everyone wound down on absorbed data without another
                # barrier crossing; the round is not charged.
                break
            links = self._check_capacity(round_no, outgoing)
            for env in outgoing:
                inboxes[env[1]].append(env)
            ledger.charge(links, outgoing)
            ledger.rounds = round_no
        else:
            if any(not p.halted for p in programs):
                raise NonTermination(
                    f"{sum(1 for p in programs if not p.halted)} programs "
                    f"still active after {max_rounds} rounds"
                )
        outputs = {p.node: p.output for p in programs}
        return outputs, ledger

    def _check_capacity(self, round_no, outgoing):
        links = {}
        wb = self.word_bits
        cap = wb if self.packed else 1
        for (src, dst, payload, bits) in outgoing:
            if not (1 <= src <= self.n and 1 <= dst <= self.n):
                raise ValueError(f"envelope {src}->{dst} outside 1..{self.n}")
            if src == dst:
                continue  # self-delivery uses no physical link
            cost = 1
            if self.packed:
                cost = bits if bits is not None else wb
                if cost > wb:
                    raise PayloadTooLarge(
                        f"envelope {src}->{dst} carries {cost} bits > {wb}"
                    )
            key = (src, dst)
            total = links.get(key, 0) + cost
            if total > cap:
                raise CapacityViolation(round_no, src, dst, total)
            links[key] = total
        return links if self.track_links else {}


def broadcast_word(src, n, payload, wb=None):
    """One identical envelope from src to every node 1..n."""
    if wb is not None and getattr(payload, "bits", None) is not None:
        if payload.bits > wb:
            raise PayloadTooLarge(f"{payload.bits} bits > {wb}")
    return [(src, dst, payload) for dst in range(1, n + 1)]
