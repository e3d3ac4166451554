"""Round engine: barrier semantics, capacity enforcement, accounting."""

import pytest

from cliquesim.runtime import (
    DUMMY,
    CapacityViolation,
    CliqueRuntime,
    Envelope,
    NodeProgram,
    NonTermination,
    PayloadTooLarge,
    RoundLedger,
    broadcast_word,
    word_bits,
)


class Silent(NodeProgram):
    def emit(self, round_no):
        self.halted = True
        return []


class OneShot(NodeProgram):
    """Sends a fixed outbox in round 1 and halts after reading replies."""

    def __init__(self, node, outbox):
        super().__init__(node)
        self.outbox = outbox
        self.received = []

    def absorb(self, round_no, inbox):
        self.received.extend(inbox)
        if round_no > 1:
            self.halted = True
            self.output = self.received

    def emit(self, round_no):
        return self.outbox if round_no == 1 else []


def test_word_bits():
    assert word_bits(16) == 12
    assert word_bits(17) == 14
    assert word_bits(2) == 6
    assert word_bits(1) == 6


def test_one_exchange_costs_one_round():
    n = 4
    rt = CliqueRuntime(n)
    programs = [
        OneShot(i, [(i, i % n + 1, ("hello", i))]) for i in range(1, n + 1)
    ]
    outputs, ledger = rt.run(programs)
    assert ledger.rounds == 1
    assert ledger.words_sent == n
    assert ledger.bits_sent == n * word_bits(n)
    for i in range(1, n + 1):
        sender = (i - 2) % n + 1
        assert outputs[i] == [(sender, i, ("hello", sender), None)]


def test_silent_run_costs_zero_rounds():
    rt = CliqueRuntime(3)
    _, ledger = rt.run([Silent(i) for i in range(1, 4)])
    assert ledger.rounds == 0
    assert ledger.words_sent == 0


def test_capacity_violation_on_doubled_link():
    rt = CliqueRuntime(3)
    programs = [
        OneShot(1, [(1, 2, "a"), (1, 2, "b")]),
        Silent(2),
        Silent(3),
    ]
    with pytest.raises(CapacityViolation) as err:
        rt.run(programs)
    assert (err.value.src, err.value.dst) == (1, 2)


def test_self_delivery_unlimited_and_counted():
    rt = CliqueRuntime(2)
    programs = [
        OneShot(1, [(1, 1, k) for k in range(5)]),
        Silent(2),
    ]
    outputs, ledger = rt.run(programs)
    assert len(outputs[1]) == 5
    assert ledger.words_sent == 5
    assert ledger.per_node_sent.get(1, 0) == 0  # no link crossed


def test_dummy_payloads_fill_capacity_but_not_totals():
    rt = CliqueRuntime(2)
    programs = [
        OneShot(1, [(1, 2, DUMMY)]),
        OneShot(2, [(2, 1, "real")]),
    ]
    _, ledger = rt.run(programs)
    assert ledger.dummy_words == 1
    assert ledger.words_sent == 1
    assert ledger.max_link_use == 1


def test_packed_mode_bit_budget():
    n = 16
    wb = word_bits(n)
    rt = CliqueRuntime(n, packed=True)
    chunks = [Envelope(1, 2, ("bits", k), bits=wb // 2) for k in range(2)]
    programs = [OneShot(i, chunks if i == 1 else []) for i in range(1, n + 1)]
    outputs, ledger = rt.run(programs)
    assert len(outputs[2]) == 2
    assert ledger.bits_sent == wb

    over = [Envelope(1, 2, "x", bits=wb // 2)] * 3
    programs = [OneShot(i, over if i == 1 else []) for i in range(1, n + 1)]
    with pytest.raises(CapacityViolation):
        rt.run(programs)


def test_packed_payload_too_large():
    rt = CliqueRuntime(4, packed=True)
    bad = [Envelope(1, 2, "x", bits=word_bits(4) + 1)]
    programs = [OneShot(i, bad if i == 1 else []) for i in range(1, 5)]
    with pytest.raises(PayloadTooLarge):
        rt.run(programs)


def test_nontermination_guard():
    class Babbler(NodeProgram):
        def emit(self, round_no):
            return [(self.node, self.node % 2 + 1, round_no)]

    rt = CliqueRuntime(2)
    with pytest.raises(NonTermination):
        rt.run([Babbler(1), Babbler(2)], max_rounds=10)


def test_out_of_range_destination():
    rt = CliqueRuntime(2)
    programs = [OneShot(1, [(1, 3, "x")]), Silent(2)]
    with pytest.raises(ValueError):
        rt.run(programs)


def test_node_rng_deterministic_and_distinct():
    rt = CliqueRuntime(8, seed=42)
    a = rt.node_rng(3).integers(0, 1 << 30, 4)
    b = rt.node_rng(3).integers(0, 1 << 30, 4)
    c = rt.node_rng(4).integers(0, 1 << 30, 4)
    assert list(a) == list(b)
    assert list(a) != list(c)
    rt2 = CliqueRuntime(8, seed=43)
    assert list(rt2.node_rng(3).integers(0, 1 << 30, 4)) != list(a)


def test_broadcast_word_covers_all_nodes():
    out = broadcast_word(2, 5, "deg")
    assert len(out) == 5
    assert {dst for (_, dst, _) in out} == {1, 2, 3, 4, 5}


def test_ledger_merge():
    a = RoundLedger(n=4, rounds=2, words_sent=5, bits_sent=60)
    a.per_node_sent[1] = 3
    b = RoundLedger(n=4, rounds=3, words_sent=7, bits_sent=84, dummy_words=2)
    b.per_node_sent[1] = 1
    b.per_node_sent[2] = 4
    a.merge(b)
    assert a.rounds == 5
    assert a.words_sent == 12
    assert a.bits_sent == 144
    assert a.dummy_words == 2
    assert a.per_node_sent == {1: 4, 2: 4}


def test_per_node_counts_example():
    """Each node sends one word around a 3-cycle plus one to itself: the
    ledger reports 2 crossing words per node and 3 received including self."""
    n = 3
    rt = CliqueRuntime(n)
    programs = []
    for i in range(1, n + 1):
        out = [(i, i % n + 1, "ring"), (i, (i - 2) % n + 1, "ring"), (i, i, "self")]
        programs.append(OneShot(i, out))
    outputs, ledger = rt.run(programs)
    for i in range(1, n + 1):
        assert ledger.per_node_sent[i] == 2
        assert ledger.per_node_received[i] == 2
        assert len(outputs[i]) == 3
    assert ledger.words_sent == 9
