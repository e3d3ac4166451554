"""Congested-clique simulator with deterministic and randomized
subgraph-detection algorithms, exact round accounting, and brute-force
oracles for verification."""

from .graphs import (
    C4,
    K4,
    P4,
    PATTERNS,
    TRIANGLE,
    Graph,
    SubgraphPattern,
    TriangleCensus,
    census,
    degeneracy,
    generate,
    oracle_contains,
    parse_edge_list,
    serialize_edge_list,
)
from .runtime import CliqueRuntime, NodeProgram, RoundLedger, word_bits
from .routing import (
    MessageBatch,
    deterministic_message_passing,
    learn_full_graph,
    oblivious_schedule,
    randomized_delivery,
    round_robin_messaging,
)
from .detect_general import build_partition, d_clique0, tri_partition
from .detect_sparse import (
    assign_delegates,
    detect_diameter_d,
    quick_decomposition,
    tri_arbor,
    tri_neighbors,
)
from .detect_random import (
    distinguisher,
    m_threshold,
    s_threshold,
    tightness_experiment,
    tri_sample,
)

__version__ = "0.1.0"
