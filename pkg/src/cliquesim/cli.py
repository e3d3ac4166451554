"""Command-line front end: graph generation, algorithm execution with
oracle verification, statistical sweeps, and report re-checking.

Exit codes: 0 success, 1 oracle mismatch, 2 configuration error,
3 runtime contract violation.
"""

from __future__ import annotations

import json
import sys

import click

from . import detect_random, detect_sparse
from .detect_general import d_clique0, tri_partition
from .graphs import (
    PATTERNS,
    TRIANGLE,
    EdgeListError,
    GraphError,
    ParameterError,
    generate,
    oracle_contains,
    parse_edge_list,
    serialize_edge_list,
)
from .reports import RunRecord, build_report, write_csv, write_report
from .routing import BatchError, RegularityError, learn_full_graph
from .runtime import CapacityViolation, NonTermination
from .detect_sparse import DelegateExhaustion

EXIT_OK = 0
EXIT_ORACLE_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_CONTRACT = 3

ALGORITHMS = (
    "tri-partition", "d-clique0", "tri-neighbors", "diameter-d",
    "tri-arbor:seq", "tri-arbor:par", "tri-arbor:base", "tri-arbor:uniform",
    "tri-sample", "distinguisher", "tightness", "learn-graph",
)


class OracleMismatch(RuntimeError):
    pass


def _parse_seeds(text):
    """Seed list syntax: comma-separated values and a..b ranges."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ParameterError("empty seed list")
    return seeds


def _load_graph(graph, family, n, t, p, k, graph_seed):
    if graph:
        with open(graph) as fh:
            return parse_edge_list(fh.read())
    if not family:
        raise ParameterError("provide --graph or --family")
    params = {"n": n}
    if t is not None:
        params["t"] = t
    if p is not None:
        params["p"] = p
    if k is not None:
        params["k"] = k
    return generate(family, params, seed=graph_seed)


def _pattern(name):
    if name not in PATTERNS:
        raise ParameterError(
            f"unknown pattern {name!r}; choose from {sorted(PATTERNS)}"
        )
    return PATTERNS[name]


def _execute(algo, g, seed, opts):
    """Run one algorithm once; returns a RunRecord with the oracle verdict."""
    pattern = _pattern(opts.get("pattern") or "triangle")
    rec = RunRecord(seed=seed)
    if algo == "tri-partition":
        res = tri_partition(g, packed=opts.get("packed", False))
        rec.found, rec.oracle = res.found, oracle_contains(g, TRIANGLE)
        rec.rounds, ledger = res.ledger.rounds, res.ledger
        rec.witness = res.witness
        rec.debug = {"n_effective": res.n_effective, "packed": res.packed}
    elif algo == "d-clique0":
        res = d_clique0(g, pattern, packed=opts.get("packed", False))
        rec.found, rec.oracle = res.found, oracle_contains(g, pattern)
        rec.rounds, ledger = res.ledger.rounds, res.ledger
        rec.witness = res.witness
        rec.debug = {"n_effective": res.n_effective, "pattern": pattern.name}
    elif algo == "tri-neighbors":
        res = detect_sparse.tri_neighbors(g)
        rec.found, rec.oracle = res.found, oracle_contains(g, TRIANGLE)
        rec.rounds, ledger = res.ledger.rounds, res.ledger
        rec.witness, rec.debug = res.witness, dict(res.debug)
    elif algo == "diameter-d":
        res = detect_sparse.detect_diameter_d(g, pattern)
        rec.found, rec.oracle = res.found, oracle_contains(g, pattern)
        rec.rounds, ledger = res.ledger.rounds, res.ledger
        rec.witness, rec.debug = res.witness, dict(res.debug)
    elif algo.startswith("tri-arbor:"):
        res = detect_sparse.tri_arbor(g, variant=algo.split(":", 1)[1])
        rec.found, rec.oracle = res.found, oracle_contains(g, TRIANGLE)
        rec.rounds, ledger = res.ledger.rounds, res.ledger
        rec.iterations = res.iterations
        rec.witness = res.witness
        rec.debug = {"branches": res.branch_counts, **res.debug}
    elif algo == "tri-sample":
        res = detect_random.tri_sample(g, seed=seed)
        rec.found, rec.oracle = res.found, oracle_contains(g, TRIANGLE)
        rec.rounds, ledger = res.rounds, res.ledger
        rec.iterations = res.iterations
        rec.witness = res.witness
        rec.debug = {
            "first_success": res.first_success,
            "s_at_success": res.s_at_success,
            "fell_back": res.fell_back,
            "mode": res.mode,
        }
    elif algo == "distinguisher":
        verdict, res = detect_random.distinguisher(
            g, opts.get("t0") or 1, opts.get("eps") or 0.1, seed=seed
        )
        rec.found = verdict == "has-triangle"
        rec.oracle = oracle_contains(g, TRIANGLE)
        # a "triangle-free" verdict on a triangle graph is the allowed
        # eps-probability error, not an oracle mismatch
        if not rec.found and rec.oracle:
            rec.oracle = None
            rec.debug["verdict"] = "triangle-free (within eps budget)"
        rec.rounds = res.rounds
        rec.iterations = res.iterations
        rec.witness = res.witness
        ledger = res.ledger
    elif algo == "learn-graph":
        edge_sets, ledger = learn_full_graph(g)
        truth = set(g.edges())
        rec.found = all(edge_sets[v] == truth for v in range(1, g.n + 1))
        rec.oracle = True
        rec.rounds = ledger.rounds
        rec.debug = {"edges": len(truth)}
    else:
        raise ParameterError(f"unknown algorithm {algo!r}")
    if ledger is not None:
        rec.words_sent = ledger.words_sent
        rec.bits_sent = ledger.bits_sent
    if rec.witness is not None:
        rec.witness = tuple(rec.witness)
    return rec


def _run_config(algo, g, seeds, opts):
    if algo == "tightness":
        frac, records = detect_random.tightness_experiment(
            opts.get("family") or "shared-edge",
            opts["n"], opts.get("t") or 1,
            opts.get("eps") or 0.1, opts.get("s_fixed") or 32,
            seeds,
        )
        runs = [
            RunRecord(seed=r["seed"], found=r["hit"], oracle=None)
            for r in records
        ]
        return runs, {"all_miss_fraction": frac}
    runs = [_execute(algo, g, seed, opts) for seed in seeds]
    return runs, {}


@click.group()
def cli():
    """Congested-clique simulator and subgraph-detection test bench."""


@cli.command("generate")
@click.option("--family", required=True)
@click.option("--n", type=int, required=True)
@click.option("--t", type=int, default=None)
@click.option("--p", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_generate(family, n, t, p, k, seed, out):
    """Write a generated graph as an edge-list file."""
    g = _load_graph(None, family, n, t, p, k, seed)
    with open(out, "w") as fh:
        fh.write(serialize_edge_list(g))
    click.echo(f"wrote {g.n} vertices, {g.num_edges} edges to {out}")


_graph_options = [
    click.option("--graph", type=click.Path(exists=False), default=None),
    click.option("--family", default=None),
    click.option("--n", type=int, default=None),
    click.option("--t", type=int, default=None),
    click.option("--p", type=float, default=None),
    click.option("--k", type=int, default=None),
    click.option("--graph-seed", type=int, default=0),
]


def _with_graph_options(fn):
    for deco in reversed(_graph_options):
        fn = deco(fn)
    return fn


@cli.command("run")
@click.option("--algo", required=True, type=click.Choice(ALGORITHMS))
@_with_graph_options
@click.option("--seeds", default="0")
@click.option("--eps", type=float, default=None)
@click.option("--t0", type=int, default=None)
@click.option("--s-fixed", type=int, default=None)
@click.option("--pattern", default=None)
@click.option("--packed", is_flag=True, default=False)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--max-rounds", type=int, default=None)
def cmd_run(algo, graph, family, n, t, p, k, graph_seed, seeds, eps, t0,
            s_fixed, pattern, packed, out, max_rounds):
    """Run an algorithm over a graph and seed list, verify against the
    oracle, and write a report."""
    seed_list = _parse_seeds(seeds)
    opts = {
        "eps": eps, "t0": t0, "pattern": pattern, "packed": packed,
        "family": family, "n": n, "t": t, "s_fixed": s_fixed,
    }
    g = None
    if algo != "tightness":
        g = _load_graph(graph, family, n, t, p, k, graph_seed)
    runs, extra = _run_config(algo, g, seed_list, opts)
    config = {
        "algo": algo, "graph": graph, "family": family, "n": n, "t": t,
        "p": p, "seeds": seed_list, "eps": eps, "t0": t0,
        "pattern": pattern, "packed": packed,
    }
    report = build_report(config, runs)
    report.aggregate.update(extra)
    if max_rounds is not None and report.aggregate["max_rounds"] > max_rounds:
        raise NonTermination(
            f"max rounds {report.aggregate['max_rounds']} exceeds the "
            f"--max-rounds budget {max_rounds}"
        )
    if out:
        write_report(report, out)
    click.echo(json.dumps(report.aggregate, default=list))
    if not report.aggregate["oracle_agreement"]:
        raise OracleMismatch(f"algorithm {algo} disagreed with the oracle")


@cli.command("sweep")
@click.option("--algo", required=True, type=click.Choice(ALGORITHMS))
@click.option("--axis", required=True, type=click.Choice(["n", "t", "eps", "k"]))
@click.option("--values", required=True)
@_with_graph_options
@click.option("--seeds", default="0")
@click.option("--eps", type=float, default=None)
@click.option("--t0", type=int, default=None)
@click.option("--pattern", default=None)
@click.option("--packed", is_flag=True, default=False)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def cmd_sweep(algo, axis, values, graph, family, n, t, p, k, graph_seed,
              seeds, eps, t0, pattern, packed, out):
    """Run one configuration per axis value and write a summary table."""
    seed_list = _parse_seeds(seeds)
    caster = float if axis == "eps" else int
    rows = []
    mismatch = False
    for raw in values.split(","):
        value = caster(raw.strip())
        cur = {"n": n, "t": t, "eps": eps, "k": k}
        cur[axis] = value
        g = _load_graph(graph, family, cur["n"], cur["t"], p, cur["k"], graph_seed)
        opts = {
            "eps": cur["eps"], "t0": t0, "pattern": pattern, "packed": packed,
            "family": family, "n": cur["n"], "t": cur["t"],
        }
        runs, _ = _run_config(algo, g, seed_list, opts)
        agg_rounds = [r.rounds for r in runs]
        rows.append({
            "value": value,
            "mean_rounds": sum(agg_rounds) / len(agg_rounds),
            "max_rounds": max(agg_rounds),
            "success_frequency": sum(bool(r.found) for r in runs) / len(runs),
        })
        if not all(r.agrees for r in runs):
            mismatch = True
    write_csv(rows, out, ["value", "mean_rounds", "max_rounds", "success_frequency"])
    click.echo(json.dumps(rows))
    if mismatch:
        raise OracleMismatch(f"sweep of {algo} hit an oracle disagreement")


@cli.command("verify")
@click.option("--algo", type=click.Choice(ALGORITHMS), default=None)
@_with_graph_options
@click.option("--seeds", default="0")
@click.option("--pattern", default=None)
@click.option("--report", "report_path", type=click.Path(exists=True), default=None)
def cmd_verify(algo, graph, family, n, t, p, k, graph_seed, seeds, pattern,
               report_path):
    """Re-check results against the brute-force oracle: either re-run an
    algorithm, or recheck the found flags recorded in an existing report."""
    if report_path:
        with open(report_path) as fh:
            doc = json.load(fh)
        cfg = doc.get("config", {})
        g = _load_graph(
            cfg.get("graph"), cfg.get("family"), cfg.get("n"), cfg.get("t"),
            cfg.get("p"), None, 0,
        )
        pat = _pattern(cfg.get("pattern") or "triangle")
        truth = oracle_contains(g, pat)
        bad = [
            r["seed"] for r in doc.get("runs", [])
            if r.get("found") is not None and bool(r["found"]) != truth
        ]
        if bad:
            raise OracleMismatch(
                f"report runs with seeds {bad} disagree with the oracle "
                f"verdict {truth}"
            )
        click.echo(f"report consistent with oracle verdict {truth}")
        return
    if not algo:
        raise ParameterError("provide --algo or --report")
    g = _load_graph(graph, family, n, t, p, k, graph_seed)
    opts = {"pattern": pattern}
    for seed in _parse_seeds(seeds):
        rec = _execute(algo, g, seed, opts)
        if not rec.agrees:
            raise OracleMismatch(
                f"{algo} seed {seed}: found={rec.found} oracle={rec.oracle}"
            )
    click.echo("all runs agree with the oracle")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except OracleMismatch as exc:
        click.echo(f"oracle mismatch: {exc}", err=True)
        return EXIT_ORACLE_MISMATCH
    except (
        CapacityViolation, NonTermination, RegularityError, BatchError,
        DelegateExhaustion,
    ) as exc:
        click.echo(f"runtime contract violation: {exc}", err=True)
        return EXIT_CONTRACT
    except (
        ParameterError, GraphError, EdgeListError, click.UsageError,
        click.BadParameter, FileNotFoundError, ValueError,
    ) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return EXIT_CONFIG
    except click.exceptions.Exit as exc:
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
