"""Structured experiment reports: one JSON document per invocation with a
timestamp-isolated header, one entry per run, and an aggregate block, plus a
CSV projection for sweep tables."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

__all__ = ["RunRecord", "Report", "build_report", "write_report", "write_csv"]


@dataclass
class RunRecord:
    seed: int
    found: bool = None
    oracle: bool = None
    rounds: int = 0
    words_sent: int = 0
    bits_sent: int = 0
    iterations: int = 0
    witness: tuple = None
    debug: dict = field(default_factory=dict)

    @property
    def agrees(self):
        return self.oracle is None or self.found is None or self.found == self.oracle


@dataclass
class Report:
    header: dict
    config: dict
    runs: list
    aggregate: dict


def build_report(config, runs):
    """Assemble the report; the timestamp lives only in the header so that
    the rest of the document is byte-stable for deterministic configs."""
    found = [r.found for r in runs if r.found is not None]
    rounds = [r.rounds for r in runs]
    aggregate = {
        "runs": len(runs),
        "success_frequency": (sum(found) / len(found)) if found else None,
        "mean_rounds": sum(rounds) / len(rounds) if rounds else 0,
        "max_rounds": max(rounds, default=0),
        "oracle_agreement": all(r.agrees for r in runs),
    }
    header = {
        "tool": "cliquesim",
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return Report(header=header, config=config, runs=runs, aggregate=aggregate)


def write_report(report, path):
    doc = {
        "header": report.header,
        "config": report.config,
        "runs": [asdict(r) for r in report.runs],
        "aggregate": report.aggregate,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=list)
        fh.write("\n")


def write_csv(rows, path, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c) for c in columns})
