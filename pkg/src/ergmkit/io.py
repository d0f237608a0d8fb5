"""Network file loading with preprocessing, and reproducible run reports.

Loaders consume the edge-list text format of `network` (header line
``n <count>``, one ``<i> <j>`` pair per line).  Preprocessing policy:

* AS_IS: the file is presumed to already describe a simple undirected
  network; self-loops and duplicate pairs are still dropped/merged but
  logged as warnings.
* UNDIRECTED_NO_LOOPS: the file is a directed arc list; arcs are
  symmetrized into undirected ties, self-loops dropped, and both counts
  reported silently (this is the documented preprocessing recipe for
  transcription-network data).
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .network import Network, format_edgelist_text, parse_edgelist_text

__all__ = [
    "PreprocessMode",
    "LoadedNetwork",
    "load_network",
    "load_network_text",
    "write_network",
    "ExperimentReport",
    "file_digest",
]

log = logging.getLogger(__name__)


class PreprocessMode(enum.Enum):
    AS_IS = "as-is"
    UNDIRECTED_NO_LOOPS = "undirected-no-loops"


@dataclass
class LoadedNetwork:
    network: Network
    path: str | None
    arcs_read: int
    self_loops_dropped: int
    duplicates_merged: int
    digest: str | None = None

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def edge_count(self) -> int:
        return self.network.edge_count


def load_network_text(
    text: str, mode: PreprocessMode = PreprocessMode.AS_IS
) -> LoadedNetwork:
    n, arcs = parse_edgelist_text(text)
    net = Network(n)
    self_loops = 0
    duplicates = 0
    for i, j in arcs:
        if i == j:
            self_loops += 1
            continue
        if net.has_edge(i, j):
            duplicates += 1
            continue
        net.add_edge(i, j)
    if mode is PreprocessMode.AS_IS and (self_loops or duplicates):
        log.warning(
            "edge list contained %d self-loops and %d duplicate pairs (ignored)",
            self_loops, duplicates,
        )
    return LoadedNetwork(
        network=net,
        path=None,
        arcs_read=len(arcs),
        self_loops_dropped=self_loops,
        duplicates_merged=duplicates,
    )


def load_network(
    path: str | Path, mode: PreprocessMode = PreprocessMode.AS_IS
) -> LoadedNetwork:
    path = Path(path)
    raw = path.read_bytes()
    loaded = load_network_text(raw.decode("utf-8"), mode)
    loaded.path = str(path)
    loaded.digest = hashlib.sha256(raw).hexdigest()
    return loaded


def write_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(format_edgelist_text(net))


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    return value


@dataclass
class ExperimentReport:
    """Self-contained record of one run: inputs, seeds, config, results.

    Re-running the named subcommand with the embedded config and seed
    reproduces the results bit-exactly.
    """

    subcommand: str
    seed: int
    config: dict[str, Any]
    inputs: dict[str, Any] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    timings_s: dict[str, float] = field(default_factory=dict)
    schema_version: int = 1
    tool: str = "ergmkit"

    def add_input_file(self, name: str, path: str | Path) -> None:
        self.inputs[name] = {"path": str(path), "sha256": file_digest(path)}

    def to_json(self, indent: int = 2) -> str:
        from . import __version__

        payload = {
            "tool": self.tool,
            "version": __version__,
            "schema_version": self.schema_version,
            "subcommand": self.subcommand,
            "seed": self.seed,
            "config": _jsonable(self.config),
            "inputs": _jsonable(self.inputs),
            "results": _jsonable(self.results),
            "timings_s": _jsonable(self.timings_s),
        }
        return json.dumps(payload, indent=indent)


class Timer:
    """Accumulates wall-clock timings into a report dict."""

    def __init__(self, sink: dict[str, float], name: str):
        self.sink = sink
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.sink[self.name] = self.sink.get(self.name, 0.0) + time.perf_counter() - self.t0
        return False
