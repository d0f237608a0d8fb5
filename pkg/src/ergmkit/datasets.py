"""Bundled datasets.

The packaged transcription-network file is a SYNTHETIC stand-in for the
E. coli operon regulation network: the original (Shen-Orr et al. 2002,
built on RegulonDB) is not redistributable with this package, so
`tools/make_ecoli_surrogate.py` generates a seeded surrogate matching
its documented summary properties - 418 nodes and exactly 519 edges
after the undirected/no-self-loops preprocessing, with a small set of
high-degree regulator hubs.  The raw file is a directed arc list
containing self-loops and duplicate arcs on purpose: preprocessing is
part of the method and is re-applied at load, never baked in.
"""

from __future__ import annotations

from importlib import resources

from .io import LoadedNetwork, PreprocessMode, load_network_text
from .stats import DegreeCount, Edges, GwDegree, ModelSpec

__all__ = ["ecoli_network", "ecoli_model", "ECOLI_NODES", "ECOLI_EDGES"]

ECOLI_NODES = 418
ECOLI_EDGES = 519

_DATA_PACKAGE = "ergmkit.data"
_ECOLI_FILE = "ecoli_trn_synthetic.edges"


def ecoli_dataset_text() -> str:
    return (resources.files(_DATA_PACKAGE) / _ECOLI_FILE).read_text()


def ecoli_network() -> LoadedNetwork:
    """The packaged network, preprocessed to undirected without self-loops.

    The result is validated against the published node/edge counts; a
    mismatch means the packaged file was corrupted and is an error, not
    something to adjust silently.
    """
    loaded = load_network_text(
        ecoli_dataset_text(), PreprocessMode.UNDIRECTED_NO_LOOPS
    )
    loaded.path = f"{_DATA_PACKAGE}/{_ECOLI_FILE}"
    if loaded.n != ECOLI_NODES or loaded.edge_count != ECOLI_EDGES:
        raise RuntimeError(
            f"packaged dataset has {loaded.n} nodes / {loaded.edge_count} edges, "
            f"expected {ECOLI_NODES} / {ECOLI_EDGES}"
        )
    return loaded


def ecoli_model() -> ModelSpec:
    """Edge count, node counts at degrees 2/3/4/6, and geometrically
    weighted degree with decay fixed at 0.25."""
    return ModelSpec([
        Edges(),
        DegreeCount(2),
        DegreeCount(3),
        DegreeCount(4),
        DegreeCount(6),
        GwDegree(0.25),
    ])


def ecoli_anneal_config(seed: int = 0, **overrides):
    """Annealing schedule tuned for the transcription-network scale.

    Uniform statistic weights: with scale-normalized weights the edges
    coordinate becomes so cheap (1/519 per unit) that entropy pushes the
    chain toward density 1/2 at any temperature hot enough to cross the
    degree-count barriers; uniform weights put all per-toggle deltas on
    one scale, and the matching tolerance of 2 asks for (near-)exact
    integer counts with the continuous gwdegree within a couple units.
    """
    import numpy as np

    from .annealer import AnnealConfig

    defaults = dict(
        seed=seed,
        target_tolerance=2.0,
        stat_weights=np.ones(6),
        initial_temperature=0.4,
        cooling_rate=0.999,
        steps_per_temperature=4096,
        max_steps=80_000_000,
        stall_window_dyads=10**6,
    )
    defaults.update(overrides)
    return AnnealConfig(**defaults)


def ecoli_sampler_config(seed: int = 0, **overrides):
    """Tie/no-tie sampler with the default burn-in/interval scaling; the
    uniform-dyad proposal cannot mix at density 0.006."""
    from .sampler import SamplerConfig, TieNoTie, default_config

    cfg = default_config(ECOLI_NODES, proposal=TieNoTie(0.5), seed=seed)
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg
