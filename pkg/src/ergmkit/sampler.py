"""Metropolis-Hastings sampling from an ERGM, plus Erdos-Renyi draws.

Single-toggle MH: propose a dyad, accept with probability
min(1, exp(s * theta . change) * H) where s is +1 for an addition, -1
for a deletion, and H the proposal-asymmetry correction (1 for the
uniform-dyad proposal).  The tie/no-tie proposal picks an existing tie
with probability tie_prob (else a uniform dyad), which is what makes
sparse networks mix; its Hastings factor is computed exactly from the
current tie count.

Statistics are accumulated incrementally along the chain; retained
networks are optional to bound memory.  Chains are reproducible: all
randomness comes from PCG64 streams seeded through `seeding`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .network import Network, dyad_arrays, dyad_count, linear_dyad_index
from .seeding import generator
from .stats import ModelSpec, change_vector, stat_vector

__all__ = [
    "UniformDyad",
    "TieNoTie",
    "SamplerConfig",
    "SampleBatch",
    "default_config",
    "mh_step",
    "sample",
    "erdos_renyi",
    "state_occupancy",
]

_CHUNK = 1 << 20


@dataclass(frozen=True)
class UniformDyad:
    """Propose a uniformly random dyad (symmetric; Hastings factor 1)."""


@dataclass(frozen=True)
class TieNoTie:
    """With probability tie_prob propose a uniformly random existing tie,
    otherwise a uniformly random dyad."""

    tie_prob: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.tie_prob < 1.0):
            raise ValueError("tie_prob must be in (0, 1)")


Proposal = UniformDyad | TieNoTie


@dataclass
class SamplerConfig:
    burn_in: int
    interval: int
    sample_size: int
    proposal: Proposal = field(default_factory=UniformDyad)
    seed: int = 0
    keep_networks: bool = False

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")


def default_config(n: int, **overrides) -> SamplerConfig:
    """Burn-in of 10 dyad counts, spacing of one dyad count, 1000 draws."""
    d = dyad_count(n)
    cfg = SamplerConfig(burn_in=10 * d, interval=d, sample_size=1000)
    return replace(cfg, **overrides) if overrides else cfg


@dataclass
class SampleBatch:
    stats: np.ndarray         # (L, q) statistic vectors of retained networks
    edge_counts: np.ndarray   # (L,) int64
    final_network: Network
    acceptance_rate: float
    networks: list[Network] | None = None


def _log_hastings(tie: int, m: int, d: int, pi: float) -> float:
    """Log proposal-asymmetry correction for the tie/no-tie proposal.

    tie is the current value at the proposed dyad, m the current tie
    count.  With m == 0 the tie branch is impossible and the proposal
    collapses to uniform over dyads (and symmetrically for the reverse
    move when a deletion empties the network)."""
    if tie == 0:
        if m == 0:
            return math.log(pi * d + (1.0 - pi))
        return math.log(pi * d / ((1.0 - pi) * (m + 1)) + 1.0)
    if m == 1:
        return -math.log(pi * d + (1.0 - pi))
    return math.log((1.0 - pi) / d) - math.log(pi / m + (1.0 - pi) / d)


def mh_step(
    spec: ModelSpec,
    net: Network,
    theta: np.ndarray,
    proposal: Proposal,
    rng: np.random.Generator,
) -> tuple[Network, bool]:
    """One MH step, mutating `net` in place; returns (net, accepted).

    Reference implementation of the kernel's acceptance rule; use
    `sample` for long chains.
    """
    theta = np.asarray(theta, dtype=np.float64)
    d = dyad_count(net.n)
    rows, cols = dyad_arrays(net.n)
    m = net.edge_count
    if isinstance(proposal, TieNoTie) and m > 0 and rng.random() < proposal.tie_prob:
        ties = list(net.edges())
        i, j = ties[int(rng.random() * m) % m]
    else:
        k = min(int(rng.random() * d), d - 1)
        i, j = int(rows[k]), int(cols[k])
    delta = change_vector(spec, net, (i, j))
    tie = 1 if net.has_edge(i, j) else 0
    logr = float(theta @ delta)
    if tie:
        logr = -logr
    if isinstance(proposal, TieNoTie):
        logr += _log_hastings(tie, m, d, proposal.tie_prob)
    accepted = logr >= 0.0 or rng.random() < math.exp(logr)
    if accepted:
        net.toggle(i, j)
    return net, accepted


@dataclass
class _ChainState:
    """Kernel-side mutable chain state."""

    words: np.ndarray
    deg: np.ndarray
    stats: np.ndarray
    edges_d: np.ndarray
    slot: np.ndarray
    counters: np.ndarray

    @classmethod
    def from_network(cls, spec: ModelSpec, net: Network) -> "_ChainState":
        n = net.n
        d = dyad_count(n)
        words = net.words.copy()
        deg = net.degrees()
        stats = stat_vector(spec, net)
        edges_d = np.zeros(max(d, 1), dtype=np.int64)
        slot = np.full(max(d, 1), -1, dtype=np.int64)
        k = 0
        for i, j in net.edges():
            lin = linear_dyad_index(i, j, n)
            edges_d[k] = lin
            slot[lin] = k
            k += 1
        counters = np.array([net.edge_count, 0], dtype=np.int64)
        return cls(words, deg, stats, edges_d, slot, counters)

    def network(self, n: int) -> Network:
        net = Network.__new__(Network)
        net.n = n
        net.words = self.words.copy()
        net._edge_count = int(self.counters[0])
        return net


def _run_steps(
    spec: ModelSpec,
    state: _ChainState,
    theta: np.ndarray,
    proposal: Proposal,
    rng: np.random.Generator,
    steps: int,
    rows: np.ndarray,
    cols: np.ndarray,
    track: bool = False,
    state_counts: np.ndarray | None = None,
    code_state: np.ndarray | None = None,
) -> None:
    tbl = spec.compiled(state.deg.shape[0])
    kind = 1 if isinstance(proposal, TieNoTie) else 0
    pi = proposal.tie_prob if isinstance(proposal, TieNoTie) else 0.0
    if state_counts is None:
        state_counts = np.zeros(1, dtype=np.int64)
        code_state = np.zeros(1, dtype=np.int64)
    done = 0
    while done < steps:
        k = min(_CHUNK, steps - done)
        u_prop = rng.random(k)
        u_sel = rng.random(k)
        u_acc = rng.random(k)
        _kernels.chain_run(
            tbl.dgain, tbl.nweight, tbl.is_triangle,
            state.words, state.deg, state.stats, theta,
            rows, cols, kind, pi,
            state.edges_d, state.slot, state.counters,
            u_prop, u_sel, u_acc,
            track, state_counts, code_state,
        )
        done += k


def _resync_continuous(spec: ModelSpec, state: _ChainState) -> None:
    # integer coordinates are exact under incremental float updates;
    # continuous ones are refreshed from the degree sequence
    tbl = spec.compiled(state.deg.shape[0])
    for t in range(spec.q):
        if tbl.integer_mask[t]:
            continue
        if tbl.is_nodecov[t]:
            state.stats[t] = float(tbl.nweight[t] @ state.deg)
        else:
            state.stats[t] = float(tbl.phi[t][state.deg].sum())


def sample(
    spec: ModelSpec,
    theta: np.ndarray,
    start: Network,
    config: SamplerConfig,
) -> SampleBatch:
    """L statistic vectors retained after burn-in, spaced by `interval`.

    Bit-identical across runs for a fixed config (seed included).
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (spec.q,):
        raise ValueError(f"theta must have shape ({spec.q},)")
    n = start.n
    rows, cols = dyad_arrays(n)
    rng = generator(config.seed)
    state = _ChainState.from_network(spec, start)
    _run_steps(spec, state, theta, config.proposal, rng, config.burn_in, rows, cols)

    ell = config.sample_size
    out_stats = np.empty((ell, spec.q), dtype=np.float64)
    out_edges = np.empty(ell, dtype=np.int64)
    nets: list[Network] | None = [] if config.keep_networks else None
    for k in range(ell):
        _run_steps(spec, state, theta, config.proposal, rng, config.interval, rows, cols)
        _resync_continuous(spec, state)
        out_stats[k] = state.stats
        out_edges[k] = state.counters[0]
        if nets is not None:
            nets.append(state.network(n))
    total = config.burn_in + ell * config.interval
    rate = float(state.counters[1]) / total if total > 0 else 0.0
    return SampleBatch(
        stats=out_stats,
        edge_counts=out_edges,
        final_network=state.network(n),
        acceptance_rate=rate,
        networks=nets,
    )


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Network:
    """Each dyad present independently with probability p."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must be in [0, 1], got {p}")
    rows, cols = dyad_arrays(n)
    net = Network(n)
    if n < 2:
        return net
    present = np.nonzero(rng.random(dyad_count(n)) < p)[0]
    for d in present:
        net.add_edge(int(rows[d]), int(cols[d]))
    return net


def state_occupancy(
    spec: ModelSpec,
    theta: np.ndarray,
    start: Network,
    steps: int,
    seed: int = 0,
    proposal: Proposal = UniformDyad(),
) -> np.ndarray:
    """Per-network visit counts over a raw chain (validation tool).

    Indexes networks by their dyad bitmask in linear dyad order, so it is
    only available for dyad_count(n) <= 20.  Used to compare the chain's
    empirical stationary distribution against exact probabilities.
    """
    n = start.n
    d = dyad_count(n)
    if d > 20:
        raise ValueError("state occupancy tracking is limited to dyad_count <= 20")
    theta = np.asarray(theta, dtype=np.float64)
    rows, cols = dyad_arrays(n)
    rng = generator(seed)
    state = _ChainState.from_network(spec, start)
    counts = np.zeros(1 << d, dtype=np.int64)
    code = np.zeros(1, dtype=np.int64)
    for i, j in start.edges():
        code[0] ^= 1 << linear_dyad_index(i, j, n)
    _run_steps(
        spec, state, theta, proposal, rng, steps, rows, cols,
        track=True, state_counts=counts, code_state=code,
    )
    return counts
