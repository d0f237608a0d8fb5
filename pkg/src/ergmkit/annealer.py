"""Simulated-annealing search for statistic-matched networks.

Searches graph space for a network whose statistic vector matches a
target (typically the observed network's statistics), by single-toggle
proposals accepted when they do not increase the weighted-L1 distance to
the target and otherwise with probability exp(-dE / temperature), under
a geometric cooling schedule.  Worse moves are accepted generously while
hot, so the chain escapes local optima, then the accept rule hardens as
the temperature drops.

The headline use is the improved-starting-value recipe: take the
observed statistics, draw an Erdos-Renyi network at the observed
density, anneal it onto the statistic fiber, and use that network's
MPLE as the MCMC-MLE starting value.  Because the MPLE is not a
function of the statistics alone, annealed networks from Erdos-Renyi
starts give systematically different (and better-behaved) starting
values than the observed network's own MPLE.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import _kernels
from .mple import MpleError, MpleResult, mple
from .network import Network, dyad_arrays, dyad_count
from .sampler import erdos_renyi
from .seeding import child_seed, generator
from .stats import Edges, ModelSpec, stat_vector

__all__ = [
    "FromObserved",
    "FromErdosRenyi",
    "FromNetwork",
    "AnnealConfig",
    "AnnealResult",
    "ImprovedStart",
    "RaoBlackwellResult",
    "NoStartFound",
    "energy",
    "default_weights",
    "anneal",
    "improved_start",
    "rao_blackwell_mple",
]

_CHUNK = 1 << 16


class NoStartFound(RuntimeError):
    """Every annealing attempt failed to produce a usable starting value."""


@dataclass(frozen=True)
class FromErdosRenyi:
    """Start from an Erdos-Renyi draw; p defaults to target edges / dyads."""

    p: float | None = None


@dataclass(frozen=True)
class FromNetwork:
    network: Network


@dataclass(frozen=True)
class FromObserved:
    """Start from the observed network after a randomizing burst of toggles.

    Starting exactly at the observed network would terminate immediately
    (its energy is already zero), so this mode first scrambles
    `perturb_toggles` uniformly random dyads (default: the observed edge
    count) and lets the annealer find its way back onto the fiber
    somewhere else.  Used to regenerate observed-start MPLE clouds.
    """

    perturb_toggles: int | None = None


InitMode = Union[FromObserved, FromErdosRenyi, FromNetwork]


@dataclass
class AnnealConfig:
    initial_temperature: float | None = None   # None: calibrated from probe toggles
    cooling_rate: float = 0.999
    steps_per_temperature: int | None = None   # None: one dyad count
    max_steps: int = 1_000_000
    target_tolerance: float | None = None      # None: 0 for all-integer statistics
    stat_weights: np.ndarray | None = None     # None: 1 / max(1, |target|)
    init: InitMode = field(default_factory=FromErdosRenyi)
    seed: int = 0
    trace_stride: int = 0                      # 0: no energy trace
    checkpoint_every: int = 10_000
    stall_window_dyads: int = 50
    max_reheats: int = 3

    def __post_init__(self):
        if not (0.0 < self.cooling_rate < 1.0):
            raise ValueError("cooling_rate must be in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.initial_temperature is not None and self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be positive")
        if self.target_tolerance is not None and self.target_tolerance < 0:
            raise ValueError("target_tolerance must be >= 0")


@dataclass
class AnnealResult:
    network: Network
    achieved_distance: float
    steps_used: int
    success: bool
    final_stats: np.ndarray
    energy_trace: np.ndarray | None = None
    checkpoint_drift: float = 0.0
    initial_temperature: float = 0.0
    final_temperature: float = 0.0


def default_weights(target: np.ndarray) -> np.ndarray:
    """Scale-normalizing weights 1 / max(1, |target_k|)."""
    target = np.asarray(target, dtype=np.float64)
    return 1.0 / np.maximum(1.0, np.abs(target))


def energy(
    spec: ModelSpec,
    net: Network,
    target: np.ndarray,
    weights: np.ndarray | None = None,
) -> float:
    """Weighted L1 distance of T(net) from the target; 0 iff exact match
    when every term is integer-valued."""
    target = np.asarray(target, dtype=np.float64)
    w = default_weights(target) if weights is None else np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("stat weights must be positive")
    return float(w @ np.abs(stat_vector(spec, net) - target))


def _resolve_init(
    spec: ModelSpec,
    target: np.ndarray,
    n: int,
    init: InitMode,
    rng: np.random.Generator,
    observed: Network | None,
) -> Network:
    if isinstance(init, FromNetwork):
        if init.network.n != n:
            raise ValueError("init network node count does not match n")
        return init.network.copy()
    if isinstance(init, FromErdosRenyi):
        p = init.p
        if p is None:
            p = _target_density(spec, target, n)
        return erdos_renyi(n, p, rng)
    if isinstance(init, FromObserved):
        if observed is None:
            raise ValueError("FromObserved initialization requires the observed network")
        if observed.n != n:
            raise ValueError("observed network node count does not match n")
        net = observed.copy()
        k = init.perturb_toggles
        if k is None:
            k = max(observed.edge_count, 1)
        rows, cols = dyad_arrays(n)
        d = dyad_count(n)
        for idx in rng.integers(0, d, size=k):
            net.toggle(int(rows[idx]), int(cols[idx]))
        return net
    raise TypeError(f"unknown init mode {init!r}")


def _target_density(spec: ModelSpec, target: np.ndarray, n: int) -> float:
    for t, term in enumerate(spec.terms):
        if isinstance(term, Edges):
            return min(max(float(target[t]) / dyad_count(n), 0.0), 1.0)
    raise ValueError(
        "FromErdosRenyi without p requires an edges term to infer the density"
    )


def _calibrate_temperature(
    spec: ModelSpec,
    net: Network,
    target: np.ndarray,
    weights: np.ndarray,
    rng: np.random.Generator,
    probes: int = 1000,
    accept_goal: float = 0.8,
) -> float:
    """Probe random toggles and pick T0 so worse moves start ~80% accepted."""
    from .stats import stat_delta_on_toggle

    n = net.n
    d = dyad_count(n)
    rows, cols = dyad_arrays(n)
    stats = stat_vector(spec, net)
    e0 = float(weights @ np.abs(stats - target))
    worse = []
    for idx in rng.integers(0, d, size=probes):
        i, j = int(rows[idx]), int(cols[idx])
        delta = stat_delta_on_toggle(spec, net, (i, j))
        de = float(weights @ np.abs(stats + delta - target)) - e0
        if de > 0:
            worse.append(de)
    if not worse:
        return 1.0
    return float(np.mean(worse) / -np.log(accept_goal))


def anneal(
    spec: ModelSpec,
    target: np.ndarray,
    n: int,
    config: AnnealConfig,
    observed: Network | None = None,
) -> AnnealResult:
    """Search for a network whose statistics match `target` within the
    configured tolerance; failure surfaces as success=False, not an error.

    Energy is recomputed from scratch every `checkpoint_every` steps; the
    largest discrepancy against the running statistics is reported (it is
    exactly zero for all-integer models).  The returned network is the
    best state visited, re-verified against the target from scratch.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (spec.q,):
        raise ValueError(f"target must have shape ({spec.q},)")
    weights = (default_weights(target) if config.stat_weights is None
               else np.asarray(config.stat_weights, dtype=np.float64))
    if np.any(weights <= 0):
        raise ValueError("stat weights must be positive")
    eps = config.target_tolerance
    if eps is None:
        if not spec.integer_valued().all():
            raise ValueError(
                "target_tolerance is required when the model has continuous statistics"
            )
        eps = 0.0

    rng = generator(config.seed)
    net = _resolve_init(spec, target, n, config.init, rng, observed)
    tbl = spec.compiled(n)
    rows, cols = dyad_arrays(n)
    d = dyad_count(n)

    words = net.words.copy()
    deg = net.degrees()
    stats = stat_vector(spec, net)
    e0 = float(weights @ np.abs(stats - target))
    if e0 <= eps:
        t_init = config.initial_temperature or 0.0
        return AnnealResult(
            network=net, achieved_distance=e0, steps_used=0, success=True,
            final_stats=stats, initial_temperature=t_init,
            final_temperature=t_init,
        )

    t0 = config.initial_temperature
    if t0 is None:
        t0 = _calibrate_temperature(spec, net, target, weights, rng)
    spt = config.steps_per_temperature if config.steps_per_temperature is not None else d
    stall_window = config.stall_window_dyads * d

    fstate = np.array([t0, e0, 0.0], dtype=np.float64)
    istate = np.zeros(6, dtype=np.int64)
    best_words = words.copy()
    best_stats = stats.copy()
    trace = (np.empty(config.max_steps // config.trace_stride + 2, dtype=np.float64)
             if config.trace_stride > 0 else np.empty(0, dtype=np.float64))

    remaining = config.max_steps
    while remaining > 0 and istate[5] == 0:
        chunk = min(_CHUNK, remaining)
        u_prop = rng.random(chunk)
        u_acc = rng.random(chunk)
        consumed = _kernels.anneal_run(
            tbl.dgain, tbl.nweight, tbl.is_triangle, tbl.phi, tbl.is_nodecov,
            words, deg, stats, target, weights, rows, cols,
            u_prop, u_acc, fstate, istate,
            config.cooling_rate, spt, eps, t0 * 0.5, stall_window,
            config.max_reheats, config.checkpoint_every,
            trace, config.trace_stride,
            best_words, best_stats,
        )
        remaining -= int(consumed)

    result_net = Network.__new__(Network)
    result_net.n = n
    result_net.words = best_words
    result_net._edge_count = 0
    result_net._edge_count = result_net.recount_edges()
    final_stats = stat_vector(spec, result_net)
    achieved = float(weights @ np.abs(final_stats - target))
    return AnnealResult(
        network=result_net,
        achieved_distance=achieved,
        steps_used=int(istate[0]),
        success=bool(achieved <= eps),
        final_stats=final_stats,
        energy_trace=trace[: int(istate[4])].copy() if config.trace_stride > 0 else None,
        checkpoint_drift=float(fstate[2]),
        initial_temperature=t0,
        final_temperature=float(fstate[0]),
    )


@dataclass
class ImprovedStart:
    theta: np.ndarray
    mple_result: MpleResult
    anneal_result: AnnealResult
    attempts_used: int


def improved_start(
    spec: ModelSpec,
    net_obs: Network,
    config: AnnealConfig | None = None,
    attempts: int = 5,
) -> ImprovedStart:
    """Improved MCMC-MLE starting value from an annealed statistic match.

    Recipe: take T(observed); draw an Erdos-Renyi network at the observed
    density; anneal it to match the statistics; return the MPLE of the
    matched network.  Failed anneals or separated MPLEs trigger fresh
    attempts with derived seeds, up to `attempts`; raises NoStartFound
    after the last (callers may fall back to the observed network's MPLE).
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    if config is None:
        config = AnnealConfig()
    t_obs = stat_vector(spec, net_obs)
    p = net_obs.density()
    failures: list[str] = []
    for a in range(attempts):
        cfg = replace(config, seed=child_seed(config.seed, a),
                      init=FromErdosRenyi(p))
        result = anneal(spec, t_obs, net_obs.n, cfg)
        if not result.success:
            failures.append(f"attempt {a}: distance {result.achieved_distance:.4g}")
            continue
        try:
            fit = mple(spec, result.network)
        except MpleError as exc:
            failures.append(f"attempt {a}: {exc}")
            continue
        return ImprovedStart(
            theta=fit.theta, mple_result=fit, anneal_result=result,
            attempts_used=a + 1,
        )
    raise NoStartFound(
        f"no annealed starting value in {attempts} attempts: " + "; ".join(failures)
    )


@dataclass
class RaoBlackwellResult:
    theta: np.ndarray
    estimates: np.ndarray   # (successes, q) individual MPLEs
    spread: np.ndarray      # per-coordinate max - min
    failures: int


def rao_blackwell_mple(
    spec: ModelSpec,
    target: np.ndarray,
    n: int,
    config: AnnealConfig,
    m: int,
) -> RaoBlackwellResult:
    """EXPERIMENTAL: average MPLEs over m annealed statistic matches.

    Approximates the conditional expectation of the MPLE given the
    statistics by the coordinate-wise mean over independently annealed
    networks on the fiber.  The annealer's sampling distribution over the
    fiber is not characterized, so this is exploratory output only;
    failed replicates are excluded and counted.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    estimates = []
    failures = 0
    for k in range(m):
        cfg = replace(config, seed=child_seed(config.seed, 2, k))
        result = anneal(spec, target, n, cfg)
        if not result.success:
            failures += 1
            continue
        try:
            fit = mple(spec, result.network)
        except MpleError:
            failures += 1
            continue
        estimates.append(fit.theta)
    if not estimates:
        raise NoStartFound(f"all {m} annealing replicates failed")
    est = np.array(estimates)
    return RaoBlackwellResult(
        theta=est.mean(axis=0),
        estimates=est,
        spread=est.max(axis=0) - est.min(axis=0),
        failures=failures,
    )
