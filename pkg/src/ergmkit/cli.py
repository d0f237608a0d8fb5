"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 numerical failure (separation,
no annealed start, nonexistent MLE when the command must produce one),
4 I/O error (missing files, parse errors).
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .annealer import AnnealConfig, FromErdosRenyi, FromObserved, NoStartFound, improved_start
from .exact import build_table, exact_mle, log_likelihood, mean_value
from .io import ExperimentReport, PreprocessMode, Timer, load_network, write_network
from .mcmle import McmleConfig, mcmle_fit
from .mple import MpleError, mple
from .network import EdgeListParseError, Network
from .sampler import SamplerConfig, TieNoTie, UniformDyad, default_config, sample
from .seeding import child_seed
from .stats import ModelSpec, parse_model_config, stat_vector

EXIT_NUMERICAL = 3
EXIT_IO = 4


class CliState:
    def __init__(self, seed: int, threads: int | None, output: str | None, fmt: str):
        self.seed = seed
        self.threads = threads
        self.output = output
        self.format = fmt


pass_state = click.make_pass_decorator(CliState)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Root seed; all task seeds derive from it.")
@click.option("--threads", type=int, default=None,
              help="Worker threads for parallel kernels.")
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Write the result here instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True, help="Output format for scalar results.")
@click.version_option()
@click.pass_context
def main(ctx, seed, threads, output, fmt):
    """ERGM estimation toolkit: statistics, MPLE, MCMC MLE, exact small-n
    oracle, and annealed starting values."""
    if threads is not None:
        import numba

        numba.set_num_threads(threads)
    ctx.obj = CliState(seed, threads, output, fmt)


def _emit(state: CliState, text: str) -> None:
    if state.output:
        Path(state.output).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _load_model(path: str) -> ModelSpec:
    p = Path(path)
    return parse_model_config(p.read_text(), base_dir=p.parent)


def _load_net(path: str, preprocess: str):
    mode = PreprocessMode(preprocess)
    return load_network(path, mode)


def _json_result(state: CliState, payload: dict) -> str:
    if state.format == "csv":
        lines = ["key,value"]
        for k, v in payload.items():
            lines.append(f"{k},{json.dumps(v) if not isinstance(v, str) else v}")
        return "\n".join(lines) + "\n"
    return json.dumps(payload, indent=2, default=_np_default)


def _np_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value)}")


_PREPROCESS = click.option(
    "--preprocess", type=click.Choice([m.value for m in PreprocessMode]),
    default=PreprocessMode.AS_IS.value, show_default=True,
    help="Edge-list preprocessing policy.",
)


def _read_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _sampler_from_config(cfg: dict, n: int, seed: int) -> SamplerConfig:
    base = default_config(n, seed=seed)
    if "burn_in" in cfg:
        base = replace(base, burn_in=int(cfg["burn_in"]))
    if "interval" in cfg:
        base = replace(base, interval=int(cfg["interval"]))
    if "sample_size" in cfg:
        base = replace(base, sample_size=int(cfg["sample_size"]))
    prop = cfg.get("proposal", "uniform")
    if prop == "tnt":
        base = replace(base, proposal=TieNoTie(float(cfg.get("tie_prob", 0.5))))
    elif prop == "uniform":
        base = replace(base, proposal=UniformDyad())
    else:
        raise click.UsageError(f"unknown proposal {prop!r}")
    return base


def _anneal_from_config(cfg: dict, q: int, seed: int) -> AnnealConfig:
    kwargs = {}
    for key in ("initial_temperature", "cooling_rate", "target_tolerance"):
        if key in cfg:
            kwargs[key] = float(cfg[key])
    for key in ("steps_per_temperature", "max_steps", "stall_window_dyads",
                "max_reheats", "checkpoint_every"):
        if key in cfg:
            kwargs[key] = int(cfg[key])
    if cfg.get("uniform_weights"):
        kwargs["stat_weights"] = np.ones(q)
    return AnnealConfig(seed=seed, **kwargs)


def _mcmle_from_config(cfg: dict, sampler: SamplerConfig, seed: int) -> McmleConfig:
    kwargs = {}
    if "max_outer_iterations" in cfg:
        kwargs["max_outer_iterations"] = int(cfg["max_outer_iterations"])
    if "step_bound" in cfg:
        kwargs["step_bound"] = float(cfg["step_bound"])
    if "convergence_tolerance" in cfg:
        kwargs["convergence_tolerance"] = float(cfg["convergence_tolerance"])
    return McmleConfig(sampler=sampler, seed=seed, **kwargs)


@main.command("stats")
@click.option("--network", "network_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@_PREPROCESS
@pass_state
def cmd_stats(state, network_path, model_path, preprocess):
    """Sufficient statistics of a network under a model."""
    spec = _load_model(model_path)
    loaded = _load_net(network_path, preprocess)
    values = stat_vector(spec, loaded.network)
    payload = {
        "n": loaded.n,
        "edges": loaded.edge_count,
        "self_loops_dropped": loaded.self_loops_dropped,
        "duplicates_merged": loaded.duplicates_merged,
        "labels": spec.labels(),
        "values": values.tolist(),
    }
    _emit(state, _json_result(state, payload))


@main.command("mple")
@click.option("--network", "network_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@_PREPROCESS
@pass_state
def cmd_mple(state, network_path, model_path, preprocess):
    """Maximum pseudolikelihood estimate (logistic regression over dyads)."""
    spec = _load_model(model_path)
    loaded = _load_net(network_path, preprocess)
    result = mple(spec, loaded.network)
    payload = {
        "labels": spec.labels(),
        "theta": result.theta.tolist(),
        "covariance": result.covariance.tolist(),
        "converged": result.converged,
        "iterations": result.iterations,
        "max_abs_score": result.max_abs_score,
    }
    _emit(state, _json_result(state, payload))


@main.command("simulate")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--theta", "theta_csv", required=True,
              help="Comma-separated coefficients, one per model term.")
@click.option("--n", "n_nodes", type=int, default=None,
              help="Node count (defaults to the start network's).")
@click.option("--start", "start_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON sampler config (burn_in, interval, sample_size, proposal).")
@_PREPROCESS
@pass_state
def cmd_simulate(state, model_path, theta_csv, n_nodes, start_path, config_path, preprocess):
    """Sample statistic vectors from the model at theta (CSV output)."""
    spec = _load_model(model_path)
    theta = np.array([float(v) for v in theta_csv.split(",")])
    if start_path is not None:
        start = _load_net(start_path, preprocess).network
    elif n_nodes is not None:
        start = Network(n_nodes)
    else:
        raise click.UsageError("simulate needs --start or --n")
    cfg = _sampler_from_config(_read_config_file(config_path), start.n,
                               child_seed(state.seed, 1))
    batch = sample(spec, theta, start, cfg)
    lines = [",".join(["sample"] + spec.labels() + ["edge_count"])]
    for k in range(batch.stats.shape[0]):
        vals = ",".join(f"{v:.10g}" for v in batch.stats[k])
        lines.append(f"{k},{vals},{batch.edge_counts[k]}")
    _emit(state, "\n".join(lines) + "\n")


@main.command("mcmle")
@click.option("--network", "network_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--start", "start_mode", default="mple", show_default=True,
              help="mple | anneal | theta:<v1,v2,...>")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config with sampler/mcmle/anneal sections.")
@_PREPROCESS
@pass_state
def cmd_mcmle(state, network_path, model_path, start_mode, config_path, preprocess):
    """Monte Carlo maximum likelihood fit."""
    spec = _load_model(model_path)
    loaded = _load_net(network_path, preprocess)
    net = loaded.network
    cfg = _read_config_file(config_path)
    report = ExperimentReport(subcommand="mcmle", seed=state.seed, config=cfg)
    report.add_input_file("network", network_path)

    with Timer(report.timings_s, "start_value"):
        if start_mode == "mple":
            theta0 = mple(spec, net).theta
        elif start_mode == "anneal":
            acfg = _anneal_from_config(cfg.get("anneal", {}), spec.q,
                                       child_seed(state.seed, 2))
            theta0 = improved_start(spec, net, acfg).theta
        elif start_mode.startswith("theta:"):
            theta0 = np.array([float(v) for v in start_mode[6:].split(",")])
            if theta0.shape != (spec.q,):
                raise click.UsageError(
                    f"--start theta: expected {spec.q} values, got {theta0.size}")
        else:
            raise click.UsageError(f"unknown --start mode {start_mode!r}")

    sampler_cfg = _sampler_from_config(cfg.get("sampler", {}), net.n,
                                       child_seed(state.seed, 3))
    mcfg = _mcmle_from_config(cfg.get("mcmle", {}), sampler_cfg,
                              child_seed(state.seed, 4))
    with Timer(report.timings_s, "mcmle"):
        result = mcmle_fit(spec, net, theta0, mcfg)
    report.results = {
        "labels": spec.labels(),
        "theta0": theta0.tolist(),
        "theta": result.theta.tolist(),
        "status": result.status.value,
        "outer_iterations": result.outer_iterations,
        "final_moment_z": result.final_moment_z.tolist(),
        "trace": [
            {"theta": it.theta.tolist(), "moment_z": it.moment_z.tolist(),
             "ess": it.ess, "step_bound_used": it.step_bound_used}
            for it in result.trace
        ],
    }
    _emit(state, report.to_json())


@main.command("anneal-init")
@click.option("--network", "network_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--init", "init_mode", type=click.Choice(["er", "observed"]),
              default="er", show_default=True)
@click.option("--attempts", type=int, default=5, show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--matched-output", type=click.Path(), default=None,
              help="Write the matched network's edge list here.")
@_PREPROCESS
@pass_state
def cmd_anneal_init(state, network_path, model_path, init_mode, attempts,
                    config_path, matched_output, preprocess):
    """Improved MCMLE starting value via an annealed statistic match."""
    spec = _load_model(model_path)
    loaded = _load_net(network_path, preprocess)
    cfg = _read_config_file(config_path)
    acfg = _anneal_from_config(cfg.get("anneal", cfg), spec.q,
                               child_seed(state.seed, 2))
    if init_mode == "observed":
        acfg = replace(acfg, init=FromObserved())
    result = improved_start(spec, loaded.network, acfg, attempts=attempts)
    if matched_output:
        write_network(result.anneal_result.network, matched_output)
    payload = {
        "labels": spec.labels(),
        "theta0": result.theta.tolist(),
        "achieved_distance": result.anneal_result.achieved_distance,
        "steps": result.anneal_result.steps_used,
        "attempts_used": result.attempts_used,
    }
    _emit(state, _json_result(state, payload))


@main.command("cloud-experiment")
@click.option("--network", "network_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--replicates", type=int, default=100, show_default=True)
@click.option("--init", "init_mode", type=click.Choice(["er", "observed"]),
              default="er", show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@_PREPROCESS
@pass_state
def cmd_cloud(state, network_path, model_path, replicates, init_mode,
              config_path, preprocess):
    """MPLEs of annealed statistic-matched networks (CSV, one row each)."""
    from .experiments import anneal_mple_cloud, cloud_csv

    spec = _load_model(model_path)
    loaded = _load_net(network_path, preprocess)
    net = loaded.network
    target = stat_vector(spec, net)
    cfg = _read_config_file(config_path)
    acfg = _anneal_from_config(cfg.get("anneal", cfg), spec.q,
                               child_seed(state.seed, 5))
    if init_mode == "er":
        acfg = replace(acfg, init=FromErdosRenyi(net.density()))
    else:
        acfg = replace(acfg, init=FromObserved())
    rows = anneal_mple_cloud(spec, target, net.n, acfg, replicates, observed=net)
    _emit(state, cloud_csv(rows, spec.labels()))


@main.command("exact-mle")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--n", "n_nodes", type=int, required=True)
@click.option("--target", "target_csv", required=True,
              help="Comma-separated observed statistics, one per term.")
@click.option("--max-n-guard", type=int, default=9, show_default=True)
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None)
@pass_state
def cmd_exact_mle(state, model_path, n_nodes, target_csv, max_n_guard, cache_dir):
    """Exact MLE by exhaustive enumeration (small n only; table cached)."""
    spec = _load_model(model_path)
    t_obs = np.array([float(v) for v in target_csv.split(",")])
    if t_obs.shape != (spec.q,):
        raise click.UsageError(f"--target: expected {spec.q} values, got {t_obs.size}")
    table = build_table(spec, n_nodes, max_n_guard=max_n_guard, cache_dir=cache_dir)
    result = exact_mle(table, t_obs)
    payload = {
        "labels": spec.labels(),
        "exists": result.exists,
        "theta": None if result.theta is None else result.theta.tolist(),
        "loglik": result.loglik,
        "mean_value": None if result.mean_value is None else result.mean_value.tolist(),
        "recession_direction": None if result.recession_direction is None
        else result.recession_direction.tolist(),
        "table_support_size": int(table.counts.size),
    }
    _emit(state, _json_result(state, payload))
    if not result.exists:
        sys.exit(EXIT_NUMERICAL)


@main.command("figure")
@click.option("--which", required=True,
              type=click.Choice(["fig1", "fig4", "ecoli-clusters"]))
@click.option("--replicates", type=int, default=None)
@click.option("--init", "init_mode", type=click.Choice(["er", "observed"]),
              default="er", show_default=True)
@click.option("--report-output", type=click.Path(), default=None,
              help="Write the JSON run report here (CSV goes to --output).")
@pass_state
def cmd_figure(state, which, replicates, init_mode, report_output):
    """Regenerate the data behind one of the named experiments."""
    from .experiments import run_figure_experiments

    kwargs = {}
    if which == "ecoli-clusters":
        kwargs["init"] = init_mode
    report, csv_text = run_figure_experiments(which, replicates=replicates,
                                              seed=state.seed, **kwargs)
    if report_output:
        Path(report_output).write_text(report.to_json())
    _emit(state, csv_text)


def run() -> None:
    """Entry point with the documented exit-code mapping."""
    try:
        main(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(130)
    except (MpleError, NoStartFound) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except EdgeListParseError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ValueError as exc:
        # bad parameter combinations surfaced by the library layer
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
