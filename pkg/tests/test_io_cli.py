import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from ergmkit.cli import main
from ergmkit.datasets import ecoli_model, ecoli_network
from ergmkit.io import (
    ExperimentReport,
    PreprocessMode,
    load_network,
    load_network_text,
    write_network,
)
from ergmkit.network import EdgeListParseError, Network


DIRECTED_SAMPLE = """\
n 6
0 1
1 0
2 2
0 1
3 4
4 3
2 5
"""


def test_load_undirected_no_loops_counts():
    loaded = load_network_text(DIRECTED_SAMPLE, PreprocessMode.UNDIRECTED_NO_LOOPS)
    # {0,1} appears three times (two reciprocal + one duplicate), {3,4} twice
    assert loaded.network.edge_count == 3
    assert loaded.self_loops_dropped == 1
    assert loaded.duplicates_merged == 3
    assert loaded.arcs_read == 7
    assert loaded.n == 6


def test_load_as_is_warns_but_loads(caplog):
    import logging

    with caplog.at_level(logging.WARNING, logger="ergmkit.io"):
        loaded = load_network_text(DIRECTED_SAMPLE, PreprocessMode.AS_IS)
    assert loaded.network.edge_count == 3
    assert any("self-loops" in rec.message for rec in caplog.records)


def test_empty_file_with_header():
    loaded = load_network_text("n 5\n")
    assert loaded.n == 5 and loaded.edge_count == 0


def test_load_network_file_digest(tmp_path):
    p = tmp_path / "net.edges"
    p.write_text("n 4\n0 1\n2 3\n")
    loaded = load_network(p, PreprocessMode.AS_IS)
    assert loaded.path == str(p)
    assert len(loaded.digest) == 64
    assert loaded.edge_count == 2


def test_write_network_round_trip(tmp_path):
    net = Network.from_edges(5, [(0, 1), (2, 4)])
    p = tmp_path / "out.edges"
    write_network(net, p)
    assert load_network(p).network == net


def test_parse_error_propagates(tmp_path):
    p = tmp_path / "bad.edges"
    p.write_text("n 3\n0 9\n")
    with pytest.raises(EdgeListParseError, match="line 2"):
        load_network(p)


def test_ecoli_dataset_counts():
    loaded = ecoli_network()
    assert loaded.n == 418
    assert loaded.edge_count == 519
    assert loaded.network.density() == pytest.approx(519 / 87153, rel=1e-12)
    # raw file exercises the preprocessing path
    assert loaded.self_loops_dropped >= 1
    assert loaded.duplicates_merged >= 1
    spec = ecoli_model()
    assert spec.labels() == ["edges", "degree2", "degree3", "degree4",
                             "degree6", "gwdegree0.25"]


def test_experiment_report_json(tmp_path):
    report = ExperimentReport(subcommand="mple", seed=7, config={"a": 1})
    p = tmp_path / "in.edges"
    p.write_text("n 3\n0 1\n")
    report.add_input_file("network", p)
    report.results = {"theta": np.array([1.0, 2.0]), "status": "ok"}
    payload = json.loads(report.to_json())
    assert payload["subcommand"] == "mple"
    assert payload["seed"] == 7
    assert payload["results"]["theta"] == [1.0, 2.0]
    assert payload["inputs"]["network"]["sha256"]


# -- CLI ----------------------------------------------------------------


@pytest.fixture()
def workdir(tmp_path):
    (tmp_path / "model.txt").write_text("edges\ntriangles\n")
    (tmp_path / "edges_only.txt").write_text("edges\n")
    (tmp_path / "net.edges").write_text("n 5\n0 1\n1 2\n0 2\n2 3\n")
    return tmp_path


def test_cli_stats(workdir):
    runner = CliRunner()
    result = runner.invoke(main, ["stats", "--network", str(workdir / "net.edges"),
                                  "--model", str(workdir / "model.txt")])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["values"] == [4.0, 1.0]
    assert payload["labels"] == ["edges", "triangles"]


def test_cli_mple_json(workdir):
    runner = CliRunner()
    result = runner.invoke(main, ["mple", "--network", str(workdir / "net.edges"),
                                  "--model", str(workdir / "model.txt")])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["converged"] is True
    assert len(payload["theta"]) == 2


def test_cli_simulate_csv(workdir, tmp_path):
    cfg = tmp_path / "sampler.json"
    cfg.write_text('{"burn_in": 100, "interval": 5, "sample_size": 50, "proposal": "tnt"}')
    runner = CliRunner()
    result = runner.invoke(main, [
        "--seed", "3", "simulate", "--model", str(workdir / "edges_only.txt"),
        "--theta", "-1.0", "--n", "6", "--config", str(cfg),
    ])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "sample,edges,edge_count"
    assert len(lines) == 51


def test_cli_simulate_deterministic(workdir, tmp_path):
    runner = CliRunner()
    args = ["--seed", "9", "simulate", "--model", str(workdir / "edges_only.txt"),
            "--theta", "0.0", "--n", "5"]
    out1 = runner.invoke(main, args).output
    out2 = runner.invoke(main, args).output
    assert out1 == out2


def test_cli_exact_mle(workdir, tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "exact-mle", "--model", str(workdir / "edges_only.txt"),
        "--n", "5", "--target", "4", "--cache-dir", str(tmp_path / "cache"),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["exists"] is True
    assert payload["theta"][0] == pytest.approx(np.log(4 / 6), abs=1e-8)


def test_cli_exact_mle_nonexistent_exits_3(workdir, tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "exact-mle", "--model", str(workdir / "edges_only.txt"),
        "--n", "5", "--target", "0", "--cache-dir", str(tmp_path / "cache"),
    ])
    assert result.exit_code == 3


def test_cli_anneal_init(workdir, tmp_path):
    runner = CliRunner()
    matched = tmp_path / "matched.edges"
    result = runner.invoke(main, [
        "--seed", "5", "anneal-init",
        "--network", str(workdir / "net.edges"),
        "--model", str(workdir / "model.txt"),
        "--attempts", "3", "--matched-output", str(matched),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["achieved_distance"] == 0.0
    matched_net = load_network(matched).network
    from ergmkit import Edges, ModelSpec, Triangles
    from ergmkit.stats import stat_vector

    spec = ModelSpec([Edges(), Triangles()])
    assert np.array_equal(stat_vector(spec, matched_net), [4.0, 1.0])


def test_cli_cloud_experiment(workdir):
    runner = CliRunner()
    result = runner.invoke(main, [
        "--seed", "6", "cloud-experiment",
        "--network", str(workdir / "net.edges"),
        "--model", str(workdir / "model.txt"),
        "--replicates", "4",
    ])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0].startswith("kind,replicate,seed,init,success,distance,steps")
    assert len(lines) == 5


def test_cli_output_file(workdir, tmp_path):
    runner = CliRunner()
    out = tmp_path / "stats.json"
    result = runner.invoke(main, [
        "--output", str(out), "stats",
        "--network", str(workdir / "net.edges"),
        "--model", str(workdir / "model.txt"),
    ])
    assert result.exit_code == 0
    assert json.loads(out.read_text())["values"] == [4.0, 1.0]


def test_cli_csv_format(workdir):
    runner = CliRunner()
    result = runner.invoke(main, [
        "--format", "csv", "stats",
        "--network", str(workdir / "net.edges"),
        "--model", str(workdir / "model.txt"),
    ])
    assert result.exit_code == 0
    assert result.output.startswith("key,value")


def test_cli_mcmle_explicit_start(workdir, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "sampler": {"burn_in": 100, "interval": 10, "sample_size": 300},
        "mcmle": {"max_outer_iterations": 3},
    }))
    runner = CliRunner()
    result = runner.invoke(main, [
        "--seed", "2", "mcmle", "--network", str(workdir / "net.edges"),
        "--model", str(workdir / "model.txt"),
        "--start", "theta:-1.0,0.5", "--config", str(cfg),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    res = payload["results"]
    assert res["theta0"] == [-1.0, 0.5]
    assert res["status"] in {"converged", "degenerate", "max_iterations"}
    assert len(res["trace"]) == res["outer_iterations"]
    assert payload["inputs"]["network"]["sha256"]


def test_cli_mcmle_rejects_bad_start(workdir):
    runner = CliRunner()
    result = runner.invoke(main, [
        "mcmle", "--network", str(workdir / "net.edges"),
        "--model", str(workdir / "model.txt"), "--start", "theta:1.0",
    ])
    assert result.exit_code == 2


def _run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "ergmkit.cli", *args],
        capture_output=True, text=True,
    )


def test_exit_codes_via_subprocess(workdir):
    r = _run_cli("definitely-not-a-command")
    assert r.returncode == 2
    r = _run_cli("mple", "--network", "/does/not/exist",
                 "--model", str(workdir / "model.txt"))
    assert r.returncode == 4
    empty = workdir / "empty.edges"
    empty.write_text("n 4\n")
    r = _run_cli("mple", "--network", str(empty),
                 "--model", str(workdir / "edges_only.txt"))
    assert r.returncode == 3
    r = _run_cli("stats", "--network", str(workdir / "net.edges"),
                 "--model", str(workdir / "model.txt"))
    assert r.returncode == 0
    # library-level parameter validation also maps to a usage error:
    # annealing a continuous-statistic model needs a target tolerance
    gw_model = workdir / "gw.txt"
    gw_model.write_text("edges\ngwdegree 0.25\n")
    r = _run_cli("cloud-experiment", "--network", str(workdir / "net.edges"),
                 "--model", str(gw_model), "--replicates", "1")
    assert r.returncode == 2
    assert "target_tolerance" in r.stderr
    # --threads is accepted and plumbed through
    r = _run_cli("--threads", "1", "stats",
                 "--network", str(workdir / "net.edges"),
                 "--model", str(workdir / "model.txt"))
    assert r.returncode == 0
