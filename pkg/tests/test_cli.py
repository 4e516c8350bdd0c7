import json
import logging
from pathlib import Path

import pytest
from typer.testing import CliRunner

from qubo_gnn.gcn import load_checkpoint
from qubo_gnn.main import app

runner = CliRunner()

FAST_CONFIG = """\
train:
  max_epochs: 200
  patience: 50
  learning_rate: 0.01
  shots: 2
  embedding_dim: 4
  hidden_dims: [4]
logging:
  level: WARNING
"""


@pytest.fixture(autouse=True)
def _restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "fast.yaml"
    path.write_text(FAST_CONFIG)
    return path


def _write(tmp_path: Path, name: str, text: str) -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


def test_solve_triangle(tmp_path: Path, config_file: Path) -> None:
    """solve writes the best cut of an edge-list triangle."""
    graph = _write(tmp_path, "k3.txt", "3 3\n0 1 1\n1 2 1\n0 2 1\n")
    out = tmp_path / "result.json"
    result = runner.invoke(
        app, ["solve", str(graph), "--format", "edgelist", "--polish", "--out", str(out), "--config", str(config_file)]
    )
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document["problem"] == "maxcut"
    assert document["metric"] == 2.0
    assert document["shots_run"] == 2


def test_solve_saves_model(tmp_path: Path, config_file: Path) -> None:
    """--save-model writes a loadable checkpoint next to the result."""
    graph = _write(tmp_path, "k3.txt", "3 3\n0 1 1\n1 2 1\n0 2 1\n")
    model_path = tmp_path / "k3.npz"
    result = runner.invoke(
        app,
        ["solve", str(graph), "--format", "edgelist", "--out", str(tmp_path / "r.json"),
         "--save-model", str(model_path), "--config", str(config_file)],
    )
    assert result.exit_code == 0, result.output
    model, _, seed = load_checkpoint(model_path)
    assert model.layer_dims == (4, 4, 1)
    assert seed in (0, 1)


def test_solve_rejects_problem_for_qubo_file(tmp_path: Path, config_file: Path) -> None:
    """Coefficient files are only solved as generic objectives."""
    qubo = _write(tmp_path, "q.txt", "2\n0 0 -1\n")
    result = runner.invoke(
        app, ["solve", str(qubo), "--format", "qubo", "--problem", "mis", "--config", str(config_file)]
    )
    assert result.exit_code == 1


def test_solve_malformed_file(tmp_path: Path, config_file: Path) -> None:
    """Parse errors exit with code 1."""
    graph = _write(tmp_path, "bad.txt", "3 2\n1 2 1\n")
    result = runner.invoke(app, ["solve", str(graph), "--config", str(config_file)])
    assert result.exit_code == 1


def test_bad_config_exits_one(tmp_path: Path) -> None:
    """Unknown configuration keys are a usage error."""
    graph = _write(tmp_path, "k3.txt", "3 3\n1 2 1\n2 3 1\n1 3 1\n")
    bad = _write(tmp_path, "bad.yaml", "train:\n  epochs: 3\n")
    result = runner.invoke(app, ["solve", str(graph), "--config", str(bad)])
    assert result.exit_code == 1


def test_oracle_five_cycle(tmp_path: Path, config_file: Path) -> None:
    """The exact maximum cut of C5 is four."""
    graph = _write(tmp_path, "c5.txt", "5 5\n1 2 1\n2 3 1\n3 4 1\n4 5 1\n1 5 1\n")
    out = tmp_path / "oracle.json"
    result = runner.invoke(app, ["oracle", str(graph), "--out", str(out), "--config", str(config_file)])
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document["energy"] == -4.0
    assert document["metric"] == 4.0


def test_encode_interval_then_oracle(tmp_path: Path, config_file: Path) -> None:
    """An interval schedule encodes to a QUBO whose optimum keeps two jobs."""
    intervals = _write(tmp_path, "iv.csv", "start,end\n0,2\n1,3\n3,4\n")
    qubo = tmp_path / "iv.qubo"
    graph_out = tmp_path / "iv.graph"
    result = runner.invoke(
        app,
        ["encode", "interval", "--intervals", str(intervals), "--out", str(qubo),
         "--graph-out", str(graph_out), "--config", str(config_file)],
    )
    assert result.exit_code == 0, result.output
    assert graph_out.read_text().splitlines() == ["3 1", "0 1 1"]

    out = tmp_path / "oracle.json"
    result = runner.invoke(
        app, ["oracle", str(qubo), "--format", "qubo", "--out", str(out), "--config", str(config_file)]
    )
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document["energy"] == -2.0
    assert document["bitstring"] == "101"


def test_encode_usage_errors(tmp_path: Path, config_file: Path) -> None:
    """Unknown kinds and missing inputs exit with code 1."""
    out = tmp_path / "x.qubo"
    result = runner.invoke(app, ["encode", "tsp", "--out", str(out), "--config", str(config_file)])
    assert result.exit_code == 1
    graph = _write(tmp_path, "k3.txt", "3 3\n1 2 1\n2 3 1\n1 3 1\n")
    result = runner.invoke(
        app, ["encode", "mvc", "--graph", str(graph), "--out", str(out), "--config", str(config_file)]
    )
    assert result.exit_code == 1
    assert not out.exists()


def test_bench_regular(tmp_path: Path, config_file: Path) -> None:
    """A tiny sweep writes its report and exits cleanly."""
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        [
            "bench-regular", "--n", "10", "--n", "12", "--instances", "2", "--shots", "1",
            "--out", str(out), "--rows", str(tmp_path / "rows.jsonl"),
            "--checkpoint", str(tmp_path / "ck.txt"), "--csv", str(tmp_path / "rows.csv"),
            "--config", str(config_file),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["kind"] == "regular"
    assert [e["n"] for e in report["aggregates"]["per_size"]] == [10, 12]
    assert (tmp_path / "rows.csv").exists()


def test_bench_regular_failed_instance_exits_two(tmp_path: Path, config_file: Path) -> None:
    """Rows that fail still produce a report but a non-zero exit code."""
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        [
            "bench-regular", "--d", "20", "--n", "40", "--instances", "1", "--generation-attempts", "1",
            "--out", str(out), "--rows", str(tmp_path / "rows.jsonl"),
            "--checkpoint", str(tmp_path / "ck.txt"), "--config", str(config_file),
        ],
    )
    assert result.exit_code == 2
    assert json.loads(out.read_text())["rows"][0]["status"] == "failed"


def test_bench_gset_directory(tmp_path: Path, config_file: Path) -> None:
    """Directories are expanded and graphs matched to their table rows."""
    graphs = tmp_path / "gset"
    graphs.mkdir()
    _write(graphs, "Gk4", "4 6\n1 2 1\n1 3 1\n1 4 1\n2 3 1\n2 4 1\n3 4 1\n")
    table = _write(
        tmp_path,
        "hp.yaml",
        "graphs:\n  Gk4:\n    embedding_dim: 3\n    hidden_dims: [2]\n    learning_rate: 0.01\n    best_known: 4\n",
    )
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        [
            "bench-gset", str(graphs), "--hyperparams", str(table), "--polish",
            "--out", str(out), "--rows", str(tmp_path / "rows.jsonl"),
            "--checkpoint", str(tmp_path / "ck.txt"), "--config", str(config_file),
        ],
    )
    assert result.exit_code == 0, result.output
    row = json.loads(out.read_text())["rows"][0]
    assert row["instance"] == "Gk4"
    assert row["metric"] == 4.0
    assert row["epsilon"] == 0.0


def test_bench_gset_missing_row(tmp_path: Path, config_file: Path) -> None:
    """A graph without hyperparameters is a usage error."""
    graph = _write(tmp_path, "Gnone.txt", "2 1\n1 2 1\n")
    table = _write(tmp_path, "hp.yaml", "graphs: {}\n")
    result = runner.invoke(
        app,
        ["bench-gset", str(graph), "--hyperparams", str(table), "--out", str(tmp_path / "r.json"),
         "--rows", str(tmp_path / "rows.jsonl"), "--checkpoint", str(tmp_path / "ck.txt"),
         "--config", str(config_file)],
    )
    assert result.exit_code == 1
