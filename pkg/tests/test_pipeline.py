import json
from pathlib import Path

import pytest

from qubo_gnn import pipeline
from qubo_gnn.errors import ConfigError, MissingHyperparamsError
from qubo_gnn.graphs import generate_d_regular
from qubo_gnn.hamiltonians import independence_check
from qubo_gnn.pipeline import BenchConfig, instance_seed, run_gset_benchmark, run_regular_benchmark
from qubo_gnn.stages.write import format_gset, read_results
from qubo_gnn.training import TrainConfig
from qubo_gnn.utils.config import BenchSettings, GsetHyperparams, SolverConfig
from qubo_gnn.utils.metrics import SolverMetrics

TRAIN = TrainConfig(max_epochs=60, patience=20, learning_rate=0.01, shots=1, embedding_dim=3, hidden_dims=(3,))


def _settings(tmp_path: Path, csv: bool = False) -> BenchSettings:
    return BenchSettings(
        bootstrap_resamples=50,
        output_file=tmp_path / "report.json",
        rows_file=tmp_path / "rows.jsonl",
        checkpoint_file=tmp_path / "checkpoints.txt",
        csv_file=tmp_path / "rows.csv" if csv else None,
    )


def test_instance_seeds_are_distinct() -> None:
    """Seeds differ across index and size and repeat for the same triple."""
    seeds = {instance_seed(0, n, i) for n in (10, 20) for i in range(5)}
    assert len(seeds) == 10
    assert instance_seed(3, 10, 1) == instance_seed(3, 10, 1)


def test_bench_config_validation() -> None:
    """Unsupported problems and empty sweeps are rejected."""
    with pytest.raises(ConfigError):
        BenchConfig(problem="generic")
    with pytest.raises(ConfigError):
        BenchConfig(instances=0)


def test_regular_maxcut_report(tmp_path: Path) -> None:
    """A small sweep writes rows, a JSON report, a CSV and per-size aggregates."""
    metrics = SolverMetrics(prefix="t")
    cfg = BenchConfig(train=TRAIN, settings=_settings(tmp_path, csv=True), sizes=(10, 12), instances=2)
    report = run_regular_benchmark(cfg, metrics)
    assert [(r["n"], r["index"]) for r in report.rows] == [(10, 0), (10, 1), (12, 0), (12, 1)]
    assert all(r["status"] == "ok" for r in report.rows)
    for row in report.rows:
        assert row["metric"] == -row["energy"]
        assert row["random_cut_expectation"] == row["num_edges"] / 2
        assert row["random_cut_expectation"] <= row["random_cut_best"] <= row["num_edges"]
    per_size = report.aggregates["per_size"]
    assert [e["n"] for e in per_size] == [10, 12]
    assert per_size[0]["bound"] == pytest.approx((0.75 + 0.7632 * 0.75 ** 0.5) * 10)
    assert per_size[0]["random_cut_best_mean"] == pytest.approx(
        sum(r["random_cut_best"] for r in report.rows[:2]) / 2
    )
    assert isinstance(report.aggregates["training_scaling_exponent"], float)

    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["schema_version"] == 1
    assert saved["kind"] == "regular"
    assert len(read_results(tmp_path / "rows.jsonl")) == 4
    assert (tmp_path / "rows.csv").read_text().splitlines()[0].startswith("instance,status,n,d")
    assert metrics.registry.get_sample_value("t_instances_total", {"status": "ok"}) == 4


def test_regular_mis_rows_are_feasible(tmp_path: Path) -> None:
    """MIS rows report zero violations and the tabulated bound ratio."""
    cfg = BenchConfig(problem="mis", train=TRAIN, settings=_settings(tmp_path), sizes=(12,), instances=2)
    report = run_regular_benchmark(cfg)
    for row in report.rows:
        g = generate_d_regular(12, 3, row["seed"])
        bits = [int(c) for c in row["bitstring"]]
        assert independence_check(g, bits)[1] == []
        assert row["violations"] == 0
        assert row["greedy_mis_size"] >= 12 // 4
    entry = report.aggregates["per_size"][0]
    assert entry["violations"] == 0
    assert entry["bound"] == pytest.approx(0.45537 * 12)
    assert entry["greedy_mis_size_mean"] == pytest.approx(sum(r["greedy_mis_size"] for r in report.rows) / 2)


def test_resume_skips_solved_instances(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """A second run reuses stored rows instead of solving again."""
    cfg = BenchConfig(train=TRAIN, settings=_settings(tmp_path), sizes=(10,), instances=2)
    first = run_regular_benchmark(cfg)

    def boom(*args, **kwargs):
        raise AssertionError("solve should not be called on resume")

    monkeypatch.setattr(pipeline, "solve", boom)
    second = run_regular_benchmark(cfg)
    assert [r["bitstring"] for r in second.rows] == [r["bitstring"] for r in first.rows]
    assert len(read_results(tmp_path / "rows.jsonl")) == 2


def test_failed_instance_is_isolated(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """A crashing solve becomes a failed row and the sweep carries on."""
    real_solve = pipeline.solve
    calls = []

    def flaky(g, *args, **kwargs):
        calls.append(g.n)
        if len(calls) == 1:
            raise RuntimeError("diverged")
        return real_solve(g, *args, **kwargs)

    monkeypatch.setattr(pipeline, "solve", flaky)
    cfg = BenchConfig(train=TRAIN, settings=_settings(tmp_path), sizes=(10,), instances=2, resume=False)
    report = run_regular_benchmark(cfg)
    assert [r["status"] for r in report.rows] == ["failed", "ok"]
    assert "RuntimeError: diverged" in report.rows[0]["error"]
    assert report.aggregates["per_size"][0]["failed"] == 1
    assert len(read_results(tmp_path / "rows.jsonl")) == 1


def test_generation_failure_is_reported(tmp_path: Path) -> None:
    """Graphs that cannot be generated produce failed rows, not a crash."""
    cfg = BenchConfig(
        train=TRAIN, settings=_settings(tmp_path), d=20, sizes=(40,), instances=1, generation_attempts=1
    )
    report = run_regular_benchmark(cfg)
    assert report.rows[0]["status"] == "failed"
    assert "GenerationFailedError" in report.rows[0]["error"]
    assert report.aggregates["per_size"][0]["ok"] == 0


def _gset_file(tmp_path: Path, name: str) -> Path:
    path = tmp_path / f"{name}.txt"
    path.write_text(format_gset(generate_d_regular(16, 3, seed=4)))
    return path


def test_gset_benchmark(tmp_path: Path) -> None:
    """Per-graph hyperparameters are applied and the relative error reported."""
    path = _gset_file(tmp_path, "Gtiny")
    table = {"Gtiny": GsetHyperparams("Gtiny", 4, (3,), 0.01, best_known=24.0)}
    cfg = BenchConfig(train=TRAIN, settings=_settings(tmp_path), gset_paths=(path,), hyperparams=table)
    report = run_gset_benchmark(cfg)
    row = report.rows[0]
    assert row["status"] == "ok"
    assert row["hyperparams"]["embedding_dim"] == 4
    assert row["epsilon"] == pytest.approx((24.0 - row["metric"]) / 24)
    assert report.aggregates["epsilon_mean"] == pytest.approx(row["epsilon"])

    override = run_gset_benchmark(
        BenchConfig(train=TRAIN, settings=_settings(tmp_path), gset_paths=(path,), hyperparams=table, resume=False),
        best_known={"Gtiny": 20.0},
    )
    assert override.rows[0]["best_known"] == 20.0


def test_gset_requires_hyperparameters(tmp_path: Path) -> None:
    """A graph with no table row fails before anything is solved."""
    path = _gset_file(tmp_path, "Gother")
    cfg = BenchConfig(train=TRAIN, settings=_settings(tmp_path), gset_paths=(path,))
    with pytest.raises(MissingHyperparamsError):
        run_gset_benchmark(cfg)
    with pytest.raises(FileNotFoundError):
        run_gset_benchmark(BenchConfig(train=TRAIN, settings=_settings(tmp_path), gset_paths=(tmp_path / "G0",)))


def test_lone_instance_passes_threads_to_shots(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """With one instance to solve, the worker budget goes to its shots."""
    real_solve = pipeline.solve
    seen = []

    def spy(*args, **kwargs):
        seen.append(kwargs["threads"])
        return real_solve(*args, **{**kwargs, "threads": 1})

    monkeypatch.setattr(pipeline, "solve", spy)
    path = _gset_file(tmp_path, "Gtiny")
    table = {"Gtiny": GsetHyperparams("Gtiny", 4, (3,), 0.01)}
    cfg = BenchConfig(
        train=TRAIN, solver=SolverConfig(threads=4), settings=_settings(tmp_path),
        gset_paths=(path,), hyperparams=table,
    )
    assert run_gset_benchmark(cfg).rows[0]["status"] == "ok"
    assert seen == [4]

    seen.clear()
    run_regular_benchmark(BenchConfig(train=TRAIN, settings=_settings(tmp_path), sizes=(10,), instances=2))
    assert seen == [1, 1]
