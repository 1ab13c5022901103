import time
from dataclasses import replace

import numpy as np
import pytest

from src.datagen import generate
from src.diffusion import PriorKind
from src.errors import ConfigError, DataError
from src.experiments import (
    SweepExecutor,
    SweepJob,
    TaskSpec,
    aggregate,
    compare_priors,
    component_sweep,
    convergence_report,
    grid_search,
    lambda_sweep,
    perfect_prior_diagnostic,
    prepare,
    read_csv,
    robustness,
    run_cell,
    run_task,
    uncertainty_report,
    write_csv,
    write_json,
)


@pytest.fixture
def prepared(tiny_run):
    return prepare(tiny_run)


class TestResults:
    def test_aggregate_uses_population_std(self):
        rows = [
            {"label": "npdiff", "value": 0.5, "mae": 1.0, "rmse": 2.0},
            {"label": "npdiff", "value": 0.5, "mae": 3.0, "rmse": 2.0},
            {"label": "baseline", "value": 0.0, "mae": 4.0, "rmse": 5.0},
        ]
        summary = aggregate(rows)
        assert [(s["label"], s["value"], s["n"]) for s in summary] == [
            ("npdiff", "0.5", 2),
            ("baseline", "0.0", 1),
        ]
        assert summary[0]["mae_mean"] == pytest.approx(2.0)
        assert summary[0]["mae_std"] == pytest.approx(1.0)
        assert summary[1]["rmse_std"] == 0.0

    def test_aggregate_rejects_text(self):
        with pytest.raises(DataError):
            aggregate([{"label": "a", "value": 1, "mae": "x", "rmse": 1.0}])

    def test_csv_header_and_rows(self, tmp_path):
        meta = {"config_hash": "0123abcd", "version": "0.1.0"}
        path = write_csv(tmp_path / "s.csv", [{"label": "a", "value": 1, "mae": 0.25}, {"label": "b", "x": 2}], meta)
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == "# config_hash=0123abcd version=0.1.0"
        read_meta, rows = read_csv(path)
        assert read_meta == meta
        assert rows[0] == {"label": "a", "value": "1", "mae": "0.25", "x": ""}
        assert rows[1]["x"] == "2"

    def test_json_meta_and_nan(self, tmp_path):
        import json

        path = write_json(tmp_path / "s.json", {"a": float("nan"), "b": np.arange(2)}, {"config_hash": "h"})
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc == {"_meta": {"config_hash": "h"}, "a": None, "b": [0, 1]}

    def test_read_csv_without_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# config_hash=x\nlabel,value\n", encoding="utf-8")
        with pytest.raises(DataError):
            read_csv(path)


def _slow_square(x: int) -> int:
    time.sleep(0.01 * (5 - x))
    return x * x


def _fail(x: int) -> int:
    raise DataError(f"cell {x} failed")


class TestExecutor:
    @pytest.mark.parametrize("jobs", [1, 3])
    def test_results_in_submission_order(self, jobs):
        cells = [SweepJob(id=f"c{i}", action=_slow_square, params={"x": i}) for i in range(5)]
        assert SweepExecutor(jobs).run(cells) == [0, 1, 4, 9, 16]

    @pytest.mark.parametrize("jobs", [1, 2])
    def test_failure_is_raised(self, jobs):
        cells = [
            SweepJob(id="ok", action=_slow_square, params={"x": 1}),
            SweepJob(id="bad", action=_fail, params={"x": 2}),
        ]
        with pytest.raises(DataError, match="cell 2"):
            SweepExecutor(jobs).run(cells)

    def test_invalid_concurrency(self):
        with pytest.raises(ValueError):
            SweepExecutor(0)

    def test_empty(self):
        assert SweepExecutor(2).run([]) == []


class TestUncertainty:
    def test_quantiles_and_width(self):
        samples = np.arange(20, dtype=np.float64).reshape(1, 20, 1, 1, 1)
        report = uncertainty_report(samples)
        assert report.median.item() == 9.0
        assert (report.lower.item(), report.upper.item()) == (0.0, 18.0)
        assert report.mean_width == pytest.approx(18.0)
        assert report.coverage(np.full((1, 1, 1, 1), 5.0)) == 1.0
        assert report.coverage(np.full((1, 1, 1, 1), 19.0)) == 0.0

    def test_width_per_step(self):
        samples = np.zeros((2, 10, 3, 1, 1))
        samples[:, :, 2] = np.arange(10)[None, :, None, None]
        np.testing.assert_allclose(uncertainty_report(samples, 0.8).width_per_step(), [0.0, 0.0, 8.0])

    def test_rejects_wrong_rank(self):
        with pytest.raises(DataError):
            uncertainty_report(np.zeros((3, 2)))


class TestTaskSpec:
    def test_default_priors(self):
        assert TaskSpec(H=12, M=1).default_prior is PriorKind.LOCAL
        assert TaskSpec(H=12, M=12).default_prior is PriorKind.PERIODIC
        assert TaskSpec(H=24, M=12).name == "24-12"


class TestPrepare:
    def test_evaluation_targets_do_not_overlap(self, tiny_run, prepared):
        M = tiny_run.task.M
        for windows in (prepared.val_windows, prepared.test_windows):
            starts = np.array([w.target_start_index for w in windows])
            np.testing.assert_array_equal(np.diff(starts), M)
        # テスト区間は 96..119、H=4 なので最初のターゲットは 100
        assert len(prepared.test_windows) == 10
        assert prepared.test_windows[0].target_start_index == 100

    def test_training_windows_keep_unit_stride(self, prepared):
        starts = [w.target_start_index for w in prepared.train_windows]
        assert np.all(np.diff(starts) == 1)

    def test_explicit_eval_stride(self, tiny_run):
        run = replace(tiny_run, train=replace(tiny_run.train, eval_stride=1))
        assert len(prepare(run).test_windows) == 19

    def test_eval_stride_must_be_positive(self, tiny_run):
        with pytest.raises(ConfigError):
            replace(tiny_run, train=replace(tiny_run.train, eval_stride=0)).check()


class TestCells:
    def test_lambda_zero_equals_baseline(self, tiny_run, prepared):
        baseline = run_cell(tiny_run.with_prior(0.0, PriorKind.NONE), prepared, "baseline")
        zero = run_cell(tiny_run.with_prior(0.0, PriorKind.PERIODIC), prepared, "npdiff")
        assert zero.mae == baseline.mae
        assert zero.rmse == baseline.rmse
        assert zero.report.val_mae == baseline.report.val_mae

    def test_row_fields(self, tiny_run, prepared):
        row = run_cell(tiny_run, prepared, "npdiff", "lambda", 0.5).row()
        for key in ("label", "axis", "value", "seed", "mae", "rmse", "best_val_mae", "best_epoch", "epochs"):
            assert key in row

    def test_task_comparison(self, tiny_run, prepared):
        comparison = run_task(tiny_run, prepared)
        summary = comparison.summary()
        assert summary["task"] == "4-2"
        assert summary["prior_kind"] == "periodic"
        assert len(comparison.rows()) == 2

    def test_perfect_prior_floor(self, tiny_run, prepared):
        diagnostic = perfect_prior_diagnostic(tiny_run, prepared, baseline_mae=1.0)
        assert diagnostic["floor_mae"] < 1e-6
        assert diagnostic["baseline_mae"] == 1.0


class TestSweeps:
    def test_lambda_sweep(self, tiny_run, prepared):
        result = lambda_sweep(tiny_run, prepared=prepared)
        assert [r["value"] for r in result.rows] == [0.0, 0.5, 1.0]
        assert result.extra["best_lambda"] in (0.0, 0.5, 1.0)
        assert len(result.summary()) == 3

    def test_lambda_sweep_needs_three_values(self, tiny_run, prepared):
        with pytest.raises(ConfigError):
            lambda_sweep(tiny_run, lambdas=(0.0, 0.5), prepared=prepared)

    def test_component_sweep_reports_similarity(self, tiny_run, prepared):
        result = component_sweep(tiny_run, prepared=prepared)
        assert set(result.extra["similarity"]) == {"1", "full"}
        assert all("similarity" in r for r in result.rows)

    def test_robustness(self, tiny_run):
        result = robustness(tiny_run)
        assert {r["label"] for r in result.rows} == {"baseline", "npdiff"}
        assert set(result.extra["relative_degradation"]) == {"baseline", "npdiff"}

    def test_robustness_uses_given_data(self, tiny_run, monkeypatch):
        from src.experiments import sweeps

        data = generate(replace(tiny_run.data, seed=7))
        received = []
        original = sweeps.prepare

        def recording_prepare(run, raw=None, noise_level=0.0):
            received.append(raw)
            return original(run, raw, noise_level=noise_level)

        monkeypatch.setattr(sweeps, "prepare", recording_prepare)
        robustness(tiny_run, data=data)
        assert len(received) == len(tiny_run.sweep.noise_levels)
        assert all(raw is data for raw in received)

    def test_convergence(self, tiny_run, prepared):
        result = convergence_report(tiny_run, prepared=prepared)
        assert result.metrics == ("val_mae", "val_rmse")
        assert sorted({r["value"] for r in result.rows}) == [1, 2]

    def test_grid_search(self, tiny_run, prepared):
        result = grid_search(tiny_run, prepared=prepared)
        best = result.extra["best"]
        assert best["rule"] in ("top_k", "above_mean")
        assert best["lambda"] in (0.3, 0.7)
        assert len(result.rows) == 4

    def test_parallel_matches_serial(self, tiny_run, prepared):
        serial = lambda_sweep(tiny_run, executor=SweepExecutor(1), prepared=prepared)
        parallel = lambda_sweep(tiny_run, executor=SweepExecutor(3), prepared=prepared)
        assert [r["mae"] for r in serial.rows] == [r["mae"] for r in parallel.rows]

    def test_compare_priors_requires_one_step(self, tiny_run, prepared):
        with pytest.raises(DataError):
            compare_priors(tiny_run, prepared)

    def test_compare_priors(self, tiny_run):
        run = replace(tiny_run, task=replace(tiny_run.task, M=1))
        rows = compare_priors(run)
        assert [r["label"] for r in rows] == ["baseline", "periodic", "local"]
