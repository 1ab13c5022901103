from dataclasses import replace

import numpy as np
import pytest

from src.diffusion import PriorKind
from src.dynamics import create_profile
from src.errors import ConfigError, DataError
from src.experiments import prepare
from src.experiments.tasks import build_model, extract_dynamics
from src.rng import SeededRng
from src.train import TrainConfig, Trainer


@pytest.fixture
def prepared(tiny_run):
    return prepare(tiny_run)


def _trainer(run, prepared):
    return Trainer(run.schedule.build(), run.prior, run.train, prepared.normalizer)


def _fit(run, prepared):
    trainer = _trainer(run, prepared)
    dynamics = extract_dynamics(run, prepared)
    return trainer.fit(build_model(run, prepared), prepared.train_windows, prepared.val_windows, dynamics)


class TestTrainConfig:
    def test_defaults_are_valid(self):
        assert TrainConfig().validate() == []

    def test_invalid_values(self):
        errors = TrainConfig(batch_size=0, patience=-1, lambdas=(1.2,)).validate()
        assert "train.batch_size: must be >= 1" in errors
        assert "train.patience: must be >= 0" in errors
        assert "train.lambdas: values must be in [0, 1]" in errors

    def test_trainer_rejects_invalid_config(self, tiny_run, prepared):
        with pytest.raises(ConfigError):
            Trainer(tiny_run.schedule.build(), tiny_run.prior, TrainConfig(max_epochs=0), prepared.normalizer)


class TestFit:
    def test_report_shape(self, tiny_run, prepared):
        model, report = _fit(tiny_run, prepared)
        assert len(report.val_mae) == len(report.train_loss) == 2
        assert report.learning_rate == [1e-3, 1e-3]
        assert report.best_val_mae == min(report.val_mae)
        assert np.isfinite(report.initial_loss)
        assert "epoch_seconds" not in report.to_dict(include_timing=False)

    def test_deterministic(self, tiny_run, prepared):
        _, a = _fit(tiny_run, prepared)
        _, b = _fit(tiny_run, prepared)
        assert a.val_mae == b.val_mae
        assert a.train_loss == b.train_loss

    def test_input_model_is_not_modified(self, tiny_run, prepared):
        initial = build_model(tiny_run, prepared)
        before = initial.copy_params()
        _trainer(tiny_run, prepared).fit(
            initial, prepared.train_windows, prepared.val_windows, extract_dynamics(tiny_run, prepared)
        )
        for name, p in before.items():
            np.testing.assert_array_equal(initial.params[name], p)

    def test_lambda_one_keeps_parameters(self, tiny_run, prepared):
        run = tiny_run.with_prior(1.0, PriorKind.PERIODIC)
        model, report = _fit(run, prepared)
        initial = build_model(run, prepared)
        for name, p in initial.params.items():
            np.testing.assert_array_equal(model.params[name], p)
        assert len(report.val_mae) == 2

    def test_zero_patience_stops_after_first_miss(self, tiny_run, prepared):
        run = replace(tiny_run, train=replace(tiny_run.train, max_epochs=6, patience=0))
        _, report = _fit(run, prepared)
        if report.stopped_early:
            assert len(report.val_mae) == report.best_epoch + 2
        else:
            assert len(report.val_mae) == 6

    def test_dynamics_must_come_from_training_split(self, tiny_run, prepared):
        leaked = create_profile("periodic", prepared.val)
        with pytest.raises(DataError, match="training split"):
            _trainer(tiny_run, prepared).fit(
                build_model(tiny_run, prepared), prepared.train_windows, prepared.val_windows, leaked
            )

    def test_validation_must_not_use_test_windows(self, tiny_run, prepared):
        with pytest.raises(DataError):
            _trainer(tiny_run, prepared).fit(
                build_model(tiny_run, prepared),
                prepared.train_windows,
                prepared.test_windows,
                extract_dynamics(tiny_run, prepared),
            )

    def test_prior_without_dynamics(self, tiny_run, prepared):
        with pytest.raises(DataError):
            _trainer(tiny_run, prepared).fit(
                build_model(tiny_run, prepared), prepared.train_windows, prepared.val_windows, None
            )

    def test_resume_continues_optimizer_state(self, tiny_run, prepared):
        first = _trainer(tiny_run, prepared)
        dynamics = extract_dynamics(tiny_run, prepared)
        model, _ = first.fit(
            build_model(tiny_run, prepared), prepared.train_windows, prepared.val_windows, dynamics
        )
        steps = first.optimizer.step_count
        assert steps > 0

        resumed = _trainer(tiny_run, prepared)
        resumed.fit(
            model, prepared.train_windows, prepared.val_windows, dynamics,
            optimizer_state=first.optimizer.state_dict(),
        )
        assert resumed.optimizer.step_count == 2 * steps
        fresh = _trainer(tiny_run, prepared)
        fresh.fit(model, prepared.train_windows, prepared.val_windows, dynamics)
        assert fresh.optimizer.step_count == steps


class TestEvaluate:
    def test_per_window_results(self, tiny_run, prepared):
        trainer = _trainer(tiny_run, prepared)
        result = trainer.evaluate(
            build_model(tiny_run, prepared), prepared.test_windows, extract_dynamics(tiny_run, prepared)
        )
        assert len(result.per_window) == len(prepared.test_windows)
        assert result.samples.shape[:2] == (len(prepared.test_windows), 4)
        assert result.point.shape == result.truth.shape
        assert result.mae <= result.rmse + 1e-12
        assert result.to_dict()["n_windows"] == len(prepared.test_windows)

    def test_chunking_does_not_change_results(self, tiny_run, prepared):
        trainer = _trainer(tiny_run, prepared)
        model = build_model(tiny_run, prepared)
        dynamics = extract_dynamics(tiny_run, prepared)
        full = trainer.forecast(model, prepared.test_windows, dynamics, 4, SeededRng(0, "eval"))
        trainer.DEFAULT_EVAL_BATCH = 8
        chunked = trainer.forecast(model, prepared.test_windows, dynamics, 4, SeededRng(0, "eval"))
        np.testing.assert_allclose(chunked, full, atol=1e-12)

    def test_truth_shape_checked(self, tiny_run, prepared):
        trainer = _trainer(tiny_run, prepared)
        with pytest.raises(DataError):
            trainer.evaluate(
                build_model(tiny_run, prepared),
                prepared.test_windows,
                extract_dynamics(tiny_run, prepared),
                truth=np.zeros((1, 2, 3, 1)),
            )
