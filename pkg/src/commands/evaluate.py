import argparse

from ..colors import green, print_eval
from ..config import RunConfig
from ..experiments.results import write_csv, write_json
from .base import (
    Command,
    add_checkpoint_argument,
    add_data_argument,
    add_out_argument,
    build_pipeline,
    load_model,
    output_dir,
)


class EvalCommand(Command):
    """学習済みチェックポイントをテスト窓で評価するコマンド"""

    @property
    def name(self) -> str:
        return "eval"

    @property
    def description(self) -> str:
        return "Evaluate a checkpoint on the test windows (MAE / RMSE of the sample mean)"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        add_checkpoint_argument(parser)
        add_data_argument(parser)
        add_out_argument(parser)

    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        prepared, dynamics, trainer = build_pipeline(run, args)
        model, _ = load_model(run, args.checkpoint, prepared)
        result = trainer.evaluate(model, prepared.test_windows, dynamics)

        out = output_dir(args)
        meta = run.header()
        write_csv(out / "eval_windows.csv", result.per_window, meta)
        path = write_json(out / "eval.json", result.to_dict(), meta)
        print_eval(f"wrote {green(str(path))}")
        return 0
