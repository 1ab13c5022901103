import argparse
from typing import Any

from ..colors import green, print_sweep
from ..config import SWEEP_AXES, RunConfig
from ..experiments import (
    compare_priors,
    component_sweep,
    convergence_report,
    grid_search,
    lambda_sweep,
    perfect_prior_diagnostic,
    prepare,
    robustness,
    run_task,
    task_matrix,
    uncertainty_comparison,
)
from ..experiments.results import aggregate, write_csv, write_json
from ..experiments.sweeps import SweepResult
from .base import Command, add_data_argument, add_out_argument, load_dataset, output_dir


class SweepCommand(Command):
    """アブレーション・比較実験を 1 軸ずつ実行するコマンド

    どの軸も tidy CSV（1 行 = セル × シード）と、集計値を入れた JSON を書き出す。
    """

    @property
    def name(self) -> str:
        return "sweep"

    @property
    def description(self) -> str:
        return "Run one experiment axis and write tidy CSV + JSON summaries"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--axis",
            choices=SWEEP_AXES,
            default=None,
            help="Experiment axis (default: sweep.axis from the config)",
        )
        add_data_argument(parser)
        add_out_argument(parser)

    def config_flags(self, args: argparse.Namespace) -> dict[str, object]:
        return {"sweep.axis": args.axis}

    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        axis = run.sweep.axis
        rows, payload = self._dispatch(axis, run, load_dataset(run, args))

        out = output_dir(args)
        meta = run.header()
        stem = f"sweep_{axis}_{run.task.name}"
        write_csv(out / f"{stem}.csv", rows, meta)
        path = write_json(out / f"{stem}.json", payload, meta)
        print_sweep(f"wrote {len(rows)} row(s) and {green(str(path))}")
        return 0

    def _dispatch(self, axis: str, run: RunConfig, data) -> tuple[list[dict[str, Any]], dict[str, Any]]:
        if axis == "tasks":
            comparisons = task_matrix(run, data)
            rows = [row for c in comparisons for row in c.rows()]
            return rows, {"axis": axis, "tasks": [c.summary() for c in comparisons]}

        if axis == "noise":
            return _from_sweep(robustness(run, data=data))

        prepared = prepare(run, data)
        if axis == "lambda":
            return _from_sweep(lambda_sweep(run, prepared=prepared))
        if axis == "components":
            return _from_sweep(component_sweep(run, prepared=prepared))
        if axis == "convergence":
            return _from_sweep(convergence_report(run, prepared=prepared))
        if axis == "grid":
            return _from_sweep(grid_search(run, prepared=prepared))
        if axis == "priors":
            rows = compare_priors(run, prepared)
            return rows, {"axis": axis, "summary": aggregate(rows)}
        if axis == "uncertainty":
            report = uncertainty_comparison(run, prepared)
            rows = [{"label": label, **{k: v for k, v in r.items() if k != "width_per_step"}}
                    for label, r in report.items()]
            return rows, {"axis": axis, **report}

        # oracle
        comparison = run_task(run, prepared)
        diagnostic = perfect_prior_diagnostic(run, prepared, baseline_mae=comparison.baseline_mae)
        print_sweep(
            f"error floor MAE {diagnostic['floor_mae']:.4f} "
            f"(baseline {comparison.baseline_mae:.4f}, NPDiff {comparison.treated_mae:.4f})"
        )
        return comparison.rows(), {"axis": axis, **comparison.summary(), **diagnostic}


def _from_sweep(result: SweepResult) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    return result.rows, result.to_dict()
