import argparse

import numpy as np

from ..colors import green, print_eval
from ..config import RunConfig
from ..errors import ConfigError
from ..experiments.results import write_csv
from ..experiments.uncertainty import uncertainty_report
from ..rng import SeededRng
from .base import (
    Command,
    add_checkpoint_argument,
    add_data_argument,
    add_out_argument,
    build_pipeline,
    load_model,
    output_dir,
)


class SampleCommand(Command):
    """テスト窓について予測軌跡を生成して書き出すコマンド

    サンプルごとの軌跡と、中央値・90% 区間（いずれも非正規化）を出力する。
    """

    @property
    def name(self) -> str:
        return "sample"

    @property
    def description(self) -> str:
        return "Draw forecast trajectories for test windows (with median and 90% interval)"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        add_checkpoint_argument(parser)
        add_data_argument(parser)
        add_out_argument(parser)
        parser.add_argument("--window", type=int, default=0, help="First test window index")
        parser.add_argument("--count", type=int, default=1, help="Number of windows")
        parser.add_argument(
            "--samples", type=int, default=None,
            help="Trajectories per window (default: train.test_samples)",
        )

    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        prepared, dynamics, trainer = build_pipeline(run, args)
        windows = prepared.test_windows
        if not 0 <= args.window < len(windows) or args.count < 1:
            raise ConfigError(
                f"--window must be in [0, {len(windows)}) and --count >= 1", ["--window", "--count"]
            )
        selected = windows[args.window:args.window + args.count]
        n_samples = args.samples or run.train.test_samples
        model, _ = load_model(run, args.checkpoint, prepared)

        samples = trainer.forecast(
            model, selected, dynamics, n_samples, SeededRng(run.train.seed, "sample")
        )
        raw = prepared.normalizer.denormalize(samples)
        report = uncertainty_report(raw)
        truth = prepared.normalizer.denormalize(np.stack([w.target for w in selected]))

        _, S, M, K, C = raw.shape
        trajectories = [
            {
                "window": args.window + b,
                "target_start_index": w.target_start_index,
                "sample": s,
                "step": m,
                "k": k,
                "c": c,
                "value": float(raw[b, s, m, k, c]),
            }
            for b, w in enumerate(selected)
            for s in range(S)
            for m in range(M)
            for k in range(K)
            for c in range(C)
        ]
        summary = [
            {
                "window": args.window + b,
                "step": m,
                "k": k,
                "c": c,
                "median": float(report.median[b, m, k, c]),
                "q05": float(report.lower[b, m, k, c]),
                "q95": float(report.upper[b, m, k, c]),
                "truth": float(truth[b, m, k, c]),
            }
            for b in range(len(selected))
            for m in range(M)
            for k in range(K)
            for c in range(C)
        ]
        out = output_dir(args)
        meta = run.header()
        write_csv(out / "samples.csv", trajectories, meta)
        path = write_csv(out / "sample_summary.csv", summary, meta)
        print_eval(
            f"{len(selected)} window(s) x {S} samples, mean 90% width {report.mean_width:.4f}; "
            f"wrote {green(str(path))}"
        )
        return 0
