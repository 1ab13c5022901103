import argparse
from pathlib import Path

from ..colors import green, print_train
from ..config import RunConfig
from ..denoiser import save_checkpoint
from ..errors import DataError
from ..experiments.results import write_json
from ..experiments.tasks import build_model
from .base import (
    Command,
    add_data_argument,
    add_out_argument,
    build_pipeline,
    load_model,
    output_dir,
)


class TrainCommand(Command):
    """ノイズ推定ネットワークを学習してチェックポイントを保存するコマンド

    --resume を指定するとチェックポイントのパラメータと Adam の状態から学習を続ける。
    """

    @property
    def name(self) -> str:
        return "train"

    @property
    def description(self) -> str:
        return "Train the denoiser with early stopping and save the best checkpoint"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        add_data_argument(parser)
        add_out_argument(parser)
        parser.add_argument(
            "--resume",
            type=Path,
            default=None,
            help="Checkpoint written by 'train' to continue from (parameters and optimizer state)",
        )

    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        prepared, dynamics, trainer = build_pipeline(run, args)
        optimizer_state = None
        if args.resume is not None:
            model, meta = load_model(run, args.resume, prepared)
            optimizer_state = meta["optimizer"]
            if optimizer_state is None:
                raise DataError(f"{args.resume}: checkpoint has no optimizer state to resume from")
        else:
            model = build_model(run, prepared)
        model, report = trainer.fit(
            model, prepared.train_windows, prepared.val_windows, dynamics,
            optimizer_state=optimizer_state,
        )

        out = output_dir(args)
        ckpt = save_checkpoint(
            out / "checkpoint.json",
            model,
            optimizer=trainer.optimizer,
            config_hash=run.config_hash(),
            extra={"best_epoch": report.best_epoch, "prior": run.prior.prior_kind.value,
                   "lambda": run.prior.lam},
        )
        report.checkpoint = str(ckpt)
        path = write_json(
            out / "train_report.json",
            {"report": report.to_dict(), "model": model.describe()},
            run.header(),
        )
        print_train(f"checkpoint {green(str(ckpt))}, report {green(str(path))}")
        return 0
