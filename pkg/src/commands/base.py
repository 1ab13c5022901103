from __future__ import annotations

import argparse
from abc import ABC, abstractmethod
from pathlib import Path

from ..config import RunConfig, env_output_dir
from ..core import TrafficTensor
from ..datagen import generate, load_csv


class Command(ABC):
    """サブコマンドの基底クラス

    すべてのサブコマンドはこのクラスを継承し、固有の引数と実行処理を提供する。
    設定の読み込み・検証は CommandRegistry が execute の前に済ませる。
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """サブコマンド名"""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """--help に表示する説明"""
        pass

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """サブコマンド固有の引数を追加（既定では何もしない）"""

    def config_flags(self, args: argparse.Namespace) -> dict[str, object]:
        """引数から設定への上書き（ドット区切りキー -> 値）を返す"""
        return {}

    @abstractmethod
    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        """サブコマンドを実行

        Args:
            run: 検証済みの実行設定
            args: パース済みのコマンドライン引数

        Returns:
            終了コード（成功時 0）
        """
        pass


def add_data_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--data",
        type=Path,
        default=None,
        help="Dataset CSV written by 'gen' (default: generate from the config)",
    )


def add_out_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out", "-o",
        type=Path,
        default=None,
        help="Output directory (default: $NPDIFF_OUTPUT_DIR or ./out)",
    )


def output_dir(args: argparse.Namespace) -> Path:
    out = args.out if getattr(args, "out", None) is not None else env_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_dataset(run: RunConfig, args: argparse.Namespace) -> TrafficTensor:
    """--data があれば読み込み、なければ設定から生成"""
    path = getattr(args, "data", None)
    return load_csv(path) if path is not None else generate(run.data)


def add_checkpoint_argument(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument(
        "--checkpoint", "-c",
        type=Path,
        required=required,
        help="Checkpoint JSON written by 'train'",
    )


def build_pipeline(run: RunConfig, args: argparse.Namespace):
    """データ準備・ダイナミクス抽出・Trainer 作成をまとめて行う

    Returns:
        (PreparedTask, DynamicsProfile | None, Trainer)
    """
    from ..experiments.tasks import extract_dynamics, prepare
    from ..train import Trainer

    prepared = prepare(run, load_dataset(run, args))
    dynamics = extract_dynamics(run, prepared)
    trainer = Trainer(run.schedule.build(), run.prior, run.train, prepared.normalizer)
    return prepared, dynamics, trainer


def load_model(run: RunConfig, path: Path, prepared):
    """チェックポイントを読み込み、設定ハッシュが異なれば警告する

    Returns:
        (MLPDenoiser, メタデータ辞書)
    """
    from ..colors import print_error
    from ..denoiser import load_checkpoint

    data = prepared.train
    dims = run.denoiser.dims(data.K, run.task.M, run.task.H, data.C, data.steps_per_period)
    model, meta = load_checkpoint(path, expected_dims=dims)
    if meta["config_hash"] and meta["config_hash"] != run.config_hash():
        print_error(
            f"warning: checkpoint was trained with config {meta['config_hash']}, "
            f"current config is {run.config_hash()}"
        )
    return model, meta
