import argparse

from ..colors import green, print_data
from ..config import RunConfig
from ..datagen import generate, save_csv
from .base import Command, add_out_argument, output_dir


class GenCommand(Command):
    """合成トラフィックデータを生成して CSV に保存するコマンド"""

    DEFAULT_FILENAME = "traffic.csv"

    @property
    def name(self) -> str:
        return "gen"

    @property
    def description(self) -> str:
        return "Generate a synthetic mobile-traffic dataset and write it as CSV"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        add_out_argument(parser)
        parser.add_argument(
            "--filename",
            default=self.DEFAULT_FILENAME,
            help=f"Output file name inside --out (default: {self.DEFAULT_FILENAME})",
        )

    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        data = generate(run.data)
        path = output_dir(args) / args.filename
        meta = run.header()
        save_csv(data, path, comment=" ".join(f"{k}={v}" for k, v in meta.items()))
        print_data(f"wrote {data.T}x{data.K}x{data.C} tensor to {green(str(path))}")
        return 0
