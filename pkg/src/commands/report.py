import argparse
import csv
import sys
from pathlib import Path

from ..colors import print_header
from ..config import RunConfig
from ..errors import DataError
from ..experiments.results import aggregate, header_line, read_csv
from .base import Command

METRIC_SETS = (("mae", "rmse"), ("val_mae", "val_rmse"))


class ReportCommand(Command):
    """sweep が書いた CSV を (label, value) ごとに平均 ± 標準偏差で集計するコマンド

    結果は CSV として標準出力に書く。
    """

    @property
    def name(self) -> str:
        return "report"

    @property
    def description(self) -> str:
        return "Aggregate sweep CSVs into mean / std per (label, value) and print as CSV"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("files", nargs="+", type=Path, help="CSV files written by 'sweep'")

    def execute(self, run: RunConfig, args: argparse.Namespace) -> int:
        writer = None
        for path in args.files:
            meta, rows = read_csv(path)
            metrics = _metrics_for(path, rows[0].keys())
            print_header(f"{path.name} ({header_line(meta)[2:]})")
            for entry in aggregate(rows, metrics):
                record = {"file": path.name, "config_hash": meta.get("config_hash", ""), **entry}
                if writer is None:
                    writer = csv.DictWriter(
                        sys.stdout, fieldnames=list(record), lineterminator="\n", extrasaction="ignore"
                    )
                    writer.writeheader()
                writer.writerow({k: format(v, ".6g") if isinstance(v, float) else v
                                 for k, v in record.items()})
        return 0


def _metrics_for(path: Path, columns) -> tuple[str, ...]:
    columns = set(columns)
    for metrics in METRIC_SETS:
        if set(metrics) <= columns:
            return metrics
    raise DataError(f"{path}: no metric columns (expected mae/rmse or val_mae/val_rmse)")
