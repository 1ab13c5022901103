"""NPDiff - ノイズ事前分布付き拡散モデルによるモバイルトラフィック予測

使用方法:
    npdiff gen --out data/                       # 合成データを生成
    npdiff --lam 0.5 --prior periodic train      # 学習してチェックポイントを保存
    npdiff eval --checkpoint out/checkpoint.json # テスト窓で評価
    npdiff --jobs 4 sweep --axis lambda          # λ アブレーション
"""

import argparse
import sys
from pathlib import Path

from dotenv import load_dotenv

from .colors import set_quiet

# .env ファイルを読み込み（存在する場合）
load_dotenv(Path(__file__).parent.parent / ".env")
from .command_registry import CommandRegistry
from .commands import get_all_commands
from .config import env_jobs
from .errors import NPDiffError


def create_registry() -> CommandRegistry:
    registry = CommandRegistry()
    registry.register_all(get_all_commands())
    return registry


def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    """コマンドライン引数のパーサを作成"""
    parser = argparse.ArgumentParser(
        prog="npdiff",
        description="Diffusion forecasting of mobile traffic with a dynamics-informed noise prior",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  npdiff gen --out data/
  npdiff dynamics --data data/traffic.csv
  npdiff --lam 0.5 --prior periodic train --data data/traffic.csv
  npdiff eval --checkpoint out/checkpoint.json
  npdiff sample --checkpoint out/checkpoint.json --window 3 --samples 100
  npdiff --set task.M=6 sweep --axis components
  npdiff report out/sweep_lambda_12-12.csv
  npdiff --dry-run --config run.json --set train.batch_size=16 train

Exit codes:
  0 success, 2 configuration error, 3 data error, 4 numeric error, 1 unexpected

Environment Variables:
  NPDIFF_OUTPUT_DIR  - Default output directory (default: ./out)
  NPDIFF_JOBS        - Default number of parallel sweep cells (default: 1)
  NPDIFF_NO_COLOR    - Disable ANSI colors in progress output
        """,
    )
    parser.add_argument("--config", type=Path, default=None, help="JSON configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config value, e.g. --set train.batch_size=16 (repeatable)",
    )
    parser.add_argument("--seed", type=int, default=None, help="Seed for data and training")
    parser.add_argument("--lam", type=float, default=None, help="Fusion weight lambda in [0, 1]")
    parser.add_argument(
        "--prior", choices=["periodic", "local", "none"], default=None, help="Dynamics prior"
    )
    parser.add_argument("--epochs", type=int, default=None, help="Maximum training epochs")
    parser.add_argument("--jobs", "-j", type=int, default=None, help="Parallel sweep cells")
    parser.add_argument(
        "--dry-run", action="store_true", help="Print the merged configuration and exit"
    )
    parser.add_argument("--quiet", "-q", action="store_true", help="Suppress progress output")

    registry.add_subparsers(parser)
    return parser


def global_flags(args: argparse.Namespace) -> dict[str, object]:
    """グローバルフラグを設定の上書きに変換（None は上書きしない）"""
    return {
        "seed": args.seed,
        "data.seed": args.seed,
        "prior.lam": args.lam,
        "prior.kind": args.prior,
        "train.max_epochs": args.epochs,
        "sweep.jobs": args.jobs,
    }


def main(argv: list[str] | None = None) -> int:
    """エントリーポイント"""
    registry = create_registry()
    args = build_parser(registry).parse_args(argv)
    set_quiet(args.quiet)

    try:
        if args.jobs is None:
            args.jobs = env_jobs()
    except NPDiffError as e:
        from .colors import print_error

        print_error(str(e))
        return e.exit_code

    return registry.execute(args.command, args, global_flags(args))


if __name__ == "__main__":
    sys.exit(main())
