import argparse
import sys
import traceback

from .colors import print_error, print_init
from .commands.base import Command
from .config import load_config
from .errors import ConfigError, NPDiffError

EXIT_UNEXPECTED = 1
EXIT_IO = 3


class CommandRegistry:
    """サブコマンドの登録・検索・実行を管理するレジストリ

    設定の読み込みと検証を済ませてからコマンドへディスパッチし、
    ドメイン例外を終了コードに変換する。
    """

    def __init__(self):
        self._commands: dict[str, Command] = {}

    def register(self, command: Command) -> None:
        """コマンドを登録

        Args:
            command: 登録するコマンドインスタンス
        """
        if command.name in self._commands:
            print_init(f"Warning: Overwriting existing command: {command.name}")
        self._commands[command.name] = command

    def register_all(self, commands: list[Command]) -> None:
        for command in commands:
            self.register(command)

    def get(self, name: str) -> Command | None:
        return self._commands.get(name)

    def add_subparsers(self, parser: argparse.ArgumentParser) -> None:
        """登録済みコマンドをサブパーサとして追加"""
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
        for command in self._commands.values():
            sub = subparsers.add_parser(command.name, help=command.description,
                                        description=command.description)
            command.add_arguments(sub)

    def execute(self, name: str, args: argparse.Namespace, flags: dict[str, object]) -> int:
        """設定を組み立ててコマンドを実行し、終了コードを返す

        Args:
            name: サブコマンド名
            args: パース済みの引数（config / overrides / dry_run を含む）
            flags: グローバルフラグ由来の設定上書き

        Returns:
            0 成功、2 設定エラー、3 データ・入出力エラー、4 数値エラー、1 想定外
        """
        command = self.get(name)
        if command is None:
            print_error(f"Unknown command: {name}")
            return ConfigError("").exit_code

        try:
            run = load_config(
                args.config,
                overrides=args.overrides,
                flags={**flags, **command.config_flags(args)},
            )
            if args.dry_run:
                sys.stdout.write(run.canonical_json() + "\n")
                return 0
            print_init(f"{name}: config {run.config_hash()}")
            return command.execute(run, args)
        except NPDiffError as e:
            print_error(str(e))
            return e.exit_code
        except OSError as e:
            print_error(f"I/O error: {e}")
            return EXIT_IO
        except Exception as e:
            print_error(f"Unexpected error: {e}")
            traceback.print_exc()
            return EXIT_UNEXPECTED
