"""エラーの分類

ライブラリ層はここで定義した例外を送出し、CLI 層（CommandRegistry）だけが
終了コードへ変換する。

階層:
1. ConfigError: 設定・パラメータの不正（exit 2）
2. DataError: データの形式・整合性の不正（exit 3）
3. NumericError: 損失・勾配の非有限値（exit 4）
"""

from __future__ import annotations

from enum import Enum


class ErrorCategory(Enum):
    CONFIG = "config"  # 設定ファイル・フラグ・引数の検証失敗
    DATA = "data"  # パース失敗、形状不一致、空の分割
    NUMERIC = "numeric"  # NaN / Inf の発生


EXIT_CODES = {
    ErrorCategory.CONFIG: 2,
    ErrorCategory.DATA: 3,
    ErrorCategory.NUMERIC: 4,
}


class NPDiffError(Exception):
    """すべてのドメイン例外の基底クラス"""

    category: ErrorCategory = ErrorCategory.DATA

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.category]


class ConfigError(NPDiffError, ValueError):
    """設定エラー（問題のあるフィールド名を保持する）"""

    category = ErrorCategory.CONFIG

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []


class DataError(NPDiffError, ValueError):
    """データエラー"""

    category = ErrorCategory.DATA


class NumericError(NPDiffError, ArithmeticError):
    """数値エラー（非有限の損失・勾配）"""

    category = ErrorCategory.NUMERIC
