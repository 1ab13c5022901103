"""ANSIカラーユーティリティ

進捗出力を色付けするためのシンプルなユーティリティ。
データは stdout / ファイルへ、進捗はすべて stderr へ出力する。
"""

import os
import sys


class Colors:
    """ANSIエスケープコード"""
    RESET = "\033[0m"

    RED = "\033[31m"
    GREEN = "\033[32m"
    YELLOW = "\033[33m"
    BLUE = "\033[34m"
    MAGENTA = "\033[35m"
    CYAN = "\033[36m"

    BRIGHT_BLACK = "\033[90m"  # グレー

    BOLD = "\033[1m"


_quiet = False


def set_quiet(quiet: bool) -> None:
    """進捗出力の抑制を切り替える"""
    global _quiet
    _quiet = quiet


def _use_color() -> bool:
    if os.environ.get("NPDIFF_NO_COLOR"):
        return False
    return sys.stderr.isatty()


def colorize(text: str, color: str) -> str:
    """テキストに色を付ける"""
    if not _use_color():
        return text
    return f"{color}{text}{Colors.RESET}"


# ショートカット関数
def green(text: str) -> str:
    return colorize(text, Colors.GREEN)

def cyan(text: str) -> str:
    return colorize(text, Colors.CYAN)

def gray(text: str) -> str:
    return colorize(text, Colors.BRIGHT_BLACK)

def bold(text: str) -> str:
    return colorize(text, Colors.BOLD)


def _emit(tag: str, color: str, msg: str) -> None:
    if _quiet:
        return
    print(f"{colorize(f'[{tag}]', color)} {msg}", file=sys.stderr)


# タグ付きprint用（すべて stderr）
def print_init(msg: str) -> None:
    """[INIT] 緑色"""
    _emit("INIT", Colors.GREEN, msg)

def print_data(msg: str) -> None:
    """[DATA] シアン"""
    _emit("DATA", Colors.CYAN, msg)

def print_dynamics(msg: str) -> None:
    """[DYN] 黄色"""
    _emit("DYN", Colors.YELLOW, msg)

def print_train(msg: str) -> None:
    """[TRAIN] マゼンタ"""
    _emit("TRAIN", Colors.MAGENTA, msg)

def print_eval(msg: str) -> None:
    """[EVAL] 青"""
    _emit("EVAL", Colors.BLUE, msg)

def print_sweep(msg: str) -> None:
    """[SWEEP] グレー"""
    _emit("SWEEP", Colors.BRIGHT_BLACK, msg)

def print_error(msg: str) -> None:
    """[ERROR] 赤（quiet でも出力する）"""
    print(f"{colorize('[ERROR]', Colors.RED)} {msg}", file=sys.stderr)

def print_separator(char: str = "─", width: int = 60) -> None:
    """区切り線（グレー）"""
    if not _quiet:
        print(gray(char * width), file=sys.stderr)

def print_header(title: str, char: str = "=", width: int = 60) -> None:
    """ヘッダー（太字）"""
    if _quiet:
        return
    print(bold(char * width), file=sys.stderr)
    print(bold(title), file=sys.stderr)
    print(bold(char * width), file=sys.stderr)
