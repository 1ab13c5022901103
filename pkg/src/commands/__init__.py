"""npdiff のサブコマンド"""

from .base import Command
from .dynamics import DynamicsCommand
from .evaluate import EvalCommand
from .gen import GenCommand
from .report import ReportCommand
from .sample import SampleCommand
from .sweep import SweepCommand
from .train import TrainCommand


def get_all_commands() -> list[Command]:
    """登録順にすべてのサブコマンドを返す"""
    return [
        GenCommand(),
        DynamicsCommand(),
        TrainCommand(),
        EvalCommand(),
        SampleCommand(),
        SweepCommand(),
        ReportCommand(),
    ]


__all__ = [
    "Command",
    "DynamicsCommand",
    "EvalCommand",
    "GenCommand",
    "ReportCommand",
    "SampleCommand",
    "SweepCommand",
    "TrainCommand",
    "get_all_commands",
]
