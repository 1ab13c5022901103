from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum

import numpy as np

from ..core import TrafficTensor, WindowPair
from ..errors import DataError


class PredictionMode(Enum):
    ONE_STEP = "one_step"
    MULTI_STEP = "multi_step"


class DynamicsProfile(ABC):
    """事前ダイナミクス D の抽象基底クラス

    周期ダイナミクス（PeriodicProfile）と局所ダイナミクス（LocalProfile）は
    このクラスを継承し、任意の予測窓に D を整列させる方法を提供する。

    Attributes:
        provenance: 抽出元の分割名（学習時は "train" でなければならない）
    """

    def __init__(self, provenance: str):
        self.provenance = provenance

    @property
    @abstractmethod
    def kind(self) -> str:
        """種別名（"periodic" または "local"）"""
        pass

    @abstractmethod
    def align_arrays(
        self,
        contexts: np.ndarray,
        target_starts: np.ndarray,
        horizon: int,
    ) -> np.ndarray:
        """バッチ化された窓に D を整列

        Args:
            contexts: [..., H, K, C] のコンテキスト
            target_starts: [...] のターゲット開始タイムスタンプ
            horizon: 予測ステップ数 M

        Returns:
            [..., M, K, C] の整列済みダイナミクス
        """
        pass

    @abstractmethod
    def series(self, data: TrafficTensor) -> tuple[np.ndarray, np.ndarray]:
        """data の各時刻に対応する D と、その時刻が定義済みかのマスクを返す

        Returns:
            (D [T][K][C], valid [T])
        """
        pass

    def align(
        self,
        window: WindowPair,
        mode: PredictionMode | str = PredictionMode.MULTI_STEP,
    ) -> np.ndarray:
        """1 つの窓のターゲット区間に D を整列

        Args:
            window: 予測窓
            mode: one_step（M=1 必須）または multi_step

        Returns:
            [M][K][C] の配列

        Raises:
            DataError: one_step で M != 1 の場合
        """
        mode = PredictionMode(mode)
        if mode is PredictionMode.ONE_STEP and window.M != 1:
            raise DataError(f"one-step alignment requires M=1, got M={window.M}")
        return self.align_arrays(
            window.context,
            np.asarray(window.target_start_index),
            window.M,
        )
