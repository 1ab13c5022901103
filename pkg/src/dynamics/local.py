from __future__ import annotations

import numpy as np

from ..core import TrafficTensor
from ..errors import DataError
from .base import DynamicsProfile


class LocalProfile(DynamicsProfile):
    """局所ダイナミクス D_l[t] = x[t-1]

    1 ステップ先予測専用。ターゲット直前の観測値（コンテキストの最終値）を使う。
    2 ステップ目以降の lag-1 値は未観測なので M > 1 は拒否する。
    """

    @property
    def kind(self) -> str:
        return "local"

    def align_arrays(
        self,
        contexts: np.ndarray,
        target_starts: np.ndarray,
        horizon: int,
    ) -> np.ndarray:
        if horizon != 1:
            raise DataError(f"local dynamics only support M=1, got M={horizon}")
        return np.asarray(contexts)[..., -1:, :, :]

    def series(self, data: TrafficTensor) -> tuple[np.ndarray, np.ndarray]:
        shifted = np.empty_like(data.values)
        shifted[0] = 0.0
        shifted[1:] = data.values[:-1]
        valid = np.ones(data.T, dtype=bool)
        valid[0] = False  # 系列先頭の D_l は未定義
        return shifted, valid
