from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import TrafficTensor, cosine_similarity
from ..errors import DataError
from .base import DynamicsProfile


@dataclass
class SimilarityReport:
    """ダイナミクスと実測値のコサイン類似度

    Attributes:
        per_series: [K][C]（零ノルムでスキップした系列は NaN）
        mean: 有効な系列の平均
        flattened: 全系列を平坦化した 1 つのベクトルでの類似度
        skipped: スキップした (k, c) のリスト
    """

    kind: str
    per_series: np.ndarray
    mean: float
    flattened: float
    skipped: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mean": self.mean,
            "flattened": self.flattened,
            "per_series": [[None if np.isnan(v) else float(v) for v in row]
                           for row in self.per_series],
            "skipped": [list(s) for s in self.skipped],
        }


def similarity_report(profile: DynamicsProfile, data: TrafficTensor) -> SimilarityReport:
    """評価区間における整列済みダイナミクスと真値の類似度を計算

    Raises:
        DataError: 定義済みの時刻が 1 つもない、または全系列が零ノルムの場合
    """
    dyn, valid = profile.series(data)
    if not valid.any():
        raise DataError("no timestep has defined dynamics in the evaluation range")
    dyn, truth = dyn[valid], data.values[valid]

    per_series = np.full((data.K, data.C), np.nan)
    skipped = []
    for k in range(data.K):
        for c in range(data.C):
            a, b = dyn[:, k, c], truth[:, k, c]
            if not np.any(a) or not np.any(b):
                skipped.append((k, c))
                continue
            per_series[k, c] = cosine_similarity(a, b)

    if len(skipped) == data.K * data.C:
        raise DataError("all series have zero norm; similarity is undefined")
    return SimilarityReport(
        kind=profile.kind,
        per_series=per_series,
        mean=float(np.nanmean(per_series)),
        flattened=cosine_similarity(dyn, truth),
        skipped=skipped,
    )
