"""サンプル分布による予測の不確実性評価（中央値と 90% 区間）"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from ..colors import print_eval, print_header
from ..diffusion import PriorKind
from ..errors import DataError
from ..metrics import interval_width, nearest_rank_quantile
from .tasks import PreparedTask, prepare, run_cell

if TYPE_CHECKING:
    from ..config import RunConfig


@dataclass(frozen=True)
class UncertaintyReport:
    """予測ステップ・ノードごとの分位点

    Attributes:
        median, lower, upper: [B][M][K][C]（非正規化）
        level: 区間の被覆率（既定 0.9 → 5% / 95% 分位点）
    """

    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    n_samples: int

    @property
    def mean_width(self) -> float:
        return interval_width(self.lower, self.upper)

    def width_per_step(self) -> np.ndarray:
        """[M] 窓・ノード・チャネルで平均した区間幅"""
        return (self.upper - self.lower).mean(axis=(0, 2, 3))

    def coverage(self, truth: np.ndarray) -> float:
        """正解が区間に入る割合"""
        truth = np.asarray(truth)
        if truth.shape != self.lower.shape:
            raise DataError(f"truth shape {truth.shape} does not match {self.lower.shape}")
        return float(np.mean((truth >= self.lower) & (truth <= self.upper)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "n_samples": self.n_samples,
            "mean_width": self.mean_width,
            "width_per_step": self.width_per_step().tolist(),
        }


def uncertainty_report(samples: np.ndarray, level: float = 0.9) -> UncertaintyReport:
    """[B][S][M][K][C] の（非正規化）サンプルから中央値と中心 level 区間を計算

    分位点は最近順位法で求める。
    """
    samples = np.asarray(samples)
    if samples.ndim != 5:
        raise DataError(f"samples must be [B][S][M][K][C], got shape {samples.shape}")
    if not 0.0 < level < 1.0:
        raise DataError(f"interval level must be in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    return UncertaintyReport(
        median=nearest_rank_quantile(samples, 0.5, axis=1),
        lower=nearest_rank_quantile(samples, tail, axis=1),
        upper=nearest_rank_quantile(samples, 1.0 - tail, axis=1),
        level=level,
        n_samples=samples.shape[1],
    )


def uncertainty_comparison(
    run: RunConfig,
    prepared: PreparedTask | None = None,
    level: float = 0.9,
) -> dict[str, dict[str, Any]]:
    """λ=0 と λ>0 を学習し、テスト窓の区間幅を比較する（最初のシードを使用）"""
    prepared = prepared or prepare(run)
    seeded = run.with_seed(run.task.seeds[0])
    kind = run.prior.prior_kind if run.prior.uses_prior else run.task.default_prior
    print_header(f"Uncertainty: {int(level * 100)}% intervals, {run.train.test_samples} samples")

    out = {}
    for label, cell_run in (
        ("baseline", seeded.with_prior(0.0, PriorKind.NONE)),
        ("npdiff", seeded.with_prior(run.sweep.prior_lam, kind)),
    ):
        cell = run_cell(cell_run, prepared, label, keep=True)
        samples = prepared.normalizer.denormalize(cell.evaluation.samples)
        report = uncertainty_report(samples, level)
        out[label] = {
            **report.to_dict(),
            "mae": cell.mae,
            "rmse": cell.rmse,
            "coverage": report.coverage(cell.evaluation.truth),
        }
        print_eval(f"{label}: mean interval width {report.mean_width:.4f}, MAE {cell.mae:.4f}")
    return out
