"""点予測・確率予測の評価指標"""

from __future__ import annotations

import math

import numpy as np

from .errors import DataError


def mae(pred: np.ndarray, truth: np.ndarray) -> float:
    """平均絶対誤差 mean|ŷ - y|"""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise DataError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean(np.abs(pred - truth)))


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """二乗平均平方根誤差 sqrt(mean(ŷ - y)²)"""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise DataError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def improvement_pct(baseline: float, treated: float) -> float:
    """改善率 (baseline - treated) / baseline × 100"""
    if baseline == 0:
        raise DataError("improvement is undefined for a zero baseline")
    return (baseline - treated) / baseline * 100.0


def nearest_rank_quantile(samples: np.ndarray, q: float, axis: int = 0) -> np.ndarray:
    """最近順位法による分位点

    n 個の標本を昇順に並べ、順位 ceil(q·n)（1 以上 n 以下）の値を返す。
    """
    if not 0.0 <= q <= 1.0:
        raise DataError(f"quantile level must be in [0, 1], got {q}")
    samples = np.asarray(samples)
    n = samples.shape[axis]
    # q·n の丸め誤差で順位が 1 つずれないようにする
    rank = min(max(math.ceil(round(q * n, 9)), 1), n)
    return np.take(np.sort(samples, axis=axis), rank - 1, axis=axis)


def interval_width(lower: np.ndarray, upper: np.ndarray) -> float:
    """予測区間の平均幅 mean(upper - lower)"""
    lower, upper = np.asarray(lower), np.asarray(upper)
    if lower.shape != upper.shape:
        raise DataError(f"shape mismatch: {lower.shape} vs {upper.shape}")
    if np.any(upper < lower):
        raise DataError("interval upper bound below lower bound")
    return float(np.mean(upper - lower))
