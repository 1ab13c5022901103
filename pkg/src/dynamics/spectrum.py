"""FFT による周期成分の解析と時間領域への再構成"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core import TrafficTensor
from ..errors import ConfigError, DataError


class ComponentRule(Enum):
    TOP_K = "top_k"
    ABOVE_MEAN = "above_mean"
    ALL = "all"


@dataclass(frozen=True)
class DynamicsConfig:
    """周期成分の選択規則

    Attributes:
        rule: top_k（上位 N_K 個）、above_mean（平均振幅を超える N_m 個）、
            all（全ビン、完全再構成）
        n_components: top_k のときの N_K
        period: 周期 P（None ならデータの steps_per_period）
    """

    DEFAULT_N_COMPONENTS = 5

    rule: ComponentRule = ComponentRule.TOP_K
    n_components: int = DEFAULT_N_COMPONENTS
    period: int | None = None

    def validate(self) -> list[str]:
        errors = []
        if self.rule is ComponentRule.TOP_K and self.n_components < 1:
            errors.append("dynamics.n_components: must be >= 1 for top_k")
        if self.period is not None and self.period < 2:
            errors.append("dynamics.period: must be >= 2")
        return errors


@dataclass(frozen=True)
class Spectrum:
    """(k, c) ごとの片側 DFT

    Attributes:
        amplitudes: [F][K][C]、F = floor(L/2) + 1
        phases: [F][K][C]、(-π, π]
        length: 解析した系列長 L
    """

    amplitudes: np.ndarray
    phases: np.ndarray
    length: int

    @property
    def n_bins(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        """f_κ = κ / L（cycles/step）"""
        return np.arange(self.n_bins) / self.length

    def coefficients(self) -> np.ndarray:
        """複素係数 A·exp(iΦ)"""
        return self.amplitudes * np.exp(1j * self.phases)

    def weights(self) -> np.ndarray:
        """逆変換の重み（DC とナイキストは自己共役なので 1、それ以外は 2）"""
        w = np.full(self.n_bins, 2.0)
        w[0] = 1.0
        if self.length % 2 == 0:
            w[-1] = 1.0
        return w


@dataclass(frozen=True)
class ComponentSelection:
    """(k, c) ごとに選択された周波数ビン（振幅の降順）"""

    indices: tuple[tuple[tuple[int, ...], ...], ...]  # [k][c] -> κ の列
    n_bins: int

    def mask(self) -> np.ndarray:
        """[F][K][C] のブールマスク"""
        K, C = len(self.indices), len(self.indices[0])
        m = np.zeros((self.n_bins, K, C), dtype=bool)
        for k in range(K):
            for c in range(C):
                m[list(self.indices[k][c]), k, c] = True
        return m

    def counts(self) -> np.ndarray:
        """[K][C] の選択数"""
        return np.array([[len(sel) for sel in row] for row in self.indices], dtype=np.int64)


def analyze(train: TrafficTensor) -> Spectrum:
    """学習系列の DFT を (k, c) ごとに計算

    Raises:
        DataError: L < 2 または非有限値を含む場合
    """
    values = train.values
    if values.shape[0] < 2:
        raise DataError(f"spectrum analysis needs L >= 2, got L={values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise DataError("spectrum analysis requires finite input")
    coeffs = np.fft.rfft(values, axis=0)
    phases = np.angle(coeffs)
    phases = np.where(phases <= -np.pi, np.pi, phases)
    return Spectrum(amplitudes=np.abs(coeffs), phases=phases, length=values.shape[0])


def select_components(spec: Spectrum, cfg: DynamicsConfig) -> ComponentSelection:
    """振幅に基づいて周波数ビンを選択

    top_k: 振幅上位 N_K 個（同振幅は κ の小さい方を優先、ビン数で打ち切り）
    above_mean: 平均振幅を厳密に超えるすべてのビン
    all: すべてのビン
    """
    errors = cfg.validate()
    if errors:
        raise ConfigError("; ".join(errors), errors)

    F, K, C = spec.amplitudes.shape
    kappa = np.arange(F)
    indices = []
    for k in range(K):
        row = []
        for c in range(C):
            amp = spec.amplitudes[:, k, c]
            # 第1キー: 振幅降順、第2キー: κ 昇順
            order = np.lexsort((kappa, -amp))
            if cfg.rule is ComponentRule.TOP_K:
                chosen = order[:min(cfg.n_components, F)]
            elif cfg.rule is ComponentRule.ALL:
                chosen = order
            else:
                chosen = order[amp[order] > amp.mean()]
            row.append(tuple(int(i) for i in chosen))
        indices.append(tuple(row))
    return ComponentSelection(indices=tuple(indices), n_bins=F)


def reconstruct(
    spec: Spectrum,
    components: ComponentSelection,
    i: int | np.ndarray,
) -> np.ndarray:
    """選択成分から時間領域信号 S[i] を再構成

    S[i] = (1/L) Σ_κ w_κ A_κ cos(2π f_κ i + Φ_κ)
    すべてのビンを使うと入力系列に一致する（逆 DFT の完全性）。

    Args:
        spec: スペクトル
        components: 選択されたビン
        i: 時刻インデックス（スカラーまたは 1 次元配列）

    Returns:
        スカラー i なら [K][C]、配列なら [len(i)][K][C]
    """
    idx = np.atleast_1d(np.asarray(i, dtype=np.float64))
    F, K, C = spec.amplitudes.shape
    z = np.where(components.mask(), spec.coefficients(), 0.0) * spec.weights()[:, None, None]
    basis = np.exp(2j * np.pi * np.outer(idx, spec.frequencies))  # [I][F]
    signal = (basis @ z.reshape(F, K * C)).real.reshape(idx.size, K, C) / spec.length
    return signal[0] if np.ndim(i) == 0 else signal
