from __future__ import annotations

import numpy as np

from ..core import TrafficTensor
from ..errors import DataError
from .base import DynamicsProfile
from .spectrum import ComponentSelection, Spectrum, reconstruct


class PeriodicProfile(DynamicsProfile):
    """周期ダイナミクス D_p

    学習区間の再構成信号 S を周期 P の位相ごとに平均したプロファイル。
    D_p[φ] は絶対時刻 origin + φ + jP に対応し、任意の時刻へ周期的に拡張する。

    Attributes:
        profile: [P][K][C]
        period: P
        origin: 学習分割の start_index（位相 0 の絶対時刻）
        selection: 使用した周波数ビン
    """

    def __init__(
        self,
        profile: np.ndarray,
        period: int,
        origin: int,
        selection: ComponentSelection,
        provenance: str,
    ):
        super().__init__(provenance)
        self.profile = np.array(profile, dtype=np.float64)
        self.profile.setflags(write=False)
        self.period = period
        self.origin = origin
        self.selection = selection

    @property
    def kind(self) -> str:
        return "periodic"

    def phase_of(self, timestamps: np.ndarray) -> np.ndarray:
        return np.mod(np.asarray(timestamps, dtype=np.int64) - self.origin, self.period)

    def align_arrays(
        self,
        contexts: np.ndarray,
        target_starts: np.ndarray,
        horizon: int,
    ) -> np.ndarray:
        starts = np.asarray(target_starts, dtype=np.int64)
        steps = starts[..., None] + np.arange(horizon)
        return self.profile[self.phase_of(steps)]

    def series(self, data: TrafficTensor) -> tuple[np.ndarray, np.ndarray]:
        timestamps = data.start_index + np.arange(data.T)
        return self.profile[self.phase_of(timestamps)], np.ones(data.T, dtype=bool)


def periodic_profile(
    spec: Spectrum,
    components: ComponentSelection,
    P: int,
    L: int | None = None,
    origin: int = 0,
    provenance: str = "train",
) -> PeriodicProfile:
    """D_p[t] = (1/N_P) Σ_j S[t + jP]（t ∈ [0, P)）を計算

    Args:
        spec: 学習系列のスペクトル
        components: 使用するビン
        P: 周期
        L: 学習系列長（省略時は spec.length）
        origin: 学習分割の start_index
        provenance: 抽出元の分割名

    Raises:
        DataError: P < 2 または完全な周期が 1 つもない場合
    """
    L = spec.length if L is None else L
    if P < 2:
        raise DataError(f"period must be >= 2, got P={P}")
    n_periods = L // P
    if n_periods < 1:
        raise DataError(f"training length L={L} holds no complete period of P={P}")

    signal = reconstruct(spec, components, np.arange(n_periods * P))
    K, C = signal.shape[1:]
    profile = signal.reshape(n_periods, P, K, C).mean(axis=0)
    return PeriodicProfile(profile, P, origin, components, provenance)
