from ..core import TrafficTensor
from ..errors import ConfigError, DataError
from .base import DynamicsProfile, PredictionMode
from .local import LocalProfile
from .periodic import PeriodicProfile, periodic_profile
from .similarity import SimilarityReport, similarity_report
from .spectrum import (
    ComponentRule,
    ComponentSelection,
    DynamicsConfig,
    Spectrum,
    analyze,
    reconstruct,
    select_components,
)

__all__ = [
    "ComponentRule",
    "ComponentSelection",
    "DynamicsConfig",
    "DynamicsProfile",
    "LocalProfile",
    "PeriodicProfile",
    "PredictionMode",
    "SimilarityReport",
    "Spectrum",
    "analyze",
    "create_profile",
    "periodic_profile",
    "reconstruct",
    "select_components",
    "similarity_report",
]


def create_profile(
    kind: str,
    train: TrafficTensor,
    cfg: DynamicsConfig | None = None,
) -> DynamicsProfile:
    """種別名から事前ダイナミクスを抽出するファクトリ関数

    Args:
        kind: "periodic" または "local"
        train: 学習分割（正規化済み）
        cfg: 周期成分の選択規則（periodic のみ使用）

    Returns:
        DynamicsProfile インスタンス

    Raises:
        ConfigError: 不明な種別名の場合
        DataError: 周期が学習長を超える場合
    """
    kind = kind.lower()
    cfg = cfg or DynamicsConfig()

    if kind == "periodic":
        period = cfg.period or train.steps_per_period
        if period > train.T:
            raise DataError(f"period P={period} exceeds training length L={train.T}")
        spec = analyze(train)
        selection = select_components(spec, cfg)
        return periodic_profile(
            spec, selection, period, train.T, origin=train.start_index, provenance=train.split
        )
    elif kind == "local":
        return LocalProfile(provenance=train.split)
    else:
        raise ConfigError(
            f"Unknown dynamics kind: {kind}. Supported kinds: periodic, local",
            ["prior.kind"],
        )
