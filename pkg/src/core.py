"""時空間トラフィックテンソルのデータモデル

T×K×C のトラフィック配列、z-score 正規化、学習/検証/テスト分割、
コンテキスト/ターゲット窓の切り出しを提供する。
すべての型は生成後に不変（numpy 配列は書き込み禁止にする）。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_SPLIT_RATIOS = (0.6, 0.2, 0.2)
STD_FLOOR = 1e-8


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrafficTensor:
    """T×K×C のトラフィック量テンソル

    Attributes:
        values: [T][K][C] の実数配列
        start_index: values[0] の絶対タイムスタンプ
        steps_per_period: 主周期 P（1 周期のステップ数）
        resolution_minutes: 時間解像度（メタデータのみ）
        split: 分割の由来（"full" / "train" / "val" / "test"）
    """

    values: np.ndarray
    start_index: int = 0
    steps_per_period: int = 2
    resolution_minutes: int = 60
    split: str = "full"

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 3:
            raise DataError(f"values must be 3-dimensional [T][K][C], got shape {values.shape}")
        if min(values.shape) < 1:
            raise DataError(f"T, K and C must all be >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("values must be finite")
        if self.steps_per_period < 2:
            raise DataError(f"steps_per_period must be >= 2, got {self.steps_per_period}")
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    @property
    def C(self) -> int:
        return self.values.shape[2]

    def with_values(
        self,
        values: np.ndarray,
        start_index: int | None = None,
        split: str | None = None,
    ) -> TrafficTensor:
        """メタデータを引き継いで値だけ差し替えたテンソルを返す"""
        return TrafficTensor(
            values=values,
            start_index=self.start_index if start_index is None else start_index,
            steps_per_period=self.steps_per_period,
            resolution_minutes=self.resolution_minutes,
            split=self.split if split is None else split,
        )


@dataclass(frozen=True)
class Normalizer:
    """(k, c) ごとの z-score 正規化パラメータ（学習分割のみから推定）"""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "std", _frozen(self.std))

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """末尾 2 軸が (K, C) の任意の配列を正規化"""
        self._check(values)
        return (values - self.mean) / self.std

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        """正規化の逆変換"""
        self._check(values)
        return values * self.std + self.mean

    def _check(self, values: np.ndarray) -> None:
        if np.shape(values)[-2:] != self.mean.shape:
            raise DataError(
                f"shape mismatch: normalizer has (K, C) = {self.mean.shape}, "
                f"got trailing axes {np.shape(values)[-2:]}"
            )


@dataclass(frozen=True)
class WindowPair:
    """コンテキスト x0^co と直後のターゲット x0^ta の組"""

    context: np.ndarray
    target: np.ndarray
    target_start_index: int
    split: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "context", _frozen(self.context))
        object.__setattr__(self, "target", _frozen(self.target))

    @property
    def H(self) -> int:
        return self.context.shape[0]

    @property
    def M(self) -> int:
        return self.target.shape[0]


@dataclass(frozen=True)
class WindowBatch:
    """学習・推論用に窓を積み重ねた配列"""

    contexts: np.ndarray  # [B][H][K][C]
    targets: np.ndarray  # [B][M][K][C]
    target_starts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.contexts.shape[0]

    def take(self, idx: np.ndarray) -> WindowBatch:
        return WindowBatch(self.contexts[idx], self.targets[idx], self.target_starts[idx])


def split_dataset(
    data: TrafficTensor,
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
) -> tuple[TrafficTensor, TrafficTensor, TrafficTensor]:
    """時系列順に学習/検証/テストへ分割

    切り捨てで余ったステップはテスト分割に割り当てる。

    Args:
        data: 分割対象
        ratios: (train, val, test) の比率（合計 1）

    Returns:
        (train, val, test) のテンソル。start_index は絶対位置。

    Raises:
        ConfigError: 比率の合計が 1 でない場合
        DataError: いずれかの分割が空になる場合
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"ratios must be three non-negative numbers, got {ratios}", ["ratios"])
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)}", ["ratios"])

    T = data.T
    n_train = math.floor(T * ratios[0] + 1e-9)
    n_val = math.floor(T * ratios[1] + 1e-9)
    n_test = T - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise DataError(
            f"split of T={T} with ratios {ratios} leaves an empty segment "
            f"(lengths {n_train}, {n_val}, {n_test})"
        )

    bounds = [(0, n_train, "train"), (n_train, n_train + n_val, "val"), (n_train + n_val, T, "test")]
    return tuple(
        data.with_values(
            data.values[lo:hi],
            start_index=data.start_index + lo,
            split=name,
        )
        for lo, hi, name in bounds
    )


def fit_normalizer(train: TrafficTensor) -> Normalizer:
    """学習分割から (k, c) ごとの平均・母標準偏差を推定

    標準偏差は STD_FLOOR で下限を設ける。
    """
    if train.T < 2:
        raise DataError(f"normalizer needs at least 2 timesteps, got T={train.T}")
    mean = train.values.mean(axis=0)
    std = np.maximum(train.values.std(axis=0), STD_FLOOR)
    return Normalizer(mean=mean, std=std)


def apply_normalizer(n: Normalizer, x: TrafficTensor, inverse: bool = False) -> TrafficTensor:
    """z-score 変換（inverse=True で逆変換）を要素ごとに適用"""
    values = n.denormalize(x.values) if inverse else n.normalize(x.values)
    return x.with_values(values)


def make_windows(data: TrafficTensor, H: int, M: int, stride: int = 1) -> list[WindowPair]:
    """すべての最大窓を時系列順に切り出す

    窓数は floor((T - H - M) / stride) + 1。
    """
    if H < 1 or M < 1 or stride < 1:
        raise ConfigError(f"H, M and stride must be >= 1, got H={H}, M={M}, stride={stride}")
    if H + M > data.T:
        raise DataError(f"window H+M={H + M} exceeds series length T={data.T}")

    count = (data.T - H - M) // stride + 1
    windows = []
    for i in range(count):
        s = i * stride
        windows.append(
            WindowPair(
                context=data.values[s:s + H],
                target=data.values[s + H:s + H + M],
                target_start_index=data.start_index + s + H,
                split=data.split,
            )
        )
    return windows


def stack_windows(windows: list[WindowPair]) -> WindowBatch:
    """窓のリストをバッチ配列に積み重ねる"""
    if not windows:
        raise DataError("cannot stack an empty window list")
    return WindowBatch(
        contexts=np.stack([w.context for w in windows]),
        targets=np.stack([w.target for w in windows]),
        target_starts=np.array([w.target_start_index for w in windows], dtype=np.int64),
    )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """2 つのベクトル（平坦化）のコサイン類似度

    Raises:
        DataError: 長さ不一致、または零ノルムの場合
    """
    a = np.ravel(np.asarray(a, dtype=np.float64))
    b = np.ravel(np.asarray(b, dtype=np.float64))
    if a.size < 1 or a.size != b.size:
        raise DataError(f"vectors must have equal non-zero length, got {a.size} and {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine similarity is undefined for a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
