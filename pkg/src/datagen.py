"""決定的な合成モバイルトラフィックの生成と CSV 入出力

周期成分（高調波の和）＋ガウスノイズ＋バースト（1 ステップの加算スパイク）
を 0 でクリップした系列を生成する。すべて SeededRng のサブストリームから
引くため、同じ設定からはビット単位で同じテンソルが得られる。
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import TrafficTensor
from .errors import ConfigError, DataError
from .rng import SeededRng

CSV_HEADER = "t,k,c,value"
META_PATTERN = re.compile(r"^#meta start_index=(-?\d+) P=(\d+) resolution=(\d+)$")


@dataclass(frozen=True)
class Harmonic:
    """周期 P に対する周波数倍数・振幅・位相"""

    multiple: int
    amplitude: float
    phase: float = 0.0


def _default_harmonics() -> tuple[Harmonic, ...]:
    # 1 日周期（週の 7 倍）、1 週周期、半日周期
    return (Harmonic(7, 1.0, 0.0), Harmonic(1, 0.4, 0.5), Harmonic(14, 0.3, 1.0))


@dataclass(frozen=True)
class SyntheticConfig:
    """合成データ生成の設定

    既定値は時間解像度 1 時間、P = 1 週間（168 ステップ）、12 週分。
    """

    T: int = 12 * 168
    K: int = 16
    C: int = 1
    steps_per_period: int = 168
    harmonics: tuple[Harmonic, ...] = field(default_factory=_default_harmonics)
    jitter: float = 0.1  # ノードごとの振幅・位相の揺らぎ
    base_level: float = 2.0
    noise_sigma: float = 0.25
    burst_rate: float = 0.01
    burst_magnitude: float = 1.5
    seed: int = 0
    start_index: int = 0
    resolution_minutes: int = 60

    def validate(self) -> list[str]:
        """不正なフィールドを "field: reason" 形式で返す"""
        errors = []
        for name in ("T", "K", "C"):
            if getattr(self, name) < 1:
                errors.append(f"{name}: must be >= 1")
        if self.steps_per_period < 2:
            errors.append("steps_per_period: must be >= 2")
        for i, h in enumerate(self.harmonics):
            if h.multiple < 1:
                errors.append(f"harmonics[{i}].multiple: must be >= 1")
            if not np.isfinite(h.amplitude) or not np.isfinite(h.phase):
                errors.append(f"harmonics[{i}]: amplitude and phase must be finite")
        if not 0.0 <= self.jitter <= 1.0:
            errors.append("jitter: must be in [0, 1]")
        if self.base_level < 0:
            errors.append("base_level: must be >= 0")
        if self.noise_sigma < 0:
            errors.append("noise_sigma: must be >= 0")
        if not 0.0 <= self.burst_rate <= 1.0:
            errors.append("burst_rate: must be in [0, 1]")
        if not 0 <= self.seed < 2**64:
            errors.append("seed: must be a 64-bit unsigned integer")
        return errors


def generate(cfg: SyntheticConfig) -> TrafficTensor:
    """合成トラフィックテンソルを生成

    values[t][k][c] = max(0, base + Σ_h amp·cos(2π·mult·t/P + phase)
                              + N(0, noise_sigma²) + burst(t, k, c))

    Args:
        cfg: 生成設定

    Returns:
        TrafficTensor

    Raises:
        ConfigError: 設定が不正な場合
    """
    errors = cfg.validate()
    if errors:
        raise ConfigError("invalid synthetic config: " + "; ".join(errors), errors)

    rng = SeededRng(cfg.seed, "datagen")
    shape = (cfg.T, cfg.K, cfg.C)
    t = np.arange(cfg.T, dtype=np.float64)[:, None, None]

    values = np.full(shape, float(cfg.base_level))
    for i, h in enumerate(cfg.harmonics):
        jitter_rng = rng.substream(f"harmonic/{i}")
        amp_scale = 1.0 + cfg.jitter * (2.0 * jitter_rng.uniform((cfg.K, cfg.C)) - 1.0)
        phase_shift = cfg.jitter * np.pi * (2.0 * jitter_rng.uniform((cfg.K, cfg.C)) - 1.0)
        values = values + h.amplitude * amp_scale * np.cos(
            2.0 * np.pi * h.multiple * t / cfg.steps_per_period + h.phase + phase_shift
        )

    if cfg.noise_sigma > 0:
        values = values + cfg.noise_sigma * rng.substream("noise").normal(shape)
    if cfg.burst_rate > 0:
        bursts = rng.substream("burst").bernoulli(cfg.burst_rate, shape)
        values = values + cfg.burst_magnitude * bursts

    return TrafficTensor(
        values=np.maximum(values, 0.0),
        start_index=cfg.start_index,
        steps_per_period=cfg.steps_per_period,
        resolution_minutes=cfg.resolution_minutes,
    )


def save_csv(data: TrafficTensor, path: str | Path, comment: str | None = None) -> None:
    """テンソルを CSV に保存

    1 行目は `#meta start_index=<int> P=<int> resolution=<int>`、
    任意のコメント行（`# ...`）、ヘッダ `t,k,c,value`、(t, k, c) 順のデータ行。
    値は 17 桁の有効数字で書き出すため、読み戻しは値として完全一致する。
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"#meta start_index={data.start_index} P={data.steps_per_period} "
        f"resolution={data.resolution_minutes}"
    ]
    if comment:
        lines.append(f"# {comment}")
    lines.append(CSV_HEADER)
    T, K, C = data.values.shape
    for t in range(T):
        for k in range(K):
            for c in range(C):
                lines.append(f"{t},{k},{c},{format(float(data.values[t, k, c]), '.17g')}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_csv(path: str | Path) -> TrafficTensor:
    """save_csv 形式の CSV を読み込む

    Raises:
        DataError: ヘッダ不正、列数不一致、数値でないセル、欠損行など（行番号付き）
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e

    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}: line 1: empty file")
    meta = META_PATTERN.match(lines[0].strip())
    if meta is None:
        raise DataError(
            f"{path}: line 1: expected '#meta start_index=<int> P=<int> resolution=<int>'"
        )
    start_index, period, resolution = (int(g) for g in meta.groups())

    lineno = 1
    while lineno < len(lines) and lines[lineno].startswith("#"):
        lineno += 1
    if lineno >= len(lines) or lines[lineno].strip() != CSV_HEADER:
        raise DataError(f"{path}: line {lineno + 1}: expected header '{CSV_HEADER}'")

    rows: list[tuple[int, int, int, float, int]] = []
    for i in range(lineno + 1, len(lines)):
        line = lines[i].strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != 4:
            raise DataError(f"{path}: line {i + 1}: expected 4 columns, got {len(cells)}")
        try:
            t, k, c = int(cells[0]), int(cells[1]), int(cells[2])
            value = float(cells[3])
        except ValueError as e:
            raise DataError(f"{path}: line {i + 1}: non-numeric cell ({e})") from e
        if not math.isfinite(value):
            raise DataError(f"{path}: line {i + 1}: non-finite value '{cells[3]}'")
        rows.append((t, k, c, value, i + 1))

    if not rows:
        raise DataError(f"{path}: no data rows")
    T = max(r[0] for r in rows) + 1
    K = max(r[1] for r in rows) + 1
    C = max(r[2] for r in rows) + 1
    if len(rows) != T * K * C:
        raise DataError(f"{path}: expected {T * K * C} data rows for shape ({T}, {K}, {C}), "
                        f"got {len(rows)}")

    values = np.empty((T, K, C))
    for n, (t, k, c, value, source_line) in enumerate(rows):
        expected = (n // (K * C), (n // C) % K, n % C)
        if (t, k, c) != expected:
            raise DataError(
                f"{path}: line {source_line}: rows must be sorted by (t, k, c); "
                f"expected {expected}, got {(t, k, c)}"
            )
        values[t, k, c] = value

    return TrafficTensor(
        values=values,
        start_index=start_index,
        steps_per_period=period,
        resolution_minutes=resolution,
    )
