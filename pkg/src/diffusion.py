"""ノイズ事前分布付き条件付き DDPM

ノイズスケジュール、前向き拡散、解析的ノイズ事前分布 ε̃、
事前分布と学習済み残差ノイズの融合、逆拡散サンプリングを提供する。
すべて正規化空間で計算し、ターゲット窓だけにノイズを加える。
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import numpy as np

from .errors import ConfigError, DataError
from .metrics import nearest_rank_quantile
from .rng import SeededRng


class PriorKind(Enum):
    PERIODIC = "periodic"
    LOCAL = "local"
    NONE = "none"


@dataclass(frozen=True)
class NoiseSchedule:
    """β_n, α_n, ᾱ_n（n = 1..N）

    配列は 0 始まりで保持する: beta[n-1] = β_n、alpha_bar[n] = ᾱ_n（ᾱ_0 = 1）。
    """

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @property
    def N(self) -> int:
        return self.beta.shape[0]

    def check_step(self, n: int | np.ndarray) -> None:
        n = np.asarray(n)
        if np.any(n < 1) or np.any(n > self.N):
            raise DataError(f"diffusion step must be in [1, {self.N}], got {n}")


@dataclass(frozen=True)
class ScheduleConfig:
    """二次スケジュールの端点とステップ数"""

    DEFAULT_BETA_1 = 1e-4
    DEFAULT_BETA_N = 0.5
    DEFAULT_STEPS = 50

    beta_1: float = DEFAULT_BETA_1
    beta_N: float = DEFAULT_BETA_N
    steps: int = DEFAULT_STEPS

    def validate(self) -> list[str]:
        errors = []
        if not 0.0 < self.beta_1 < self.beta_N < 1.0:
            errors.append("schedule: requires 0 < beta_1 < beta_N < 1")
        if self.steps < 2:
            errors.append("schedule.steps: must be >= 2")
        return errors

    def build(self) -> NoiseSchedule:
        return quadratic_schedule(self.beta_1, self.beta_N, self.steps)


@dataclass(frozen=True)
class PriorConfig:
    """融合係数 λ と事前ダイナミクスの種別

    prior_kind = none のときは λ = 0 に固定される。
    """

    lam: float = 0.5
    prior_kind: PriorKind = PriorKind.PERIODIC

    def __post_init__(self):
        if self.prior_kind is PriorKind.NONE:
            object.__setattr__(self, "lam", 0.0)

    def validate(self) -> list[str]:
        if not 0.0 <= self.lam <= 1.0:
            return ["prior.lam: must be in [0, 1]"]
        return []

    @property
    def uses_prior(self) -> bool:
        return self.prior_kind is not PriorKind.NONE

    @property
    def freezes_model(self) -> bool:
        """λ = 1 では ε̂ がパラメータに依存しない"""
        return self.uses_prior and self.lam == 1.0


def quadratic_schedule(beta_1: float, beta_N: float, N: int) -> NoiseSchedule:
    """sqrt(β) を線形補間して二乗する二次スケジュール

    β_n = (sqrt(β_1) + (n-1)/(N-1)·(sqrt(β_N) - sqrt(β_1)))²

    Raises:
        ConfigError: 0 < beta_1 < beta_N < 1, N >= 2 を満たさない場合
    """
    errors = ScheduleConfig(beta_1, beta_N, N).validate()
    if errors:
        raise ConfigError("; ".join(errors), errors)

    beta = np.linspace(beta_1 ** 0.5, beta_N ** 0.5, N) ** 2
    # 端点は指定値に厳密一致させる
    beta[0], beta[-1] = beta_1, beta_N
    alpha = 1.0 - beta
    alpha_bar = np.concatenate([[1.0], np.cumprod(alpha)])
    for arr in (beta, alpha, alpha_bar):
        arr.setflags(write=False)
    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def _at(values: np.ndarray, n: int | np.ndarray, ndim: int) -> float | np.ndarray:
    """ステップ n の係数を取り出し、バッチ次元に合わせて reshape"""
    if np.ndim(n) == 0:
        return float(values[int(n)])
    picked = values[np.asarray(n)]
    return picked.reshape(picked.shape + (1,) * (ndim - picked.ndim))


def forward_diffuse(
    x0_ta: np.ndarray,
    n: int | np.ndarray,
    eps: np.ndarray,
    sched: NoiseSchedule,
) -> np.ndarray:
    """x_n = sqrt(ᾱ_n)·x0 + sqrt(1 - ᾱ_n)·ε

    n はスカラー、または先頭のバッチ軸に対応する整数配列。
    """
    sched.check_step(n)
    if np.shape(eps) != np.shape(x0_ta):
        raise DataError(f"eps shape {np.shape(eps)} does not match x0 shape {np.shape(x0_ta)}")
    ab = _at(sched.alpha_bar, n, np.ndim(x0_ta))
    return np.sqrt(ab) * x0_ta + np.sqrt(1.0 - ab) * eps


def noise_prior(
    x_n: np.ndarray,
    D_aligned: np.ndarray,
    n: int | np.ndarray,
    sched: NoiseSchedule,
) -> np.ndarray:
    """ノイズ事前分布 ε̃ = (x_n - sqrt(ᾱ_n)·D) / sqrt(1 - ᾱ_n)"""
    sched.check_step(n)
    if np.shape(D_aligned) != np.shape(x_n):
        raise DataError(
            f"aligned prior shape {np.shape(D_aligned)} does not match x_n shape {np.shape(x_n)}"
        )
    ab = _at(sched.alpha_bar, n, np.ndim(x_n))
    return (x_n - np.sqrt(ab) * D_aligned) / np.sqrt(1.0 - ab)


def fuse_noise(eps_tilde: np.ndarray, eps_theta: np.ndarray, lam: float) -> np.ndarray:
    """ε̂ = λ·ε̃ + (1 - λ)·ε_θ"""
    if np.shape(eps_tilde) != np.shape(eps_theta):
        raise DataError(f"shape mismatch: {np.shape(eps_tilde)} vs {np.shape(eps_theta)}")
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}", ["prior.lam"])
    # 端点では片側をそのまま返す（λ=0 がバニラ DDPM と完全一致するように）
    if lam == 0.0:
        return eps_theta
    if lam == 1.0:
        return eps_tilde
    return lam * eps_tilde + (1.0 - lam) * eps_theta


def posterior_mean(
    x_n: np.ndarray,
    eps_hat: np.ndarray,
    n: int | np.ndarray,
    sched: NoiseSchedule,
) -> np.ndarray:
    """μ = (1/sqrt(α_n))·(x_n - β_n / sqrt(1 - ᾱ_n)·ε̂)"""
    sched.check_step(n)
    ndim = np.ndim(x_n)
    beta = _at(sched.beta, np.asarray(n) - 1, ndim)
    alpha = _at(sched.alpha, np.asarray(n) - 1, ndim)
    ab = _at(sched.alpha_bar, n, ndim)
    return (x_n - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(alpha)


def posterior_variance(n: int, sched: NoiseSchedule) -> float:
    """σ² = (1 - ᾱ_{n-1}) / (1 - ᾱ_n)·β_n（n = 1 で 0）"""
    sched.check_step(n)
    ab = sched.alpha_bar
    return float((1.0 - ab[n - 1]) / (1.0 - ab[n]) * sched.beta[n - 1])


class NoiseEstimator(Protocol):
    """ε_θ(x_n, n | x0^co) を計算するモデル"""

    def forward(
        self,
        x_n: np.ndarray,
        n: np.ndarray,
        context: np.ndarray,
        target_start: np.ndarray,
    ) -> np.ndarray:
        ...


@dataclass(frozen=True)
class ForecastResult:
    """1 つの予測窓に対するサンプル軌跡

    Attributes:
        samples: [S][M][K][C]（正規化空間）
        target_start_index: ターゲット先頭の絶対タイムスタンプ
    """

    samples: np.ndarray
    target_start_index: int

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def point(self) -> np.ndarray:
        """サンプル平均による点予測"""
        return self.samples.mean(axis=0)

    def median(self) -> np.ndarray:
        return nearest_rank_quantile(self.samples, 0.5)

    def interval(self, level: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
        """中心 level の予測区間（最近順位法）"""
        tail = (1.0 - level) / 2.0
        return (
            nearest_rank_quantile(self.samples, tail),
            nearest_rank_quantile(self.samples, 1.0 - tail),
        )


def sample_batch(
    model: NoiseEstimator,
    contexts: np.ndarray,
    priors: np.ndarray | None,
    target_starts: np.ndarray,
    cfg: PriorConfig,
    sched: NoiseSchedule,
    rngs: list[SeededRng],
    n_samples: int,
    target_shape: tuple[int, int, int],
    stochastic: bool = True,
) -> np.ndarray:
    """複数の窓をまとめて逆拡散する

    窓 b のサンプル s は rngs[b] のサブストリーム "sample/s" から
    x_N と各ステップの z を引く。窓とサンプルを 1 つのバッチ軸に
    平坦化してモデルを呼ぶが、乱数の割り当ては窓ごとに独立している。

    Args:
        contexts: [B][H][K][C]
        priors: [B][M][K][C]（事前分布なしなら None）
        target_starts: [B]
        rngs: 窓ごとの乱数ストリーム（長さ B）
        target_shape: (M, K, C)

    Returns:
        [B][S][M][K][C] のサンプル（正規化空間）
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}", ["n_samples"])
    B = np.shape(contexts)[0]
    if len(rngs) != B:
        raise DataError(f"expected {B} rng streams, got {len(rngs)}")
    if cfg.uses_prior and priors is None:
        raise DataError(f"prior kind '{cfg.prior_kind.value}' requires aligned dynamics")
    use_prior = cfg.uses_prior
    shape = tuple(target_shape)
    if use_prior and np.shape(priors) != (B,) + shape:
        raise DataError(f"aligned prior shape {np.shape(priors)} does not match {(B,) + shape}")

    N = sched.N
    S = n_samples
    if stochastic:
        noise = np.stack([
            np.stack([rng.substream(f"sample/{s}").normal((N,) + shape) for s in range(S)])
            for rng in rngs
        ])
    else:
        noise = np.zeros((B, S, N) + shape)
    noise = noise.reshape((B * S, N) + shape)

    flat_contexts = np.repeat(np.asarray(contexts), S, axis=0)
    flat_starts = np.repeat(np.asarray(target_starts, dtype=np.int64), S)
    flat_priors = np.repeat(np.asarray(priors), S, axis=0) if use_prior else None

    x = noise[:, 0]
    for n in range(N, 0, -1):
        steps = np.full(B * S, n, dtype=np.int64)
        eps_hat = model.forward(x, steps, flat_contexts, flat_starts)
        if use_prior:
            eps_hat = fuse_noise(noise_prior(x, flat_priors, n, sched), eps_hat, cfg.lam)
        mu = posterior_mean(x, eps_hat, n, sched)
        if n > 1:
            x = mu + np.sqrt(posterior_variance(n, sched)) * noise[:, N - n + 1]
        else:
            x = mu
    return x.reshape((B, S) + shape)


def sample(
    model: NoiseEstimator,
    context: np.ndarray,
    prior: np.ndarray | None,
    cfg: PriorConfig,
    sched: NoiseSchedule,
    rng: SeededRng,
    n_samples: int,
    target_start_index: int,
    target_shape: tuple[int, int, int],
    stochastic: bool = True,
) -> ForecastResult:
    """逆拡散で 1 つの窓に対する n_samples 本の予測軌跡を生成

    x_N ~ N(0, I) から始め、n = N..1 で ε_θ を計算し、事前分布があれば
    ε̃ と融合して x_{n-1} = μ + σ·z（n = 1 では z = 0）とする。

    Args:
        model: ノイズ推定モデル
        context: [H][K][C] のコンテキスト（正規化済み）
        prior: [M][K][C] の整列済みダイナミクス（事前分布なしなら None）
        cfg: 事前分布の設定
        sched: ノイズスケジュール
        rng: この窓の乱数ストリーム
        n_samples: サンプル数
        target_start_index: ターゲット先頭の絶対タイムスタンプ
        target_shape: (M, K, C)
        stochastic: False なら x_N と z をすべて 0 にする

    Returns:
        ForecastResult（正規化空間）
    """
    if prior is not None and np.shape(prior) != tuple(target_shape):
        raise DataError(f"aligned prior shape {np.shape(prior)} does not match {target_shape}")
    samples = sample_batch(
        model,
        np.asarray(context)[None],
        None if prior is None else np.asarray(prior)[None],
        np.array([target_start_index], dtype=np.int64),
        cfg,
        sched,
        [rng],
        n_samples,
        target_shape,
        stochastic=stochastic,
    )
    return ForecastResult(samples=samples[0], target_start_index=int(target_start_index))
