"""ノイズ事前分布付き学習目的関数とその解析的勾配"""

from __future__ import annotations

import numpy as np

from ..core import WindowBatch
from ..diffusion import NoiseSchedule, PriorConfig, forward_diffuse, fuse_noise, noise_prior
from ..errors import DataError
from ..rng import SeededRng
from .mlp import MLPDenoiser


def loss_and_grads(
    model: MLPDenoiser,
    batch: WindowBatch,
    priors: np.ndarray | None,
    cfg: PriorConfig,
    sched: NoiseSchedule,
    rng: SeededRng,
) -> tuple[float, dict[str, np.ndarray]]:
    """min E‖ε - ε̂‖² の損失と勾配

    窓ごとに n ~ U{1..N} と ε ~ N(0, I) を引き（この順序で rng から消費）、
    x_n を作って ε̂ = λ·ε̃ + (1-λ)·ε_θ と比較する。ε̃ はパラメータに
    依存しないため、勾配は (1-λ)·∂ε_θ/∂θ の経路だけを流れる。

    Args:
        model: ノイズ推定ネットワーク
        batch: 正規化済みの窓バッチ
        priors: [B][M][K][C] の整列済みダイナミクス（事前分布なしなら None）
        cfg: 事前分布の設定
        sched: ノイズスケジュール
        rng: このバッチ専用の乱数ストリーム

    Returns:
        (全要素平均の損失, パラメータ名 -> 勾配)
    """
    B = len(batch)
    if B < 1:
        raise DataError("loss requires a non-empty batch")
    targets = batch.targets
    use_prior = cfg.uses_prior
    if use_prior and (priors is None or np.shape(priors) != targets.shape):
        raise DataError(
            f"aligned priors shape {None if priors is None else np.shape(priors)} "
            f"does not match targets {targets.shape}"
        )

    n = rng.integers(1, sched.N + 1, B)
    eps = rng.normal(targets.shape)
    x_n = forward_diffuse(targets, n, eps, sched)

    eps_theta, cache = model.forward_with_cache(x_n, n, batch.contexts, batch.target_starts)
    lam = cfg.lam if use_prior else 0.0
    if use_prior:
        eps_hat = fuse_noise(noise_prior(x_n, priors, n, sched), eps_theta, lam)
    else:
        eps_hat = eps_theta

    residual = eps_hat - eps
    loss = float(np.mean(residual ** 2))
    if lam == 1.0:
        return loss, {name: np.zeros_like(p) for name, p in model.params.items()}

    grad_out = (1.0 - lam) * 2.0 * residual / residual.size
    return loss, model.backward(cache, grad_out)
