"""ノードごとに重みを共有する MLP ノイズ推定器 ε_θ(x_n, n | x0^co)

各ノード k について
    z   = [context[:, k, :], x_n[:, k, :]] を平坦化して W_in で E 次元へ
    h0  = concat(z, node_emb[k], tp_emb[bucket(target_start)], step_emb(n))
    h_i = silu(h_{i-1} @ W_i + b_i)   (i = 0..n_layers-1)
    out = h_L @ W_out + b_out          -> [M][C]
を計算する。逆伝播は各層の入力をキャッシュして解析的に求める。
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..errors import ConfigError, DataError
from ..rng import SeededRng


@dataclass(frozen=True)
class DenoiserDims:
    """ネットワークの次元

    Attributes:
        W: 隠れ層の幅
        n_layers: 隠れ層の数
        E: 埋め込み次元（偶数、4 以上）
        K, M, H, C: ノード数・ターゲット長・コンテキスト長・チャネル数
        P_emb: 周期内時刻埋め込みのバケット数
        period: 主周期 P
    """

    DEFAULT_WIDTH = 64
    DEFAULT_LAYERS = 4
    DEFAULT_EMBED = 64
    DEFAULT_TIME_BUCKETS = 24

    K: int
    M: int
    H: int
    C: int = 1
    period: int = 168
    W: int = DEFAULT_WIDTH
    n_layers: int = DEFAULT_LAYERS
    E: int = DEFAULT_EMBED
    P_emb: int = DEFAULT_TIME_BUCKETS

    def validate(self) -> list[str]:
        errors = []
        for name in ("K", "M", "H", "C", "W", "n_layers", "P_emb"):
            if getattr(self, name) < 1:
                errors.append(f"denoiser.{name}: must be >= 1")
        if self.E < 4 or self.E % 2:
            errors.append("denoiser.E: must be an even number >= 4")
        if self.period < 2:
            errors.append("denoiser.period: must be >= 2")
        return errors

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


def _sigmoid(a: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def silu(a: np.ndarray) -> np.ndarray:
    return a * _sigmoid(a)


def silu_grad(a: np.ndarray) -> np.ndarray:
    s = _sigmoid(a)
    return s * (1.0 + a * (1.0 - s))


def step_embedding(n: np.ndarray, dim: int) -> np.ndarray:
    """拡散ステップの正弦波埋め込み [B][dim]

    周波数は 10^(4·j/(dim/2 - 1))、j = 0..dim/2-1 で sin と cos を連結する。
    """
    half = dim // 2
    freqs = 10.0 ** (np.arange(half) / (half - 1) * 4.0)
    table = np.asarray(n, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(table), np.cos(table)], axis=1)


@dataclass
class ForwardCache:
    """backward に必要な中間値"""

    features: np.ndarray  # [B][K][F]
    step_features: np.ndarray  # [B][E]
    buckets: np.ndarray  # [B]
    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]  # h0..h_L


class MLPDenoiser:
    """STID 風の MLP 骨格を持つノイズ推定ネットワーク

    パラメータは名前 -> float64 配列の dict で保持する。
    """

    def __init__(self, dims: DenoiserDims, params: dict[str, np.ndarray], seed: int = 0):
        errors = dims.validate()
        if errors:
            raise ConfigError("invalid denoiser dims: " + "; ".join(errors), errors)
        expected = self.param_shapes(dims)
        if set(params) != set(expected):
            raise DataError(
                f"parameter names do not match dims: missing {sorted(set(expected) - set(params))}, "
                f"unexpected {sorted(set(params) - set(expected))}"
            )
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise DataError(f"parameter {name}: expected shape {shape}, got {params[name].shape}")
        self.dims = dims
        self.seed = seed
        self.params = {name: np.asarray(params[name], dtype=np.float64) for name in expected}

    @staticmethod
    def param_shapes(dims: DenoiserDims) -> dict[str, tuple[int, ...]]:
        """パラメータ名と形状（この順序が保存・勾配検査の順序になる）"""
        E = dims.E
        shapes: dict[str, tuple[int, ...]] = {
            "W_in": ((dims.H + dims.M) * dims.C, E),
            "b_in": (E,),
            "node_emb": (dims.K, E),
            "tp_emb": (dims.P_emb, E),
            "W_step": (E, E),
            "b_step": (E,),
        }
        width_in = 4 * E
        for i in range(dims.n_layers):
            shapes[f"W_{i}"] = (width_in, dims.W)
            shapes[f"b_{i}"] = (dims.W,)
            width_in = dims.W
        shapes["W_out"] = (dims.W, dims.M * dims.C)
        shapes["b_out"] = (dims.M * dims.C,)
        return shapes

    @classmethod
    def init(cls, seed: int, dims: DenoiserDims) -> MLPDenoiser:
        """シードから決定的に初期化

        全結合層の重みは U(-1/sqrt(fan_in), 1/sqrt(fan_in))、埋め込み表は
        Xavier 一様分布、バイアスと出力射影 W_out は 0。
        """
        errors = dims.validate()
        if errors:
            raise ConfigError("invalid denoiser dims: " + "; ".join(errors), errors)
        rng = SeededRng(seed, "denoiser/init")
        params = {}
        for name, shape in cls.param_shapes(dims).items():
            if name.startswith("b_") or name == "W_out":
                params[name] = np.zeros(shape)
            elif name.endswith("_emb"):
                bound = np.sqrt(6.0 / (shape[0] + shape[1]))
                params[name] = bound * (2.0 * rng.substream(name).uniform(shape) - 1.0)
            else:
                bound = 1.0 / np.sqrt(shape[0])
                params[name] = bound * (2.0 * rng.substream(name).uniform(shape) - 1.0)
        return cls(dims, params, seed=seed)

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def with_params(self, params: dict[str, np.ndarray]) -> MLPDenoiser:
        return MLPDenoiser(self.dims, params, seed=self.seed)

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: p.copy() for name, p in self.params.items()}

    def bucket_of(self, target_start: np.ndarray) -> np.ndarray:
        """ターゲット先頭の周期内位置を P_emb 個のバケットへ写す"""
        P = self.dims.period
        return (np.mod(np.asarray(target_start, dtype=np.int64), P) * self.dims.P_emb) // P

    def forward(
        self,
        x_n: np.ndarray,
        n: np.ndarray | int,
        context: np.ndarray,
        target_start: np.ndarray | int,
    ) -> np.ndarray:
        """ノイズ推定 ε_θ

        Args:
            x_n: [B][M][K][C]（単一窓なら [M][K][C]）
            n: 拡散ステップ [B] またはスカラー
            context: [B][H][K][C]（単一窓なら [H][K][C]）
            target_start: ターゲット先頭の絶対タイムスタンプ [B] またはスカラー

        Returns:
            x_n と同じ形状の ε_θ
        """
        single = np.ndim(x_n) == 3
        if single:
            x_n, context = x_n[None], context[None]
        out, _ = self.forward_with_cache(x_n, n, context, target_start)
        return out[0] if single else out

    def forward_with_cache(
        self,
        x_n: np.ndarray,
        n: np.ndarray | int,
        context: np.ndarray,
        target_start: np.ndarray | int,
    ) -> tuple[np.ndarray, ForwardCache]:
        d = self.dims
        x_n = np.asarray(x_n, dtype=np.float64)
        context = np.asarray(context, dtype=np.float64)
        B = x_n.shape[0]
        if x_n.shape[1:] != (d.M, d.K, d.C):
            raise DataError(f"x_n shape {x_n.shape[1:]} does not match (M, K, C) = {(d.M, d.K, d.C)}")
        if context.shape != (B, d.H, d.K, d.C):
            raise DataError(f"context shape {context.shape} does not match {(B, d.H, d.K, d.C)}")
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), (B,))
        target_start = np.broadcast_to(np.asarray(target_start, dtype=np.int64), (B,))

        p = self.params
        # [B][K][(H+M)·C]
        features = np.concatenate(
            [
                context.transpose(0, 2, 1, 3).reshape(B, d.K, d.H * d.C),
                x_n.transpose(0, 2, 1, 3).reshape(B, d.K, d.M * d.C),
            ],
            axis=2,
        )
        z = features @ p["W_in"] + p["b_in"]
        step_features = step_embedding(n, d.E)
        step = step_features @ p["W_step"] + p["b_step"]
        buckets = self.bucket_of(target_start)
        tp = p["tp_emb"][buckets]

        h = np.concatenate(
            [
                z,
                np.broadcast_to(p["node_emb"], (B, d.K, d.E)),
                np.broadcast_to(tp[:, None, :], (B, d.K, d.E)),
                np.broadcast_to(step[:, None, :], (B, d.K, d.E)),
            ],
            axis=2,
        )
        pre_activations, activations = [], [h]
        for i in range(d.n_layers):
            a = h @ p[f"W_{i}"] + p[f"b_{i}"]
            h = silu(a)
            pre_activations.append(a)
            activations.append(h)

        out = h @ p["W_out"] + p["b_out"]  # [B][K][M·C]
        out = out.reshape(B, d.K, d.M, d.C).transpose(0, 2, 1, 3)
        cache = ForwardCache(
            features=features,
            step_features=step_features,
            buckets=buckets,
            pre_activations=pre_activations,
            activations=activations,
        )
        return out, cache

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> dict[str, np.ndarray]:
        """出力勾配 ∂L/∂ε_θ [B][M][K][C] から全パラメータの勾配を計算"""
        d = self.dims
        p = self.params
        B = grad_out.shape[0]
        g = grad_out.transpose(0, 2, 1, 3).reshape(B, d.K, d.M * d.C)

        grads: dict[str, np.ndarray] = {}
        h_last = cache.activations[-1]
        grads["W_out"] = np.einsum("bki,bko->io", h_last, g)
        grads["b_out"] = g.sum(axis=(0, 1))
        g_h = g @ p["W_out"].T

        for i in reversed(range(d.n_layers)):
            g_a = g_h * silu_grad(cache.pre_activations[i])
            grads[f"W_{i}"] = np.einsum("bki,bko->io", cache.activations[i], g_a)
            grads[f"b_{i}"] = g_a.sum(axis=(0, 1))
            g_h = g_a @ p[f"W_{i}"].T

        E = d.E
        g_z, g_node, g_tp, g_step = (g_h[..., j * E:(j + 1) * E] for j in range(4))
        grads["W_in"] = np.einsum("bkf,bke->fe", cache.features, g_z)
        grads["b_in"] = g_z.sum(axis=(0, 1))
        grads["node_emb"] = g_node.sum(axis=0)
        tp_grad = np.zeros_like(p["tp_emb"])
        np.add.at(tp_grad, cache.buckets, g_tp.sum(axis=1))
        grads["tp_emb"] = tp_grad
        g_step_b = g_step.sum(axis=1)
        grads["W_step"] = cache.step_features.T @ g_step_b
        grads["b_step"] = g_step_b.sum(axis=0)

        return {name: grads[name] for name in p}

    def describe(self) -> dict[str, Any]:
        return {
            "dims": self.dims.to_dict(),
            "seed": self.seed,
            "nonlinearity": "silu",
            "num_parameters": self.num_parameters,
        }
