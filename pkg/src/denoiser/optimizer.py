"""重み減衰を分離した Adam と段階的学習率スケジュール"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError


@dataclass(frozen=True)
class LRSchedule:
    """decay_epoch 未満は base_lr、以降は decayed_lr"""

    DEFAULT_BASE_LR = 1e-3
    DEFAULT_DECAYED_LR = 4e-4
    DEFAULT_DECAY_EPOCH = 40

    base_lr: float = DEFAULT_BASE_LR
    decayed_lr: float = DEFAULT_DECAYED_LR
    decay_epoch: int = DEFAULT_DECAY_EPOCH

    def lr_at(self, epoch: int) -> float:
        """0 始まりのエポック番号に対する学習率"""
        return self.base_lr if epoch < self.decay_epoch else self.decayed_lr

    def validate(self) -> list[str]:
        errors = []
        if self.base_lr <= 0 or self.decayed_lr <= 0:
            errors.append("train.lr: learning rates must be > 0")
        if self.decay_epoch < 0:
            errors.append("train.lr_decay_epoch: must be >= 0")
        return errors


class AdamOptimizer:
    """バイアス補正付き Adam（AdamW 形式の重み減衰）

    p ← p·(1 - lr·wd) - lr·m̂ / (sqrt(v̂) + eps)
    """

    DEFAULT_BETAS = (0.9, 0.999)
    DEFAULT_EPS = 1e-8
    DEFAULT_WEIGHT_DECAY = 1e-6

    def __init__(
        self,
        shapes: dict[str, tuple[int, ...]],
        schedule: LRSchedule | None = None,
        weight_decay: float = DEFAULT_WEIGHT_DECAY,
        betas: tuple[float, float] = DEFAULT_BETAS,
        eps: float = DEFAULT_EPS,
    ):
        if not (0.0 <= betas[0] < 1.0 and 0.0 <= betas[1] < 1.0):
            raise ConfigError(f"betas must be in [0, 1), got {betas}", ["train.betas"])
        if weight_decay < 0:
            raise ConfigError(f"weight decay must be >= 0, got {weight_decay}", ["train.weight_decay"])
        self.schedule = schedule or LRSchedule()
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros(shape) for name, shape in shapes.items()}
        self.v = {name: np.zeros(shape) for name, shape in shapes.items()}

    def step(
        self,
        params: dict[str, np.ndarray],
        grads: dict[str, np.ndarray],
        epoch: int = 0,
    ) -> dict[str, np.ndarray]:
        """1 回の更新を行い新しいパラメータ dict を返す

        Raises:
            NumericError: 非有限の勾配を含む場合（状態は更新しない）
            ConfigError: パラメータと勾配の名前・形状が一致しない場合
        """
        if set(grads) != set(self.m):
            raise ConfigError("gradient names do not match optimizer state", sorted(set(grads) ^ set(self.m)))
        for name, g in grads.items():
            if g.shape != self.m[name].shape:
                raise ConfigError(f"gradient {name}: shape {g.shape} != {self.m[name].shape}", [name])
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in parameter '{name}'; update rejected")

        self.step_count += 1
        t = self.step_count
        b1, b2 = self.betas
        lr = self.schedule.lr_at(epoch)
        updated = {}
        for name, p in params.items():
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / (1.0 - b1 ** t)
            v_hat = self.v[name] / (1.0 - b2 ** t)
            decayed = p * (1.0 - lr * self.weight_decay) if self.weight_decay else p
            updated[name] = decayed - lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated

    def state_dict(self) -> dict:
        return {
            "step": self.step_count,
            "weight_decay": self.weight_decay,
            "betas": list(self.betas),
            "eps": self.eps,
            "m": self.m,
            "v": self.v,
        }

    def load_state(self, state: dict) -> None:
        for key in ("m", "v"):
            if set(state[key]) != set(self.m):
                raise ConfigError(f"optimizer state '{key}' does not match parameters", [key])
            for name, arr in state[key].items():
                if arr.shape != self.m[name].shape:
                    raise ConfigError(f"optimizer state {key}.{name}: shape mismatch", [name])
        self.step_count = int(state["step"])
        self.m = {name: np.array(arr, dtype=np.float64) for name, arr in state["m"].items()}
        self.v = {name: np.array(arr, dtype=np.float64) for name, arr in state["v"].items()}


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    opt: AdamOptimizer,
    epoch: int = 0,
) -> dict[str, np.ndarray]:
    """AdamOptimizer.step の関数形式"""
    return opt.step(params, grads, epoch)
