"""ノイズ推定ネットワーク ε_θ と学習用の部品"""

from .checkpoint import load_checkpoint, save_checkpoint
from .loss import loss_and_grads
from .mlp import DenoiserDims, MLPDenoiser
from .optimizer import AdamOptimizer, LRSchedule, adam_step

__all__ = [
    "AdamOptimizer",
    "DenoiserDims",
    "LRSchedule",
    "MLPDenoiser",
    "adam_step",
    "load_checkpoint",
    "loss_and_grads",
    "save_checkpoint",
]
