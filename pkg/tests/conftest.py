"""テスト共通のフィクスチャ（数秒で終わる小さな設定）"""

import copy
import json

import numpy as np
import pytest

from src.colors import set_quiet
from src.config import RunConfig
from src.core import TrafficTensor
from src.denoiser import DenoiserDims

TINY_DOC = {
    "seed": 0,
    "data": {
        "T": 120,
        "K": 3,
        "C": 1,
        "steps_per_period": 12,
        "harmonics": [[1, 1.0, 0.0], [2, 0.5, 0.3]],
        "noise_sigma": 0.1,
    },
    "schedule": {"steps": 5},
    "denoiser": {"W": 8, "n_layers": 2, "E": 8, "P_emb": 4},
    "train": {
        "max_epochs": 2,
        "batch_size": 16,
        "patience": 2,
        "val_samples": 2,
        "test_samples": 4,
        "lambdas": [0.3, 0.7],
    },
    "task": {"H": 4, "M": 2, "seeds": [0]},
    "sweep": {
        "lambdas": [0.0, 0.5, 1.0],
        "components": [1, "full"],
        "noise_levels": [0.0, 0.2],
        "convergence_epochs": 2,
    },
}


@pytest.fixture(autouse=True)
def quiet_progress():
    set_quiet(True)
    yield
    set_quiet(False)


@pytest.fixture
def tiny_doc() -> dict:
    return copy.deepcopy(TINY_DOC)


@pytest.fixture
def tiny_run(tiny_doc) -> RunConfig:
    return RunConfig.from_dict(tiny_doc).check()


@pytest.fixture
def tiny_config_file(tmp_path, tiny_doc):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(tiny_doc), encoding="utf-8")
    return path


@pytest.fixture
def tiny_dims() -> DenoiserDims:
    return DenoiserDims(K=2, M=2, H=3, C=1, period=6, W=8, n_layers=2, E=4, P_emb=3)


@pytest.fixture
def periodic_tensor() -> TrafficTensor:
    """周期 6 の純粋な周期系列（K=2, C=1, 8 周期）"""
    t = np.arange(48, dtype=np.float64)
    k0 = 2.0 + np.cos(2 * np.pi * t / 6)
    k1 = 1.0 + 0.5 * np.sin(2 * np.pi * 2 * t / 6)
    return TrafficTensor(np.stack([k0, k1], axis=1)[:, :, None], steps_per_period=6)
