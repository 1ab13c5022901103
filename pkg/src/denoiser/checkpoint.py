"""チェックポイントの保存と読み込み（base64 埋め込み JSON）"""

from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..errors import DataError
from .mlp import DenoiserDims, MLPDenoiser
from .optimizer import AdamOptimizer

CHECKPOINT_FORMAT = "npdiff-checkpoint/1"


def _encode(arr: np.ndarray) -> dict[str, Any]:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def _decode(obj: dict[str, Any]) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).astype(np.float64)


def save_checkpoint(
    path: str | Path,
    model: MLPDenoiser,
    optimizer: AdamOptimizer | None = None,
    config_hash: str = "",
    extra: dict[str, Any] | None = None,
) -> Path:
    """モデル（と任意で最適化器の状態）を JSON に書き出す"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc: dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "version": __version__,
        "config_hash": config_hash,
        "dims": model.dims.to_dict(),
        "seed": model.seed,
        "params": {name: _encode(p) for name, p in model.params.items()},
    }
    if optimizer is not None:
        state = optimizer.state_dict()
        doc["optimizer"] = {
            "step": state["step"],
            "weight_decay": state["weight_decay"],
            "betas": state["betas"],
            "eps": state["eps"],
            "m": {name: _encode(a) for name, a in state["m"].items()},
            "v": {name: _encode(a) for name, a in state["v"].items()},
        }
    if extra:
        doc["extra"] = extra
    path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
    return path


def load_checkpoint(
    path: str | Path,
    expected_dims: DenoiserDims | None = None,
) -> tuple[MLPDenoiser, dict[str, Any]]:
    """チェックポイントを読み込む

    Args:
        path: save_checkpoint の出力
        expected_dims: 指定した場合、保存済みの次元と一致しなければ拒否する

    Returns:
        (モデル, メタ情報 {config_hash, version, optimizer, extra})

    Raises:
        DataError: 形式不正・次元不一致
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not an npdiff checkpoint (format={doc.get('format')!r})")

    try:
        dims = DenoiserDims(**doc["dims"])
    except TypeError as e:
        raise DataError(f"{path}: malformed dims: {e}") from e
    if expected_dims is not None and dims != expected_dims:
        raise DataError(
            f"{path}: checkpoint dims {dims.to_dict()} do not match expected {expected_dims.to_dict()}"
        )

    params = {name: _decode(obj) for name, obj in doc["params"].items()}
    model = MLPDenoiser(dims, params, seed=int(doc.get("seed", 0)))

    meta: dict[str, Any] = {
        "config_hash": doc.get("config_hash", ""),
        "version": doc.get("version", ""),
        "extra": doc.get("extra", {}),
        "optimizer": None,
    }
    if "optimizer" in doc:
        opt = doc["optimizer"]
        meta["optimizer"] = {
            "step": opt["step"],
            "weight_decay": opt["weight_decay"],
            "betas": tuple(opt["betas"]),
            "eps": opt["eps"],
            "m": {name: _decode(a) for name, a in opt["m"].items()},
            "v": {name: _decode(a) for name, a in opt["v"].items()},
        }
    return model, meta
