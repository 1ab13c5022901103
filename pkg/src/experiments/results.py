"""実験結果の CSV / JSON 書き出しと集計

すべての出力ファイルの先頭に設定ハッシュとツールのバージョンを埋め込む。
CSV は `# config_hash=<hash> version=<ver>` のコメント行で始まる。
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import DataError


def header_line(meta: dict[str, str]) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items())


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return format(value, ".10g")
    return value


def write_csv(path: str | Path, rows: list[dict[str, Any]], meta: dict[str, str]) -> Path:
    """tidy CSV（1 行 = 1 セル × 1 シード）を書き出す

    列は全行のキーの和集合（初出順）。
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buf = io.StringIO()
    buf.write(header_line(meta) + "\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k, "")) for k in columns})
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path: str | Path, payload: dict[str, Any], meta: dict[str, str]) -> Path:
    """meta を "_meta" キーに入れて JSON を書き出す"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"_meta": meta, **_jsonable(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_csv(path: str | Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """write_csv の出力を (meta, rows) として読み込む"""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    meta: dict[str, str] = {}
    body_start = 0
    while body_start < len(lines) and lines[body_start].startswith("#"):
        for token in lines[body_start][1:].split():
            if "=" in token:
                key, value = token.split("=", 1)
                meta[key] = value
        body_start += 1
    rows = list(csv.DictReader(lines[body_start:]))
    if not rows:
        raise DataError(f"{path}: no result rows")
    return meta, rows


def aggregate(
    rows: list[dict[str, Any]],
    metrics: tuple[str, ...] = ("mae", "rmse"),
) -> list[dict[str, Any]]:
    """(label, value) ごとに指標の平均と標準偏差（母標準偏差）を求める

    行の出現順を保ったまま集約する。
    """
    groups: dict[tuple[str, str], list[dict[str, Any]]] = defaultdict(list)
    for row in rows:
        groups[(str(row.get("label", "")), str(row.get("value", "")))].append(row)

    summary = []
    for (label, value), members in groups.items():
        entry: dict[str, Any] = {"label": label, "value": value, "n": len(members)}
        for metric in metrics:
            try:
                values = np.array([float(m[metric]) for m in members if m.get(metric) not in ("", None)])
            except ValueError as e:
                raise DataError(f"non-numeric '{metric}' for label={label} value={value}") from e
            entry[f"{metric}_mean"] = float(values.mean()) if values.size else float("nan")
            entry[f"{metric}_std"] = float(values.std()) if values.size else float("nan")
        summary.append(entry)
    return summary
