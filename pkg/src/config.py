"""実行設定 RunConfig

1 つの JSON 文書に全モジュールの設定をまとめる:
    {"seed", "data", "dynamics", "prior", "schedule", "denoiser", "train", "task", "sweep"}

マージ順は 既定値 < 設定ファイル < --set a.b=value < 専用フラグ。
どの階層でも未知のキーは ConfigError にする。正規化 JSON の SHA-256 先頭
16 桁を設定ハッシュとしてすべての出力に埋め込む。
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from . import __version__
from .datagen import Harmonic, SyntheticConfig
from .denoiser import DenoiserDims
from .diffusion import PriorConfig, PriorKind, ScheduleConfig
from .dynamics import ComponentRule, DynamicsConfig
from .errors import ConfigError
from .experiments.tasks import TaskSpec
from .train import TrainConfig

DEFAULT_OUTPUT_DIR = "out"
SWEEP_AXES = (
    "lambda", "components", "noise", "convergence", "tasks", "grid", "priors", "uncertainty", "oracle",
)


@dataclass(frozen=True)
class DenoiserSettings:
    """データ形状に依存しないネットワークの大きさ"""

    W: int = DenoiserDims.DEFAULT_WIDTH
    n_layers: int = DenoiserDims.DEFAULT_LAYERS
    E: int = DenoiserDims.DEFAULT_EMBED
    P_emb: int = DenoiserDims.DEFAULT_TIME_BUCKETS

    def dims(self, K: int, M: int, H: int, C: int, period: int) -> DenoiserDims:
        return DenoiserDims(
            K=K, M=M, H=H, C=C, period=period,
            W=self.W, n_layers=self.n_layers, E=self.E, P_emb=self.P_emb,
        )


@dataclass(frozen=True)
class SweepSettings:
    """sweep サブコマンドの軸と値"""

    axis: str = "lambda"
    lambdas: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    components: tuple[int | str, ...] = (1, 2, 3, 5, 8, "full")
    noise_levels: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    convergence_epochs: int = 5
    prior_lam: float = 0.5  # 比較実験での NPDiff 側の λ
    jobs: int = 1

    def validate(self) -> list[str]:
        errors = []
        if self.axis not in SWEEP_AXES:
            errors.append(f"sweep.axis: must be one of {', '.join(SWEEP_AXES)}")
        if any(not 0.0 <= lam <= 1.0 for lam in self.lambdas):
            errors.append("sweep.lambdas: values must be in [0, 1]")
        if self.axis == "lambda" and len(self.lambdas) < 3:
            errors.append("sweep.lambdas: at least 3 values required")
        for k in self.components:
            if k != "full" and (not isinstance(k, int) or k < 1):
                errors.append("sweep.components: entries must be positive integers or 'full'")
                break
        if any(level < 0 for level in self.noise_levels):
            errors.append("sweep.noise_levels: must be >= 0")
        if self.convergence_epochs < 1:
            errors.append("sweep.convergence_epochs: must be >= 1")
        if not 0.0 <= self.prior_lam <= 1.0:
            errors.append("sweep.prior_lam: must be in [0, 1]")
        if self.jobs < 1:
            errors.append("sweep.jobs: must be >= 1")
        return errors


@dataclass(frozen=True)
class RunConfig:
    """全セクションをまとめた実行設定"""

    seed: int = 0
    data: SyntheticConfig = field(default_factory=SyntheticConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    denoiser: DenoiserSettings = field(default_factory=DenoiserSettings)
    train: TrainConfig = field(default_factory=TrainConfig)
    task: TaskSpec = field(default_factory=TaskSpec)
    sweep: SweepSettings = field(default_factory=SweepSettings)

    # ---- 検証 ----

    def validate(self) -> list[str]:
        """すべてのセクションの検証エラーを "field: reason" で返す"""
        errors = []
        if not 0 <= self.seed < 2**64:
            errors.append("seed: must be a 64-bit unsigned integer")
        errors.extend(f"data.{e}" for e in self.data.validate())
        errors.extend(self.dynamics.validate())
        errors.extend(self.prior.validate())
        errors.extend(self.schedule.validate())
        errors.extend(
            self.denoiser.dims(1, self.task.M, self.task.H, 1, self.data.steps_per_period).validate()
        )
        errors.extend(self.train.validate())
        errors.extend(self.task.validate())
        if self.prior.prior_kind is PriorKind.LOCAL and self.task.M != 1:
            errors.append("prior.kind: local dynamics require task.M = 1")
        errors.extend(self.sweep.validate())
        return errors

    def check(self) -> RunConfig:
        try:
            errors = self.validate()
        except TypeError as e:
            raise ConfigError(f"invalid configuration value type: {e}") from e
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors), errors)
        return self

    # ---- 変換 ----

    def to_dict(self) -> dict[str, Any]:
        train = asdict(self.train)
        train.pop("seed")
        data = asdict(self.data)
        data["harmonics"] = [[h.multiple, h.amplitude, h.phase] for h in self.data.harmonics]
        return {
            "seed": self.seed,
            "data": data,
            "dynamics": {
                "rule": self.dynamics.rule.value,
                "n_components": self.dynamics.n_components,
                "period": self.dynamics.period,
            },
            "prior": {"kind": self.prior.prior_kind.value, "lam": self.prior.lam},
            "schedule": asdict(self.schedule),
            "denoiser": asdict(self.denoiser),
            "train": _jsonable(train),
            "task": _jsonable(asdict(self.task)),
            "sweep": _jsonable(asdict(self.sweep)),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> RunConfig:
        """既定値に doc をマージして RunConfig を構築

        Raises:
            ConfigError: 未知のキー、または型変換できない値がある場合
        """
        merged = _merge(cls().to_dict(), doc, "")
        seed = merged["seed"]
        data = dict(merged["data"])
        if "seed" not in doc.get("data", {}):
            data["seed"] = seed
        try:
            data["harmonics"] = tuple(_harmonic(h) for h in data["harmonics"])
            dyn = merged["dynamics"]
            prior = merged["prior"]
            return cls(
                seed=int(seed),
                data=SyntheticConfig(**data),
                dynamics=DynamicsConfig(
                    rule=ComponentRule(dyn["rule"]),
                    n_components=int(dyn["n_components"]),
                    period=None if dyn["period"] is None else int(dyn["period"]),
                ),
                prior=PriorConfig(lam=float(prior["lam"]), prior_kind=PriorKind(prior["kind"])),
                schedule=ScheduleConfig(**merged["schedule"]),
                denoiser=DenoiserSettings(**merged["denoiser"]),
                train=TrainConfig(**_tuples(merged["train"]), seed=int(seed)),
                task=TaskSpec(**_tuples(merged["task"])),
                sweep=SweepSettings(**_tuples(merged["sweep"])),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid configuration value: {e}") from e

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]

    def header(self) -> dict[str, str]:
        """出力ファイルのヘッダに埋め込むメタ情報"""
        return {"config_hash": self.config_hash(), "version": __version__}

    # ---- 派生設定 ----

    def with_seed(self, seed: int) -> RunConfig:
        """学習・初期化用のシードだけを差し替える（データは共有）"""
        return replace(self, seed=seed, train=replace(self.train, seed=seed))

    def with_prior(self, lam: float, kind: PriorKind | None = None) -> RunConfig:
        return replace(self, prior=PriorConfig(lam=lam, prior_kind=kind or self.prior.prior_kind))

    def with_task(self, H: int, M: int) -> RunConfig:
        return replace(self, task=replace(self.task, H=H, M=M))


def _jsonable(d: dict[str, Any]) -> dict[str, Any]:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _tuples(d: dict[str, Any]) -> dict[str, Any]:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _harmonic(h: Any) -> Harmonic:
    if isinstance(h, Harmonic):
        return h
    if isinstance(h, dict):
        return Harmonic(**h)
    if isinstance(h, (list, tuple)) and len(h) in (2, 3):
        return Harmonic(int(h[0]), float(h[1]), float(h[2]) if len(h) == 3 else 0.0)
    raise ConfigError(f"harmonic must be [multiple, amplitude, phase], got {h!r}", ["data.harmonics"])


def _merge(base: dict[str, Any], update: dict[str, Any], prefix: str) -> dict[str, Any]:
    """update を base に再帰的に重ねる（base にないキーは拒否）"""
    if not isinstance(update, dict):
        raise ConfigError(f"section '{prefix.rstrip('.') or '<root>'}' must be an object")
    merged = copy.deepcopy(base)
    unknown = [f"{prefix}{k}" for k in update if k not in base]
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}", unknown)
    for key, value in update.items():
        if isinstance(base[key], dict):
            merged[key] = _merge(base[key], value, f"{prefix}{key}.")
        else:
            merged[key] = value
    return merged


def parse_override(expr: str) -> tuple[list[str], Any]:
    """`a.b=value` を (["a", "b"], value) に分解（value は JSON として解釈、失敗時は文字列）"""
    if "=" not in expr:
        raise ConfigError(f"override must look like 'section.key=value', got '{expr}'", [expr])
    key, raw = expr.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(f"empty key in override '{expr}'", [expr])
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_override(doc: dict[str, Any], path: list[str], value: Any) -> None:
    node = doc
    for part in path[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set '{'.'.join(path)}': '{part}' is not a section", [".".join(path)])
    node[path[-1]] = value


def load_config(
    path: str | Path | None = None,
    overrides: list[str] | None = None,
    flags: dict[str, Any] | None = None,
) -> RunConfig:
    """設定ファイル・--set・専用フラグをマージして検証済みの RunConfig を返す

    Args:
        path: JSON 設定ファイル（省略可）
        overrides: `section.key=value` のリスト
        flags: ドット区切りキー -> 値（None の値は無視）

    Raises:
        ConfigError: 読み込み失敗、未知のキー、検証エラー
    """
    doc: dict[str, Any] = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}", ["--config"]) from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}", ["--config"]) from e
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object", ["--config"])

    for expr in overrides or []:
        apply_override(doc, *parse_override(expr))
    for key, value in (flags or {}).items():
        if value is not None:
            apply_override(doc, key.split("."), value)

    return RunConfig.from_dict(doc).check()


def env_output_dir() -> Path:
    return Path(os.environ.get("NPDIFF_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR)


def env_jobs() -> int | None:
    raw = os.environ.get("NPDIFF_JOBS")
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"NPDIFF_JOBS must be an integer, got '{raw}'", ["NPDIFF_JOBS"]) from e


__all__ = [
    "DenoiserSettings",
    "RunConfig",
    "SweepSettings",
    "env_jobs",
    "env_output_dir",
    "load_config",
]
