"""予測タスクの準備と、ベースライン対 NPDiff の比較実験"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from ..colors import cyan, print_data, print_eval, print_header
from ..core import (
    DEFAULT_SPLIT_RATIOS,
    Normalizer,
    TrafficTensor,
    WindowPair,
    apply_normalizer,
    fit_normalizer,
    make_windows,
    split_dataset,
    stack_windows,
)
from ..datagen import generate
from ..denoiser import MLPDenoiser
from ..diffusion import PriorConfig, PriorKind
from ..dynamics import DynamicsConfig, DynamicsProfile, create_profile
from ..errors import DataError
from ..metrics import improvement_pct
from ..rng import SeededRng
from ..train import EvalResult, Trainer, TrainReport

if TYPE_CHECKING:
    from ..config import RunConfig


@dataclass(frozen=True)
class TaskSpec:
    """予測タスク（コンテキスト長 H → 予測長 M）

    Attributes:
        H, M: コンテキスト長・予測長
        seeds: 比較実験で使うシードのリスト
        split: (train, val, test) の比率
    """

    H: int = 12
    M: int = 12
    seeds: tuple[int, ...] = (0, 1, 2)
    split: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS

    @property
    def name(self) -> str:
        return f"{self.H}-{self.M}"

    @property
    def default_prior(self) -> PriorKind:
        """1 ステップ予測は局所、多ステップ予測は周期ダイナミクス"""
        return PriorKind.LOCAL if self.M == 1 else PriorKind.PERIODIC

    def validate(self) -> list[str]:
        errors = []
        if self.H < 1 or self.M < 1:
            errors.append("task: H and M must be >= 1")
        if not self.seeds:
            errors.append("task.seeds: at least one seed required")
        if len(self.split) != 3 or abs(sum(self.split) - 1.0) > 1e-9:
            errors.append("task.split: three ratios summing to 1 required")
        return errors


TASKS: tuple[tuple[int, int], ...] = ((12, 12), (12, 6), (12, 1), (24, 24), (24, 12), (24, 1))


@dataclass(frozen=True)
class PreparedTask:
    """正規化・窓切り出し済みのデータ一式

    clean_truth はノイズを加えた場合の、加える前のテスト正解（非正規化）。
    """

    raw: TrafficTensor
    normalizer: Normalizer
    train: TrafficTensor
    val: TrafficTensor
    test: TrafficTensor
    train_windows: list[WindowPair]
    val_windows: list[WindowPair]
    test_windows: list[WindowPair]
    clean_truth: np.ndarray | None = None


@dataclass
class CellResult:
    """1 つの (設定, シード) の学習・評価結果"""

    label: str
    axis: str
    value: Any
    seed: int
    mae: float
    rmse: float
    report: TrainReport
    extra: dict[str, Any] = field(default_factory=dict)
    evaluation: EvalResult | None = None
    model: MLPDenoiser | None = None

    def row(self) -> dict[str, Any]:
        row = {
            "label": self.label,
            "axis": self.axis,
            "value": self.value,
            "seed": self.seed,
            "mae": self.mae,
            "rmse": self.rmse,
            "best_val_mae": self.report.best_val_mae if self.report.val_mae else float("nan"),
            "best_epoch": self.report.best_epoch,
            "epochs": len(self.report.val_mae),
        }
        row.update(self.extra)
        return row


def prepare(
    run: RunConfig,
    data: TrafficTensor | None = None,
    noise_level: float = 0.0,
) -> PreparedTask:
    """データを生成（または受け取り）、分割・正規化・窓切り出しを行う

    noise_level > 0 のときは分散 noise_level × 全体平均のガウスノイズを
    分割前の系列全体に加え、テストの正解は加える前の値を使う。
    """
    raw = data if data is not None else generate(run.data)
    task = run.task
    observed = raw
    clean_truth = None
    if noise_level > 0:
        variance = noise_level * float(raw.values.mean())
        noise = SeededRng(run.data.seed, "robustness").substream(f"{noise_level:g}").normal(
            raw.values.shape
        )
        observed = raw.with_values(raw.values + np.sqrt(variance) * noise)

    train_raw, val_raw, test_raw = split_dataset(observed, task.split)
    normalizer = fit_normalizer(train_raw)
    train, val, test = (apply_normalizer(normalizer, x) for x in (train_raw, val_raw, test_raw))

    # 検証・テストは既定でストライド M（ターゲット区間が重ならない）
    stride = run.train.eval_stride or task.M
    test_windows = make_windows(test, task.H, task.M, stride=stride)
    if noise_level > 0:
        clean_test = split_dataset(raw, task.split)[2]
        clean_truth = stack_windows(make_windows(clean_test, task.H, task.M, stride=stride)).targets

    print_data(
        f"T={raw.T} K={raw.K} C={raw.C} P={raw.steps_per_period} split "
        f"{train.T}/{val.T}/{test.T}, task {cyan(task.name)}"
        + (f", input noise level {noise_level:g}" if noise_level > 0 else "")
    )
    return PreparedTask(
        raw=raw,
        normalizer=normalizer,
        train=train,
        val=val,
        test=test,
        train_windows=make_windows(train, task.H, task.M),
        val_windows=make_windows(val, task.H, task.M, stride=stride),
        test_windows=test_windows,
        clean_truth=clean_truth,
    )


def extract_dynamics(
    run: RunConfig,
    prepared: PreparedTask,
    prior: PriorConfig | None = None,
    dynamics_cfg: DynamicsConfig | None = None,
) -> DynamicsProfile | None:
    """学習分割から事前ダイナミクスを抽出（事前分布なしなら None）"""
    prior = prior or run.prior
    if not prior.uses_prior:
        return None
    return create_profile(prior.prior_kind.value, prepared.train, dynamics_cfg or run.dynamics)


def build_model(run: RunConfig, prepared: PreparedTask) -> MLPDenoiser:
    data = prepared.train
    dims = run.denoiser.dims(data.K, run.task.M, run.task.H, data.C, data.steps_per_period)
    return MLPDenoiser.init(run.train.seed, dims)


def run_cell(
    run: RunConfig,
    prepared: PreparedTask,
    label: str,
    axis: str = "",
    value: Any = None,
    dynamics_cfg: DynamicsConfig | None = None,
    keep: bool = False,
) -> CellResult:
    """run の設定で学習し、テスト窓で評価する

    Args:
        run: シード・λ などを反映済みの設定
        prepared: 準備済みデータ
        label: 結果の系列名（"baseline" / "npdiff" など）
        axis, value: スイープ軸と値
        dynamics_cfg: 周期成分の選択規則（省略時は run.dynamics）
        keep: True ならモデルと評価詳細を結果に残す
    """
    sched = run.schedule.build()
    dynamics = extract_dynamics(run, prepared, dynamics_cfg=dynamics_cfg)
    trainer = Trainer(sched, run.prior, run.train, prepared.normalizer)
    model, report = trainer.fit(
        build_model(run, prepared), prepared.train_windows, prepared.val_windows, dynamics
    )
    evaluation = trainer.evaluate(model, prepared.test_windows, dynamics, truth=prepared.clean_truth)
    return CellResult(
        label=label,
        axis=axis,
        value=value,
        seed=run.train.seed,
        mae=evaluation.mae,
        rmse=evaluation.rmse,
        report=report,
        evaluation=evaluation if keep else None,
        model=model if keep else None,
    )


@dataclass
class TaskComparison:
    """ベースライン（λ=0）と NPDiff の比較"""

    task: str
    prior_kind: str
    lam: float
    baseline: list[CellResult]
    treated: list[CellResult]

    @property
    def baseline_mae(self) -> float:
        return float(np.mean([c.mae for c in self.baseline]))

    @property
    def treated_mae(self) -> float:
        return float(np.mean([c.mae for c in self.treated]))

    @property
    def baseline_rmse(self) -> float:
        return float(np.mean([c.rmse for c in self.baseline]))

    @property
    def treated_rmse(self) -> float:
        return float(np.mean([c.rmse for c in self.treated]))

    @property
    def mae_improvement(self) -> float:
        return improvement_pct(self.baseline_mae, self.treated_mae)

    @property
    def rmse_improvement(self) -> float:
        return improvement_pct(self.baseline_rmse, self.treated_rmse)

    def rows(self) -> list[dict[str, Any]]:
        return [c.row() for c in self.baseline + self.treated]

    def summary(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "prior_kind": self.prior_kind,
            "lambda": self.lam,
            "baseline_mae": self.baseline_mae,
            "npdiff_mae": self.treated_mae,
            "baseline_rmse": self.baseline_rmse,
            "npdiff_rmse": self.treated_rmse,
            "mae_improvement_pct": self.mae_improvement,
            "rmse_improvement_pct": self.rmse_improvement,
        }


def run_task(
    run: RunConfig,
    prepared: PreparedTask | None = None,
    lam: float | None = None,
    prior_kind: PriorKind | None = None,
) -> TaskComparison:
    """同じシード・予算でベースライン（λ=0）と NPDiff（λ>0）を学習して比較"""
    prepared = prepared or prepare(run)
    lam = run.sweep.prior_lam if lam is None else lam
    kind = prior_kind or (run.prior.prior_kind if run.prior.uses_prior else run.task.default_prior)
    print_header(f"Task {run.task.name}: baseline vs prior={kind.value} lambda={lam}")

    baseline, treated = [], []
    for seed in run.task.seeds:
        seeded = run.with_seed(seed)
        baseline.append(
            run_cell(seeded.with_prior(0.0, PriorKind.NONE), prepared, "baseline", "lambda", 0.0)
        )
        treated.append(run_cell(seeded.with_prior(lam, kind), prepared, "npdiff", "lambda", lam))

    comparison = TaskComparison(run.task.name, kind.value, lam, baseline, treated)
    print_eval(
        f"{run.task.name}: baseline MAE {comparison.baseline_mae:.4f} -> "
        f"NPDiff {comparison.treated_mae:.4f} ({comparison.mae_improvement:+.1f}%)"
    )
    return comparison


def compare_priors(run: RunConfig, prepared: PreparedTask | None = None) -> list[dict[str, Any]]:
    """1 ステップ予測でベースライン・周期・局所ダイナミクスを同じシードで比較"""
    if run.task.M != 1:
        raise DataError(f"prior comparison requires a one-step task, got M={run.task.M}")
    prepared = prepared or prepare(run)
    lam = run.sweep.prior_lam
    rows = []
    for seed in run.task.seeds:
        seeded = run.with_seed(seed)
        for label, kind, value in (
            ("baseline", PriorKind.NONE, 0.0),
            ("periodic", PriorKind.PERIODIC, lam),
            ("local", PriorKind.LOCAL, lam),
        ):
            rows.append(run_cell(seeded.with_prior(value, kind), prepared, label, "prior", kind.value).row())
    return rows


class OracleProfile(DynamicsProfile):
    """真のターゲットをそのまま D として返す診断用プロファイル"""

    def __init__(self, data: TrafficTensor):
        super().__init__(provenance="oracle")
        self.data = data

    @property
    def kind(self) -> str:
        return "oracle"

    def align_arrays(self, contexts, target_starts, horizon):
        offsets = np.asarray(target_starts, dtype=np.int64)[..., None] - self.data.start_index
        steps = offsets + np.arange(horizon)
        if np.any(steps < 0) or np.any(steps >= self.data.T):
            raise DataError("oracle dynamics requested outside the available data")
        return self.data.values[steps]

    def series(self, data):
        return data.values, np.ones(data.T, dtype=bool)


def perfect_prior_diagnostic(
    run: RunConfig,
    prepared: PreparedTask | None = None,
    baseline_mae: float | None = None,
) -> dict[str, Any]:
    """D := 真のターゲット、λ=1、未学習モデルでのサンプリング誤差の下限

    λ=1 では ε_θ が使われないため、残る誤差は事後分布ノイズだけになる。
    """
    prepared = prepared or prepare(run)
    oracle_run = run.with_prior(1.0, PriorKind.PERIODIC)
    trainer = Trainer(run.schedule.build(), oracle_run.prior, run.train, prepared.normalizer)
    result = trainer.evaluate(
        build_model(run, prepared),
        prepared.test_windows,
        OracleProfile(prepared.test),
        rng=SeededRng(run.train.seed, "oracle"),
    )
    out: dict[str, Any] = {"floor_mae": result.mae, "floor_rmse": result.rmse}
    if baseline_mae is not None:
        out["baseline_mae"] = baseline_mae
    return out


def task_matrix(run: RunConfig, data: TrafficTensor | None = None) -> list[TaskComparison]:
    """6 つの (H, M) タスクすべてでベースラインと NPDiff を比較"""
    data = data if data is not None else generate(run.data)
    results = []
    for H, M in TASKS:
        task_run = run.with_task(H, M)
        kind = task_run.task.default_prior
        task_run = task_run.with_prior(run.sweep.prior_lam, kind)
        results.append(run_task(task_run, prepare(task_run, data), prior_kind=kind))
    return results


__all__ = [
    "CellResult",
    "OracleProfile",
    "PreparedTask",
    "TASKS",
    "TaskComparison",
    "TaskSpec",
    "build_model",
    "compare_priors",
    "extract_dynamics",
    "perfect_prior_diagnostic",
    "prepare",
    "run_cell",
    "run_task",
    "task_matrix",
]
