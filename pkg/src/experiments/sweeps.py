"""1 つの軸を動かすアブレーション実験

どのスイープも、動かす軸以外（データ・初期化シード・乱数ストリーム）は
すべての設定で共通にする。各セルは SweepExecutor で並列に実行できる。
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

import numpy as np

from ..colors import print_header, print_sweep
from ..core import TrafficTensor
from ..datagen import generate
from ..diffusion import PriorKind
from ..dynamics import ComponentRule, DynamicsConfig, create_profile, similarity_report
from ..errors import ConfigError
from ..train import Trainer
from .executor import SweepExecutor, SweepJob
from .results import aggregate
from .tasks import PreparedTask, build_model, extract_dynamics, prepare, run_cell

if TYPE_CHECKING:
    from ..config import RunConfig


@dataclass
class SweepResult:
    """スイープ結果（1 行 = 軸の値 × シード）"""

    axis: str
    rows: list[dict[str, Any]]
    metrics: tuple[str, ...] = ("mae", "rmse")
    extra: dict[str, Any] = field(default_factory=dict)

    def summary(self) -> list[dict[str, Any]]:
        return aggregate(self.rows, self.metrics)

    def mean(self, label: str, value: Any, metric: str = "mae") -> float:
        values = [
            float(r[metric]) for r in self.rows
            if r["label"] == label and str(r["value"]) == str(value)
        ]
        return float(np.mean(values)) if values else float("nan")

    def to_dict(self) -> dict[str, Any]:
        return {"axis": self.axis, "summary": self.summary(), **self.extra}


def _cell_row(
    run: RunConfig,
    prepared: PreparedTask,
    label: str,
    axis: str,
    value: Any,
    dynamics_cfg: DynamicsConfig | None = None,
    extra: dict[str, Any] | None = None,
) -> dict[str, Any]:
    row = run_cell(run, prepared, label, axis, value, dynamics_cfg=dynamics_cfg).row()
    row.update(extra or {})
    return row


def _prior_kind(run: RunConfig) -> PriorKind:
    return run.prior.prior_kind if run.prior.uses_prior else run.task.default_prior


def _executor(run: RunConfig, executor: SweepExecutor | None) -> SweepExecutor:
    return executor or SweepExecutor(run.sweep.jobs)


def lambda_sweep(
    run: RunConfig,
    lambdas: tuple[float, ...] | None = None,
    executor: SweepExecutor | None = None,
    prepared: PreparedTask | None = None,
) -> SweepResult:
    """融合係数 λ ごとの MAE / RMSE（λ=0 は事前分布なしと完全に一致する）"""
    lambdas = tuple(run.sweep.lambdas if lambdas is None else lambdas)
    if len(lambdas) < 3:
        raise ConfigError(f"lambda sweep needs at least 3 values, got {len(lambdas)}", ["sweep.lambdas"])
    prepared = prepared or prepare(run)
    kind = _prior_kind(run)
    print_header(f"Lambda sweep over {list(lambdas)} (prior={kind.value})")

    jobs = [
        SweepJob(
            id=f"lambda={lam:g}/seed={seed}",
            action=_cell_row,
            params={
                "run": run.with_seed(seed).with_prior(lam, kind),
                "prepared": prepared,
                "label": "npdiff",
                "axis": "lambda",
                "value": lam,
            },
        )
        for lam in lambdas
        for seed in run.task.seeds
    ]
    rows = _executor(run, executor).run(jobs)
    result = SweepResult("lambda", rows)
    means = {lam: result.mean("npdiff", lam) for lam in lambdas}
    best = min(means, key=means.get)
    result.extra = {"best_lambda": best, "mean_mae": {f"{k:g}": v for k, v in means.items()}}
    print_sweep(f"best lambda {best:g} (mean MAE {means[best]:.4f})")
    return result


def _component_config(k: int | str) -> DynamicsConfig:
    if k == "full":
        return DynamicsConfig(rule=ComponentRule.ALL)
    return DynamicsConfig(rule=ComponentRule.TOP_K, n_components=int(k))


def component_sweep(
    run: RunConfig,
    ks: tuple[int | str, ...] | None = None,
    executor: SweepExecutor | None = None,
    prepared: PreparedTask | None = None,
) -> SweepResult:
    """周期成分数 N_K ごとの MAE と、D_p とテスト区間の類似度"""
    ks = tuple(run.sweep.components if ks is None else ks)
    prepared = prepared or prepare(run)
    lam = run.sweep.prior_lam
    print_header(f"Component sweep over N_K={list(ks)}")

    jobs = []
    similarity = {}
    for k in ks:
        dyn_cfg = replace(_component_config(k), period=run.dynamics.period)
        profile = create_profile("periodic", prepared.train, dyn_cfg)
        similarity[str(k)] = similarity_report(profile, prepared.test).mean
        print_sweep(f"N_K={k}: similarity {similarity[str(k)]:.4f}")
        for seed in run.task.seeds:
            jobs.append(
                SweepJob(
                    id=f"components={k}/seed={seed}",
                    action=_cell_row,
                    params={
                        "run": run.with_seed(seed).with_prior(lam, PriorKind.PERIODIC),
                        "prepared": prepared,
                        "label": "npdiff",
                        "axis": "components",
                        "value": k,
                        "dynamics_cfg": dyn_cfg,
                        "extra": {"similarity": similarity[str(k)]},
                    },
                )
            )
    rows = _executor(run, executor).run(jobs)
    return SweepResult("components", rows, extra={"similarity": similarity})


def robustness(
    run: RunConfig,
    noise_levels: tuple[float, ...] | None = None,
    executor: SweepExecutor | None = None,
    data: TrafficTensor | None = None,
) -> SweepResult:
    """入力ノイズ（分散 = level × 平均）に対する λ=0 と λ>0 の MAE

    評価はノイズを加える前のターゲットに対して行う。
    data を省略すると設定から合成データを生成する。
    """
    levels = tuple(run.sweep.noise_levels if noise_levels is None else noise_levels)
    data = data if data is not None else generate(run.data)
    kind = _prior_kind(run)
    lam = run.sweep.prior_lam
    print_header(f"Robustness over noise levels {list(levels)}")

    jobs = []
    for level in levels:
        prepared = prepare(run, data, noise_level=level)
        for seed in run.task.seeds:
            seeded = run.with_seed(seed)
            for label, cell_run in (
                ("baseline", seeded.with_prior(0.0, PriorKind.NONE)),
                ("npdiff", seeded.with_prior(lam, kind)),
            ):
                jobs.append(
                    SweepJob(
                        id=f"noise={level:g}/{label}/seed={seed}",
                        action=_cell_row,
                        params={
                            "run": cell_run,
                            "prepared": prepared,
                            "label": label,
                            "axis": "noise",
                            "value": level,
                        },
                    )
                )
    rows = _executor(run, executor).run(jobs)
    result = SweepResult("noise", rows)

    lo, hi = min(levels), max(levels)
    degradation = {}
    for label in ("baseline", "npdiff"):
        base = result.mean(label, lo)
        degradation[label] = result.mean(label, hi) / base if base > 0 else float("nan")
    result.extra = {"relative_degradation": degradation, "levels": [lo, hi]}
    return result


def _convergence_rows(run: RunConfig, prepared: PreparedTask, label: str) -> list[dict[str, Any]]:
    trainer = Trainer(run.schedule.build(), run.prior, run.train, prepared.normalizer)
    dynamics = extract_dynamics(run, prepared)
    _, report = trainer.fit(
        build_model(run, prepared), prepared.train_windows, prepared.val_windows, dynamics
    )
    return [
        {
            "label": label,
            "axis": "epoch",
            "value": epoch + 1,
            "seed": run.train.seed,
            "val_mae": report.val_mae[epoch],
            "val_rmse": report.val_rmse[epoch],
            "train_loss": report.train_loss[epoch],
            "initial_loss": report.initial_loss,
        }
        for epoch in range(len(report.val_mae))
    ]


def convergence_report(
    run: RunConfig,
    epochs: int | None = None,
    executor: SweepExecutor | None = None,
    prepared: PreparedTask | None = None,
) -> SweepResult:
    """最初の数エポックの検証 MAE を λ=0 と λ>0 で比較（早期終了なし）"""
    epochs = epochs or run.sweep.convergence_epochs
    prepared = prepared or prepare(run)
    train_cfg = replace(run.train, max_epochs=epochs, patience=epochs)
    short = replace(run, train=train_cfg)
    kind = _prior_kind(run)
    print_header(f"Convergence over the first {epochs} epoch(s)")

    jobs = []
    for seed in run.task.seeds:
        seeded = short.with_seed(seed)
        for label, cell_run in (
            ("baseline", seeded.with_prior(0.0, PriorKind.NONE)),
            ("npdiff", seeded.with_prior(run.sweep.prior_lam, kind)),
        ):
            jobs.append(
                SweepJob(
                    id=f"convergence/{label}/seed={seed}",
                    action=_convergence_rows,
                    params={"run": cell_run, "prepared": prepared, "label": label},
                )
            )
    rows = [row for cell in _executor(run, executor).run(jobs) for row in cell]
    return SweepResult("epoch", rows, metrics=("val_mae", "val_rmse"))


def grid_search(
    run: RunConfig,
    executor: SweepExecutor | None = None,
    prepared: PreparedTask | None = None,
) -> SweepResult:
    """λ 候補 × 成分選択規則（top_k / above_mean）の組み合わせを検証 MAE で選ぶ"""
    prepared = prepared or prepare(run)
    kind = _prior_kind(run)
    rules = {
        ComponentRule.TOP_K.value: replace(run.dynamics, rule=ComponentRule.TOP_K),
        ComponentRule.ABOVE_MEAN.value: replace(run.dynamics, rule=ComponentRule.ABOVE_MEAN),
    }
    if kind is PriorKind.LOCAL:
        # 局所ダイナミクスは成分選択を使わない
        rules = {"local": run.dynamics}
    lambdas = run.train.lambdas
    print_header(f"Grid search: lambda {list(lambdas)} x rule {list(rules)}")

    jobs = [
        SweepJob(
            id=f"grid/{rule}/lambda={lam:g}/seed={seed}",
            action=_cell_row,
            params={
                "run": run.with_seed(seed).with_prior(lam, kind),
                "prepared": prepared,
                "label": rule,
                "axis": "lambda",
                "value": lam,
                "dynamics_cfg": dyn_cfg,
            },
        )
        for rule, dyn_cfg in rules.items()
        for lam in lambdas
        for seed in run.task.seeds
    ]
    rows = _executor(run, executor).run(jobs)
    result = SweepResult("grid", rows)

    scored = {
        (rule, lam): result.mean(rule, lam, "best_val_mae") for rule in rules for lam in lambdas
    }
    rule, lam = min(scored, key=scored.get)
    result.extra = {
        "best": {
            "rule": rule,
            "lambda": lam,
            "val_mae": scored[(rule, lam)],
            "test_mae": result.mean(rule, lam, "mae"),
            "test_rmse": result.mean(rule, lam, "rmse"),
        }
    }
    print_sweep(f"best combination: rule={rule} lambda={lam:g} (val MAE {scored[(rule, lam)]:.4f})")
    return result
