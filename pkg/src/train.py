"""学習ループ・検証による早期終了・テスト評価"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .colors import bold, cyan, print_eval, print_header, print_separator, print_train
from .core import Normalizer, WindowBatch, WindowPair, stack_windows
from .denoiser import AdamOptimizer, LRSchedule, MLPDenoiser, loss_and_grads
from .diffusion import NoiseSchedule, PriorConfig, sample_batch
from .dynamics import DynamicsProfile
from .errors import ConfigError, DataError, NumericError
from .metrics import mae, rmse
from .rng import SeededRng


@dataclass(frozen=True)
class TrainConfig:
    """学習設定

    lambdas は grid_search で探索する λ の候補。
    eval_stride は検証・テスト窓の間隔。None なら予測長 M（ターゲットが重ならない）。
    """

    DEFAULT_LAMBDAS = (0.3, 0.4, 0.5, 0.6, 0.7)

    max_epochs: int = 100
    batch_size: int = 8
    patience: int = 10
    val_samples: int = 3
    test_samples: int = 50
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    base_lr: float = LRSchedule.DEFAULT_BASE_LR
    decayed_lr: float = LRSchedule.DEFAULT_DECAYED_LR
    lr_decay_epoch: int = LRSchedule.DEFAULT_DECAY_EPOCH
    weight_decay: float = AdamOptimizer.DEFAULT_WEIGHT_DECAY
    eval_stride: int | None = None
    seed: int = 0

    def validate(self) -> list[str]:
        errors = []
        for name in ("max_epochs", "batch_size", "val_samples", "test_samples"):
            if getattr(self, name) < 1:
                errors.append(f"train.{name}: must be >= 1")
        if self.eval_stride is not None and self.eval_stride < 1:
            errors.append("train.eval_stride: must be >= 1 (or null for stride M)")
        if self.patience < 0:
            errors.append("train.patience: must be >= 0")
        if any(not 0.0 <= lam <= 1.0 for lam in self.lambdas):
            errors.append("train.lambdas: values must be in [0, 1]")
        if self.weight_decay < 0:
            errors.append("train.weight_decay: must be >= 0")
        errors.extend(self.lr_schedule().validate())
        return errors

    def lr_schedule(self) -> LRSchedule:
        return LRSchedule(self.base_lr, self.decayed_lr, self.lr_decay_epoch)


@dataclass
class TrainReport:
    """エポックごとの学習経過"""

    train_loss: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)
    val_rmse: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    best_epoch: int = -1
    initial_loss: float = float("nan")
    stopped_early: bool = False
    checkpoint: str | None = None

    @property
    def best_val_mae(self) -> float:
        return self.val_mae[self.best_epoch]

    def to_dict(self, include_timing: bool = True) -> dict[str, Any]:
        """JSON 用の dict（include_timing=False で実行時間を除き再現比較に使える）"""
        d = asdict(self)
        if not include_timing:
            d.pop("epoch_seconds")
        return d


@dataclass(frozen=True)
class EvalResult:
    """評価結果（非正規化空間）

    Attributes:
        mae, rmse: 全窓・全ステップ・全ノード・全チャネルでの誤差
        per_window: 窓ごとの {target_start_index, mae, rmse}
        samples: [B][S][M][K][C] のサンプル（正規化空間）
        point: [B][M][K][C] の点予測（非正規化）
        truth: [B][M][K][C] の正解（非正規化）
    """

    mae: float
    rmse: float
    n_samples: int
    per_window: list[dict[str, float]]
    samples: np.ndarray
    point: np.ndarray
    truth: np.ndarray

    def to_dict(self, detail: bool = False) -> dict[str, Any]:
        d: dict[str, Any] = {
            "mae": self.mae,
            "rmse": self.rmse,
            "n_samples": self.n_samples,
            "n_windows": len(self.per_window),
        }
        if detail:
            d["per_window"] = self.per_window
        return d


def _as_batch(windows: list[WindowPair] | WindowBatch) -> WindowBatch:
    return windows if isinstance(windows, WindowBatch) else stack_windows(windows)


def _check_split(windows: list[WindowPair] | WindowBatch, forbidden: str, role: str) -> None:
    if isinstance(windows, WindowBatch):
        return
    tags = {w.split for w in windows}
    if forbidden in tags:
        raise DataError(f"{role} windows must not come from the '{forbidden}' split")


class Trainer:
    """学習と評価を実行するクラス

    1 エポック = シャッフルしたミニバッチで loss_and_grads → Adam 更新、
    その後 val_samples 本のサンプル平均で検証 MAE を計算する。
    検証 MAE が patience エポック改善しなければ終了し、最良エポックの
    パラメータを返す。
    """

    DEFAULT_EVAL_BATCH = 1024  # 1 回の逆拡散で扱う (窓 × サンプル) の上限

    def __init__(
        self,
        sched: NoiseSchedule,
        prior_cfg: PriorConfig,
        cfg: TrainConfig,
        normalizer: Normalizer,
    ):
        errors = cfg.validate() + prior_cfg.validate()
        if errors:
            raise ConfigError("invalid training config: " + "; ".join(errors), errors)
        self.sched = sched
        self.prior_cfg = prior_cfg
        self.cfg = cfg
        self.normalizer = normalizer
        self.optimizer: AdamOptimizer | None = None  # 直近の fit の最終状態

    def _priors(self, dynamics: DynamicsProfile | None, batch: WindowBatch) -> np.ndarray | None:
        if not self.prior_cfg.uses_prior:
            return None
        if dynamics is None:
            raise DataError(f"prior kind '{self.prior_cfg.prior_kind.value}' requires dynamics")
        M = batch.targets.shape[1]
        return dynamics.align_arrays(batch.contexts, batch.target_starts, M)

    def fit(
        self,
        model: MLPDenoiser,
        train_windows: list[WindowPair] | WindowBatch,
        val_windows: list[WindowPair] | WindowBatch,
        dynamics: DynamicsProfile | None,
        optimizer_state: dict | None = None,
    ) -> tuple[MLPDenoiser, TrainReport]:
        """学習を実行

        Args:
            model: 初期化済みネットワーク（変更されない）
            train_windows: 学習窓（正規化済み）
            val_windows: 検証窓（正規化済み、テスト分割由来は不可）
            dynamics: 学習分割から抽出した事前ダイナミクス
            optimizer_state: チェックポイントから復元する Adam の状態（再開学習用）

        Returns:
            (最良検証 MAE のパラメータを持つモデル, TrainReport)

        Raises:
            DataError: ダイナミクスが学習分割由来でない、または検証窓がテスト由来の場合
            NumericError: 損失が非有限になった場合
        """
        if self.prior_cfg.uses_prior and dynamics is not None and dynamics.provenance != "train":
            raise DataError(
                f"dynamics must be extracted from the training split, got '{dynamics.provenance}'"
            )
        _check_split(val_windows, "test", "validation")
        train_batch = _as_batch(train_windows)
        val_batch = _as_batch(val_windows)
        train_priors = self._priors(dynamics, train_batch)

        cfg = self.cfg
        frozen = self.prior_cfg.freezes_model
        model = model.with_params(model.copy_params())
        optimizer = AdamOptimizer(
            {name: p.shape for name, p in model.params.items()},
            schedule=cfg.lr_schedule(),
            weight_decay=cfg.weight_decay,
        )
        if optimizer_state is not None:
            optimizer.load_state(optimizer_state)
        rng = SeededRng(cfg.seed, "train")
        report = TrainReport()

        print_header(f"Training (lambda={self.prior_cfg.lam}, prior={self.prior_cfg.prior_kind.value})")
        print_train(
            f"{len(train_batch)} train windows, {len(val_batch)} val windows, "
            f"{model.num_parameters} parameters"
        )
        if frozen:
            print_train("lambda=1: fused noise has no parameter dependence, network stays frozen")
        if optimizer_state is not None:
            print_train(f"resuming optimizer at step {optimizer.step_count}")

        best_mae = float("inf")
        best_params = model.copy_params()
        wait = 0
        for epoch in range(cfg.max_epochs):
            started = time.perf_counter()
            lr = optimizer.schedule.lr_at(epoch)
            order = rng.substream(f"shuffle/{epoch}").permutation(len(train_batch))
            losses = []
            for b, lo in enumerate(range(0, len(train_batch), cfg.batch_size)):
                idx = order[lo:lo + cfg.batch_size]
                loss, grads = loss_and_grads(
                    model,
                    train_batch.take(idx),
                    None if train_priors is None else train_priors[idx],
                    self.prior_cfg,
                    self.sched,
                    rng.substream(f"loss/{epoch}/{b}"),
                )
                if not np.isfinite(loss):
                    raise NumericError(f"non-finite training loss at epoch {epoch}, batch {b}")
                if epoch == 0 and b == 0:
                    report.initial_loss = loss
                if not frozen:
                    model.params = optimizer.step(model.params, grads, epoch)
                losses.append(loss)

            val = self.evaluate(
                model,
                val_batch,
                dynamics,
                n_samples=cfg.val_samples,
                rng=rng.substream(f"val/{epoch}"),
                verbose=False,
            )
            report.train_loss.append(float(np.mean(losses)))
            report.val_mae.append(val.mae)
            report.val_rmse.append(val.rmse)
            report.learning_rate.append(lr)
            report.epoch_seconds.append(time.perf_counter() - started)

            improved = val.mae < best_mae
            marker = cyan(" *") if improved else ""
            print_train(
                f"epoch {epoch:3d}  loss {report.train_loss[-1]:.5f}  "
                f"val MAE {val.mae:.4f}  RMSE {val.rmse:.4f}  lr {lr:g}  "
                f"{report.epoch_seconds[-1]:.1f}s{marker}"
            )
            if improved:
                best_mae = val.mae
                best_params = model.copy_params()
                report.best_epoch = epoch
                wait = 0
            else:
                wait += 1
                if wait > cfg.patience:
                    report.stopped_early = True
                    print_train(f"early stop: no improvement for {wait} epoch(s)")
                    break

        self.optimizer = optimizer
        print_separator()
        print_train(f"best epoch {bold(str(report.best_epoch))}  val MAE {best_mae:.4f}")
        return model.with_params(best_params), report

    def forecast(
        self,
        model: MLPDenoiser,
        windows: list[WindowPair] | WindowBatch,
        dynamics: DynamicsProfile | None,
        n_samples: int,
        rng: SeededRng,
        stochastic: bool = True,
    ) -> np.ndarray:
        """各窓について n_samples 本の軌跡を生成（[B][S][M][K][C]、正規化空間）

        窓 i は rng のサブストリーム "window/i" を使う。
        """
        batch = _as_batch(windows)
        priors = self._priors(dynamics, batch)
        target_shape = batch.targets.shape[1:]
        chunk = max(1, self.DEFAULT_EVAL_BATCH // n_samples)
        parts = []
        for lo in range(0, len(batch), chunk):
            idx = np.arange(lo, min(lo + chunk, len(batch)))
            parts.append(
                sample_batch(
                    model,
                    batch.contexts[idx],
                    None if priors is None else priors[idx],
                    batch.target_starts[idx],
                    self.prior_cfg,
                    self.sched,
                    [rng.substream(f"window/{i}") for i in idx],
                    n_samples,
                    target_shape,
                    stochastic=stochastic,
                )
            )
        return np.concatenate(parts, axis=0)

    def evaluate(
        self,
        model: MLPDenoiser,
        windows: list[WindowPair] | WindowBatch,
        dynamics: DynamicsProfile | None,
        n_samples: int | None = None,
        rng: SeededRng | None = None,
        truth: np.ndarray | None = None,
        verbose: bool = True,
    ) -> EvalResult:
        """サンプル平均を点予測として MAE / RMSE を計算

        Args:
            model: 学習済みネットワーク
            windows: 評価窓（正規化済み）
            dynamics: 事前ダイナミクス
            n_samples: サンプル数（省略時は test_samples）
            rng: 乱数ストリーム（省略時は seed から "eval"）
            truth: 非正規化空間の正解 [B][M][K][C]（省略時は窓のターゲット）
            verbose: 結果を表示するか

        Returns:
            EvalResult
        """
        batch = _as_batch(windows)
        n_samples = n_samples or self.cfg.test_samples
        rng = rng or SeededRng(self.cfg.seed, "eval")
        samples = self.forecast(model, batch, dynamics, n_samples, rng)

        point = self.normalizer.denormalize(samples.mean(axis=1))
        if truth is None:
            truth = self.normalizer.denormalize(batch.targets)
        elif np.shape(truth) != point.shape:
            raise DataError(f"truth shape {np.shape(truth)} does not match forecasts {point.shape}")

        per_window = [
            {
                "target_start_index": int(batch.target_starts[i]),
                "mae": mae(point[i], truth[i]),
                "rmse": rmse(point[i], truth[i]),
            }
            for i in range(len(batch))
        ]
        result = EvalResult(
            mae=mae(point, truth),
            rmse=rmse(point, truth),
            n_samples=n_samples,
            per_window=per_window,
            samples=samples,
            point=point,
            truth=np.asarray(truth),
        )
        if verbose:
            print_eval(
                f"{len(batch)} windows x {n_samples} samples: "
                f"MAE {result.mae:.4f}  RMSE {result.rmse:.4f}"
            )
        return result
