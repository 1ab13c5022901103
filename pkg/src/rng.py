"""カウンタベースの決定的乱数ストリーム

numpy の Philox（カウンタベース）ビット生成器を、(seed, ラベル) から
BLAKE2b で導出した鍵で初期化する。ラベルを変えれば互いに独立な
サブストリームになるため、サンプルごと・エポックごとの乱数を
並列実行しても結果が変わらない。
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ConfigError


def _derive_key(seed: int, label: str) -> np.ndarray:
    """(seed, label) から Philox の 128bit 鍵を導出"""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    h.update(label.encode("utf-8"))
    return np.frombuffer(h.digest(), dtype="<u8").copy()


class SeededRng:
    """名前付きサブストリームを持つ決定的乱数生成器

    同じ (seed, label) と同じ呼び出し順序であれば、どのプラットフォームでも
    同じ値を返す。
    """

    def __init__(self, seed: int, label: str = ""):
        if not 0 <= int(seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}", ["train.seed"])
        self.seed = int(seed)
        self.label = label
        self._generator = np.random.Generator(np.random.Philox(key=_derive_key(self.seed, label)))

    def substream(self, name: str) -> SeededRng:
        """独立した子ストリームを作成

        Args:
            name: サブストリーム名（親ラベルに "/" で連結される）

        Returns:
            新しい SeededRng（親の消費状態には依存しない）
        """
        label = f"{self.label}/{name}" if self.label else name
        return SeededRng(self.seed, label)

    def uniform(self, shape: int | tuple[int, ...] = ()) -> np.ndarray:
        """[0, 1) の一様乱数"""
        return self._generator.random(shape)

    def normal(self, shape: int | tuple[int, ...] = ()) -> np.ndarray:
        """標準正規乱数（Box-Muller 変換、cos 側のみ使用）"""
        u1 = 1.0 - self._generator.random(shape)  # (0, 1]
        u2 = self._generator.random(shape)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def integers(self, low: int, high: int, shape: int | tuple[int, ...] = ()) -> np.ndarray:
        """[low, high) の整数乱数"""
        return self._generator.integers(low, high, size=shape)

    def bernoulli(self, p: float, shape: int | tuple[int, ...] = ()) -> np.ndarray:
        """確率 p で True となるブール配列"""
        return self._generator.random(shape) < p

    def permutation(self, n: int) -> np.ndarray:
        """0..n-1 のランダムな並べ替え"""
        return self._generator.permutation(n)
