"""分支模擬結果的標準化與 K-means 聚類，產生加權情境集合"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from core.domain import ScenarioSet
from core.enums import StudentizeMode
from core.errors import ScenarioError
from utils.logging import get_logger

logger = get_logger(__name__)

REL_TOL = 1e-6
MAX_ITER = 500


@dataclass(frozen=True)
class Studentizer:
    """逐維 (x − 平均)/標準差；標準差為 0 的維度只做平移"""
    mode: StudentizeMode
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, populations: np.ndarray, mode: StudentizeMode = StudentizeMode.LOG) -> 'Studentizer':
        data = cls._transform(populations, mode)
        mean = data.mean(axis=0)
        if data.shape[0] > 1:
            std = data.std(axis=0, ddof=1)
        else:
            std = np.zeros(data.shape[1])
        scale = np.where(std > 0, std, 1.0)
        degenerate = int(np.sum(std <= 0))
        if degenerate:
            logger.debug(f"{degenerate} 個維度變異數為 0，不做縮放")
        return cls(mode, mean, scale)

    @staticmethod
    def _transform(populations: np.ndarray, mode: StudentizeMode) -> np.ndarray:
        data = np.asarray(populations, dtype=float)
        if mode is StudentizeMode.LOG:
            return np.log(np.maximum(data, 1.0))
        return data

    def apply(self, populations: np.ndarray) -> np.ndarray:
        return (self._transform(populations, self.mode) - self.mean) / self.scale

    def to_log_pops(self, z: np.ndarray) -> np.ndarray:
        """標準化座標還原為對數細胞數"""
        values = np.asarray(z) * self.scale + self.mean
        if self.mode is StudentizeMode.LOG:
            return values
        return np.log(np.maximum(values, 1.0))


class KMeans:
    """k-means++ 初始化加 Lloyd 迭代，收斂條件為慣性的相對變化 ≤ 1e-6"""

    def __init__(self, n_clusters: int, rng_seed: int = 0, max_iter: int = MAX_ITER, rel_tol: float = REL_TOL):
        if n_clusters < 1:
            raise ScenarioError(f"聚類數至少為 1，實際為 {n_clusters}")
        self.n_clusters = n_clusters
        self.rng_seed = rng_seed
        self.max_iter = max_iter
        self.rel_tol = rel_tol
        self.cluster_centers_: Optional[np.ndarray] = None
        self.labels_: Optional[np.ndarray] = None
        self.inertia_: float = np.inf
        self.n_iter_: int = 0

    @staticmethod
    def _sq_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
        return np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=-1)

    def _init_centers(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = X.shape[0]
        centers = [X[rng.integers(n)]]
        closest = np.sum((X - centers[0]) ** 2, axis=1)
        for _ in range(1, self.n_clusters):
            total = closest.sum()
            index = rng.integers(n) if total <= 0 else rng.choice(n, p=closest / total)
            centers.append(X[index])
            closest = np.minimum(closest, np.sum((X - X[index]) ** 2, axis=1))
        return np.array(centers)

    def fit(self, X: np.ndarray) -> 'KMeans':
        X = np.asarray(X, dtype=float)
        if self.n_clusters > X.shape[0]:
            raise ScenarioError(f"聚類數 {self.n_clusters} 超過樣本數 {X.shape[0]}")
        rng = np.random.default_rng(self.rng_seed)
        centers = self._init_centers(X, rng)
        previous = np.inf
        for iteration in range(1, self.max_iter + 1):
            distances = self._sq_distances(X, centers)
            labels = np.argmin(distances, axis=1)
            inertia = float(distances[np.arange(X.shape[0]), labels].sum())
            for j in range(self.n_clusters):
                members = X[labels == j]
                if members.size:
                    centers[j] = members.mean(axis=0)
            self.n_iter_ = iteration
            if np.isfinite(previous) and abs(previous - inertia) <= self.rel_tol * max(previous, 1e-300):
                break
            if inertia == 0.0:
                break
            previous = inertia
        distances = self._sq_distances(X, centers)
        self.labels_ = np.argmin(distances, axis=1)
        self.inertia_ = float(distances[np.arange(X.shape[0]), self.labels_].sum())
        self.cluster_centers_ = centers
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmin(self._sq_distances(np.asarray(X, dtype=float), self.cluster_centers_), axis=1)


def cluster_scenarios(populations: np.ndarray, k: int = 10, rng_seed: int = 0,
                      mode: StudentizeMode = StudentizeMode.LOG) -> ScenarioSet:
    """
    將重複結果聚類為 k 個情境

    參數:
        populations: (R, Q) 各重複的最終細胞數
        k: 聚類數
        rng_seed: k-means++ 初始化種子
        mode: 標準化前取對數 (LOG) 或直接使用計數 (RAW)

    返回:
        ScenarioSet，log_pops 為各聚類成員平均還原後的對數細胞數，μ = 成員數 / R；空聚類捨棄
    """
    populations = np.asarray(populations)
    if populations.ndim != 2 or populations.shape[0] == 0:
        raise ScenarioError(f"重複結果必須為非空的二維陣列，實際形狀 {populations.shape}")
    n = populations.shape[0]
    if not 1 <= k <= n:
        raise ScenarioError(f"聚類數 {k} 必須在 [1, {n}] 內")
    scaler = Studentizer.fit(populations, mode)
    Z = scaler.apply(populations)
    model = KMeans(k, rng_seed).fit(Z)

    log_pops, probs = [], []
    for j in range(k):
        members = Z[model.labels_ == j]
        if members.shape[0] == 0:
            continue
        log_pops.append(scaler.to_log_pops(members.mean(axis=0)))
        probs.append(members.shape[0] / n)
    scenarios = ScenarioSet.from_arrays(log_pops, probs)
    logger.info(f"聚類完成: {len(scenarios)} 個情境 ({model.n_iter_} 次迭代)，"
                f"最可能情境 μ = {scenarios.most_likely.prob:.4f}")
    return scenarios


def inertia_curve(populations: np.ndarray, k_max: int = 15, rng_seed: int = 0,
                  mode: StudentizeMode = StudentizeMode.LOG) -> List[Tuple[int, float]]:
    """k = 1..k_max 的 K-means 慣性，用於選擇聚類數"""
    Z = Studentizer.fit(populations, mode).apply(populations)
    k_max = min(k_max, Z.shape[0])
    return [(k, KMeans(k, rng_seed).fit(Z).inertia_) for k in range(1, k_max + 1)]
