"""
腫瘤異質性的分支過程模擬

每代每個非抗藥細胞分裂為一個非抗藥細胞加一個子細胞，子細胞依機率 α_(0,q) 成為類型 q；
抗藥細胞只複製自身。多項分佈抽樣以條件二項分佈依序實現，計數以 int64 保存。
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from core.enums import ProcessingMode
from core.errors import ScenarioError
from utils.concurrency import run_indexed
from utils.logging import get_logger

logger = get_logger(__name__)

# 2^62 為 int64 可保存的最大倍增結果
MAX_GENERATIONS = 62
# 每個區塊使用獨立的計數器型隨機流，結果與工作數無關
BLOCK_SIZE = 500


@dataclass(frozen=True)
class BranchingConfig:
    generations: int = 30
    replications: int = 10_000
    mutation_probs: Tuple[float, ...] = field(default=(0.005, 0.005, 0.005))
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'mutation_probs', tuple(float(a) for a in self.mutation_probs))
        if self.generations < 0:
            raise ScenarioError(f"世代數不可為負，實際為 {self.generations}")
        if self.generations > MAX_GENERATIONS:
            raise ScenarioError(f"世代數 {self.generations} 超過 {MAX_GENERATIONS}，細胞計數會溢位")
        if self.replications < 1:
            raise ScenarioError(f"重複次數至少為 1，實際為 {self.replications}")
        if any(a < 0 for a in self.mutation_probs):
            raise ScenarioError("突變機率不可為負")
        if sum(self.mutation_probs) >= 1:
            raise ScenarioError(f"突變機率總和 {sum(self.mutation_probs):.6g} 必須小於 1")

    @property
    def alpha_00(self) -> float:
        """α_(0,0) = 1 − Σ_q α_(0,q)"""
        return 1.0 - sum(self.mutation_probs)

    @property
    def n_types(self) -> int:
        return len(self.mutation_probs) + 1


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def simulate_block(config: BranchingConfig, block: int, size: int) -> np.ndarray:
    """模擬一個區塊的 size 次重複，回傳 (size, Q) 計數"""
    rng = _block_rng(config.rng_seed, block)
    pops = np.zeros((size, config.n_types), dtype=np.int64)
    pops[:, 0] = 1
    for _ in range(config.generations):
        remaining = pops[:, 0].copy()
        remaining_prob = 1.0
        births = np.zeros_like(pops)
        for q, alpha in enumerate(config.mutation_probs, start=1):
            p = 0.0 if remaining_prob <= 0 else min(1.0, alpha / remaining_prob)
            births[:, q] = rng.binomial(remaining, p)
            remaining -= births[:, q]
            remaining_prob -= alpha
        births[:, 0] = remaining
        pops[:, 0] += births[:, 0]
        pops[:, 1:] = 2 * pops[:, 1:] + births[:, 1:]
    return pops


def _run_block(task) -> np.ndarray:
    config, block, size = task
    return simulate_block(config, block, size)


def simulate_branching(config: BranchingConfig, mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                       max_workers: Optional[int] = None) -> np.ndarray:
    """
    執行所有重複的分支過程

    參數:
        config: 模擬設定
        mode: 串行或以進程池並行執行各區塊
        max_workers: 最大工作進程數

    返回:
        (replications, Q) int64 計數矩陣，第 0 欄為非抗藥細胞
    """
    blocks = []
    for block, start in enumerate(range(0, config.replications, BLOCK_SIZE)):
        blocks.append((config, block, min(BLOCK_SIZE, config.replications - start)))
    outcomes = run_indexed(_run_block, blocks, mode=mode, max_workers=max_workers, task_type='cpu', label='分支模擬區塊')
    failed = [o for o in outcomes if not o.ok]
    if failed:
        raise ScenarioError(f"{len(failed)} 個分支模擬區塊失敗: {failed[0].error_info['error_message']}")
    pops = np.vstack([o.value for o in outcomes])
    logger.info(f"分支模擬完成: {config.replications} 次重複 × {config.generations} 代，"
                f"非抗藥細胞平均 {pops[:, 0].mean():.4g}")
    return pops


def expected_populations(config: BranchingConfig, t: int) -> np.ndarray:
    """
    各類型的期望細胞數

    E[π_0(t)] = (α_00 + 1)^t
    E[π_q(t)] = α_q·Σ_{k<t} 2^k (α_00 + 1)^{t−1−k}，以等比級數求和
    """
    if t < 0:
        raise ScenarioError(f"世代數不可為負，實際為 {t}")
    a = config.alpha_00 + 1.0
    expected = np.zeros(config.n_types)
    expected[0] = a ** t
    if t == 0:
        return expected
    if np.isclose(a, 2.0, rtol=0.0, atol=1e-15):
        series = t * 2.0 ** (t - 1)
    else:
        series = (a ** t - 2.0 ** t) / (a - 2.0)
    expected[1:] = np.asarray(config.mutation_probs) * series
    return expected


def standard_errors(pops: np.ndarray) -> np.ndarray:
    """各類型樣本平均數的標準誤"""
    pops = np.asarray(pops, dtype=float)
    if pops.shape[0] < 2:
        return np.full(pops.shape[1], np.inf)
    return pops.std(axis=0, ddof=1) / np.sqrt(pops.shape[0])
